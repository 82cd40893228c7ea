"""Shared test corpora: smooth continuum profiles and per-lattice stress cases."""

from __future__ import annotations

import numpy as np

from .continuum import TrigPolynomial, plane_wave, random_low_modes, wrapped_gaussian
from .lattice import GridFunction, Lattice, discretize
from .spectral import DyadicScale, lp_project


def random_grid(lattice: Lattice, rng: np.random.Generator) -> GridFunction:
    """Complex white noise on the lattice."""
    vals = rng.standard_normal(lattice.shape) + 1j * rng.standard_normal(lattice.shape)
    return GridFunction(lattice, vals)


def continuum_profiles(
    d: int, seed: int = 0, n_random: int = 2, include_plane_wave: bool = True
) -> list[TrigPolynomial]:
    """Smooth shared profiles: random low-mode sums, a wrapped Gaussian, a plane wave."""
    rng = np.random.default_rng(seed)
    profiles = [
        random_low_modes(d, rng, max_mode=3, n_modes=8, h1_normalize=True)
        for _ in range(n_random)
    ]
    profiles.append(wrapped_gaussian(d, width=0.6))
    profiles.append(wrapped_gaussian(d, width=0.35, center=(0.7,) * d))
    if include_plane_wave:
        profiles.append(plane_wave(d, (1,) + (0,) * (d - 1), amplitude=0.8))
    return profiles


def lattice_stress_corpus(lattice: Lattice, seed: int = 0) -> list[GridFunction]:
    """Per-lattice corpus stressing norm inequalities.

    Discretized smooth profiles plus genuinely lattice-scale elements: a
    mid-band single mode, white noise, and noise concentrated on the top
    dyadic frequency annulus (the near-extremizer family for
    frequency-localized bounds).
    """
    rng = np.random.default_rng(seed)
    out = [discretize(f, lattice) for f in continuum_profiles(lattice.d, seed, n_random=1)]
    mesh = lattice.meshgrid()
    k_mid = max(1, lattice.M // 2)
    phase = k_mid * mesh[0]
    out.append(GridFunction(lattice, np.exp(1j * phase)))
    noise = random_grid(lattice, rng)
    out.append(noise)
    out.append(lp_project(noise, DyadicScale(lattice, 0)))
    return out
