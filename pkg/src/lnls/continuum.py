"""Continuum-side helpers on the periodic box ``[-pi, pi)^d``.

Smooth profiles are represented as trigonometric polynomials
``f(x) = (2 pi)^{-d} sum_k c_k exp(i k.x)`` with coefficients over a tensor
set of integer modes, matching the lattice transform normalization.  This
gives exact Sobolev norms, exact free Schroedinger evolution, and fast
structured evaluation on tensor grids (the form needed by the cell-average
and quadrature routines).
"""

from __future__ import annotations

import logging
import math
from typing import Sequence

import numpy as np

from .lattice import ContinuumSampler, GridFunction, Lattice

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


class TrigPolynomial(ContinuumSampler):
    """Trig polynomial with coefficients on a tensor grid of integer modes."""

    def __init__(self, modes: Sequence[np.ndarray], coeffs: np.ndarray, tag: str = ""):
        d = len(modes)
        if d not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got d={d}")
        self.modes = tuple(np.asarray(m, dtype=np.int64) for m in modes)
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        expected = tuple(len(m) for m in self.modes)
        if coeffs.shape != expected:
            raise ValueError(f"coefficient shape {coeffs.shape} != mode grid shape {expected}")
        self.coeffs = coeffs
        self.d = d
        self.tag = tag

    # -- evaluation ---------------------------------------------------------

    def _axis_matrix(self, coords: np.ndarray, axis: int) -> np.ndarray:
        return np.exp(1j * np.multiply.outer(np.asarray(coords, dtype=float), self.modes[axis]))

    def on_tensor_grid(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        if len(axes) != self.d:
            raise ValueError(f"expected {self.d} axes, got {len(axes)}")
        scale = TWO_PI**-self.d
        if self.d == 1:
            return scale * (self._axis_matrix(axes[0], 0) @ self.coeffs)
        e0 = self._axis_matrix(axes[0], 0)
        e1 = self._axis_matrix(axes[1], 1)
        return scale * (e0 @ self.coeffs @ e1.T)

    def __call__(self, *coords: np.ndarray) -> np.ndarray:
        if len(coords) != self.d:
            raise ValueError(f"expected {self.d} coordinate arrays, got {len(coords)}")
        scale = TWO_PI**-self.d
        if self.d == 1:
            e0 = self._axis_matrix(coords[0], 0)
            return scale * np.einsum("...i,i->...", e0, self.coeffs)
        b0, b1 = np.broadcast_arrays(*coords)
        e0 = self._axis_matrix(b0, 0)
        e1 = self._axis_matrix(b1, 1)
        return scale * np.einsum("...i,...j,ij->...", e0, e1, self.coeffs, optimize=True)

    # -- exact functionals --------------------------------------------------

    def _bracket_sq(self) -> np.ndarray:
        out = np.ones(self.coeffs.shape)
        for axis, m in enumerate(self.modes):
            shape = [1] * self.d
            shape[axis] = len(m)
            out = out + (m.astype(float) ** 2).reshape(shape)
        return out

    def _abs_k_sq(self) -> np.ndarray:
        return self._bracket_sq() - 1.0

    def sobolev_norm(self, s: float) -> float:
        """Exact ``H^s`` norm ``((2 pi)^{-d} sum <k>^{2s} |c_k|^2)^{1/2}``."""
        total = np.sum(self._bracket_sq() ** s * np.abs(self.coeffs) ** 2)
        return float(math.sqrt(total * TWO_PI**-self.d))

    def l2_norm(self) -> float:
        return self.sobolev_norm(0.0)

    def sup_norm(self, oversample: int = 4) -> float:
        """Max of ``|f|`` on a uniform grid resolving every mode ``oversample`` times."""
        span = max(2 * (int(np.max(np.abs(m))) + 1) for m in self.modes)
        n = max(32, oversample * span)
        axis = -math.pi + TWO_PI * np.arange(n) / n
        return float(np.max(np.abs(self.on_tensor_grid([axis] * self.d))))

    # -- algebra ------------------------------------------------------------

    def free_evolved(self, t: float) -> "TrigPolynomial":
        """Exact free evolution ``exp(i t Laplacian)``: phases ``exp(-i t |k|^2)``."""
        phased = self.coeffs * np.exp(-1j * t * self._abs_k_sq())
        return TrigPolynomial(self.modes, phased, tag=self.tag)

    def scaled(self, factor: complex) -> "TrigPolynomial":
        return TrigPolynomial(self.modes, factor * self.coeffs, tag=self.tag)

    def l2_distance(self, other: "TrigPolynomial") -> float:
        """Exact ``L^2`` distance, aligning the two mode grids."""
        if self.d != other.d:
            raise ValueError("dimension mismatch")
        axes_ranges = []
        for ax in range(self.d):
            lo = min(self.modes[ax].min(), other.modes[ax].min())
            hi = max(self.modes[ax].max(), other.modes[ax].max())
            axes_ranges.append(np.arange(lo, hi + 1))
        shape = tuple(len(r) for r in axes_ranges)
        acc = np.zeros(shape, dtype=np.complex128)
        for poly, sign in ((self, 1.0), (other, -1.0)):
            idx = tuple(
                np.searchsorted(axes_ranges[ax], poly.modes[ax]) for ax in range(self.d)
            )
            acc[np.ix_(*idx)] += sign * poly.coeffs
        return float(math.sqrt(np.sum(np.abs(acc) ** 2) * TWO_PI**-self.d))

    @classmethod
    def from_grid(cls, u: GridFunction, tag: str = "") -> "TrigPolynomial":
        """Trig interpolant of grid data (coefficients = lattice transform)."""
        from .spectral import forward

        lat = u.lattice
        modes = [lat.frequencies()] * lat.d
        return cls(modes, forward(u).values, tag=tag)


class MappedSampler(ContinuumSampler):
    """Pointwise map ``z -> g(z)`` applied to another sampler's values."""

    def __init__(self, base: ContinuumSampler, g, tag: str = ""):
        self.base = base
        self.g = g
        self.d = base.d
        self.tag = tag or f"mapped({base.tag})"

    def __call__(self, *coords: np.ndarray) -> np.ndarray:
        return np.asarray(self.g(self.base(*coords)), dtype=np.complex128)

    def on_tensor_grid(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        return np.asarray(self.g(self.base.on_tensor_grid(axes)), dtype=np.complex128)


def power_nonlinearity_of(f: ContinuumSampler, p: float) -> ContinuumSampler:
    """Sampler of ``|f|^{p-1} f``."""
    return MappedSampler(f, lambda z: np.abs(z) ** (p - 1.0) * z, tag=f"|.|^{p - 1}(.)")


# ---------------------------------------------------------------------------
# Profile factories
# ---------------------------------------------------------------------------


def plane_wave(d: int, k0: Sequence[int], amplitude: complex = 1.0) -> TrigPolynomial:
    """``A exp(i k0 . x)`` as a single-mode trig polynomial."""
    k0 = tuple(int(k) for k in k0)
    if len(k0) != d:
        raise ValueError(f"k0 must have {d} components, got {len(k0)}")
    modes = [np.array([k], dtype=np.int64) for k in k0]
    coeffs = np.full((1,) * d, amplitude * TWO_PI**d, dtype=np.complex128)
    return TrigPolynomial(modes, coeffs, tag=f"plane_wave{k0}")


def wrapped_gaussian(
    d: int, width: float = 0.6, center: Sequence[float] | None = None
) -> TrigPolynomial:
    """Periodized Gaussian ``sum_n exp(-|x - c - 2 pi n|^2 / (2 w^2))``.

    Represented through its exact Fourier coefficients
    ``c_k = prod_j w sqrt(2 pi) exp(-w^2 k_j^2 / 2) exp(-i k_j c_j)``,
    truncated below relative magnitude 1e-18.
    """
    if width <= 0:
        raise ValueError(f"width must be positive, got {width}")
    if center is None:
        center = (0.0,) * d
    if len(center) != d:
        raise ValueError(f"center must have {d} components")
    kmax = int(math.ceil(math.sqrt(2.0 * 18.0 * math.log(10.0)) / width)) + 1
    k = np.arange(-kmax, kmax + 1)
    axis_coeffs = [
        width * math.sqrt(TWO_PI) * np.exp(-0.5 * width**2 * k.astype(float) ** 2)
        * np.exp(-1j * k * c)
        for c in center
    ]
    if d == 1:
        coeffs = axis_coeffs[0]
    else:
        coeffs = np.multiply.outer(axis_coeffs[0], axis_coeffs[1])
    return TrigPolynomial([k] * d, coeffs, tag=f"wrapped_gaussian(w={width})")


def random_low_modes(
    d: int,
    rng: np.random.Generator,
    max_mode: int = 3,
    n_modes: int = 8,
    h1_normalize: bool = True,
) -> TrigPolynomial:
    """Sum of at most ``n_modes`` random modes with ``|k_j| <= max_mode``."""
    k = np.arange(-max_mode, max_mode + 1)
    width = len(k)
    coeffs = np.zeros((width,) * d, dtype=np.complex128)
    flat_choices = rng.choice(width**d, size=min(n_modes, width**d), replace=False)
    amplitudes = rng.standard_normal(len(flat_choices)) + 1j * rng.standard_normal(len(flat_choices))
    coeffs.ravel()[flat_choices] = amplitudes * TWO_PI**d / math.sqrt(len(flat_choices))
    poly = TrigPolynomial([k] * d, coeffs, tag=f"random_low_modes(<= {max_mode})")
    if h1_normalize:
        norm = poly.sobolev_norm(1.0)
        if norm > 0:
            poly = poly.scaled(1.0 / norm)
            poly.tag += " H1-normalized"
    return poly


def box_fourier(f: ContinuumSampler, resolution: int = 256, tag: str = "") -> TrigPolynomial:
    """Collocation Fourier coefficients of ``f`` on a ``resolution``-point fine grid.

    Spectrally accurate for smooth profiles; ``resolution`` must be a power
    of two (the fine grid is itself a lattice with ``M = resolution/2``).
    """
    if isinstance(f, TrigPolynomial):
        return f
    from .spectral import forward

    fine = Lattice(f.d, resolution // 2)
    vals = f.on_tensor_grid([fine.axis_coords()] * f.d)
    u = GridFunction(fine, vals)
    return TrigPolynomial([fine.frequencies()] * f.d, forward(u).values, tag=tag or f.tag)


def box_sobolev_norm(f: ContinuumSampler, s: float, resolution: int = 256) -> float:
    """Continuum ``H^s`` norm (exact for trig polynomials)."""
    return box_fourier(f, resolution).sobolev_norm(s)
