"""Measured dispersive and space-time (Strichartz) estimates for the free flow.

Everything here asserts nothing by itself: routines *measure* the constants
in the frequency-localized dispersive kernel bound and in the space-time
mixed-norm bound, emitting records whose uniformity in ``h`` is judged by
the caller (factor-of-3 spread policy).
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from .continuum import ContinuumSampler
from .lattice import GridFunction, Lattice, NumericalAccuracyError, discretize
from .records import ExperimentRecord
from .spectral import DyadicScale, dyadic_scales, laplacian_symbol, sobolev_norm
from .util import map_parallel

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Admissibility
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdmissiblePair:
    """Lattice-admissible exponent pair: ``3/q + d/r = d/2``, minus one endpoint."""

    q: float
    r: float

    def __post_init__(self) -> None:
        if self.q < 2 or self.r < 2:
            raise ValueError(f"admissible exponents need q, r >= 2, got ({self.q}, {self.r})")

    def validate_for(self, d: int) -> None:
        if self.q == 2 and math.isinf(self.r) and d == 3:
            raise ValueError("excluded endpoint: (q, r, d) = (2, inf, 3) is not admissible")
        lhs = (0.0 if math.isinf(self.q) else 3.0 / self.q) + (
            0.0 if math.isinf(self.r) else d / self.r
        )
        if abs(lhs - d / 2.0) > 1e-12:
            raise ValueError(
                f"(q, r) = ({self.q}, {self.r}) violates the admissibility relation "
                f"3/q + d/r = d/2 for d = {d} (got {lhs} != {d / 2})"
            )


# ---------------------------------------------------------------------------
# Frequency-localized dispersive kernel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelQuery:
    """One dispersive-kernel cell: a dyadic scale plus sampling parameters.

    ``c`` bounds the time window ``|t| <= c h / N``; ``t_samples`` times are
    drawn geometrically from the window edge downwards; ``x_samples`` (if
    set) strides the lattice points used for the sup in ``x``.
    """

    scale: DyadicScale
    c: float = 0.1
    t_samples: int = 8
    x_samples: int | None = None

    def __post_init__(self) -> None:
        if self.c <= 0:
            raise ValueError(f"window constant c must be positive, got {self.c}")
        if self.t_samples < 1:
            raise ValueError(f"t_samples must be >= 1, got {self.t_samples}")
        if self.x_samples is not None and self.x_samples < 1:
            raise ValueError(f"x_samples must be >= 1 when given, got {self.x_samples}")

    @property
    def lattice(self) -> Lattice:
        return self.scale.lattice

    @property
    def h(self) -> float:
        return self.lattice.h

    @property
    def t_window(self) -> float:
        return self.c * self.h / self.scale.value

    def check_time(self, t: float) -> None:
        if abs(t) > self.t_window * (1.0 + 1e-9):
            raise ValueError(
                f"|t|={abs(t)} outside the dispersive window |t| <= c h/N = {self.t_window:.3g}"
            )


def kernel_modes(scale: DyadicScale) -> np.ndarray:
    """Integer modes ``|k| <= pi N / h`` of one kernel axis (just ``{0}`` at ``N_*``)."""
    kmax = int(math.floor(scale.mode_cutoff + 1e-9))
    return np.arange(-kmax, kmax + 1)


def _axis_sum(query: KernelQuery, t: float, xs: np.ndarray) -> np.ndarray:
    """One-axis sums ``sum_k exp(i (x k - (2t/h^2)(1 - cos(h k))))`` over points ``xs``."""
    h = query.h
    k = kernel_modes(query.scale).astype(float)
    phase_t = (2.0 * t / h**2) * (1.0 - np.cos(h * k))
    return np.exp(1j * (np.multiply.outer(np.asarray(xs, dtype=float), k) - phase_t)).sum(axis=-1)


def dispersive_kernel(query: KernelQuery, t: float, x) -> complex:
    """Band-limited free-propagator kernel ``K_{N,t}(x)`` (tensor product over axes)."""
    query.check_time(t)
    lat = query.lattice
    coords = np.atleast_1d(np.asarray(x, dtype=float))
    if coords.shape != (lat.d,):
        raise ValueError(f"x must have {lat.d} coordinates, got shape {coords.shape}")
    out = 1.0 + 0.0j
    for j in range(lat.d):
        out *= _axis_sum(query, t, coords[j : j + 1])[0]
    return complex(out * (2.0 * math.pi) ** -lat.d)


def kernel_sup(query: KernelQuery, t: float) -> float:
    """``sup_x |K_{N,t}(x)|`` over lattice points (exact by tensorization)."""
    query.check_time(t)
    lat = query.lattice
    xs = lat.axis_coords()
    if query.x_samples is not None and query.x_samples < xs.size:
        stride = max(1, xs.size // query.x_samples)
        xs = xs[::stride]
    axis_sup = float(np.max(np.abs(_axis_sum(query, t, xs))))
    return (2.0 * math.pi) ** -lat.d * axis_sup**lat.d


def kernel_as_grid(query: KernelQuery, t: float) -> GridFunction:
    """``K_{N,t}`` sampled at the lattice points, as a grid function."""
    query.check_time(t)
    lat = query.lattice
    s = _axis_sum(query, t, lat.axis_coords())
    vals = s if lat.d == 1 else np.multiply.outer(s, s)
    return GridFunction(lat, vals * (2.0 * math.pi) ** -lat.d)


def dispersive_bound_sweep(query: KernelQuery) -> list[ExperimentRecord]:
    """Normalized sup ratios ``rho = |K|_sup (h|t|/N)^{d/3}`` over the time window.

    Times run geometrically down from the window edge ``c h / N``; one record
    per time carries ``value = sup_x |K|`` and ``ratio = rho``.
    """
    lat = query.lattice
    N = query.scale.value
    h = query.h
    records = []
    for i in range(query.t_samples):
        t = query.t_window * 2.0**-i
        sup = kernel_sup(query, t)
        rho = sup * (h * t / N) ** (lat.d / 3.0)
        records.append(
            ExperimentRecord(
                "dispersive", h, sup, rho, t=t, N=N, metadata={"d": lat.d, "c": query.c}
            )
        )
    return records


def dispersive_uniformity(
    d: int,
    h_list: Sequence[float],
    c: float = 0.1,
    t_samples: int = 8,
    threads: int | None = None,
) -> list[ExperimentRecord]:
    """Kernel sweep over every ``(h, N)`` cell of an ``h`` sweep."""
    queries = []
    for h in h_list:
        lat = Lattice.from_spacing(d, h)
        for scale in dyadic_scales(lat):
            queries.append(KernelQuery(scale, c=c, t_samples=t_samples))
    chunks = map_parallel(dispersive_bound_sweep, queries, threads)
    return [rec for chunk in chunks for rec in chunk]


# ---------------------------------------------------------------------------
# One-dimensional oscillatory integral
# ---------------------------------------------------------------------------


def _phase(h: float, t: float, x: float, xi: np.ndarray) -> np.ndarray:
    return x * xi - (2.0 * t / h**2) * (1.0 - np.cos(h * xi))


def oscillatory_integral(h: float, N: float, t: float, x: float) -> complex:
    """``int_{-pi N/h}^{pi N/h} exp(i (x xi - (2t/h^2)(1 - cos(h xi)))) d xi``.

    Adaptive quadrature; a failure to converge raises
    :class:`NumericalAccuracyError`.
    """
    if h <= 0 or N <= 0:
        raise ValueError(f"need h > 0 and N > 0, got h={h}, N={N}")
    L = math.pi * N / h
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            re, re_err = integrate.quad(
                lambda xi: math.cos(_phase(h, t, x, np.float64(xi))), -L, L,
                limit=400, epsabs=1e-10, epsrel=1e-10,
            )
            im, im_err = integrate.quad(
                lambda xi: math.sin(_phase(h, t, x, np.float64(xi))), -L, L,
                limit=400, epsabs=1e-10, epsrel=1e-10,
            )
        except integrate.IntegrationWarning as exc:
            raise NumericalAccuracyError(f"oscillatory integral failed to converge: {exc}") from exc
    scale = max(1.0, 2.0 * L)
    if re_err + im_err > 1e-6 * scale:
        raise NumericalAccuracyError(
            f"oscillatory integral error estimate {re_err + im_err:.2e} too large"
        )
    return complex(re, im)


def phase_derivative_max(h: float, N: float, t: float, x: float, n_grid: int = 4097) -> float:
    """``max |phi'|`` over the integration interval (phi the kernel phase)."""
    L = math.pi * N / h
    xi = np.linspace(-L, L, n_grid)
    return float(np.max(np.abs(x - (2.0 * t / h) * np.sin(h * xi))))


def riemann_sum_gap(h: float, N: float, t: float, x: float) -> float:
    """``|sum_{a < n <= b} e^{i phi(n)} - int_a^b e^{i phi}|`` with ``b = -a = pi N/h``.

    Meaningful under the sum-versus-integral hypothesis ``|phi'| < 2 pi``
    with monotone ``phi'``; the gap is then bounded by a universal constant.
    """
    L = math.pi * N / h
    n = np.arange(math.floor(-L) + 1, math.floor(L) + 1)
    total = complex(np.sum(np.exp(1j * _phase(h, t, x, n.astype(float)))))
    return abs(total - oscillatory_integral(h, N, t, x))


# ---------------------------------------------------------------------------
# Space-time mixed-norm (Strichartz) sweep
# ---------------------------------------------------------------------------


def _default_h_sweep() -> list[float]:
    return [math.pi / M for M in (8, 16, 32, 64, 128, 256)]


@dataclass(frozen=True)
class StrichartzQuery:
    pair: AdmissiblePair
    epsilon: float = 0.1
    h_sweep: tuple[float, ...] = field(default_factory=lambda: tuple(_default_h_sweep()))
    time_interval: tuple[float, float] = (0.0, 1.0)
    t_nodes: int = 257
    self_check: bool = True
    self_check_tol: float = 1e-2

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if len(self.h_sweep) < 1:
            raise ValueError("h_sweep must not be empty")
        t0, t1 = self.time_interval
        if not t1 > t0:
            raise ValueError(f"empty time interval {self.time_interval}")
        if self.t_nodes < 3 or self.t_nodes % 2 == 0:
            raise ValueError(f"t_nodes must be odd and >= 3 (composite Simpson), got {self.t_nodes}")


def _mixed_norm(g: np.ndarray, times: np.ndarray, q: float) -> float:
    if math.isinf(q):
        return float(g.max())
    return float(integrate.simpson(g**q, x=times) ** (1.0 / q))


def _flow_space_norms(
    u0: GridFunction, times: np.ndarray, r: float, chunk: int = 32
) -> np.ndarray:
    """``|exp(i t Lap_h) u0|_{L^r}`` at each time, batched over FFT chunks."""
    lat = u0.lattice
    axes = tuple(range(lat.d))
    sigma = np.fft.ifftshift(laplacian_symbol(lat), axes=axes)
    u_hat = np.fft.fftn(np.fft.ifftshift(u0.values, axes=axes), axes=axes)
    vol = lat.cell_volume
    out = np.empty(times.size)
    for start in range(0, times.size, chunk):
        ts = times[start : start + chunk]
        phases = np.exp(-1j * ts.reshape((-1,) + (1,) * lat.d) * sigma[None])
        block = np.fft.ifftn(u_hat[None] * phases, axes=tuple(a + 1 for a in axes))
        mags = np.abs(block).reshape(ts.size, -1)
        if math.isinf(r):
            out[start : start + ts.size] = mags.max(axis=1)
        else:
            out[start : start + ts.size] = (vol * np.sum(mags**r, axis=1)) ** (1.0 / r)
    return out


def strichartz_sweep(
    query: StrichartzQuery,
    corpus: Sequence[ContinuumSampler],
    threads: int | None = None,
) -> list[ExperimentRecord]:
    """Measure ``|flow u0|_{L_t^q L_h^r} / |<grad>^{2/q+eps} u0|_{L^2}`` over an h-sweep.

    Corpus profiles are continuum objects, transported to each lattice by
    cell averaging.  Time integration is composite Simpson on ``t_nodes``
    nodes; with ``self_check`` on, the value is recomputed on the doubled
    node set and must agree to ``self_check_tol`` (relative).
    """
    if not corpus:
        raise ValueError("empty corpus")
    d = corpus[0].d
    query.pair.validate_for(d)
    q, r = query.pair.q, query.pair.r
    smoothness = (0.0 if math.isinf(q) else 2.0 / q) + query.epsilon
    t0, t1 = query.time_interval
    n_fine = 2 * (query.t_nodes - 1) + 1 if query.self_check else query.t_nodes
    times = np.linspace(t0, t1, n_fine)

    def run_cell(cell: tuple[float, ContinuumSampler]) -> ExperimentRecord:
        h, profile = cell
        lat = Lattice.from_spacing(d, h)
        u0 = discretize(profile, lat)
        g = _flow_space_norms(u0, times, r)
        value = _mixed_norm(g, times, q)
        if query.self_check:
            coarse = _mixed_norm(g[::2], times[::2], q)
            if value > 0 and abs(value - coarse) > query.self_check_tol * value:
                raise NumericalAccuracyError(
                    f"Simpson node-doubling changed the mixed norm by "
                    f"{abs(value - coarse) / value:.2%} (> {query.self_check_tol:.0%}) "
                    f"at h={h}, profile {profile.tag!r}"
                )
        rhs = sobolev_norm(u0, smoothness)
        ratio = None if rhs == 0 else value / rhs
        return ExperimentRecord(
            "strichartz", h, value, ratio, q=q, r=r, epsilon=query.epsilon,
            metadata={"profile": profile.tag},
        )

    cells = [(h, profile) for h in query.h_sweep for profile in corpus]
    return map_parallel(run_cell, cells, threads)
