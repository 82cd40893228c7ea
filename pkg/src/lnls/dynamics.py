"""Time integration of the lattice nonlinear Schroedinger equation.

The evolution equation is

    i du/dt + Lap_h u - lam * |u|^{p-1} u = 0,      p > 1, lam in {+1, -1},

with ``lam = +1`` defocusing and ``lam = -1`` focusing.  ``coupling``
scales the nonlinear term (1 by default; 0 gives the free flow and exists
as a diagnostic hook).

Integrators: exact free propagator (Fourier multiplier), exact nonlinear
phase rotation, their Strang composition (preserves mass exactly and
energy to O(dt^2)), a stencil-based RK4 cross-check, and Picard iteration
on the integral (Duhamel) form.  A fine-grid Fourier collocation solver of
the continuum equation provides reference solutions with a stored
self-convergence certificate.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .continuum import ContinuumSampler, TrigPolynomial, box_fourier
from .lattice import (
    GridFunction,
    Lattice,
    NumericalAccuracyError,
    discrete_laplacian_stencil,
    lebesgue_norm,
    read_grid,
    write_grid,
)
from .spectral import Multiplier, apply_multiplier, forward, laplacian_symbol

logger = logging.getLogger(__name__)

INTEGRATORS = ("strang", "rk4", "duhamel_picard")


class IntegrationDivergedError(RuntimeError):
    """An explicit integrator left its stability region (norm blow-up)."""


@dataclass(frozen=True)
class NlsParams:
    """Nonlinearity parameters: power ``p > 1``, sign ``lam``, coupling hook."""

    p: float
    lam: float
    coupling: float = 1.0

    def __post_init__(self) -> None:
        if not self.p > 1:
            raise ValueError(f"p > 1 required, got p={self.p}")
        if self.lam not in (1.0, -1.0, 1, -1):
            raise ValueError(f"lam must be +1 or -1, got {self.lam}")
        if self.coupling < 0:
            raise ValueError(f"coupling must be >= 0, got {self.coupling}")

    @property
    def effective_lam(self) -> float:
        return float(self.lam) * self.coupling


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    t_final: float
    integrator: str = "strang"
    record_stride: int = 1

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_final < 0:
            raise ValueError(f"t_final must be >= 0, got {self.t_final}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if self.record_stride < 1:
            raise ValueError(f"record_stride must be >= 1, got {self.record_stride}")


@dataclass(frozen=True)
class ConservedQuantities:
    mass: float
    energy: float


# ---------------------------------------------------------------------------
# Elementary flows
# ---------------------------------------------------------------------------


def linear_flow(u: GridFunction, t: float) -> GridFunction:
    """Free propagator ``exp(i t Lap_h)``: multiplier ``exp(-i t sigma_h(k))``."""
    lat = u.lattice
    phase = np.exp(-1j * t * laplacian_symbol(lat))
    return apply_multiplier(u, Multiplier(lat, phase, tag=f"free_flow(t={t})"))


def nonlinear_phase_step(u: GridFunction, params: NlsParams, dt: float) -> GridFunction:
    """Exact solution of ``i du/dt = lam |u|^{p-1} u`` over ``dt`` (modulus preserved)."""
    theta = -params.effective_lam * dt * np.abs(u.values) ** (params.p - 1.0)
    return GridFunction(u.lattice, u.values * np.exp(1j * theta))


def step_strang(u: GridFunction, params: NlsParams, dt: float) -> GridFunction:
    """Strang splitting ``N(dt/2) . L(dt) . N(dt/2)`` (second order, mass-exact)."""
    half = nonlinear_phase_step(u, params, dt / 2.0)
    full = linear_flow(half, dt)
    return nonlinear_phase_step(full, params, dt / 2.0)


def rk4_stability_dt(lattice: Lattice) -> float:
    """Documented stability threshold ``0.5 h^2 / d`` for the RK4 step."""
    return 0.5 * lattice.h**2 / lattice.d


def step_rk4(u: GridFunction, params: NlsParams, dt: float) -> GridFunction:
    """Classical RK4 on ``du/dt = i (Lap_h u - lam |u|^{p-1} u)`` (stencil Laplacian).

    Requires ``dt`` below roughly :func:`rk4_stability_dt`; a norm growth
    beyond 10x raises :class:`IntegrationDivergedError`.
    """

    def rhs(v: np.ndarray) -> np.ndarray:
        g = GridFunction(u.lattice, v)
        lap = discrete_laplacian_stencil(g).values
        return 1j * (lap - params.effective_lam * np.abs(v) ** (params.p - 1.0) * v)

    v = u.values
    k1 = rhs(v)
    k2 = rhs(v + 0.5 * dt * k1)
    k3 = rhs(v + 0.5 * dt * k2)
    k4 = rhs(v + dt * k3)
    out = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise IntegrationDivergedError(
            f"RK4 produced non-finite values at dt={dt} (threshold ~{rk4_stability_dt(u.lattice):.3g})"
        )
    before = float(np.linalg.norm(v))
    after = float(np.linalg.norm(out))
    if before > 0 and after > 10.0 * before:
        raise IntegrationDivergedError(
            f"RK4 norm grew by {after / before:.2f}x in one step; "
            f"dt={dt} exceeds the stability threshold ~{rk4_stability_dt(u.lattice):.3g}"
        )
    return GridFunction(u.lattice, out)


# ---------------------------------------------------------------------------
# Conserved quantities
# ---------------------------------------------------------------------------


def conserved(u: GridFunction, params: NlsParams) -> ConservedQuantities:
    """Mass ``|u|_2^2`` and energy ``1/2 |sqrt(-Lap_h) u|_2^2 + lam/(p+1) |u|_{p+1}^{p+1}``."""
    lat = u.lattice
    mass = lebesgue_norm(u, 2) ** 2
    spec = forward(u)
    kinetic = 0.5 * float(
        np.sum(laplacian_symbol(lat) * np.abs(spec.values) ** 2) / (2.0 * math.pi) ** lat.d
    )
    potential = (params.effective_lam / (params.p + 1.0)) * lebesgue_norm(u, params.p + 1.0) ** (
        params.p + 1.0
    )
    return ConservedQuantities(mass=mass, energy=kinetic + potential)


# ---------------------------------------------------------------------------
# Trajectory driver
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    params: NlsParams
    config: EvolutionConfig
    times: list[float]
    states: list[GridFunction]
    conserved: list[ConservedQuantities]

    @property
    def lattice(self) -> Lattice:
        return self.states[0].lattice

    def save(self, directory) -> None:
        """Write snapshots as grid binaries plus a JSON manifest."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        names = []
        for i, state in enumerate(self.states):
            name = f"snap_{i:06d}.grid"
            write_grid(state, directory / name)
            names.append(name)
        manifest = {
            "schema_version": 1,
            "lattice": {"d": self.lattice.d, "M": self.lattice.M},
            "params": {"p": self.params.p, "lam": self.params.lam, "coupling": self.params.coupling},
            "config": {
                "dt": self.config.dt,
                "t_final": self.config.t_final,
                "integrator": self.config.integrator,
                "record_stride": self.config.record_stride,
            },
            "times": self.times,
            "snapshots": names,
            "conserved": [{"t": t, "mass": c.mass, "energy": c.energy}
                          for t, c in zip(self.times, self.conserved)],
        }
        with open(directory / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, directory) -> "Trajectory":
        directory = Path(directory)
        with open(directory / "manifest.json") as fh:
            manifest = json.load(fh)
        if manifest.get("schema_version") != 1:
            raise ValueError(f"unsupported trajectory schema {manifest.get('schema_version')!r}")
        params = NlsParams(
            p=manifest["params"]["p"],
            lam=manifest["params"]["lam"],
            coupling=manifest["params"].get("coupling", 1.0),
        )
        config = EvolutionConfig(**manifest["config"])
        states = [read_grid(directory / name) for name in manifest["snapshots"]]
        cons = [ConservedQuantities(row["mass"], row["energy"]) for row in manifest["conserved"]]
        return cls(params, config, list(manifest["times"]), states, cons)


def _focusing_warning(params: NlsParams, lattice: Lattice) -> None:
    if params.lam < 0 and params.coupling > 0 and lattice.d == 2 and params.p >= 3:
        warnings.warn(
            f"focusing nonlinearity with p={params.p} >= 3 in d=2: no global bound is "
            "guaranteed; results may blow up",
            stacklevel=3,
        )


class _StrangStepper:
    """Strang stepper with cached phases, working in unshifted FFT layout."""

    def __init__(self, lattice: Lattice, params: NlsParams, dt: float, symbol: np.ndarray):
        self.lattice = lattice
        self.params = params
        self.dt = dt
        axes = tuple(range(lattice.d))
        self.axes = axes
        self.phase = np.fft.ifftshift(np.exp(-1j * dt * symbol), axes=axes)

    def to_internal(self, u: GridFunction) -> np.ndarray:
        return np.fft.ifftshift(u.values, axes=self.axes)

    def to_grid(self, v: np.ndarray) -> GridFunction:
        return GridFunction(self.lattice, np.fft.fftshift(v, axes=self.axes))

    def _half_nonlinear(self, v: np.ndarray) -> np.ndarray:
        lam = self.params.effective_lam
        if lam == 0.0:
            return v
        theta = -lam * (self.dt / 2.0) * np.abs(v) ** (self.params.p - 1.0)
        return v * np.exp(1j * theta)

    def step(self, v: np.ndarray) -> np.ndarray:
        v = self._half_nonlinear(v)
        v = np.fft.ifftn(np.fft.fftn(v, axes=self.axes) * self.phase, axes=self.axes)
        return self._half_nonlinear(v)


def evolve(
    u0: GridFunction,
    params: NlsParams,
    config: EvolutionConfig,
    observer: Callable[[float, GridFunction], None] | None = None,
) -> Trajectory:
    """Integrate to ``t_final``, recording every ``record_stride`` steps.

    The initial and final states are always recorded.  ``observer`` (if
    given) is called at every step with the current time and state.
    """
    lat = u0.lattice
    _focusing_warning(params, lat)
    n_steps = int(round(config.t_final / config.dt)) if config.t_final > 0 else 0
    if abs(n_steps * config.dt - config.t_final) > 1e-9 * max(1.0, config.t_final):
        raise ValueError(
            f"t_final={config.t_final} is not an integer multiple of dt={config.dt}"
        )
    times = [0.0]
    states = [u0.copy()]
    cons = [conserved(u0, params)]
    if observer is not None:
        observer(0.0, states[0])

    if config.integrator == "strang":
        stepper = _StrangStepper(lat, params, config.dt, laplacian_symbol(lat))
        v = stepper.to_internal(u0)
        for j in range(1, n_steps + 1):
            v = stepper.step(v)
            t = j * config.dt
            record = (j % config.record_stride == 0) or j == n_steps
            if record or observer is not None:
                g = stepper.to_grid(v)
                if observer is not None:
                    observer(t, g)
                if record:
                    times.append(t)
                    states.append(g)
                    cons.append(conserved(g, params))
    else:
        step_fn = step_rk4 if config.integrator == "rk4" else _step_picard
        u = u0
        for j in range(1, n_steps + 1):
            u = step_fn(u, params, config.dt)
            t = j * config.dt
            if observer is not None:
                observer(t, u)
            if (j % config.record_stride == 0) or j == n_steps:
                times.append(t)
                states.append(u)
                cons.append(conserved(u, params))
    return Trajectory(params, config, times, states, cons)


def _step_picard(u: GridFunction, params: NlsParams, dt: float) -> GridFunction:
    return picard_iterate(u, params, dt, n_nodes=8, n_iter=6)


def evolve_capture(
    u0: GridFunction,
    params: NlsParams,
    dt: float,
    times: Sequence[float],
    integrator: str = "strang",
) -> list[GridFunction]:
    """States at the requested times (sorted, >= 0), stepping segment by segment.

    Each segment uses the step count closest to ``dt``; with ``coupling = 0``
    and the Strang integrator the free flow is applied exactly instead.
    """
    times = [float(t) for t in times]
    if any(t < 0 for t in times) or sorted(times) != times or len(set(times)) != len(times):
        raise ValueError(f"times must be sorted, distinct and >= 0, got {times}")
    lat = u0.lattice
    _focusing_warning(params, lat)
    if params.coupling == 0.0 and integrator == "strang":
        return [u0.copy() if t == 0 else linear_flow(u0, t) for t in times]

    out: list[GridFunction] = []
    if integrator == "strang":
        stepper_cache: dict[float, _StrangStepper] = {}
        symbol = laplacian_symbol(lat)
        v = np.fft.ifftshift(u0.values, axes=tuple(range(lat.d)))
        current = 0.0
        for t in times:
            span = t - current
            if span > 0:
                n = max(1, int(round(span / dt)))
                dt_seg = span / n
                stepper = stepper_cache.get(dt_seg)
                if stepper is None:
                    stepper = _StrangStepper(lat, params, dt_seg, symbol)
                    stepper_cache[dt_seg] = stepper
                for _ in range(n):
                    v = stepper.step(v)
                current = t
            out.append(GridFunction(lat, np.fft.fftshift(v, axes=tuple(range(lat.d)))))
        return out

    if integrator not in INTEGRATORS:
        raise ValueError(f"integrator must be one of {INTEGRATORS}, got {integrator!r}")
    step_fn = step_rk4 if integrator == "rk4" else _step_picard
    u = u0
    current = 0.0
    for t in times:
        span = t - current
        if span > 0:
            n = max(1, int(round(span / dt)))
            dt_seg = span / n
            for _ in range(n):
                u = step_fn(u, params, dt_seg)
            current = t
        out.append(u.copy())
    return out


def time_averaged_sup_norm(times: Sequence[float], sup_values: Sequence[float], q: float) -> float:
    """``L_t^q`` quadrature ``(int |u(t)|_inf^q dt)^{1/q}`` from sampled sup norms."""
    t = np.asarray(times, dtype=float)
    g = np.asarray(sup_values, dtype=float)
    if t.shape != g.shape or t.size < 2:
        raise ValueError("need matching time and value arrays with at least two samples")
    if math.isinf(q):
        return float(g.max())
    return float(np.trapezoid(g**q, t) ** (1.0 / q))


# ---------------------------------------------------------------------------
# Picard iteration on the Duhamel form
# ---------------------------------------------------------------------------


def picard_contraction_factor(u0: GridFunction, params: NlsParams, T: float) -> float:
    """Smallness quantity ``p T h^{-d(p-1)/2} (2|u0|_2)^{p-1}`` (coupling-scaled)."""
    lat = u0.lattice
    norm = lebesgue_norm(u0, 2)
    return (
        params.p
        * params.coupling
        * T
        * lat.h ** (-lat.d * (params.p - 1.0) / 2.0)
        * (2.0 * norm) ** (params.p - 1.0)
    )


def picard_iterate(
    u0: GridFunction,
    params: NlsParams,
    T: float,
    n_nodes: int = 64,
    n_iter: int = 8,
    return_residuals: bool = False,
):
    """Fixed-point iteration of the integral form on a trapezoid time grid.

    ``u^{m+1}(t) = e^{itLap} u0 - i lam int_0^t e^{i(t-s)Lap} |u^m|^{p-1} u^m(s) ds``
    with the integral discretized by the trapezoid rule on ``n_nodes``
    equispaced nodes.  The contraction precondition
    :func:`picard_contraction_factor` ``< 1`` is checked up front.
    """
    if T < 0:
        raise ValueError(f"T must be >= 0, got {T}")
    if n_nodes < 2 or n_iter < 1:
        raise ValueError("need n_nodes >= 2 and n_iter >= 1")
    lat = u0.lattice
    if T == 0:
        return (u0.copy(), []) if return_residuals else u0.copy()
    factor = picard_contraction_factor(u0, params, T)
    if factor >= 1.0:
        raise ValueError(
            f"contraction precondition violated: factor {factor:.3g} >= 1; "
            f"largest admissible T is about {T / factor:.3g}"
        )

    axes = tuple(range(lat.d))
    sigma = np.fft.ifftshift(laplacian_symbol(lat), axes=axes)
    ds = T / (n_nodes - 1)
    nodes = np.arange(n_nodes) * ds
    u0_hat = np.fft.fftn(np.fft.ifftshift(u0.values, axes=axes), axes=axes)
    free_hats = [u0_hat * np.exp(-1j * s * sigma) for s in nodes]
    # One backward-shift phase per node offset; propagating node l to node j
    # multiplies by shift[j - l].
    shift = [np.exp(-1j * (m * ds) * sigma) for m in range(n_nodes)]
    lam = params.effective_lam
    p = params.p

    current = [np.fft.ifftn(fh, axes=axes) for fh in free_hats]
    residuals: list[float] = []
    measure = lat.cell_volume
    for _ in range(n_iter):
        nl_hats = []
        for v in current:
            w = np.abs(v) ** (p - 1.0) * v
            nl_hats.append(np.fft.fftn(w, axes=axes))
        new = [current[0]]
        for j in range(1, n_nodes):
            acc = 0.5 * shift[j] * nl_hats[0] + 0.5 * nl_hats[j]
            for l in range(1, j):
                acc = acc + shift[j - l] * nl_hats[l]
            integral_hat = free_hats[j] - 1j * lam * ds * acc
            new.append(np.fft.ifftn(integral_hat, axes=axes))
        res = max(
            math.sqrt(measure * float(np.sum(np.abs(a - b) ** 2)))
            for a, b in zip(new, current)
        )
        residuals.append(res)
        current = new
    final = GridFunction(lat, np.fft.fftshift(current[-1], axes=axes))
    return (final, residuals) if return_residuals else final


# ---------------------------------------------------------------------------
# Continuum reference solver
# ---------------------------------------------------------------------------


def _is_odd_integer(p: float) -> bool:
    return abs(p - round(p)) < 1e-12 and int(round(p)) % 2 == 1


def _continuum_strang_states(
    u0: ContinuumSampler,
    params: NlsParams,
    times: Sequence[float],
    resolution: int,
    dt: float,
) -> list[TrigPolynomial]:
    """Fourier collocation Strang solver of the continuum equation."""
    fine = Lattice(u0.d, resolution // 2)
    axes = tuple(range(fine.d))
    coords = fine.axis_coords()
    state = np.asarray(u0.on_tensor_grid([coords] * fine.d), dtype=np.complex128)
    state = np.fft.ifftshift(state, axes=axes)

    ksq = np.zeros(fine.shape)
    for km in fine.frequency_meshgrid():
        ksq = ksq + km.astype(float) ** 2
    ksq = np.fft.ifftshift(ksq, axes=axes)

    dealias = None
    if params.coupling > 0 and _is_odd_integer(params.p):
        cut = resolution // 3
        keep = np.ones(fine.shape, dtype=bool)
        for km in fine.frequency_meshgrid():
            keep &= np.abs(km) <= cut
        dealias = np.fft.ifftshift(keep, axes=axes)

    lam = params.effective_lam
    p = params.p
    modes = [fine.frequencies()] * fine.d
    vol = fine.cell_volume

    def snapshot() -> TrigPolynomial:
        hat = np.fft.fftshift(np.fft.fftn(state, axes=axes), axes=axes) * vol
        return TrigPolynomial(modes, hat, tag="reference")

    def half_nonlinear(v: np.ndarray, half_dt: float) -> np.ndarray:
        if lam == 0.0:
            return v
        return v * np.exp(-1j * lam * half_dt * np.abs(v) ** (p - 1.0))

    out: list[TrigPolynomial] = []
    current = 0.0
    for t in times:
        span = t - current
        if span > 0:
            n = max(1, int(round(span / dt)))
            dt_seg = span / n
            phase = np.exp(-1j * dt_seg * ksq)
            for _ in range(n):
                state = half_nonlinear(state, dt_seg / 2.0)
                state = np.fft.ifftn(np.fft.fftn(state, axes=axes) * phase, axes=axes)
                state = half_nonlinear(state, dt_seg / 2.0)
                if dealias is not None:
                    state = np.fft.ifftn(np.fft.fftn(state, axes=axes) * dealias, axes=axes)
            current = t
        out.append(snapshot())
    return out


def reference_trajectory(
    u0: ContinuumSampler,
    params: NlsParams,
    times: Sequence[float],
    resolution: int = 256,
    dt: float = 1e-3,
    self_check: bool = True,
    tol: float = 1e-4,
) -> dict[float, TrigPolynomial]:
    """Reference continuum solution at several times, sharing one solve.

    Runs the collocation solver at ``(resolution, dt)`` and, when
    ``self_check`` is on, again at ``(2 resolution, dt/2)``; the finer states
    are returned, each carrying the distance between the two runs as
    ``self_distance``.  A relative distance above ``tol`` raises
    :class:`NumericalAccuracyError`.  With ``coupling = 0`` the free flow is
    applied exactly in Fourier space.

    For non-odd-integer ``p`` the pointwise nonlinearity cannot be
    dealiased by the 2/3 rule, so the working resolution is doubled instead.
    """
    times = [float(t) for t in times]
    if any(t < 0 for t in times) or sorted(times) != times or len(set(times)) != len(times):
        raise ValueError(f"times must be sorted, distinct and >= 0, got {times}")
    if resolution & (resolution - 1) or resolution < 2:
        raise ValueError(f"resolution must be a power of two, got {resolution}")
    if u0.d == 2 and resolution < 256:
        raise ValueError(f"resolution must be >= 256 for d=2, got {resolution}")

    if params.coupling == 0.0:
        base = box_fourier(u0, resolution, tag="reference")
        states = [base.free_evolved(t) for t in times]
        if self_check:
            fine_base = box_fourier(u0, 2 * resolution, tag="reference")
            for t, st in zip(times, states):
                st.self_distance = st.l2_distance(fine_base.free_evolved(t))
        else:
            for st in states:
                st.self_distance = 0.0
        return dict(zip(times, states))

    if not _is_odd_integer(params.p):
        resolution *= 2
    coarse = _continuum_strang_states(u0, params, times, resolution, dt)
    if not self_check:
        for st in coarse:
            st.self_distance = 0.0
        return dict(zip(times, coarse))
    fine = _continuum_strang_states(u0, params, times, 2 * resolution, dt / 2.0)
    for t, lo, hi in zip(times, coarse, fine):
        dist = hi.l2_distance(lo)
        hi.self_distance = dist
        scale = max(1.0, hi.l2_norm())
        if dist > tol * scale:
            raise NumericalAccuracyError(
                f"reference self-convergence failed at t={t}: distance {dist:.3e} "
                f"exceeds tol {tol:.1e} (resolution {resolution}, dt {dt})"
            )
    return {t: hi for t, hi in zip(times, fine)}


def reference_solution(
    u0: ContinuumSampler,
    params: NlsParams,
    t: float,
    resolution: int = 256,
    dt: float = 1e-3,
    self_check: bool = True,
    tol: float = 1e-4,
) -> TrigPolynomial:
    """Continuum solution sampler at a single time (see :func:`reference_trajectory`)."""
    return reference_trajectory(
        u0, params, [t], resolution=resolution, dt=dt, self_check=self_check, tol=tol
    )[t]
