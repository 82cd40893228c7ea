"""Time integration: splitting, RK4, Picard iteration, reference solver.

Key oracles: the lattice plane wave A e^{i(k0.x - omega t)} with
omega = sigma(k0) + lam |A|^{p-1} solves the discrete equation exactly, the
linear flow is the diagonal phase e^{-it sigma}, and mass is preserved to
machine precision by construction of the splitting.
"""
from __future__ import annotations

import math

import numpy as np
import pytest

from lnls.continuum import plane_wave, wrapped_gaussian
from lnls.corpus import random_grid
from lnls.dynamics import (
    EvolutionConfig,
    INTEGRATORS,
    IntegrationDivergedError,
    NlsParams,
    Trajectory,
    conserved,
    evolve,
    evolve_capture,
    linear_flow,
    nonlinear_phase_step,
    picard_contraction_factor,
    picard_iterate,
    reference_solution,
    reference_trajectory,
    rk4_stability_dt,
    step_rk4,
    step_strang,
)
from lnls.lattice import (
    GridFunction,
    Lattice,
    NumericalAccuracyError,
    lebesgue_norm,
)
from lnls.spectral import laplacian_symbol

TWO_PI = 2.0 * math.pi


def _plane_wave_grid(lat: Lattice, k0, amplitude=1.0) -> GridFunction:
    if lat.d == 1:
        x = lat.axis_coords()
        return GridFunction(lat, amplitude * np.exp(1j * k0[0] * x))
    xx, yy = lat.meshgrid()
    return GridFunction(lat, amplitude * np.exp(1j * (k0[0] * xx + k0[1] * yy)))


def _smooth_grid(lat: Lattice) -> GridFunction:
    x = lat.axis_coords()
    if lat.d == 1:
        vals = 0.6 * np.exp(1j * x) + 0.3 * np.exp(-2j * x) + 0.1
    else:
        xx, yy = lat.meshgrid()
        vals = 0.5 * np.exp(1j * xx) + 0.25 * np.exp(1j * (xx + yy)) + 0.1
    return GridFunction(lat, vals)


# --------------------------------------------------------------------------
# parameters


def test_params_validation():
    with pytest.raises(ValueError, match="p > 1 required"):
        NlsParams(p=0.5, lam=1)
    with pytest.raises(ValueError, match="p > 1 required"):
        NlsParams(p=1.0, lam=1)
    with pytest.raises(ValueError):
        NlsParams(p=3, lam=2)
    with pytest.raises(ValueError):
        NlsParams(p=3, lam=1, coupling=-0.5)
    params = NlsParams(p=3, lam=-1, coupling=0.5)
    assert params.effective_lam == -0.5
    assert NlsParams(p=3, lam=1, coupling=0.0).effective_lam == 0.0


def test_evolution_config_validation():
    with pytest.raises(ValueError):
        EvolutionConfig(dt=0.0, t_final=1.0)
    with pytest.raises(ValueError):
        EvolutionConfig(dt=0.1, t_final=-1.0)
    with pytest.raises(ValueError):
        EvolutionConfig(dt=0.1, t_final=1.0, integrator="euler")
    with pytest.raises(ValueError):
        EvolutionConfig(dt=0.1, t_final=1.0, record_stride=0)
    assert set(INTEGRATORS) == {"strang", "rk4", "duhamel_picard"}


# --------------------------------------------------------------------------
# linear flow


def test_linear_flow_phase_oracle():
    lat = Lattice(1, 8)
    u = _plane_wave_grid(lat, (3,))
    sym = laplacian_symbol(lat)
    sigma = sym[3 + lat.M]
    t = 0.21
    got = linear_flow(u, t)
    want = np.exp(-1j * t * sigma) * u.values
    assert np.allclose(got.values, want, atol=1e-13)


def test_linear_flow_unitary_group(rng):
    lat = Lattice(2, 8)
    u = random_grid(lat, rng)
    t1, t2 = 0.3, -0.7
    assert lebesgue_norm(linear_flow(u, t1), 2) == pytest.approx(lebesgue_norm(u, 2), rel=1e-12)
    ab = linear_flow(linear_flow(u, t1), t2)
    both = linear_flow(u, t1 + t2)
    assert np.allclose(ab.values, both.values, atol=1e-12)
    assert np.allclose(linear_flow(u, 0.0).values, u.values, atol=1e-15)


# --------------------------------------------------------------------------
# nonlinear phase and splitting


def test_nonlinear_phase_step_modulus_and_phase():
    lat = Lattice(1, 4)
    c = 0.8 * np.exp(0.3j)
    u = GridFunction(lat, np.full(lat.shape, c))
    params = NlsParams(p=3, lam=1)
    dt = 0.17
    v = nonlinear_phase_step(u, params, dt)
    assert np.allclose(np.abs(v.values), abs(c), atol=1e-14)
    want = c * np.exp(-1j * dt * abs(c) ** 2)
    assert np.allclose(v.values, want, atol=1e-14)


def test_strang_tracks_nonlinear_plane_wave():
    # A e^{i(k0 x - omega t)} with omega = sigma(k0) + lam |A|^{p-1}
    lat = Lattice(1, 8)
    amp = 0.9
    k0 = 2
    params = NlsParams(p=3, lam=1)
    u = _plane_wave_grid(lat, (k0,), amp)
    sigma = laplacian_symbol(lat)[k0 + lat.M]
    omega = sigma + amp**2
    dt = 1e-2
    n = 100
    v = u
    for _ in range(n):
        v = step_strang(v, params, dt)
    want = u.values * np.exp(-1j * omega * n * dt)
    assert np.max(np.abs(v.values - want)) <= 1e-12


def test_strang_mass_exact(rng):
    lat = Lattice(2, 4)
    u = random_grid(lat, rng)
    params = NlsParams(p=3.5, lam=-1)
    m0 = conserved(u, params).mass
    v = u
    for _ in range(200):
        v = step_strang(v, params, 1e-2)
    assert conserved(v, params).mass == pytest.approx(m0, rel=1e-12)


def test_conserved_closed_form():
    lat = Lattice(1, 8)
    amp, k0 = 0.7, 3
    u = _plane_wave_grid(lat, (k0,), amp)
    params = NlsParams(p=3, lam=1)
    c = conserved(u, params)
    assert c.mass == pytest.approx(amp**2 * TWO_PI, rel=1e-12)
    sigma = laplacian_symbol(lat)[k0 + lat.M]
    want_e = 0.5 * sigma * amp**2 * TWO_PI + 0.25 * amp**4 * TWO_PI
    assert c.energy == pytest.approx(want_e, rel=1e-12)
    # zero coupling removes the potential term
    free = conserved(u, NlsParams(p=3, lam=1, coupling=0.0))
    assert free.energy == pytest.approx(0.5 * sigma * amp**2 * TWO_PI, rel=1e-12)


def test_energy_drift_richardson_order_two():
    lat = Lattice(1, 16)
    u = _smooth_grid(lat)
    params = NlsParams(p=3, lam=1)
    drifts = []
    for dt in (2e-2, 1e-2):
        e0 = conserved(u, params).energy
        v = u
        worst = 0.0
        for _ in range(round(1.0 / dt)):
            v = step_strang(v, params, dt)
            worst = max(worst, abs(conserved(v, params).energy - e0))
        drifts.append(worst)
    ratio = drifts[0] / drifts[1]
    assert 3.2 <= ratio <= 4.8


def test_gauge_covariance():
    # u0 -> e^{i theta} u0 maps the solution to e^{i theta} u(t)
    lat = Lattice(1, 8)
    u = _smooth_grid(lat)
    theta = 0.83
    params = NlsParams(p=3, lam=-1)
    a = u
    b = GridFunction(lat, np.exp(1j * theta) * u.values)
    for _ in range(50):
        a = step_strang(a, params, 1e-2)
        b = step_strang(b, params, 1e-2)
    assert np.max(np.abs(b.values - np.exp(1j * theta) * a.values)) <= 1e-11


# --------------------------------------------------------------------------
# RK4


def test_rk4_stability_dt():
    lat = Lattice(1, 8)
    assert rk4_stability_dt(lat) == pytest.approx(0.5 * lat.h**2)
    lat2 = Lattice(2, 8)
    assert rk4_stability_dt(lat2) == pytest.approx(0.25 * lat2.h**2)


def test_rk4_agrees_with_strang():
    lat = Lattice(1, 8)
    x = lat.axis_coords()
    u = GridFunction(lat, 0.2 * np.exp(1j * x) + 0.1 * np.exp(-1j * x))
    params = NlsParams(p=3, lam=1)
    dt = 2e-3
    a = b = u
    for _ in range(500):
        a = step_rk4(a, params, dt)
        b = step_strang(b, params, dt)
    assert lebesgue_norm(a - b, 2) <= 1e-6


def test_rk4_diverges_above_stability_limit(rng):
    lat = Lattice(1, 32)
    u = random_grid(lat, rng)
    params = NlsParams(p=3, lam=1)
    dt = 50.0 * rk4_stability_dt(lat)
    with pytest.raises(IntegrationDivergedError):
        v = u
        for _ in range(200):
            v = step_rk4(v, params, dt)


# --------------------------------------------------------------------------
# evolve driver


def test_evolve_records_and_observer():
    lat = Lattice(1, 8)
    u = _smooth_grid(lat)
    params = NlsParams(p=3, lam=1)
    config = EvolutionConfig(dt=1e-2, t_final=0.1, record_stride=5)
    seen = []
    traj = evolve(u, params, config, observer=lambda t, state: seen.append(t))
    # the observer sees the initial state and every step
    assert seen[0] == 0.0
    assert len(seen) == 11
    assert traj.times[0] == 0.0
    assert traj.times[-1] == pytest.approx(0.1)
    assert len(traj.times) == 3  # t = 0, 0.05, 0.1
    assert len(traj.states) == len(traj.times) == len(traj.conserved)


def test_evolve_rejects_incommensurate_final_time():
    lat = Lattice(1, 4)
    u = _smooth_grid(lat)
    with pytest.raises(ValueError):
        evolve(u, NlsParams(p=3, lam=1), EvolutionConfig(dt=0.3, t_final=1.0))


def test_trajectory_save_load_roundtrip(tmp_path):
    lat = Lattice(1, 8)
    u = _smooth_grid(lat)
    params = NlsParams(p=3, lam=1)
    traj = evolve(u, params, EvolutionConfig(dt=1e-2, t_final=0.05))
    traj.save(tmp_path / "run")
    back = Trajectory.load(tmp_path / "run")
    assert back.times == traj.times
    assert back.params == params
    for a, b in zip(back.states, traj.states):
        assert np.array_equal(a.values, b.values)


def test_evolve_capture_linear_shortcut(rng):
    lat = Lattice(1, 16)
    u = random_grid(lat, rng)
    free = NlsParams(p=3, lam=1, coupling=0.0)
    got = evolve_capture(u, free, 1e-2, [0.0, 0.13, 0.4])
    for t, g in zip([0.0, 0.13, 0.4], got):
        want = linear_flow(u, t)
        assert np.max(np.abs(g.values - want.values)) <= 1e-12


def test_evolve_capture_matches_evolve():
    lat = Lattice(1, 8)
    u = _smooth_grid(lat)
    params = NlsParams(p=3, lam=1)
    (snap,) = evolve_capture(u, params, 1e-2, [0.1])
    traj = evolve(u, params, EvolutionConfig(dt=1e-2, t_final=0.1))
    assert np.max(np.abs(snap.values - traj.states[-1].values)) <= 1e-12


# --------------------------------------------------------------------------
# Picard iteration


def test_picard_free_limit(rng):
    lat = Lattice(1, 8)
    u = random_grid(lat, rng)
    free = NlsParams(p=3, lam=1, coupling=0.0)
    got = picard_iterate(u, free, 0.2, n_iter=2)
    want = linear_flow(u, 0.2)
    assert np.max(np.abs(got.values - want.values)) <= 1e-12


def test_picard_residuals_decay_geometrically():
    lat = Lattice(1, 8)
    u = GridFunction(lat, 0.2 * _smooth_grid(lat).values)
    params = NlsParams(p=3, lam=1)
    T = 0.05
    factor = picard_contraction_factor(u, params, T)
    assert factor < 1.0
    _, residuals = picard_iterate(u, params, T, n_iter=6, return_residuals=True)
    for a, b in zip(residuals, residuals[1:]):
        if a > 1e-13:
            assert b <= factor * a * 1.5
    assert residuals[-1] <= 1e-10


def test_picard_agrees_with_strang():
    lat = Lattice(1, 8)
    u = _smooth_grid(lat)
    params = NlsParams(p=3, lam=-1)
    T = 0.01
    via_picard = picard_iterate(u, params, T)
    via_strang = u
    for _ in range(20):
        via_strang = step_strang(via_strang, params, T / 20)
    assert lebesgue_norm(via_picard - via_strang, 2) <= 1e-7


def test_picard_precondition_violation_names_admissible_horizon():
    lat = Lattice(1, 8)
    u = GridFunction(lat, 10.0 * _smooth_grid(lat).values)
    params = NlsParams(p=3, lam=1)
    assert picard_contraction_factor(u, params, 5.0) >= 1.0
    with pytest.raises(ValueError, match="admissible T"):
        picard_iterate(u, params, 5.0)


def test_contraction_factor_formula():
    lat = Lattice(1, 8)
    u = _smooth_grid(lat)
    params = NlsParams(p=3, lam=1)
    T = 0.3
    norm = lebesgue_norm(u, 2)
    want = 3.0 * 1.0 * T * lat.h ** (-0.5 * (3 - 1) * 1) * (2 * norm) ** (3 - 1)
    assert picard_contraction_factor(u, params, T) == pytest.approx(want, rel=1e-12)


# --------------------------------------------------------------------------
# warnings and reference solver


def test_focusing_high_power_2d_warns():
    lat = Lattice(2, 4)
    u = _smooth_grid(lat)
    config = EvolutionConfig(dt=1e-2, t_final=0.02)
    with pytest.warns(UserWarning):
        evolve(u, NlsParams(p=3, lam=-1), config)


def test_reference_reproduces_initial_data():
    f = wrapped_gaussian(1, 0.8)
    ref = reference_solution(f, NlsParams(p=3, lam=1), 0.0, resolution=128)
    assert ref.l2_distance(f) <= 1e-12
    assert ref.self_distance <= 1e-12


def test_reference_free_flow_is_exact():
    f = wrapped_gaussian(1, 0.7)
    t = 0.4
    ref = reference_solution(f, NlsParams(p=3, lam=1, coupling=0.0), t, resolution=128)
    want = f.free_evolved(t)
    assert ref.l2_distance(want) <= 1e-12


def test_reference_tracks_nonlinear_plane_wave():
    # continuum oracle: A e^{i(k0 x - omega t)} with omega = |k0|^2 + lam |A|^{p-1}
    amp, k0 = 0.8, 1
    f = plane_wave(1, (k0,), amp)
    params = NlsParams(p=3, lam=1)
    t = 0.5
    ref = reference_solution(f, params, t, resolution=128, dt=5e-4)
    omega = k0**2 + amp**2
    want = f.scaled(np.exp(-1j * omega * t))
    assert ref.l2_distance(want) <= 1e-10
    assert ref.self_distance <= 1e-10


def test_reference_trajectory_validation():
    f = wrapped_gaussian(1, 0.8)
    params = NlsParams(p=3, lam=1)
    with pytest.raises(ValueError):
        reference_trajectory(f, params, [0.1], resolution=100)  # not a power of two
    g = wrapped_gaussian(2, 0.8)
    with pytest.raises(ValueError):
        reference_trajectory(g, params, [0.1], resolution=128)  # 2-d needs >= 256


def test_reference_self_check_failure_raises():
    f = wrapped_gaussian(1, 0.8)
    params = NlsParams(p=3, lam=1)
    with pytest.raises(NumericalAccuracyError, match="self-convergence"):
        reference_solution(f, params, 0.5, resolution=64, dt=0.1, tol=1e-14)
