"""Lattice geometry, grid functions, quadrature, interpolation, serialization.

Closed-form oracles are written out literally next to the assertions they
back; brute-force checks use direct O(n**2) summation or dense midpoint
quadrature so they share no code with the implementation under test.
"""
from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lnls.corpus import random_grid
from lnls.lattice import (
    ContinuumSampler,
    GridFunction,
    Lattice,
    LatticeMismatchError,
    backward_difference,
    continuum_l2_error,
    convolve,
    discrete_laplacian_stencil,
    discretize,
    forward_difference,
    gradient_norm_sq,
    grid_from_json_obj,
    grid_to_json_obj,
    holder_check,
    inner_product,
    interpolant_h1_norm,
    interpolant_l2_norm,
    interpolate,
    lebesgue_norm,
    read_grid,
    read_grid_json,
    refined_midpoint_axes,
    require_same_lattice,
    sampler_l2_distance,
    write_grid,
    write_grid_json,
)

TWO_PI = 2.0 * math.pi


# --------------------------------------------------------------------------
# geometry


def test_lattice_geometry_1d():
    lat = Lattice(1, 8)
    assert lat.h == math.pi / 8
    assert lat.n_per_axis == 16
    assert lat.n_points == 16
    assert lat.shape == (16,)
    assert lat.cell_volume == lat.h
    x = lat.axis_coords()
    assert x[0] == -math.pi
    assert np.allclose(np.diff(x), lat.h)
    assert x[-1] == pytest.approx(math.pi - lat.h)
    k = lat.frequencies()
    assert k[0] == -8 and k[-1] == 7
    # x = 0 sits at slot M
    assert x[8] == 0.0


def test_lattice_geometry_2d():
    lat = Lattice(2, 4)
    assert lat.shape == (8, 8)
    assert lat.n_points == 64
    assert lat.cell_volume == pytest.approx(lat.h**2)
    xx, yy = lat.meshgrid()
    assert xx.shape == (8, 8)
    # row-major: first axis varies along rows
    assert np.allclose(xx[:, 0], lat.axis_coords())
    assert np.allclose(yy[0, :], lat.axis_coords())


def test_lattice_validation():
    with pytest.raises(ValueError):
        Lattice(3, 8)  # only d in {1, 2}
    with pytest.raises(ValueError):
        Lattice(1, 12)  # not a power of two
    with pytest.raises(ValueError):
        Lattice(1, 0)


def test_from_spacing_roundtrip():
    for m in (2, 8, 64):
        lat = Lattice.from_spacing(1, math.pi / m)
        assert lat.M == m
    with pytest.raises(ValueError):
        Lattice.from_spacing(1, math.pi / 12)
    with pytest.raises(ValueError):
        Lattice.from_spacing(1, 0.4)


# --------------------------------------------------------------------------
# grid functions


def test_grid_function_coerces_and_checks():
    lat = Lattice(1, 2)
    u = GridFunction(lat, np.arange(4))
    assert u.values.dtype == np.complex128
    with pytest.raises(ValueError):
        GridFunction(lat, np.array([1.0, np.nan, 0.0, 0.0]))
    with pytest.raises(ValueError):
        GridFunction(lat, np.ones(5))


def test_grid_function_arithmetic(rng):
    lat = Lattice(2, 4)
    u = random_grid(lat, rng)
    v = random_grid(lat, rng)
    w = u + v
    assert np.allclose(w.values, u.values + v.values)
    assert np.allclose((u - v).values, u.values - v.values)
    assert np.allclose((2.5j * u).values, 2.5j * u.values)
    assert np.allclose((-u).values, -u.values)
    c = u.copy()
    c.values[0, 0] += 1.0
    assert c.values[0, 0] != u.values[0, 0]


def test_require_same_lattice():
    a = GridFunction.zeros(Lattice(1, 4))
    b = GridFunction.zeros(Lattice(1, 8))
    with pytest.raises(LatticeMismatchError):
        require_same_lattice(a, b)


# --------------------------------------------------------------------------
# norms and products


def test_lebesgue_norm_constant():
    # |1|_{L^r} = (2 pi)^{d/r}
    for d in (1, 2):
        lat = Lattice(d, 4)
        one = GridFunction(lat, np.ones(lat.shape))
        for r in (1.0, 2.0, 4.0):
            assert lebesgue_norm(one, r) == pytest.approx(TWO_PI ** (d / r), rel=1e-13)
        assert lebesgue_norm(one, math.inf) == 1.0
    with pytest.raises(ValueError):
        lebesgue_norm(one, 0.5)


def test_inner_product_is_sesquilinear(rng):
    lat = Lattice(1, 8)
    u, v = random_grid(lat, rng), random_grid(lat, rng)
    assert inner_product(u, v) == pytest.approx(np.conj(inner_product(v, u)))
    assert inner_product(u, u).real == pytest.approx(lebesgue_norm(u, 2) ** 2, rel=1e-12)
    # linear in the first slot, conjugate-linear in the second
    assert inner_product(2j * u, v) == pytest.approx(2j * inner_product(u, v))
    assert inner_product(u, 2j * v) == pytest.approx(-2j * inner_product(u, v))


@given(seed=st.integers(0, 2**32 - 1),
       pqr=st.sampled_from([(2.0, 2.0, 1.0), (4.0, 4.0, 2.0), (3.0, 6.0, 2.0), (math.inf, 2.0, 2.0)]))
def test_holder_inequality_holds(seed, pqr):
    p, q, r = pqr
    lat = Lattice(1, 8)
    gen = np.random.default_rng(seed)
    u, v = random_grid(lat, gen), random_grid(lat, gen)
    lhs, rhs = holder_check(u, v, p, q, r)
    assert lhs <= rhs * (1.0 + 1e-12)
    assert lhs == pytest.approx(lebesgue_norm(GridFunction(lat, u.values * v.values), r), rel=1e-12)
    with pytest.raises(ValueError):
        holder_check(u, v, 2.0, 3.0, 1.0)


# --------------------------------------------------------------------------
# convolution


def _convolve_direct(u: GridFunction, v: GridFunction) -> np.ndarray:
    """O(n**2) periodic convolution h^d sum_n u(x_n) v(x_{m-n})."""
    lat = u.lattice
    n = lat.n_per_axis
    # slot s holds the point x = h (s - M), so x_m - x_j sits at slot (m - j + M) mod n
    shift = lat.M
    out = np.zeros(lat.shape, dtype=complex)
    if lat.d == 1:
        for m in range(n):
            acc = 0.0 + 0.0j
            for j in range(n):
                acc += u.values[j] * v.values[(m - j + shift) % n]
            out[m] = acc
    else:
        for m1 in range(n):
            for m2 in range(n):
                acc = 0.0 + 0.0j
                for j1 in range(n):
                    for j2 in range(n):
                        acc += u.values[j1, j2] * v.values[(m1 - j1 + shift) % n,
                                                           (m2 - j2 + shift) % n]
                out[m1, m2] = acc
    return out * lat.cell_volume


def test_convolution_matches_direct_sum(rng):
    for d, m in ((1, 4), (2, 2)):
        lat = Lattice(d, m)
        u, v = random_grid(lat, rng), random_grid(lat, rng)
        w = convolve(u, v)
        assert np.allclose(w.values, _convolve_direct(u, v), atol=1e-13)
        assert np.allclose(convolve(v, u).values, w.values, atol=1e-13)


def test_convolution_with_point_mass_is_identity(rng):
    lat = Lattice(1, 8)
    u = random_grid(lat, rng)
    delta = GridFunction.zeros(lat)
    delta.values[lat.M] = 1.0 / lat.cell_volume  # unit point mass at x = 0
    w = convolve(u, delta)
    assert np.allclose(w.values, u.values, atol=1e-13)


# --------------------------------------------------------------------------
# difference operators


def test_forward_difference_on_plane_wave():
    lat = Lattice(1, 16)
    k = 3
    x = lat.axis_coords()
    u = GridFunction(lat, np.exp(1j * k * x))
    got = forward_difference(u, 0)
    want = np.exp(1j * k * x) * (np.exp(1j * k * lat.h) - 1.0) / lat.h
    assert np.allclose(got.values, want, atol=1e-13)


@given(seed=st.integers(0, 2**32 - 1))
def test_summation_by_parts(seed):
    # <D+ u, v> = -<u, D- v> exactly on periodic grids
    lat = Lattice(2, 4)
    gen = np.random.default_rng(seed)
    u, v = random_grid(lat, gen), random_grid(lat, gen)
    for axis in (0, 1):
        lhs = inner_product(forward_difference(u, axis), v)
        rhs = -inner_product(u, backward_difference(v, axis))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_stencil_laplacian_is_div_grad(rng):
    lat = Lattice(2, 8)
    u = random_grid(lat, rng)
    lap = discrete_laplacian_stencil(u)
    comp = GridFunction.zeros(lat)
    for axis in (0, 1):
        comp = comp + backward_difference(forward_difference(u, axis), axis)
    assert np.allclose(lap.values, comp.values, atol=1e-12)


def test_gradient_norm_sq(rng):
    lat = Lattice(2, 4)
    u = random_grid(lat, rng)
    want = sum(lebesgue_norm(forward_difference(u, ax), 2) ** 2 for ax in (0, 1))
    assert gradient_norm_sq(u) == pytest.approx(want, rel=1e-12)


# --------------------------------------------------------------------------
# cell-average discretization


def test_discretize_plane_wave_closed_form():
    # cell average of e^{ikx} over [x_m, x_m + h) is e^{ik x_m} (e^{ikh}-1)/(ikh)
    lat = Lattice(1, 8)
    x = lat.axis_coords()
    for k in (1, 2, 5):
        f = ContinuumSampler(lambda x_, k=k: np.exp(1j * k * x_), 1)
        u = discretize(f, lat)
        want = np.exp(1j * k * x) * (np.exp(1j * k * lat.h) - 1.0) / (1j * k * lat.h)
        assert np.allclose(u.values, want, atol=1e-12)


def test_discretize_product_mode_2d():
    lat = Lattice(2, 4)
    k = (2, -1)
    f = ContinuumSampler(lambda x, y: np.exp(1j * (k[0] * x + k[1] * y)), 2)
    u = discretize(f, lat)
    xx, yy = lat.meshgrid()
    factor = np.prod([(np.exp(1j * kj * lat.h) - 1.0) / (1j * kj * lat.h) for kj in k])
    want = np.exp(1j * (k[0] * xx + k[1] * yy)) * factor
    assert np.allclose(u.values, want, atol=1e-12)


def test_discretize_constant_and_linearity(rng):
    lat = Lattice(2, 4)
    c = 2.0 - 0.5j
    f = ContinuumSampler(lambda x, y: np.full(np.broadcast(x, y).shape, c), 2)
    assert np.allclose(discretize(f, lat).values, c)
    g1 = ContinuumSampler(lambda x, y: np.cos(x) + 0.0 * y, 2)
    g2 = ContinuumSampler(lambda x, y: np.sin(y) + 0.0 * x, 2)
    g12 = ContinuumSampler(lambda x, y: np.cos(x) + np.sin(y), 2)
    got = discretize(g12, lat)
    assert np.allclose(got.values, discretize(g1, lat).values + discretize(g2, lat).values,
                       atol=1e-13)


# --------------------------------------------------------------------------
# interpolation


def test_interpolant_reproduces_lattice_values(rng):
    for d, m in ((1, 8), (2, 4)):
        lat = Lattice(d, m)
        u = random_grid(lat, rng)
        p = interpolate(u)
        got = p(*lat.meshgrid()) if d == 2 else p(lat.axis_coords())
        assert np.allclose(got, u.values, atol=1e-12)


def test_interpolant_formula_inside_cell(rng):
    # within cell m: p(x) = u(x_m) + sum_j D+_j u(x_m) (x_j - x_{m, j})
    lat = Lattice(2, 4)
    u = random_grid(lat, rng)
    p = interpolate(u)
    du0 = forward_difference(u, 0)
    du1 = forward_difference(u, 1)
    x = lat.axis_coords()
    gen = np.random.default_rng(7)
    for _ in range(20):
        i, j = gen.integers(0, lat.n_per_axis, size=2)
        d0, d1 = gen.uniform(0.05, 0.95, size=2) * lat.h
        want = u.values[i, j] + du0.values[i, j] * d0 + du1.values[i, j] * d1
        got = p(np.array([x[i] + d0]), np.array([x[j] + d1]))[0]
        assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_interpolant_periodic_wrap(rng):
    lat = Lattice(1, 4)
    u = random_grid(lat, rng)
    p = interpolate(u)
    # last cell [pi - h, pi) interpolates toward u(-pi) = u(pi)
    x_last = math.pi - lat.h
    delta = 0.3 * lat.h
    dplus = (u.values[0] - u.values[-1]) / lat.h
    want = u.values[-1] + dplus * delta
    assert p(np.array([x_last + delta]))[0] == pytest.approx(want, rel=1e-12)
    # evaluation is 2 pi periodic
    assert p(np.array([0.25 + TWO_PI]))[0] == pytest.approx(p(np.array([0.25]))[0], rel=1e-12)


def _interpolant_l2_bruteforce(u: GridFunction, oversample: int) -> float:
    axes = refined_midpoint_axes(u.lattice, oversample)
    p = interpolate(u)
    vals = p.on_tensor_grid(axes)
    cell = (u.lattice.h / oversample) ** u.lattice.d
    return math.sqrt(float(np.sum(np.abs(vals) ** 2) * cell))


def test_interpolant_l2_norm_closed_form(rng):
    for d, m, os_ in ((1, 8, 64), (2, 4, 32)):
        lat = Lattice(d, m)
        u = random_grid(lat, rng)
        exact = interpolant_l2_norm(u)
        brute = _interpolant_l2_bruteforce(u, os_)
        # midpoint quadrature converges at O(oversample^-2)
        assert exact == pytest.approx(brute, rel=5.0 / os_**2)


def test_interpolant_norms_on_constant():
    for d in (1, 2):
        lat = Lattice(d, 4)
        one = GridFunction(lat, np.ones(lat.shape))
        assert interpolant_l2_norm(one) == pytest.approx(TWO_PI ** (d / 2), rel=1e-13)
        assert interpolant_h1_norm(one) == pytest.approx(TWO_PI ** (d / 2), rel=1e-13)


def test_interpolant_h1_norm_gradient_part(rng):
    # broken H^1: |p u|_{H^1}^2 = |p u|_{L^2}^2 + sum_j h^d sum |D+_j u|^2
    lat = Lattice(2, 4)
    u = random_grid(lat, rng)
    grad_sq = gradient_norm_sq(u)
    want = math.sqrt(interpolant_l2_norm(u) ** 2 + grad_sq)
    assert interpolant_h1_norm(u) == pytest.approx(want, rel=1e-12)


# --------------------------------------------------------------------------
# continuum distance


def test_continuum_l2_error_self_is_zero():
    f = ContinuumSampler(np.cos, 1)
    lat = Lattice(1, 8)
    u = discretize(f, lat)
    err_self = sampler_l2_distance(interpolate(u), interpolate(u.copy()), lat, oversample=8)
    assert err_self <= 1e-14


def test_continuum_l2_error_against_quadrature():
    lat = Lattice(1, 8)
    f = ContinuumSampler(np.cos, 1)
    u = discretize(f, lat)
    os_ = 32
    got = continuum_l2_error(u, f, oversample=os_)
    axes = refined_midpoint_axes(lat, os_)
    diff = interpolate(u).on_tensor_grid(axes) - f.on_tensor_grid(axes)
    want = math.sqrt(float(np.sum(np.abs(diff) ** 2) * (lat.h / os_)))
    assert got == pytest.approx(want, rel=1e-12)


def test_refined_midpoint_axes_land_inside_cells():
    lat = Lattice(1, 4)
    (ax,) = refined_midpoint_axes(lat, 4)
    assert ax.size == lat.n_per_axis * 4
    assert ax[0] == pytest.approx(-math.pi + lat.h / 8)
    assert ax[-1] < math.pi
    with pytest.raises(ValueError):
        refined_midpoint_axes(lat, 2)


# --------------------------------------------------------------------------
# serialization


def test_grid_roundtrip_binary(tmp_path, rng):
    for d, m in ((1, 8), (2, 4)):
        lat = Lattice(d, m)
        u = random_grid(lat, rng)
        path = tmp_path / f"u{d}.grid"
        write_grid(u, path)
        v = read_grid(path)
        assert v.lattice == u.lattice
        assert np.array_equal(v.values, u.values)


def test_grid_rejects_bad_magic(tmp_path, rng):
    lat = Lattice(1, 4)
    path = tmp_path / "u.grid"
    write_grid(random_grid(lat, rng), path)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"XXXX"
    path.write_bytes(bytes(raw))
    with pytest.raises(ValueError):
        read_grid(path)


def test_grid_roundtrip_json(tmp_path, rng):
    lat = Lattice(2, 2)
    u = random_grid(lat, rng)
    obj = grid_to_json_obj(u)
    # the debug form is plain JSON
    v = grid_from_json_obj(json.loads(json.dumps(obj)))
    assert np.array_equal(v.values, u.values)
    path = tmp_path / "u.json"
    write_grid_json(u, path)
    w = read_grid_json(path)
    assert np.array_equal(w.values, u.values)
