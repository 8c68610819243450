import math

import numpy as np
import pytest

from fibsh.grids import gen_equiangular, gen_fibonacci
from fibsh.harmonics import eval_basis_block, flat_index
from fibsh.quadrature import (InsufficientSamplesError, QuadratureWeights,
                              SolveFailedError, area_weights,
                              dh_closed_form_weights, equal_weights,
                              sampling_spectrum, solve_analytic_weights,
                              spectrum_deviation)

SQRT_2 = math.sqrt(2.0)


@pytest.mark.parametrize("b", [2, 4, 8, 16])
def test_analytic_weights_meet_constraints(b):
    grid = gen_fibonacci(math.ceil(4.2 * b * b))
    w = solve_analytic_weights(grid, b)
    assert w.residual <= 1e-10
    assert w.weights.sum() == pytest.approx(SQRT_2, abs=1e-10)
    spec = sampling_spectrum(grid, w, 2 * b)
    dev_dc, dev_rest = spectrum_deviation(spec, b)
    assert dev_dc <= 1e-10
    assert dev_rest <= 1e-9


def test_analytic_weights_near_constant_profile():
    # uniform grid coverage keeps the solved weights close to equal weights
    grid = gen_fibonacci(1076)
    w = solve_analytic_weights(grid, 16)
    mean = SQRT_2 / 1076
    assert w.weights.min() > 0.5 * mean
    assert w.weights.max() < 2.0 * mean


def test_insufficient_samples():
    with pytest.raises(InsufficientSamplesError):
        solve_analytic_weights(gen_fibonacci(1), 1)
    with pytest.raises(InsufficientSamplesError):
        solve_analytic_weights(gen_fibonacci(60), 4)


def test_degenerate_grid_fails():
    from fibsh.grids import SphericalGrid

    g = SphericalGrid("fibonacci", {"n": 17},
                      np.full(17, 1.0), np.full(17, 2.0))
    with pytest.raises(SolveFailedError):
        solve_analytic_weights(g, 2)


def test_analytic_matches_dh_on_equiangular_grid():
    solved = solve_analytic_weights(gen_equiangular(8), 8)
    closed = dh_closed_form_weights(8)
    assert np.max(np.abs(solved.weights - closed.weights)) <= 1e-12


def test_equal_weights_values():
    w2 = equal_weights(gen_fibonacci(2))
    assert np.allclose(w2.weights, SQRT_2 / 2)
    w = equal_weights(gen_fibonacci(4300))
    assert np.allclose(w.weights, SQRT_2 / 4300)
    assert w.weights.sum() == pytest.approx(SQRT_2, abs=1e-12)
    assert w.bandwidth is None


def test_area_weights_antipodal_symmetry():
    from fibsh.grids import SphericalGrid

    g = SphericalGrid("fibonacci", {"n": 2},
                      np.array([0.0, math.pi]), np.array([0.0, 0.0]))
    n_mc = 200_000
    w = area_weights(g, mc_samples=n_mc, seed=1)
    sigma = SQRT_2 * math.sqrt(0.25 / n_mc)
    assert abs(w.weights[0] - SQRT_2 / 2) < 3 * sigma
    assert w.weights.sum() == pytest.approx(SQRT_2, abs=1e-12)


def test_area_weights_octahedron_symmetry():
    from fibsh.grids import SphericalGrid

    xyz = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0],
                    [0, 0, 1], [0, 0, -1]], dtype=float)
    theta = np.arccos(xyz[:, 2])
    phi = np.arctan2(xyz[:, 1], xyz[:, 0]) % (2 * math.pi)
    g = SphericalGrid("icosahedral", {"k": 0}, theta, phi)
    n_mc = 600_000
    w = area_weights(g, mc_samples=n_mc, seed=2)
    p = 1.0 / 6.0
    sigma = SQRT_2 * math.sqrt(p * (1 - p) / n_mc)
    assert np.all(np.abs(w.weights - SQRT_2 / 6) < 3 * sigma)


def test_area_weights_fibonacci_ratio():
    w = area_weights(gen_fibonacci(1000), mc_samples=4_000_000, seed=0x5EED)
    assert w.weights.max() / w.weights.min() < 1.3


def test_area_weights_validation():
    with pytest.raises(ValueError):
        area_weights(gen_fibonacci(1))
    with pytest.raises(ValueError):
        area_weights(gen_fibonacci(10), mc_samples=10_000)


@pytest.mark.parametrize("b", [1, 2, 4, 8, 16])
def test_dh_closed_form_residual(b):
    w = dh_closed_form_weights(b)
    assert w.residual <= 1e-10
    assert w.weights.sum() == pytest.approx(SQRT_2, abs=1e-12)


def test_dh_b1_pole_ring_empty():
    w = dh_closed_form_weights(1)
    ring = w.weights.reshape(2, 2)
    assert np.allclose(ring[0], 0.0, atol=1e-15)
    assert np.allclose(ring[1], 1.0 / SQRT_2, atol=1e-14)


def test_dh_ring_weights_depend_on_theta_only():
    w = dh_closed_form_weights(6)
    rings = w.weights.reshape(12, 12)
    assert np.all(rings == rings[:, :1])


def test_dh_quadrature_integrates_legendre():
    # per-ring weights q = w * 2*sqrt(2)*b emulate integral_{-1}^{1} P_l dx
    b = 8
    w = dh_closed_form_weights(b)
    theta = math.pi * np.arange(2 * b) / (2 * b)
    q = w.weights.reshape(2 * b, 2 * b)[:, 0] * 2.0 * SQRT_2 * b
    x = np.cos(theta)
    for l in range(2 * b):
        pl = np.polynomial.legendre.legval(x, [0] * l + [1])
        want = 2.0 if l == 0 else 0.0
        assert float(np.dot(q, pl)) == pytest.approx(want, abs=1e-12)


def test_sampling_spectrum_dc_entry(fib8):
    grid, w = fib8
    spec = sampling_spectrum(grid, w, 16)
    assert spec.get(0, 0) == pytest.approx(1.0, abs=1e-10)
    tail = np.abs(spec.values[1:])
    assert tail.max() <= 1e-10

    weq = equal_weights(grid)
    spec_eq = sampling_spectrum(grid, weq, 16)
    assert spec_eq.get(0, 0) == pytest.approx(
        weq.weights.sum() / SQRT_2, abs=1e-12)
    _, dev = spectrum_deviation(spec_eq, 8)
    assert dev >= 1e-6


def test_sampling_spectrum_scaling_linearity(fib8):
    grid, w = fib8
    doubled = QuadratureWeights(grid, w.bandwidth, w.method, 2.0 * w.weights,
                                w.residual)
    s1 = sampling_spectrum(grid, w, 8)
    s2 = sampling_spectrum(grid, doubled, 8)
    assert np.allclose(s2.values, 2.0 * s1.values, atol=1e-14)


def test_sampling_spectrum_grid_mismatch(fib8):
    grid, w = fib8
    with pytest.raises(ValueError):
        sampling_spectrum(gen_fibonacci(10), w, 4)


def test_deviation_ordering_across_methods(fib16):
    grid, w_analytic = fib16
    spec = sampling_spectrum(grid, w_analytic, 32)
    assert max(spectrum_deviation(spec, 16)) <= 1e-9
    for weights in (equal_weights(grid),
                    area_weights(grid, mc_samples=200_000, seed=3)):
        dev = spectrum_deviation(sampling_spectrum(grid, weights, 32), 16)
        assert dev[1] >= 1e-6


def test_quadrature_exactness_on_basis_functions(fib8):
    # 2*pi*sqrt(2) * sum w Y_l^m == integral Y_l^m dOmega == sqrt(4pi) delta
    grid, w = fib8
    block = eval_basis_block(grid, 16)
    integrals = 2 * math.pi * SQRT_2 * (block @ w.weights)
    want = np.zeros_like(integrals)
    want[0] = math.sqrt(4 * math.pi)
    assert np.max(np.abs(integrals - want)) < 1e-9


def test_weights_json_roundtrip(fib8, tmp_path):
    import json

    grid, w = fib8
    doc = w.to_json()
    back = QuadratureWeights.from_json(json.loads(json.dumps(doc)))
    assert back.method == "analytic"
    assert back.bandwidth == 8
    assert np.array_equal(back.weights, w.weights)
    assert back.grid.key == grid.key
