#!/usr/bin/env python3
"""
Tests for spectral initialization, the Wirtinger-flow solvers and the distances
"""

import os
import sys
from dataclasses import replace

import numpy as np
import pytest

# Add src directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from algebra import OCTONION, QUATERNION, REAL, HyperVector
from errors import ShapeError, SolverError
from selftest import check_gradients, finite_difference
from sensing import PhaseSide, build_coded_fourier, build_wavelet, sample_gaussian
from solvers import (
    SolverConfig,
    Status,
    align,
    component_distance,
    distance,
    intensity_cost,
    oct_distance,
    owf,
    power_method,
    poisson_gradient,
    pure_phase_normalize,
    quat_distance,
    qtwf,
    qwf,
    relative_distance,
    solve,
    spectral_init,
    truncation_mask,
    two_sided_phase,
)
from transforms import default_bank


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def unit(rng, algebra):
    return algebra.random(1, rng, unit=True)[0]


def test_solver_config_validation():
    with pytest.raises(SolverError):
        SolverConfig(step_size=0)
    with pytest.raises(SolverError):
        SolverConfig(max_iters=0)
    with pytest.raises(SolverError):
        SolverConfig(truncation_lower=2.0, truncation_upper=1.0)
    with pytest.raises(SolverError):
        SolverConfig(init_scale="median")
    with pytest.raises(ValueError):
        SolverConfig(log_floor=0.0)
    with pytest.raises(SolverError):
        SolverConfig(step_growth=0.5)
    with pytest.raises(SolverError):
        SolverConfig(restarts=-1)

    config = SolverConfig.from_mapping({"step_size": 0.05, "name": "qwf", "unrelated": 1})
    assert config.step_size == 0.05
    assert config.to_dict()["max_iters"] == 2000


def test_power_method_finds_the_top_eigenpair():
    diagonal = np.array([5.0, 2.0, 1.0, 0.5])
    v, eigenvalue, iterations = power_method(lambda u: diagonal * u, 4, iters=500, tol=1e-14,
                                             rng=np.random.default_rng(0))
    assert eigenvalue == pytest.approx(5.0, rel=1e-10)
    assert abs(v[0]) == pytest.approx(1.0, rel=1e-6)
    assert iterations <= 500


def test_spectral_init_is_close_for_many_measurements(rng):
    model = sample_gaussian("gaussian-q", 400, 4, seed=3)
    x = HyperVector.random(QUATERNION, 4, rng)
    start = spectral_init(model, model.measure(x), seed=1)
    assert not start.degenerate
    assert quat_distance(start.estimate, x) / x.norm() < 0.6
    # E[y] = ||x||^2 row_energy / n
    assert start.estimate.norm() == pytest.approx(x.norm(), rel=0.2)


def test_spectral_init_of_zero_measurements():
    model = sample_gaussian("gaussian-q", 20, 3, seed=0)
    start = spectral_init(model, np.zeros(20))
    assert start.degenerate
    assert start.estimate.norm() == 0.0
    with pytest.raises(SolverError):
        qwf(model, np.zeros(20), x0=start.estimate)
    with pytest.raises(ShapeError):
        spectral_init(model, np.zeros(19))


def test_gradients_match_finite_differences():
    results = check_gradients(points=3, seed=5)
    assert [r.name for r in results] == ["qwf gradient", "qtwf gradient", "owf gradient"]
    assert all(r.passed for r in results), [r.detail for r in results]


def test_finite_difference_of_a_quadratic():
    matrix = np.array([[2.0, 1.0], [1.0, 3.0]])
    v = np.array([0.3, -0.7])
    grad = finite_difference(lambda u: 0.5 * u @ matrix @ u, v)
    assert np.allclose(grad, matrix @ v, atol=1e-8)


def test_exact_start_stops_immediately(rng):
    model = sample_gaussian("gaussian-q", 40, 4, seed=2)
    x = HyperVector.random(QUATERNION, 4, rng)
    y = model.measure(x)
    result = qwf(model, y, x0=x)
    assert result.status == Status.EXACT.value
    assert result.iterations_used == 0
    assert result.cost_trace == [0.0]
    assert result.estimate.isclose(x)


def test_cost_trace_never_increases(rng):
    model = sample_gaussian("gaussian-q", 48, 4, seed=8)
    x = HyperVector.random(QUATERNION, 4, rng)
    y = model.measure(x)
    config = SolverConfig(max_iters=200)
    result = qwf(model, y, config)
    assert np.all(np.diff(result.cost_trace) <= 0)
    assert len(result.cost_trace) == result.iterations_used + 1

    # the truncation mask moves between iterations, so only the count is fixed
    result = qtwf(model, y, config)
    assert result.iterations_used <= config.max_iters
    assert len(result.cost_trace) == result.iterations_used + 1


def test_qwf_recovers_a_quaternion_signal(rng):
    model = sample_gaussian("gaussian-q", 128, 8, seed=11)
    x = HyperVector.random(QUATERNION, 8, rng)
    result = solve("qwf", model, model.measure(x), SolverConfig(max_iters=3000), truth=x, seed=1)
    assert result.final_distance / x.norm() < 1e-4
    assert relative_distance(model, result.estimate, x) == pytest.approx(result.final_distance / x.norm())


def test_owf_decreases_the_cost(rng):
    model = sample_gaussian("gaussian-o", 160, 4, seed=4)
    x = HyperVector.random(OCTONION, 4, rng)
    y = model.measure(x)
    result = owf(model, y, SolverConfig(max_iters=300), x0=None)
    assert result.cost_trace[-1] < 0.1 * result.cost_trace[0]
    assert result.estimate.algebra is OCTONION


def test_solver_model_compatibility(rng):
    octonion_model = sample_gaussian("gaussian-o", 20, 2, seed=0)
    quaternion_model = sample_gaussian("gaussian-q", 20, 2, seed=0)
    y_o = octonion_model.measure(OCTONION.random(2, rng))
    y_q = quaternion_model.measure(QUATERNION.random(2, rng))
    with pytest.raises(SolverError):
        qwf(octonion_model, y_o)
    with pytest.raises(SolverError):
        qtwf(octonion_model, y_o)
    with pytest.raises(SolverError):
        owf(quaternion_model, y_q)
    with pytest.raises(SolverError):
        qtwf(quaternion_model, -y_q)
    with pytest.raises(SolverError):
        solve("gd", quaternion_model, y_q)


def test_pure_quaternion_variant(rng):
    model = sample_gaussian("gaussian-q", 64, 4, seed=1)
    x = QUATERNION.random(4, rng)
    x[:, 0] = 0.0
    y = model.measure(x)
    result = qwf(model, y, SolverConfig(pure_quaternion=True, max_iters=100))
    assert np.all(result.estimate.data[:, 0] == 0.0)

    fourier = build_coded_fourier(2, 4, 8, seed=0)
    with pytest.raises(SolverError):
        qwf(fourier, fourier.measure(QUATERNION.random(4, rng)), SolverConfig(pure_quaternion=True))


def test_pure_phase_normalize_zeroes_a_rotated_real_part(rng):
    x = QUATERNION.random(5, rng)
    x[:, 0] = 0.0
    w = unit(rng, QUATERNION)
    normalized = pure_phase_normalize(QUATERNION.mul(x, w[None, :]))
    assert np.allclose(normalized[:, 0], 0.0, atol=1e-10)


def test_truncation_mask_drops_an_outlier(rng):
    model = sample_gaussian("gaussian-q", 200, 4, seed=3)
    x = QUATERNION.random(4, rng)
    y = model.measure(x)
    y[0] = 100.0 * np.mean(y)
    mask = truncation_mask(model, y, x, SolverConfig(truncation_residual=5.0))
    assert mask.shape == (200,)
    assert not mask[0]
    assert mask.mean() > 0.8


def test_quaternion_distance_ignores_right_phase(rng):
    x = HyperVector.random(QUATERNION, 6, rng)
    for _ in range(20):
        w = unit(rng, QUATERNION)
        assert quat_distance(x.right_mul(w), x) < 1e-10
    assert quat_distance(-x, x) < 1e-10
    y = HyperVector.random(QUATERNION, 6, rng)
    assert quat_distance(y, x) > 0.1
    assert quat_distance(x, HyperVector.zeros(QUATERNION, 6)) == pytest.approx(x.norm())


def test_octonion_distance_ignores_right_phase(rng):
    x = HyperVector.random(OCTONION, 5, rng)
    for _ in range(10):
        g = unit(rng, OCTONION)
        assert oct_distance(x.right_mul(g), x) < 1e-10
    y = HyperVector.random(OCTONION, 5, rng)
    assert oct_distance(y, x) > 0.1


def test_component_distance_ignores_orthogonal_mixing(rng):
    x = QUATERNION.random(6, rng)
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    assert component_distance(x @ q, x) < 1e-10


def test_model_aware_distance_and_alignment(rng):
    gaussian = sample_gaussian("gaussian-q", 20, 4, seed=0)
    wavelet = build_wavelet(2, default_bank(2))
    real_model = sample_gaussian("gaussian-r", 20, 4, seed=0)
    octonion_model = sample_gaussian("gaussian-o", 20, 4, seed=0)

    x = QUATERNION.random(4, rng)
    w = unit(rng, QUATERNION)
    right = QUATERNION.mul(x, w[None, :])
    left = QUATERNION.mul(w[None, :], x)
    assert distance(gaussian, right, x) < 1e-10
    assert np.allclose(align(gaussian, right, x).data, x, atol=1e-10)
    assert distance(wavelet, left, x) < 1e-10
    assert np.allclose(align(wavelet, left, x).data, x, atol=1e-10)

    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    assert distance(real_model, x @ q, x) < 1e-10
    assert np.allclose(align(real_model, x @ q, x).data, x, atol=1e-10)

    xo = OCTONION.random(4, rng)
    g = unit(rng, OCTONION)
    rotated = OCTONION.mul(xo, g[None, :])
    assert distance(octonion_model, rotated, xo) < 1e-10
    assert np.allclose(align(octonion_model, rotated, xo).data, xo, atol=1e-10)


def test_real_algebra_distance_is_sign_invariant(rng):
    model = sample_gaussian("gaussian-r", 20, 6, seed=0, algebra=REAL)
    x = REAL.random(6, rng)
    assert distance(model, -x, x) == pytest.approx(0.0, abs=1e-12)


def test_intensity_cost_is_zero_only_at_the_orbit(rng):
    model = sample_gaussian("gaussian-q", 40, 3, seed=0)
    x = QUATERNION.random(3, rng)
    y = model.measure(x)
    w = unit(rng, QUATERNION)
    assert intensity_cost(model, y, QUATERNION.mul(x, w[None, :])) < 1e-20
    assert intensity_cost(model, y, 2 * x) > 0


def test_open_bands_keep_every_row(rng):
    model = sample_gaussian("gaussian-q", 60, 4, seed=5)
    x = QUATERNION.random(4, rng)
    y = model.measure(QUATERNION.random(4, rng))
    y[3] = 100.0 * np.mean(y)
    config = SolverConfig(truncation_lower=0.0, truncation_upper=np.inf)
    mask = truncation_mask(model, y, x, config)
    assert mask.all()
    assert np.allclose(poisson_gradient(model, y, x, config, mask), poisson_gradient(model, y, x, config))


def test_qwf_recovers_a_coded_fourier_patch(rng):
    model = build_coded_fourier(8, 12, 8, seed=7)
    x = HyperVector.random(QUATERNION, 64, rng)
    result = solve("qwf", model, model.measure(x), truth=x, seed=1)
    assert result.final_distance / x.norm() < 1e-6


def test_complex_codes_hide_a_left_and_a_right_phase(rng):
    model = build_coded_fourier(4, 3, 4, seed=0)
    assert model.phase_side is PhaseSide.TWO_SIDED
    assert build_coded_fourier(4, 3, 8, seed=0).phase_side is PhaseSide.RIGHT

    x = QUATERNION.random(16, rng)
    u = np.array([np.cos(0.7), np.sin(0.7), 0.0, 0.0])
    w = np.array([np.cos(0.4), 0.0, np.sin(0.4), 0.0])
    moved = QUATERNION.mul(QUATERNION.mul(u[None, :], x), w[None, :])
    assert np.allclose(model.measure(moved), model.measure(x), atol=1e-12)
    assert distance(model, moved, x) < 1e-10
    assert np.allclose(align(model, moved, x).data, x, atol=1e-10)

    found_u, found_w = two_sided_phase(moved, x)
    assert np.allclose(QUATERNION.mul(QUATERNION.mul(found_u[None, :], x), found_w[None, :]), moved, atol=1e-10)

    other = QUATERNION.random(16, rng)
    assert distance(model, other, x) > 0.1
    assert distance(model, other, x) <= quat_distance(other, x) + 1e-12


def test_owf_recovers_an_octonion_signal(rng):
    model = sample_gaussian("gaussian-o", 96, 4, seed=9)
    x = HyperVector.random(OCTONION, 4, rng)
    result = solve("owf", model, model.measure(x), truth=x, seed=2)
    assert result.final_distance / x.norm() < 1e-5
    assert result.iterations_used >= len(result.cost_trace) - 1


def test_owf_restarts_count_every_attempt(rng):
    model = sample_gaussian("gaussian-o", 48, 3, seed=1)
    y = model.measure(OCTONION.random(3, rng))
    crawl = SolverConfig(step_size=1e-12, step_growth=1.0, max_iters=300)

    single = owf(model, y, replace(crawl, restarts=0), seed=4)
    assert single.iterations_used == len(single.cost_trace) - 1

    several = owf(model, y, replace(crawl, restarts=2), seed=4)
    assert several.iterations_used >= len(several.cost_trace) + 1
    again = owf(model, y, replace(crawl, restarts=2), seed=4)
    assert np.array_equal(several.estimate.data, again.estimate.data)
