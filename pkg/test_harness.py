#!/usr/bin/env python3
"""
Tests for the Monte-Carlo harness and the image pipeline
"""

import math
import os
import sys

import numpy as np
import pytest

# Add src directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

import imaging
from algebra import OCTONION, QUATERNION, REAL, HyperVector
from errors import ConfigError, ImageFormatError, SolverError
from harness import (
    ExperimentSpec,
    ImageTask,
    Purpose,
    TrialOutcome,
    _corrupt,
    _reduce,
    algebra_for,
    band_problems,
    baseline_band_wf,
    concat_problem,
    make_model,
    recover_image,
    resolve_threads,
    run_snr_curve,
    run_sweep,
    run_trial,
    trial_seed,
)
from sensing import CodedFourierModel, StftModel, WaveletModel
from solvers import SolverConfig

FAST = SolverConfig(max_iters=300)


def small_spec(**overrides):
    values = dict(solver="qwf", model="gaussian-q", n=4, m_over_n=(2.0, 10.0), trials=3,
                  seed=17, solver_config=FAST)
    values.update(overrides)
    return ExperimentSpec(**values)


def test_trial_seeds_are_keyed():
    a = np.random.default_rng(trial_seed(5, 3, Purpose.SIGNAL)).standard_normal(3)
    b = np.random.default_rng(trial_seed(5, 3, Purpose.SIGNAL)).standard_normal(3)
    c = np.random.default_rng(trial_seed(5, 3, Purpose.MODEL)).standard_normal(3)
    d = np.random.default_rng(trial_seed(5, 4, Purpose.SIGNAL)).standard_normal(3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_resolve_threads():
    assert resolve_threads(3) == 3
    assert resolve_threads(0) >= 1
    with pytest.raises(ConfigError):
        resolve_threads(-1)


def test_spec_validation():
    with pytest.raises(ConfigError):
        small_spec(solver="gd")
    with pytest.raises(ConfigError):
        small_spec(model="hologram")
    with pytest.raises(ConfigError):
        small_spec(solver="owf")
    with pytest.raises(ConfigError):
        small_spec(model="gaussian-o")
    with pytest.raises(ConfigError):
        small_spec(model="coded-fourier", n=10)
    with pytest.raises(ConfigError):
        small_spec(model="stft", window=9)
    with pytest.raises(ConfigError):
        small_spec(model="coded-fourier", alphabet=1)
    with pytest.raises(ConfigError):
        small_spec(trials=0)
    with pytest.raises(ConfigError):
        small_spec(snr_db=(float("nan"),))
    with pytest.raises(ConfigError):
        small_spec(solver="band-wf")
    assert small_spec().algebra == "quaternion"
    assert small_spec(solver="owf", model="gaussian-o").algebra == "octonion"
    assert algebra_for("concat-wf", "gaussian-q") == "real"


def test_make_model_budgets():
    assert make_model("gaussian-q", 4, 2.5, seed=0).m == 10
    assert make_model("gaussian-q", 4, 0.1, seed=0) is None
    fourier = make_model("coded-fourier", 16, 3.0, seed=0, alphabet=8)
    assert isinstance(fourier, CodedFourierModel)
    assert fourier.snapshots == 3
    stft = make_model("stft", 16, 4.0, seed=0, window=4)
    assert isinstance(stft, StftModel)
    assert stft.plan.sections == 4
    wavelet = make_model("wavelet", 16, 2.0)
    assert isinstance(wavelet, WaveletModel)
    assert wavelet.m == 2 * 16


def test_sweep_records():
    records = run_sweep(small_spec())
    assert [r.m_over_n for r in records] == [2.0, 10.0]
    for record in records:
        assert record.status == "ok"
        assert record.trials == 3
        assert 0.0 <= record.success_rate <= 1.0
        assert record.mean_rel_dist >= 0.0
        assert record.mean_seconds is None
        assert record.solver == "qwf"
        assert record.algebra == "quaternion"
        assert record.seed == 17


def test_sweep_is_identical_for_any_worker_count():
    spec = small_spec(snr_db=(math.inf, 30.0))
    assert run_sweep(spec, threads=1) == run_sweep(spec, threads=3)


def test_timing_is_opt_in():
    records = run_sweep(small_spec(m_over_n=(8.0,), trials=1), timing=True)
    assert records[0].mean_seconds > 0


def test_infeasible_cells_are_skipped():
    records = run_sweep(small_spec(m_over_n=(0.1,)))
    assert records[0].status == "skipped"
    assert records[0].trials == 0
    assert math.isnan(records[0].success_rate)


def test_failed_trials_mark_the_cell():
    spec = small_spec()
    outcomes = [TrialOutcome(1e-9, 10, 0.1), SolverError("diverged"), TrialOutcome(0.5, 20, 0.1)]
    record = _reduce(spec, 2.0, math.inf, outcomes, timing=False)
    assert record.status == "failed"
    assert record.trials == 2
    assert record.success_rate == 0.5
    assert record.mean_iters == 15.0
    assert record.median_rel_dist == pytest.approx(0.25)


def test_snr_curve_needs_a_finite_level():
    with pytest.raises(ConfigError):
        run_snr_curve(small_spec())
    records = run_snr_curve(small_spec(m_over_n=(10.0,), snr_db=(10.0, 40.0), trials=2,
                                       success_threshold=0.5))
    assert [r.snr_db for r in records] == [10.0, 40.0]


def test_outliers_are_injected():
    spec = small_spec(outliers=2, outlier_factor=100.0)
    y = np.linspace(1.0, 2.0, 20)
    corrupted = _corrupt(y.copy(), spec, math.inf, trial=0)
    changed = np.flatnonzero(corrupted != y)
    assert len(changed) == 2
    assert np.allclose(corrupted[changed], 100.0 * y[changed])


def test_concat_baseline_problem():
    x = HyperVector.random(QUATERNION, 3, np.random.default_rng(0))
    model, y, flat = concat_problem(x, 30, seed=1)
    assert model.algebra is REAL
    assert flat.n == 12
    assert np.array_equal(flat.aleph(), x.aleph())
    assert y.shape == (30,)


def test_band_baseline_problems():
    x = OCTONION.random(4, np.random.default_rng(0))
    problems = band_problems(x, 40, np.random.SeedSequence(3))
    assert len(problems) == 8
    model, y, truth = problems[5]
    assert (model.m, model.n) == (5, 4)
    assert np.array_equal(truth.data[:, 0], x[:, 5])
    assert band_problems(x, 7, np.random.SeedSequence(3)) == []
    results = baseline_band_wf(problems, FAST, np.random.SeedSequence(4))
    assert len(results) == 8


@pytest.mark.parametrize("solver, model, n, ratio", [
    ("concat-wf", "gaussian-q", 4, 12.0),
    ("band-wf", "gaussian-o", 4, 12.0),
    ("qtwf", "gaussian-q", 4, 12.0),
    ("owf", "gaussian-o", 4, 12.0),
    ("qwf", "coded-fourier", 4, 12.0),
    ("qwf", "stft", 4, 12.0),
    ("qwf", "wavelet", 16, 4.0),
])
def test_single_trials_run(solver, model, n, ratio):
    spec = ExperimentSpec(solver=solver, model=model, n=n, m_over_n=(ratio,), trials=1, window=2,
                          seed=3, solver_config=FAST)
    outcome = run_trial(spec, ratio, math.inf, 0)
    assert outcome.rel_dist >= 0.0
    assert math.isfinite(outcome.rel_dist)
    assert outcome.iterations >= 0


def test_image_task_default_models():
    assert ImageTask(imaging.synthetic_rgb(4)).resolved_model() == "coded-fourier"
    assert ImageTask(imaging.synthetic_msi(4)).resolved_model() == "gaussian-o"
    assert ImageTask(imaging.synthetic_msi(4), model="gaussian-q").resolved_model() == "gaussian-q"


@pytest.mark.parametrize("image", [imaging.synthetic_rgb(6), imaging.synthetic_msi(6)], ids=["rgb", "msi"])
def test_oracle_recovery_is_exact(image):
    result = recover_image(ImageTask(image, patch=4, oracle=True))
    assert result.exact
    assert math.isinf(result.psnr_db)
    assert result.image.shape == image.shape
    assert np.array_equal(result.image, image)
    assert result.per_patch_rel_dist == [0.0] * 4


def test_recovery_errors():
    with pytest.raises(ConfigError):
        recover_image(ImageTask(imaging.synthetic_rgb(4), patch=1))
    with pytest.raises(ImageFormatError):
        recover_image(ImageTask(np.zeros((4, 4, 5)), patch=2))
    with pytest.raises(ConfigError):
        recover_image(ImageTask(imaging.synthetic_rgb(4), patch=2, solver="owf", model="gaussian-o",
                                solver_config=FAST))


@pytest.mark.slow
def test_rgb_recovery_through_coded_fourier():
    image = imaging.synthetic_rgb(64)
    result = recover_image(ImageTask(image, patch=32, m_over_n=15, alphabet=8, seed=2), threads=0)
    assert result.psnr_db > 30


@pytest.mark.slow
def test_richer_codes_recover_at_least_as_well():
    # past 100 dB both codings are exact
    scores = {}
    for alphabet in (4, 8):
        scores[alphabet] = np.mean([
            min(recover_image(ImageTask(imaging.synthetic_rgb(16), patch=16, m_over_n=10, alphabet=alphabet,
                                        seed=trial)).psnr_db, 100.0)
            for trial in range(20)
        ])
    assert scores[8] >= scores[4]


@pytest.mark.slow
def test_qwf_phase_transition_rises():
    spec = ExperimentSpec(solver="qwf", model="gaussian-q", n=16, m_over_n=tuple(float(r) for r in range(2, 13)),
                          trials=100, seed=5)
    records = run_sweep(spec, threads=0)
    rates = [r.success_rate for r in records]
    assert records[8].m_over_n == 10.0
    assert rates[8] >= 0.95
    for low, high in zip(rates, rates[1:]):
        spread = math.sqrt(max(low * (1 - low), high * (1 - high)) / spec.trials)
        assert high >= low - spread


@pytest.mark.slow
def test_owf_success_and_noise_ordering():
    spec = ExperimentSpec(solver="owf", model="gaussian-o", n=8, m_over_n=(12.0,), trials=100, seed=6)
    assert run_sweep(spec, threads=0)[0].success_rate >= 0.9

    noisy = ExperimentSpec(solver="owf", model="gaussian-o", n=8, m_over_n=(12.0,), trials=100, seed=6,
                           snr_db=(0.0, 10.0, 20.0, 30.0))
    distances = [r.mean_rel_dist for r in run_snr_curve(noisy, threads=0)]
    assert all(later < earlier for earlier, later in zip(distances, distances[1:]))


@pytest.mark.slow
def test_qwf_beats_the_concatenated_baseline():
    arms = {}
    for solver, model in (("qwf", "gaussian-q"), ("concat-wf", "gaussian-q")):
        spec = ExperimentSpec(solver=solver, model=model, n=16, m_over_n=(10.0,), trials=100, seed=7)
        arms[solver] = run_sweep(spec, threads=0)[0].mean_rel_dist
    assert arms["qwf"] <= arms["concat-wf"]


@pytest.mark.slow
def test_truncated_flow_shrugs_off_an_outlier():
    trimmed = ExperimentSpec(solver="qtwf", model="gaussian-q", n=16, m_over_n=(10.0,), trials=100, outliers=1,
                             outlier_factor=100.0, seed=8, solver_config=SolverConfig(truncation_residual=5.0))
    plain = ExperimentSpec(solver="qwf", model="gaussian-q", n=16, m_over_n=(10.0,), trials=100, outliers=1,
                           outlier_factor=100.0, seed=8)
    wins = sum(run_trial(trimmed, 10.0, math.inf, t).rel_dist < run_trial(plain, 10.0, math.inf, t).rel_dist
               for t in range(100))
    assert wins >= 80


@pytest.mark.slow
def test_owf_beats_the_per_band_baseline():
    image = imaging.synthetic_msi(16)
    owf_result = recover_image(ImageTask(image, patch=4, m_over_n=15, solver="owf", seed=3), threads=0)
    band_result = recover_image(ImageTask(image, patch=4, m_over_n=15, solver="band-wf", seed=3), threads=0)
    assert owf_result.psnr_db >= band_result.psnr_db
