"""
Monte-Carlo experiment engine
Phase-transition sweeps over m/n, SNR curves, real-valued baselines and the
patch-wise image recovery pipeline
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import psutil

import imaging
from algebra import OCTONION, QUATERNION, REAL, HyperVector, get_algebra
from errors import ConfigError, HprError, ImageFormatError, SolverError, TransformError
from sensing import (
    DoeAlphabet,
    ModelKind,
    SensingModel,
    add_noise,
    build_coded_fourier,
    build_stft,
    build_wavelet,
    sample_gaussian,
)
from solvers import RecoveryResult, SolverConfig, align, distance, initial_estimate, qwf, solve
from transforms import default_bank

logger = logging.getLogger(__name__)

HYPERCOMPLEX_SOLVERS = ("qwf", "qtwf", "owf")
BASELINE_SOLVERS = ("concat-wf", "band-wf")
ALL_SOLVERS = HYPERCOMPLEX_SOLVERS + BASELINE_SOLVERS


class Purpose(IntEnum):
    """Independent random streams drawn by one trial"""

    SIGNAL = 0
    MODEL = 1
    NOISE = 2
    OUTLIERS = 3
    START = 4


def trial_seed(master: int, trial: int, purpose: Purpose, *parts: int) -> np.random.SeedSequence:
    """Keyed by trial index only, so every sweep cell reuses the same draws"""
    return np.random.SeedSequence(master, spawn_key=(trial, int(purpose)) + tuple(parts))


def resolve_threads(threads: int) -> int:
    """0 means one worker per logical core"""
    if threads < 0:
        raise ConfigError(f"threads must be >= 0, got {threads}")
    return threads or psutil.cpu_count(logical=True) or 1


def _ordered_map(fn: Callable, items: Sequence, threads: int) -> List:
    """Results in submission order regardless of worker count"""
    workers = resolve_threads(threads)
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --- experiment description -------------------------------------------------


def algebra_for(solver: str, model: str) -> str:
    if solver in BASELINE_SOLVERS:
        return REAL.name
    return OCTONION.name if model == ModelKind.GAUSSIAN_O.value else QUATERNION.name


@dataclass(frozen=True)
class ExperimentSpec:
    solver: str
    model: str
    n: int
    m_over_n: Tuple[float, ...]
    snr_db: Tuple[float, ...] = (math.inf,)
    trials: int = 100
    success_threshold: float = 1e-5
    alphabet: int = 4
    window: int = 8
    outliers: int = 0
    outlier_factor: float = 100.0
    seed: int = 0
    solver_config: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.solver not in ALL_SOLVERS:
            raise ConfigError(f"Unknown solver {self.solver!r}, expected one of {', '.join(ALL_SOLVERS)}")
        try:
            kind = ModelKind(self.model)
        except ValueError:
            raise ConfigError(f"Unknown model {self.model!r}") from None
        if self.n < 1:
            raise ConfigError(f"n must be positive, got {self.n}")
        if self.trials < 1:
            raise ConfigError(f"trials must be at least 1, got {self.trials}")
        if not self.m_over_n:
            raise ConfigError("m_over_n grid is empty")
        if not self.snr_db:
            raise ConfigError("snr_db grid is empty")
        if any(math.isnan(s) for s in self.snr_db):
            raise ConfigError("snr_db grid contains NaN")
        if not self.success_threshold > 0:
            raise ConfigError(f"success_threshold must be positive, got {self.success_threshold}")
        if self.outliers < 0:
            raise ConfigError(f"outliers must be >= 0, got {self.outliers}")

        if self.solver == "owf" and kind is not ModelKind.GAUSSIAN_O:
            raise ConfigError("owf runs on the gaussian-o model only")
        if self.solver in ("qwf", "qtwf") and kind is ModelKind.GAUSSIAN_O:
            raise ConfigError(f"{self.solver} cannot run octonion models; use owf")
        if self.solver == "concat-wf" and kind is not ModelKind.GAUSSIAN_Q:
            raise ConfigError("concat-wf compares against the gaussian-q model only")
        if self.solver == "band-wf" and kind is not ModelKind.GAUSSIAN_O:
            raise ConfigError("band-wf compares against the gaussian-o model only")
        if self.solver_config.pure_quaternion and kind is not ModelKind.GAUSSIAN_Q:
            raise ConfigError("pure_quaternion needs the gaussian-q model")
        if kind in (ModelKind.CODED_FOURIER, ModelKind.WAVELET) and math.isqrt(self.n) ** 2 != self.n:
            raise ConfigError(f"{kind.value} needs n = N^2, got n={self.n}")
        if kind is ModelKind.STFT and not 1 <= self.window <= self.n:
            raise ConfigError(f"STFT window {self.window} must lie in [1, n={self.n}]")
        if kind is ModelKind.CODED_FOURIER:
            try:
                DoeAlphabet.default(self.alphabet)
            except HprError as e:
                raise ConfigError(f"Invalid alphabet: {e}") from e

    @property
    def algebra(self) -> str:
        return algebra_for(self.solver, self.model)


@dataclass(frozen=True)
class ExperimentRecord:
    solver: str
    algebra: str
    n: int
    m_over_n: float
    snr_db: float
    trials: int
    success_rate: float
    mean_rel_dist: float
    median_rel_dist: float
    mean_iters: float
    mean_seconds: Optional[float]
    seed: int
    status: str = "ok"


@dataclass(frozen=True)
class TrialOutcome:
    rel_dist: float
    iterations: int
    seconds: float


# --- model construction -----------------------------------------------------


def make_model(kind: str, n: int, ratio: float, seed=None, alphabet: int = 4,
               window: int = 8) -> Optional[SensingModel]:
    """
    Model whose sample budget follows the m/n ratio, or None when it is infeasible.

    Gaussian: m = round(ratio n). Coded Fourier: L = round(ratio) snapshots.
    STFT: hop chosen so that about round(ratio) sections cover the signal.
    Wavelet: round(ratio) bank members.
    """
    kind = ModelKind(kind)
    if kind in (ModelKind.GAUSSIAN_R, ModelKind.GAUSSIAN_Q, ModelKind.GAUSSIAN_O):
        m = int(round(ratio * n))
        return sample_gaussian(kind, m, n, seed) if m >= 1 else None

    count = int(round(ratio))
    if count < 1:
        return None
    if kind is ModelKind.CODED_FOURIER:
        return build_coded_fourier(math.isqrt(n), count, alphabet, seed)
    if kind is ModelKind.STFT:
        hop = max(1, -(-(n + window - 1) // count))
        return build_stft(n, window, hop, seed)
    bank = default_bank(count)
    try:
        return build_wavelet(math.isqrt(n), bank)
    except TransformError:
        # the larger scales no longer fit on the image
        return None


def _corrupt(y: np.ndarray, spec: ExperimentSpec, snr: float, trial: int, *parts: int) -> np.ndarray:
    y = add_noise(y, snr, trial_seed(spec.seed, trial, Purpose.NOISE, *parts))
    if spec.outliers:
        rng = np.random.default_rng(trial_seed(spec.seed, trial, Purpose.OUTLIERS, *parts))
        picks = rng.choice(y.size, size=min(spec.outliers, y.size), replace=False)
        y[picks] *= spec.outlier_factor
    return y


# --- baselines --------------------------------------------------------------


def concat_problem(x: HyperVector, m: int, seed=None) -> Tuple[SensingModel, np.ndarray, HyperVector]:
    """Treat H^n as R^{4n}: real Gaussian model with m rows measuring aleph(x)"""
    flat = HyperVector(REAL, x.aleph()[:, None])
    model = sample_gaussian(ModelKind.GAUSSIAN_R, m, flat.n, seed, algebra=REAL)
    return model, model.measure(flat), flat


def baseline_concat_wf(model: SensingModel, y: np.ndarray, config: Optional[SolverConfig] = None,
                       x0=None, seed=None) -> RecoveryResult:
    """Real Wirtinger flow on the concatenated components"""
    if model.algebra is not REAL:
        raise SolverError("concat-wf needs a real model over the concatenated components")
    config = config or SolverConfig()
    if x0 is None:
        x0 = initial_estimate("qwf", model, y, config, seed).estimate
    return qwf(model, y, config, x0)


def band_problems(x: np.ndarray, m: int, seed: np.random.SeedSequence) -> List[Tuple[SensingModel, np.ndarray, HyperVector]]:
    """One real Gaussian model per band, splitting the m measurements evenly"""
    rows = m // x.shape[1]
    if rows < 1:
        return []
    problems = []
    for band, child in enumerate(seed.spawn(x.shape[1])):
        truth = HyperVector(REAL, x[:, band:band + 1])
        model = sample_gaussian(ModelKind.GAUSSIAN_R, rows, x.shape[0], child, algebra=REAL)
        problems.append((model, model.measure(truth), truth))
    return problems


def baseline_band_wf(problems, config: Optional[SolverConfig] = None,
                     seed: Optional[np.random.SeedSequence] = None) -> List[RecoveryResult]:
    """Independent real Wirtinger flow per spectral band"""
    config = config or SolverConfig()
    seeds = seed.spawn(len(problems)) if seed is not None else [None] * len(problems)
    return [baseline_concat_wf(model, y, config, seed=s) for (model, y, _), s in zip(problems, seeds)]


# --- sweeps -----------------------------------------------------------------


def run_trial(spec: ExperimentSpec, ratio: float, snr: float, trial: int) -> Optional[TrialOutcome]:
    """One seeded recovery; None when the cell is infeasible"""
    config = spec.solver_config
    started = time.perf_counter()
    signal_rng = np.random.default_rng(trial_seed(spec.seed, trial, Purpose.SIGNAL))
    model_seed = trial_seed(spec.seed, trial, Purpose.MODEL)
    start_seed = trial_seed(spec.seed, trial, Purpose.START)

    if spec.solver in BASELINE_SOLVERS:
        algebra = OCTONION if spec.solver == "band-wf" else QUATERNION
        x = HyperVector.random(algebra, spec.n, signal_rng)
        m = int(round(ratio * spec.n))
        if spec.solver == "concat-wf":
            if m < 1:
                return None
            model, y, flat = concat_problem(x, m, model_seed)
            result = baseline_concat_wf(model, _corrupt(y, spec, snr, trial), config, seed=start_seed)
            d = distance(model, result.estimate, flat)
            iterations = result.iterations_used
        else:
            problems = band_problems(x.data, m, model_seed)
            if not problems:
                return None
            corrupted = [(mdl, _corrupt(y, spec, snr, trial, band), truth)
                         for band, (mdl, y, truth) in enumerate(problems)]
            results = baseline_band_wf(corrupted, config, start_seed)
            d = math.sqrt(sum(distance(mdl, r.estimate, truth) ** 2
                              for (mdl, _, truth), r in zip(problems, results)))
            iterations = int(round(np.mean([r.iterations_used for r in results])))
        return TrialOutcome(d / x.norm(), iterations, time.perf_counter() - started)

    model = make_model(spec.model, spec.n, ratio, model_seed, spec.alphabet, spec.window)
    if model is None:
        return None
    x = HyperVector.random(model.algebra, spec.n, signal_rng)
    y = _corrupt(model.measure(x), spec, snr, trial)
    result = solve(spec.solver, model, y, config, truth=x, seed=start_seed)
    return TrialOutcome(result.final_distance / x.norm(), result.iterations_used, time.perf_counter() - started)


def _reduce(spec: ExperimentSpec, ratio: float, snr: float, outcomes: List, timing: bool) -> ExperimentRecord:
    """Statistics in trial-index order"""
    base = dict(solver=spec.solver, algebra=spec.algebra, n=spec.n, m_over_n=ratio, snr_db=snr, seed=spec.seed)
    if any(o is None for o in outcomes):
        logger.warning("Cell m/n=%g snr=%g is infeasible, skipped", ratio, snr)
        return ExperimentRecord(trials=0, success_rate=math.nan, mean_rel_dist=math.nan,
                                median_rel_dist=math.nan, mean_iters=math.nan, mean_seconds=None,
                                status="skipped", **base)

    done = [o for o in outcomes if isinstance(o, TrialOutcome)]
    status = "ok" if len(done) == len(outcomes) else "failed"
    if not done:
        return ExperimentRecord(trials=0, success_rate=math.nan, mean_rel_dist=math.nan,
                                median_rel_dist=math.nan, mean_iters=math.nan, mean_seconds=None,
                                status=status, **base)
    dists = np.array([o.rel_dist for o in done])
    return ExperimentRecord(
        trials=len(done),
        success_rate=float(np.count_nonzero(dists < spec.success_threshold)) / len(done),
        mean_rel_dist=float(np.mean(dists)),
        median_rel_dist=float(np.median(dists)),
        mean_iters=float(np.mean([o.iterations for o in done])),
        mean_seconds=float(np.mean([o.seconds for o in done])) if timing else None,
        status=status,
        **base,
    )


def _run_cells(spec: ExperimentSpec, threads: int, timing: bool) -> List[ExperimentRecord]:
    cells = [(ratio, snr) for ratio in spec.m_over_n for snr in spec.snr_db]
    jobs = [(ratio, snr, trial) for ratio, snr in cells for trial in range(spec.trials)]
    logger.info("Running %d cells x %d trials (%s on %s, n=%d)",
                len(cells), spec.trials, spec.solver, spec.model, spec.n)

    def job(item):
        ratio, snr, trial = item
        try:
            return run_trial(spec, ratio, snr, trial)
        except (HprError, np.linalg.LinAlgError, FloatingPointError) as e:
            logger.error("Trial %d at m/n=%g snr=%g failed: %s", trial, ratio, snr, e)
            return e

    outcomes = _ordered_map(job, jobs, threads)
    records = []
    for index, (ratio, snr) in enumerate(cells):
        chunk = outcomes[index * spec.trials:(index + 1) * spec.trials]
        record = _reduce(spec, ratio, snr, chunk, timing)
        logger.info("m/n=%g snr=%g: success %.2f, mean rel dist %.3g", ratio, snr,
                    record.success_rate, record.mean_rel_dist)
        records.append(record)
    return records


def run_sweep(spec: ExperimentSpec, threads: int = 1, timing: bool = False) -> List[ExperimentRecord]:
    """One record per (m/n, snr) cell"""
    return _run_cells(spec, threads, timing)


def run_snr_curve(spec: ExperimentSpec, threads: int = 1, timing: bool = False) -> List[ExperimentRecord]:
    """Same engine; the SNR axis must hold at least one finite level"""
    if not any(math.isfinite(s) for s in spec.snr_db):
        raise ConfigError("SNR curve needs at least one finite snr_db value")
    return _run_cells(spec, threads, timing)


# --- image recovery ---------------------------------------------------------


@dataclass(frozen=True)
class ImageTask:
    image: np.ndarray
    patch: int = 32
    m_over_n: float = 15.0
    solver: str = "qwf"
    model: Optional[str] = None
    alphabet: int = 8
    seed: int = 0
    oracle: bool = False
    peak: float = 1.0
    solver_config: SolverConfig = field(default_factory=SolverConfig)

    def resolved_model(self) -> str:
        """Coded Fourier for RGB, Gaussian octonion for 8 bands"""
        if self.model is not None:
            return self.model
        channels = self.image.shape[2]
        return ModelKind.CODED_FOURIER.value if channels == imaging.RGB_CHANNELS else ModelKind.GAUSSIAN_O.value


@dataclass
class ImageResult:
    image: np.ndarray
    psnr_db: float
    per_patch_rel_dist: List[float]
    seconds: float

    @property
    def exact(self) -> bool:
        return math.isinf(self.psnr_db)


def _recover_patch(task: ImageTask, kind: str, index: int, truth: HyperVector) -> Tuple[np.ndarray, float]:
    if task.oracle:
        return truth.data.copy(), 0.0
    model_seed = trial_seed(task.seed, index, Purpose.MODEL)
    start_seed = trial_seed(task.seed, index, Purpose.START)
    norm = truth.norm()

    if task.solver == "band-wf":
        problems = band_problems(truth.data, int(round(task.m_over_n * truth.n)), model_seed)
        if not problems:
            raise ConfigError(f"m/n={task.m_over_n} leaves no rows per band")
        results = baseline_band_wf(problems, task.solver_config, start_seed)
        columns = [align(mdl, r.estimate, t).data for (mdl, _, t), r in zip(problems, results)]
        estimate = np.concatenate(columns, axis=1)
        return estimate, float(np.linalg.norm(estimate - truth.data)) / (norm or 1.0)

    if task.solver == "concat-wf":
        model, y, flat = concat_problem(truth, int(round(task.m_over_n * truth.n)), model_seed)
        result = baseline_concat_wf(model, y, task.solver_config, seed=start_seed)
        estimate = align(model, result.estimate, flat).data.reshape(truth.n, truth.algebra.dim)
        return estimate, distance(model, result.estimate, flat) / (norm or 1.0)

    model = make_model(kind, truth.n, task.m_over_n, model_seed, task.alphabet)
    if model is None:
        raise ConfigError(f"m/n={task.m_over_n} gives no measurements for {kind}")
    if model.algebra.dim != truth.algebra.dim:
        raise ConfigError(f"Model {kind} works over {model.algebra.name}, image needs {truth.algebra.name}")
    y = model.measure(truth)
    if not np.any(y):
        return np.zeros_like(truth.data), 0.0
    result = solve(task.solver, model, y, task.solver_config, truth=truth, seed=start_seed)
    return align(model, result.estimate, truth).data, result.final_distance / (norm or 1.0)


def recover_image(task: ImageTask, threads: int = 1) -> ImageResult:
    """Patch-wise sensing and recovery, each patch aligned to its ground truth before stitching"""
    started = time.perf_counter()
    image = np.asarray(task.image, dtype=float)
    if image.ndim != 3:
        raise ImageFormatError(f"Expected an (H, W, C) image, got shape {image.shape}")
    channels = image.shape[2]
    signal = imaging.to_hypercomplex(image)
    algebra = get_algebra("quaternion" if signal.shape[2] == 4 else "octonion")
    kind = task.resolved_model()
    if task.patch < 2:
        raise ConfigError(f"Patch size must be at least 2, got {task.patch}")

    padded = imaging.pad_to_multiple(signal, task.patch)
    patches = imaging.split_patches(padded, task.patch)
    logger.info("Recovering %d patches of %dx%d with %s on %s", len(patches), task.patch, task.patch,
                task.solver, kind)

    def job(item):
        index, patch = item
        truth = HyperVector(algebra, patch.reshape(-1, algebra.dim))
        return _recover_patch(task, kind, index, truth)

    outcomes = _ordered_map(job, list(enumerate(patches)), threads)
    blocks = [estimate.reshape(task.patch, task.patch, algebra.dim) for estimate, _ in outcomes]
    stitched = imaging.stitch_patches(blocks, padded.shape[:2], task.patch)
    height, width = image.shape[:2]
    restored = imaging.from_hypercomplex(stitched[:height, :width], channels)
    score = imaging.psnr(image, restored, task.peak)
    logger.info("PSNR %.3f dB", score)
    return ImageResult(restored, score, [d for _, d in outcomes], time.perf_counter() - started)
