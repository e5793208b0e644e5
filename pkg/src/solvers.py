"""
Phase-retrieval solvers
Spectral initialization, QWF, truncated QWF (Poisson cost), OWF in the real
representation, and the ambiguity-aware distance metrics
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np

from algebra import OCTONION, QUATERNION, Algebra, HyperVector, gimel
from errors import ShapeError, SolverError
from sensing import ModelKind, PhaseSide, RealLift, SeedLike, SensingModel

logger = logging.getLogger(__name__)

ORACLE_SAMPLES = 100_000
QTWF_INIT_TRUNCATION = 3.0
OWF_STEP_GROWTH = 2.0
OWF_RESTARTS = 5
# grown steps must also earn this share of the linear decrease
SUFFICIENT_DECREASE = 0.25
# an owf attempt that loses less than PLATEAU_DROP of its cost over
# PLATEAU_WINDOW iterations is abandoned for a fresh start
PLATEAU_WINDOW = 200
PLATEAU_DROP = 1e-3
# cost per mean(y)^2 below which an attempt needs no restart
SETTLED_COST = 1e-12


class InitScale(str, Enum):
    MEAN = "mean"        # r^2 = n mean(y) / row_energy, from E[y_l] = ||x||^2 row_energy / n
    PRINTED = "printed"  # r = sqrt(mean(y^2))


class Status(str, Enum):
    CONVERGED = "converged"
    EXACT = "exact"
    MAX_ITERS = "max_iters"
    STALLED = "stalled"


@dataclass(frozen=True)
class SolverConfig:
    step_size: float = 0.1
    max_iters: int = 2000
    stop_tol: float = 1e-12
    power_iters: int = 100
    power_tol: float = 1e-10
    init_scale: str = InitScale.MEAN.value
    init_truncation: Optional[float] = None
    truncation_lower: float = 0.1
    truncation_upper: float = 5.0
    truncation_residual: float = math.inf
    log_floor: float = 1e-12
    backtracking: bool = True
    max_backoffs: int = 20
    step_growth: Optional[float] = None  # None: 1 for qwf and qtwf, OWF_STEP_GROWTH for owf
    restarts: Optional[int] = None       # owf only; None: OWF_RESTARTS
    pure_quaternion: bool = False
    seed: int = 0

    def __post_init__(self):
        if not self.step_size > 0:
            raise SolverError(f"step_size must be positive, got {self.step_size}")
        if self.max_iters < 1:
            raise SolverError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.power_iters < 1:
            raise SolverError(f"power_iters must be at least 1, got {self.power_iters}")
        if self.stop_tol < 0 or self.power_tol < 0:
            raise SolverError("Tolerances must be nonnegative")
        if self.max_backoffs < 0:
            raise SolverError(f"max_backoffs must be nonnegative, got {self.max_backoffs}")
        if not 0 <= self.truncation_lower <= self.truncation_upper:
            raise SolverError(f"Truncation band [{self.truncation_lower}, {self.truncation_upper}] is empty")
        if self.truncation_residual <= 0:
            raise SolverError(f"truncation_residual must be positive, got {self.truncation_residual}")
        if self.init_truncation is not None and self.init_truncation <= 0:
            raise SolverError(f"init_truncation must be positive, got {self.init_truncation}")
        if self.log_floor <= 0:
            raise SolverError(f"log_floor must be positive, got {self.log_floor}")
        if self.step_growth is not None and self.step_growth < 1:
            raise SolverError(f"step_growth must be at least 1, got {self.step_growth}")
        if self.restarts is not None and self.restarts < 0:
            raise SolverError(f"restarts must be nonnegative, got {self.restarts}")
        try:
            InitScale(self.init_scale)
        except ValueError:
            raise SolverError(f"Unknown init_scale: {self.init_scale}") from None

    @classmethod
    def from_mapping(cls, values: Mapping) -> "SolverConfig":
        """Build from a mapping, ignoring keys that are not solver fields"""
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in values.items() if k in names})

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class RecoveryResult:
    estimate: HyperVector
    cost_trace: List[float]
    final_distance: Optional[float]
    iterations_used: int
    wall_time: float
    status: str


@dataclass
class SpectralInit:
    estimate: HyperVector
    eigenvalue: float
    iterations: int
    degenerate: bool = False


# --- spectral initialization ------------------------------------------------


def power_method(apply: Callable[[np.ndarray], np.ndarray], size: int, iters: int = 100,
                 tol: float = 1e-10, rng: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, float, int]:
    """Leading eigenpair of a symmetric PSD operator from a seeded Gaussian start"""
    rng = rng or np.random.default_rng(0)
    v = rng.standard_normal(size)
    v /= np.linalg.norm(v)
    eigenvalue = 0.0
    for it in range(1, iters + 1):
        w = apply(v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return v, 0.0, it
        v = w / norm
        rayleigh = float(v @ apply(v))
        if it > 1 and abs(rayleigh - eigenvalue) <= tol * max(abs(rayleigh), np.finfo(float).tiny):
            return v, rayleigh, it
        eigenvalue = rayleigh
    return v, eigenvalue, iters


def spectral_init(model: SensingModel, y: np.ndarray, config: Optional[SolverConfig] = None,
                  seed: SeedLike = None) -> SpectralInit:
    """
    Scaled leading eigenvector of Y = (1/m) sum y_l a_l a_l^*.

    The power method runs on the real lift, v -> (1/m) G^T (y * G v), and the
    result is mapped back through the inverse real representation.
    """
    config = config or SolverConfig()
    y = np.asarray(y, dtype=float)
    if y.shape != (model.m,):
        raise ShapeError(f"Expected {model.m} measurements, got shape {y.shape}")
    dim = model.algebra.dim

    if not np.any(y):
        logger.warning("All-zero measurements, spectral init returns the zero vector")
        return SpectralInit(HyperVector.zeros(model.algebra, model.n), 0.0, 0, degenerate=True)

    weights = y
    if config.init_truncation is not None:
        weights = np.where(y <= config.init_truncation ** 2 * np.mean(y), y, 0.0)

    lift = model.real_lift()

    def apply(v):
        z = lift.apply(v).reshape(model.m, dim)
        return lift.adjoint((weights[:, None] * z).reshape(-1)) / model.m

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(
        config.seed if seed is None else seed)
    v, eigenvalue, iterations = power_method(apply, model.n * dim, config.power_iters, config.power_tol, rng)

    if InitScale(config.init_scale) is InitScale.MEAN:
        scale = np.sqrt(model.n * np.mean(y) / model.row_energy)
    else:
        scale = np.sqrt(np.mean(y ** 2))
    logger.debug("Spectral init: eigenvalue %.6g after %d iterations, scale %.6g", eigenvalue, iterations, scale)
    return SpectralInit(HyperVector(model.algebra, scale * v.reshape(model.n, dim)), eigenvalue, iterations)


def initial_estimate(solver: str, model: SensingModel, y: np.ndarray, config: SolverConfig,
                     seed: SeedLike = None) -> SpectralInit:
    """Spectral start for a named solver; qtwf trims large measurements unless told otherwise"""
    if solver == "qtwf" and config.init_truncation is None:
        config = replace(config, init_truncation=QTWF_INIT_TRUNCATION)
    return spectral_init(model, y, config, seed)


# --- costs and gradients ----------------------------------------------------


def intensity_cost(model: SensingModel, y: np.ndarray, x) -> float:
    """f(x) = 1/(2m) sum (|a_l^* x|^2 - y_l)^2"""
    residual = model.measure(x) - y
    return float(residual @ residual / (2 * model.m))


def intensity_gradient(model: SensingModel, y: np.ndarray, x) -> np.ndarray:
    """(1/m) A^H ((|Ax|^2 - y) * Ax); the gradient over aleph(x) is twice this"""
    z = model.forward(x)
    residual = np.sum(z * z, axis=-1) - y
    return model.adjoint(residual[:, None] * z) / model.m


def lifted_cost(model: SensingModel, y: np.ndarray, v: np.ndarray, lift=None) -> float:
    """(1/2m) sum (||G_l v||^2 - y_l)^2 on the real vector v = aleph(x)"""
    lift = lift or model.real_lift()
    z = lift.apply(v).reshape(model.m, model.algebra.dim)
    residual = np.sum(z * z, axis=-1) - y
    return float(residual @ residual / (2 * model.m))


def lifted_gradient(model: SensingModel, y: np.ndarray, v: np.ndarray, lift=None) -> np.ndarray:
    """(2/m) sum r_l G_l^T G_l v"""
    lift = lift or model.real_lift()
    z = lift.apply(v).reshape(model.m, model.algebra.dim)
    residual = np.sum(z * z, axis=-1) - y
    return 2.0 * lift.adjoint((residual[:, None] * z).reshape(-1)) / model.m


def _floor(y: np.ndarray, config: SolverConfig) -> float:
    return (config.log_floor * np.sqrt(max(np.mean(y), 0.0))) ** 2 or np.finfo(float).tiny


def poisson_cost(model: SensingModel, y: np.ndarray, x, config: Optional[SolverConfig] = None,
                 mask: Optional[np.ndarray] = None) -> float:
    """f(x) = (1/m) sum (|z_l|^2 - y_l log |z_l|^2) over the kept rows"""
    config = config or SolverConfig()
    z = model.forward(x)
    intensity = np.maximum(np.sum(z * z, axis=-1), _floor(y, config))
    terms = intensity - y * np.log(intensity)
    if mask is not None:
        terms = terms[mask]
    return float(np.sum(terms) / model.m)


def poisson_gradient(model: SensingModel, y: np.ndarray, x, config: Optional[SolverConfig] = None,
                     mask: Optional[np.ndarray] = None) -> np.ndarray:
    """(1/m) A^H ((1 - y/|z|^2) * z) over the kept rows; the gradient over aleph(x) is twice this"""
    config = config or SolverConfig()
    z = model.forward(x)
    intensity = np.maximum(np.sum(z * z, axis=-1), _floor(y, config))
    weight = 1.0 - y / intensity
    if mask is not None:
        weight = np.where(mask, weight, 0.0)
    return model.adjoint(weight[:, None] * z) / model.m


def truncation_mask(model: SensingModel, y: np.ndarray, x, config: SolverConfig) -> np.ndarray:
    """
    Rows kept by the truncation rule:
    tau_lo <= |z_l| / sqrt(mean y) <= tau_hi, and when tau_h is finite also
    |y_l - |z_l|^2| <= tau_h K |z_l| / sqrt(mean y), K the mean absolute residual.

    The bands (0, inf) with the default tau_h = inf keep every row.
    """
    z = model.forward(x)
    modulus = np.sqrt(np.sum(z * z, axis=-1))
    level = np.sqrt(np.mean(y))
    if level == 0.0:
        return np.ones(model.m, dtype=bool)
    keep = (modulus >= config.truncation_lower * level) & (modulus <= config.truncation_upper * level)
    if math.isfinite(config.truncation_residual):
        residual = np.abs(y - modulus ** 2)
        keep &= residual <= config.truncation_residual * np.mean(residual) * modulus / level
    return keep


# --- descent loop -----------------------------------------------------------

Objective = Callable[[np.ndarray], Tuple[float, np.ndarray, Callable[[np.ndarray], float]]]


def _gradient_descent(x0: np.ndarray, objective: Objective, step: float, config: SolverConfig,
                      project: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                      label: str = "gd", growth: float = 1.0, slope: float = 1.0,
                      plateau: Optional[int] = None) -> Tuple[np.ndarray, List[float], int, Status]:
    """
    Gradient descent with halving backtracking.

    ``objective(x)`` returns the cost at x, its gradient and the cost function
    used to judge candidates (frozen per iteration, e.g. a truncation mask).

    With ``growth > 1`` each iteration first tries the previous step times
    ``growth`` (capped at ``step * 2**max_backoffs``) and a candidate must lower
    the cost by SUFFICIENT_DECREASE * eta * slope * ||g||^2, where
    ``slope * ||g||^2`` is the cost decrease rate along -g. With ``plateau`` set,
    the run stops as stalled once a window of that many iterations lowers the
    cost by less than PLATEAU_DROP.
    """
    x = x0
    trace: List[float] = []
    status = Status.MAX_ITERS
    iterations = 0
    ceiling = step * 2.0 ** config.max_backoffs
    sufficient = SUFFICIENT_DECREASE if growth > 1.0 else 0.0
    eta = step / growth
    checkpoint = None

    for _ in range(config.max_iters):
        f, g, cost = objective(x)
        if not trace:
            trace.append(f)
            checkpoint = f
        if f == 0.0:
            status = Status.EXACT
            break

        eta = min(eta * growth, ceiling) if growth > 1.0 else step
        decrease = sufficient * slope * float(np.sum(g * g))
        for _backoff in range(config.max_backoffs + 1):
            candidate = x - eta * g
            if project is not None:
                candidate = project(candidate)
            f_new = cost(candidate)
            if not config.backtracking or f_new <= f - eta * decrease:
                break
            eta /= 2.0
        else:
            logger.debug("%s: step backtracked %d times without decrease", label, config.max_backoffs)
            status = Status.STALLED
            break

        x = candidate
        iterations += 1
        trace.append(f_new)
        if f_new == 0.0:
            status = Status.EXACT
            break
        if f - f_new <= config.stop_tol * max(abs(f), np.finfo(float).tiny):
            status = Status.CONVERGED
            break
        if plateau and iterations % plateau == 0:
            if f_new > (1.0 - PLATEAU_DROP) * checkpoint:
                logger.debug("%s: cost %.3g barely moved over %d iterations", label, f_new, plateau)
                status = Status.STALLED
                break
            checkpoint = f_new

    logger.debug("%s finished after %d iterations: %s", label, iterations, status.value)
    return x, trace, iterations, status


def _check_inputs(model: SensingModel, y: np.ndarray, x0) -> Tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float)
    if y.shape != (model.m,):
        raise ShapeError(f"Expected {model.m} measurements, got shape {y.shape}")
    data = x0.data if isinstance(x0, HyperVector) else np.asarray(x0, dtype=float)
    if data.shape != (model.n, model.algebra.dim):
        raise ShapeError(f"Start vector has shape {data.shape}, expected ({model.n}, {model.algebra.dim})")
    return y, np.array(data)


def _step(config: SolverConfig, model: SensingModel, x0: np.ndarray) -> float:
    """eta = step (n / row_energy)^2 / ||x0||^2, the cost curvature grows as (row_energy / n)^2 ||x||^2"""
    norm_sq = float(np.sum(x0 * x0))
    if norm_sq == 0.0:
        raise SolverError("Start vector is zero, nothing to descend from")
    return config.step_size * (model.n / model.row_energy) ** 2 / norm_sq


def _check_hypercomplex(model: SensingModel, solver: str):
    if model.algebra is OCTONION:
        raise SolverError(f"{solver} needs quaternion or real rows; use owf for octonion models")


def _pure_projection(model: SensingModel, config: SolverConfig, x0: np.ndarray):
    if not config.pure_quaternion:
        return x0, None
    if model.kind is not ModelKind.GAUSSIAN_Q:
        raise SolverError("pure_quaternion needs a Gaussian quaternion model with a full right phase ambiguity")
    x0 = pure_phase_normalize(x0)

    def project(x):
        x = x.copy()
        x[:, 0] = 0.0
        return x

    return project(x0), project


def pure_phase_normalize(x: np.ndarray) -> np.ndarray:
    """Right unit factor w minimizing sum Re(x_j w)^2, applied to x"""
    c = QUATERNION.conj(x)
    gram = c.T @ c
    _, vectors = np.linalg.eigh(gram)
    return QUATERNION.mul(x, vectors[:, 0][None, :])


def _result(model, x, trace, iterations, status, started) -> RecoveryResult:
    return RecoveryResult(
        estimate=HyperVector(model.algebra, x),
        cost_trace=trace,
        final_distance=None,
        iterations_used=iterations,
        wall_time=time.perf_counter() - started,
        status=status.value,
    )


def qwf(model: SensingModel, y: np.ndarray, config: Optional[SolverConfig] = None, x0=None,
        seed: SeedLike = None) -> RecoveryResult:
    """Quaternion Wirtinger flow on f = 1/(2m) sum (|a^* x|^2 - y)^2"""
    config = config or SolverConfig()
    _check_hypercomplex(model, "qwf")
    started = time.perf_counter()
    if x0 is None:
        x0 = initial_estimate("qwf", model, y, config, seed).estimate
    y, x = _check_inputs(model, y, x0)
    x, project = _pure_projection(model, config, x)
    step = _step(config, model, x)

    def objective(v):
        return intensity_cost(model, y, v), intensity_gradient(model, y, v), lambda c: intensity_cost(model, y, c)

    x, trace, iterations, status = _gradient_descent(x, objective, step, config, project, "qwf",
                                                       growth=_growth(config, 1.0), slope=2.0)
    return _result(model, x, trace, iterations, status, started)


def qtwf(model: SensingModel, y: np.ndarray, config: Optional[SolverConfig] = None, x0=None,
         seed: SeedLike = None) -> RecoveryResult:
    """Truncated flow on the Poisson cost (1/m) sum (|z|^2 - y log |z|^2)"""
    config = config or SolverConfig()
    _check_hypercomplex(model, "qtwf")
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise SolverError("qtwf needs nonnegative intensities")
    started = time.perf_counter()
    if x0 is None:
        x0 = initial_estimate("qtwf", model, y, config, seed).estimate
    y, x = _check_inputs(model, y, x0)
    x, project = _pure_projection(model, config, x)
    step = _step(config, model, x)

    def objective(v):
        mask = truncation_mask(model, y, v, config)
        return (poisson_cost(model, y, v, config, mask), poisson_gradient(model, y, v, config, mask),
                lambda c: poisson_cost(model, y, c, config, mask))

    x, trace, iterations, status = _gradient_descent(x, objective, step, config, project, "qtwf",
                                                       growth=_growth(config, 1.0), slope=2.0)
    return _result(model, x, trace, iterations, status, started)


def _growth(config: SolverConfig, default: float) -> float:
    return default if config.step_growth is None else config.step_growth


def _dense_lift(lift: RealLift) -> RealLift:
    if lift.dense is None:
        return lift
    matrix = lift.dense()
    return RealLift(lift.shape, matrix.__matmul__, matrix.T.__matmul__, lambda: matrix)


def _restart_rng(seed: SeedLike, config: SolverConfig) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(config.seed if seed is None else seed)
    return np.random.default_rng(seed.spawn(1)[0])


def _random_start(model: SensingModel, y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Gaussian direction at the norm implied by E[y_l] = ||x||^2 row_energy / n"""
    direction = model.algebra.random(model.n, rng)
    return np.sqrt(model.n * np.mean(y) / model.row_energy) * direction / np.linalg.norm(direction)


def owf(model: SensingModel, y: np.ndarray, config: Optional[SolverConfig] = None, x0=None,
        seed: SeedLike = None) -> RecoveryResult:
    """
    Octonion Wirtinger flow carried out entirely on aleph(x) in R^{8n}.

    Cost (1/2m) sum (||G_l v||^2 - y_l)^2 with gradient (2/m) sum r_l G_l^T G_l v,
    where G_l is the 8 x 8n real block of row l. The step grows after accepted
    iterations. An attempt that plateaus above zero cost is restarted from a
    random start, up to ``restarts`` times, each with its own ``max_iters``
    budget; the lowest-cost attempt is returned. ``iterations_used`` counts all
    attempts, ``cost_trace`` is the kept attempt's.
    """
    config = config or SolverConfig()
    if model.algebra is not OCTONION:
        raise SolverError("owf needs an octonion model")
    started = time.perf_counter()
    if x0 is None:
        x0 = initial_estimate("owf", model, y, config, seed).estimate
    y, x = _check_inputs(model, y, x0)
    lift = _dense_lift(model.real_lift())
    # alpha on the real gradient matches eta on the hypercomplex one
    alpha = _step(config, model, x) / 2.0
    growth = _growth(config, OWF_STEP_GROWTH)
    restarts = OWF_RESTARTS if config.restarts is None else config.restarts
    settled = SETTLED_COST * float(np.mean(y)) ** 2

    def cost(v):
        return lifted_cost(model, y, v, lift)

    def objective(v):
        return cost(v), lifted_gradient(model, y, v, lift), cost

    best = None
    iterations = 0
    rng = None
    for attempt in range(restarts + 1):
        if attempt:
            rng = rng or _restart_rng(seed, config)
            x = _random_start(model, y, rng)
        window = PLATEAU_WINDOW if attempt < restarts else None
        v, trace, used, status = _gradient_descent(x.reshape(-1), objective, alpha, config, label="owf",
                                                   growth=growth, plateau=window)
        iterations += used
        if best is None or trace[-1] < best[1][-1]:
            best = (v, trace, status)
        if status is Status.EXACT or trace[-1] <= settled:
            break
        if attempt < restarts:
            logger.debug("owf attempt %d ended at cost %.3g (%s), restarting", attempt, trace[-1], status.value)

    v, trace, status = best
    return _result(model, v.reshape(model.n, model.algebra.dim), trace, iterations, status, started)


SOLVERS: Dict[str, Callable[..., RecoveryResult]] = {"qwf": qwf, "qtwf": qtwf, "owf": owf}


def solve(name: str, model: SensingModel, y: np.ndarray, config: Optional[SolverConfig] = None,
          x0=None, truth=None, seed: SeedLike = None) -> RecoveryResult:
    """Run a named solver and, when the ground truth is known, fill in the final distance"""
    try:
        solver = SOLVERS[name]
    except KeyError:
        raise SolverError(f"Unknown solver: {name}") from None
    config = config or SolverConfig()
    if x0 is None:
        x0 = initial_estimate(name, model, y, config, seed).estimate
    result = solver(model, y, config, x0, seed)
    if truth is not None:
        result.final_distance = distance(model, result.estimate, truth)
    return result


# --- distances --------------------------------------------------------------


def _data(x, algebra: Algebra) -> np.ndarray:
    data = x.data if isinstance(x, HyperVector) else np.asarray(x, dtype=float)
    if data.ndim != 2 or data.shape[1] != algebra.dim:
        raise ShapeError(f"Expected (n, {algebra.dim}) data for {algebra.name}, got {data.shape}")
    return data


def _pair(estimate, truth, algebra: Algebra) -> Tuple[np.ndarray, np.ndarray]:
    est, x = _data(estimate, algebra), _data(truth, algebra)
    if est.shape != x.shape:
        raise ShapeError(f"Length mismatch: {est.shape[0]} vs {x.shape[0]}")
    return est, x


def right_phase(estimate, truth, algebra: Algebra = QUATERNION) -> np.ndarray:
    """w = sign(x^* x~), the unit right factor minimizing ||x~ - x w|| (associative algebras)"""
    est, x = _pair(estimate, truth, algebra)
    s = np.sum(algebra.mul(algebra.conj(x), est), axis=0)
    size = float(np.linalg.norm(s))
    return algebra.one() if size == 0.0 else s / size


def quat_distance(estimate, truth, algebra: Algebra = QUATERNION) -> float:
    """min_w ||x~ - x w|| over unit w"""
    est, x = _pair(estimate, truth, algebra)
    if not np.any(x):
        return float(np.linalg.norm(est))
    w = right_phase(est, x, algebra)
    return float(np.linalg.norm(est - algebra.mul(x, w[None, :])))


def two_sided_phase(estimate, truth) -> Tuple[np.ndarray, np.ndarray]:
    """
    Unit u in span{1, i} and unit quaternion w minimizing ||x~ - u x w||.

    For u = c + s i the best w is sign(c P + s Q) with P = sum x_j^* x~_j and
    Q = -sum x_j^* i x~_j, so (c, s) is the top right singular vector of [P Q].
    """
    est, x = _pair(estimate, truth, QUATERNION)
    i = np.array([0.0, 1.0, 0.0, 0.0])
    conj_x = QUATERNION.conj(x)
    p = np.sum(QUATERNION.mul(conj_x, est), axis=0)
    q = -np.sum(QUATERNION.mul(conj_x, QUATERNION.mul(i[None, :], est)), axis=0)
    _, _, vt = np.linalg.svd(np.stack([p, q], axis=1))
    c, s = vt[0]
    u = np.array([c, s, 0.0, 0.0])
    combined = c * p + s * q
    size = float(np.linalg.norm(combined))
    return u, (QUATERNION.one() if size == 0.0 else combined / size)


def octonion_phase(estimate, truth, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """g = sign((G^T G)^{-1} G^T aleph(x~)) with G = gimel(x), so aleph(x g) = G g"""
    est, x = _pair(estimate, truth, OCTONION)
    g_matrix = gimel(HyperVector(OCTONION, x))
    b = est.reshape(-1)
    try:
        g = np.linalg.solve(g_matrix.T @ g_matrix, g_matrix.T @ b)
    except np.linalg.LinAlgError:
        logger.warning("Singular octonion Gram matrix, falling back to sampled minimization")
        rng = rng or np.random.default_rng(0)
        candidates = OCTONION.random(ORACLE_SAMPLES, rng, unit=True)
        residuals = np.linalg.norm(b[None, :] - candidates @ g_matrix.T, axis=1)
        return candidates[int(np.argmin(residuals))]
    size = float(np.linalg.norm(g))
    return OCTONION.one() if size == 0.0 else g / size


def oct_distance(estimate, truth) -> float:
    """min_z ||x~ - x z|| over unit octonions z"""
    est, x = _pair(estimate, truth, OCTONION)
    if not np.any(x):
        return float(np.linalg.norm(est))
    g = octonion_phase(est, x)
    return float(np.linalg.norm(est - OCTONION.mul(x, g[None, :])))


def component_distance(estimate, truth) -> float:
    """min over orthogonal Q of ||X~ - X Q|| on the n x dim component matrices"""
    est, x = np.asarray(_data(estimate, QUATERNION)), np.asarray(_data(truth, QUATERNION))
    q = _procrustes(est, x)
    return float(np.linalg.norm(est - x @ q))


def _procrustes(est: np.ndarray, x: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(x.T @ est)
    return u @ vt


def distance(model: SensingModel, estimate, truth) -> float:
    """Distance modulo the model's trivial ambiguity"""
    algebra = model.algebra
    if model.phase_side is PhaseSide.ORTHOGONAL:
        return component_distance(estimate, truth)
    if model.phase_side is PhaseSide.LEFT:
        est, x = _pair(estimate, truth, algebra)
        return quat_distance(algebra.conj(est), algebra.conj(x), algebra)
    if model.phase_side is PhaseSide.TWO_SIDED:
        est, x = _pair(estimate, truth, algebra)
        if not np.any(x):
            return float(np.linalg.norm(est))
        u, w = two_sided_phase(est, x)
        return float(np.linalg.norm(est - algebra.mul(algebra.mul(u[None, :], x), w[None, :])))
    if algebra is OCTONION:
        return oct_distance(estimate, truth)
    return quat_distance(estimate, truth, algebra)


def align(model: SensingModel, estimate, truth) -> HyperVector:
    """Estimate with its ambiguity factor removed so that it lines up with the truth"""
    algebra = model.algebra
    est, x = _pair(estimate, truth, algebra)
    if not np.any(x):
        return HyperVector(algebra, est)
    if model.phase_side is PhaseSide.ORTHOGONAL:
        return HyperVector(algebra, est @ _procrustes(est, x).T)
    if model.phase_side is PhaseSide.LEFT:
        w = right_phase(algebra.conj(est), algebra.conj(x), algebra)
        return HyperVector(algebra, algebra.mul(w[None, :], est))
    if model.phase_side is PhaseSide.TWO_SIDED:
        u, w = two_sided_phase(est, x)
        return HyperVector(algebra, algebra.mul(algebra.mul(algebra.conj(u)[None, :], est), algebra.conj(w)[None, :]))
    if algebra is OCTONION:
        g = octonion_phase(est, x)
    else:
        g = right_phase(est, x, algebra)
    return HyperVector(algebra, algebra.mul(est, algebra.conj(g)[None, :]))


def relative_distance(model: SensingModel, estimate, truth) -> float:
    norm = float(np.linalg.norm(_data(truth, model.algebra)))
    d = distance(model, estimate, truth)
    return d if norm == 0.0 else d / norm
