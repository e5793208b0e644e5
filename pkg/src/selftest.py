"""
Invariant suites behind the ``selftest`` and ``gradcheck`` commands
Each check returns a CheckResult; nothing here prints
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from algebra import OCTONION, OCTONION_PATTERN, QUATERNION, Algebra, HyperMatrix, HyperVector, gimel
from sensing import DoeAlphabet, build_coded_fourier, build_stft, build_wavelet, sample_gaussian
from solvers import (
    SolverConfig,
    intensity_cost,
    intensity_gradient,
    lifted_cost,
    lifted_gradient,
    poisson_cost,
    poisson_gradient,
)
from transforms import Odft3D, Qdft2D, QwtBank, default_bank, haar_mother, qwt

logger = logging.getLogger(__name__)

ALGEBRA_TOL = 1e-12
TRANSFORM_TOL = 1e-10
GRADIENT_TOL = 1e-6
WITNESS_RESIDUAL = 0.1


@dataclass
class CheckResult:
    group: str
    name: str
    passed: bool
    detail: str


def corrupted_octonion() -> Algebra:
    """Octonion table with one sign flipped, used to prove the suite can fail"""
    rows = [list(row) for row in OCTONION_PATTERN]
    component, sign = rows[3][5]
    rows[3][5] = (component, -sign)
    return Algebra("octonion", tuple(tuple(row) for row in rows), associative=False)


def _check(group: str, name: str, error: float, tol: float, seed: int) -> CheckResult:
    passed = bool(error <= tol)
    return CheckResult(group, name, passed, f"max error {error:.3e} (tol {tol:g}, seed {seed})")


# --- algebra ----------------------------------------------------------------


def check_algebra(trials: int, seed: int, octonion: Algebra = OCTONION) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    for algebra in (QUATERNION, octonion):
        x, y = algebra.random(trials, rng), algebra.random(trials, rng)
        scale = algebra.modulus(x) * algebra.modulus(y)
        error = np.max(np.abs(algebra.modulus(algebra.mul(x, y)) - scale) / scale)
        results.append(_check("algebra", f"{algebra.name} norm multiplicativity", error, ALGEBRA_TOL, seed))

    x, y, z = (QUATERNION.random(trials, rng) for _ in range(3))
    residual = QUATERNION.mul(QUATERNION.mul(x, y), z) - QUATERNION.mul(x, QUATERNION.mul(y, z))
    scale = QUATERNION.modulus(x) * QUATERNION.modulus(y) * QUATERNION.modulus(z)
    error = np.max(np.linalg.norm(residual, axis=-1) / scale)
    results.append(_check("algebra", "quaternion associativity", error, ALGEBRA_TOL, seed))

    x, y = octonion.random(trials, rng), octonion.random(trials, rng)
    xx = octonion.mul(x, x)
    left = octonion.mul(xx, y) - octonion.mul(x, octonion.mul(x, y))
    right = octonion.mul(y, xx) - octonion.mul(octonion.mul(y, x), x)
    scale = octonion.norm_sq(x) * octonion.modulus(y)
    error = max(np.max(np.linalg.norm(left, axis=-1) / scale), np.max(np.linalg.norm(right, axis=-1) / scale))
    results.append(_check("algebra", "octonion alternativity", error, ALGEBRA_TOL, seed))

    x, y, z = (octonion.random(100, rng, unit=True) for _ in range(3))
    residual = octonion.mul(octonion.mul(x, y), z) - octonion.mul(x, octonion.mul(y, z))
    witness = float(np.max(np.linalg.norm(residual, axis=-1)))
    results.append(CheckResult("algebra", "octonion non-associativity witness", witness > WITNESS_RESIDUAL,
                               f"largest associator {witness:.3f} (needs > {WITNESS_RESIDUAL}, seed {seed})"))
    return results


def check_representation(trials: int, seed: int, octonion: Algebra = OCTONION) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    for algebra, (m, n) in ((QUATERNION, (4, 3)), (octonion, (4, 3))):
        error = 0.0
        for _ in range(min(trials, 1000)):
            a = HyperMatrix(algebra, algebra.random((m, n), rng))
            x = HyperVector(algebra, algebra.random(n, rng))
            lhs = a.matvec(x).aleph()
            rhs = gimel(a) @ x.aleph()
            error = max(error, np.linalg.norm(lhs - rhs) / (np.linalg.norm(a.data) * x.norm()))
            error = max(error, abs(np.linalg.norm(x.aleph()) - x.norm()))
        results.append(_check("representation", f"{algebra.name} aleph/gimel homomorphism", error,
                              ALGEBRA_TOL, seed))

    x = octonion.random(trials, rng)
    g = octonion.left_matrix(x)
    gram = np.einsum("tki,tkj->tij", g, g)
    expected = octonion.norm_sq(x)[:, None, None] * np.eye(octonion.dim)
    error = np.max(np.abs(gram - expected)) / np.max(octonion.norm_sq(x))
    results.append(_check("representation", "octonion gimel orthogonality", error, ALGEBRA_TOL, seed))
    return results


# --- transforms -------------------------------------------------------------


def brute_odft(f: np.ndarray) -> np.ndarray:
    """Direct triple sum with the kernel chain multiplied left to right"""
    N = f.shape[0]
    grid = np.arange(N)
    n1, n2, n3 = np.meshgrid(grid, grid, grid, indexing="ij")
    out = np.zeros_like(f)
    for k1 in range(N):
        for k2 in range(N):
            for k3 in range(N):
                term = f
                for unit, angle in ((1, k1 * n1), (2, k2 * n2), (4, k3 * n3)):
                    kernel = np.zeros(angle.shape + (8,))
                    kernel[..., 0] = np.cos(2 * np.pi * angle / N)
                    kernel[..., unit] = -np.sin(2 * np.pi * angle / N)
                    term = OCTONION.mul(term, kernel)
                out[k1, k2, k3] = term.sum(axis=(0, 1, 2)) / N
    return out


def brute_qwt(f: np.ndarray, bank: QwtBank) -> np.ndarray:
    N = f.shape[0]
    filters = bank.filters(N)
    out = np.zeros((len(bank), N, N, 4))
    for k in range(len(bank)):
        for r in range(N):
            for s in range(N):
                for p in range(N):
                    for q in range(N):
                        out[k, r, s] += QUATERNION.mul(f[p, q], filters[k, (r - p) % N, (s - q) % N])
    return out


def check_transforms(seed: int) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    round_trip = parseval = 0.0
    for N in (2, 4, 8, 16):
        plan = Qdft2D(N)
        f = QUATERNION.random((N, N), rng)
        spectrum = plan.forward(f)
        round_trip = max(round_trip, np.linalg.norm(plan.inverse(spectrum) - f) / np.linalg.norm(f))
        parseval = max(parseval, abs(np.linalg.norm(spectrum) - np.linalg.norm(f)) / np.linalg.norm(f))
    results.append(_check("transforms", "qdft round trip", round_trip, TRANSFORM_TOL, seed))
    results.append(_check("transforms", "qdft parseval", parseval, TRANSFORM_TOL, seed))

    N = 8
    plan = Qdft2D(N)
    f = QUATERNION.random((N, N), rng)
    spectrum = plan.forward(f)
    error = max(np.linalg.norm(plan.row(r, s).apply(f.reshape(-1, 4)) - spectrum[r, s])
                for r in range(N) for s in range(N))
    results.append(_check("transforms", "qdft row consistency", error, ALGEBRA_TOL, seed))

    f = OCTONION.random((4, 4, 4), rng)
    error = np.max(np.abs(Odft3D(4).forward(f) - brute_odft(f)))
    results.append(_check("transforms", "odft triple sum", error, ALGEBRA_TOL, seed))

    f = QUATERNION.random((4, 4), rng)
    bank = QwtBank(QUATERNION.random((2, 2), rng), (1.0, 2.0), (0.0, np.pi / 2))
    error = np.max(np.abs(qwt(f, bank) - brute_qwt(f, bank)))
    results.append(_check("transforms", "qwt convolution", error, ALGEBRA_TOL, seed))
    return results


# --- sensing ----------------------------------------------------------------


def small_models(seed: int):
    """One instance of every model kind, small enough to densify"""
    return [
        sample_gaussian("gaussian-r", 12, 3, seed),
        sample_gaussian("gaussian-q", 12, 3, seed),
        sample_gaussian("gaussian-o", 16, 3, seed),
        build_coded_fourier(4, 2, DoeAlphabet.default(8), seed),
        build_stft(8, 3, 4, seed),
        build_wavelet(4, default_bank(3, haar_mother())),
    ]


def check_sensing(seed: int) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    for model in small_models(seed):
        x = model.algebra.random(model.n, rng)
        z = model.forward(x)
        rows = np.stack([model.row(index).apply(x) for index in range(model.m)])
        lift = model.real_lift()
        lifted = (lift.matrix() @ x.reshape(-1)).reshape(model.m, model.algebra.dim)
        error = max(np.max(np.abs(rows - z)), np.max(np.abs(lifted - z))) / np.max(np.abs(z))

        u = rng.standard_normal(lift.shape[1])
        v = rng.standard_normal(lift.shape[0])
        adjoint_gap = abs(lift.apply(u) @ v - u @ lift.adjoint(v)) / (np.linalg.norm(u) * np.linalg.norm(v))
        results.append(_check("sensing", f"{model.kind.value} forward/row/lift", max(error, adjoint_gap),
                              TRANSFORM_TOL, seed))
    return results


# --- gradients --------------------------------------------------------------


def finite_difference(cost: Callable[[np.ndarray], float], v: np.ndarray, relative_step: float = 1e-6) -> np.ndarray:
    """Central differences, step relative to the size of v"""
    h = relative_step * max(1.0, float(np.linalg.norm(v)))
    grad = np.zeros_like(v)
    for index in range(v.size):
        e = np.zeros_like(v)
        e.flat[index] = h
        grad.flat[index] = (cost(v + e) - cost(v - e)) / (2 * h)
    return grad


def check_gradients(points: int, seed: int) -> List[CheckResult]:
    """Closed-form gradients against finite differences of the cost in the real representation"""
    rng = np.random.default_rng(seed)
    config = SolverConfig()
    quaternion_model = sample_gaussian("gaussian-q", 40, 4, seed)
    octonion_model = sample_gaussian("gaussian-o", 48, 4, seed)

    def hypercomplex(cost, gradient):
        # cost/gradient over x, seen as functions of aleph(x); the real gradient is twice the hypercomplex one
        return (lambda model, y, v: cost(model, y, v.reshape(model.n, model.algebra.dim)),
                lambda model, y, v: 2.0 * gradient(model, y, v.reshape(model.n, model.algebra.dim)).reshape(-1))

    cases = [
        ("qwf", quaternion_model, *hypercomplex(intensity_cost, intensity_gradient)),
        ("qtwf", quaternion_model, *hypercomplex(lambda model, y, x: poisson_cost(model, y, x, config),
                                                 lambda model, y, x: poisson_gradient(model, y, x, config))),
        ("owf", octonion_model, lifted_cost, lifted_gradient),
    ]
    results = []
    for name, model, cost, gradient in cases:
        truth = model.algebra.random(model.n, rng).reshape(-1)
        y = model.measure(truth.reshape(model.n, model.algebra.dim))
        error = 0.0
        for _ in range(points):
            v = truth + 0.5 * rng.standard_normal(truth.size) / np.sqrt(model.algebra.dim)
            numeric = finite_difference(lambda u: cost(model, y, u), v)
            exact = gradient(model, y, v)
            error = max(error, np.linalg.norm(numeric - exact) / np.linalg.norm(exact))
        results.append(_check("gradients", f"{name} gradient", error, GRADIENT_TOL, seed))
    return results


def run_selftest(trials: int = 1000, seed: int = 0, inject_sign_error: bool = False) -> List[CheckResult]:
    octonion = corrupted_octonion() if inject_sign_error else OCTONION
    if inject_sign_error:
        logger.warning("Running with a corrupted octonion table")
    results = []
    results += check_algebra(trials, seed, octonion)
    results += check_representation(trials, seed, octonion)
    results += check_transforms(seed)
    results += check_sensing(seed)
    results += check_gradients(5, seed)
    return results


def run_gradcheck(points: int = 20, seed: int = 0) -> List[CheckResult]:
    return check_gradients(points, seed)
