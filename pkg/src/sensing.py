"""
Measurement models y = |Ax|^2
Gaussian (real / quaternion / octonion entries), coded-diffraction Fourier,
QSTFT masks and quaternion wavelet banks, each with row access and a real lift
"""

from __future__ import annotations

import itertools
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Optional, Union

import numpy as np

from algebra import OCTONION, QUATERNION, REAL, Algebra, HyperMatrix, HyperVector, gimel
from errors import SensingError, ShapeError
from transforms import Qdft2D, QstftPlan, QwtBank, RowFunctional, qstft, qstft_adjoint, qwt, qwt_adjoint

logger = logging.getLogger(__name__)

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]

UNIT_TOL = 1e-12
MAX_ALPHABET = 80


class ModelKind(str, Enum):
    GAUSSIAN_R = "gaussian-r"
    GAUSSIAN_Q = "gaussian-q"
    GAUSSIAN_O = "gaussian-o"
    CODED_FOURIER = "coded-fourier"
    STFT = "stft"
    WAVELET = "wavelet"


class PhaseSide(str, Enum):
    """Which unit factor the intensities cannot see"""

    RIGHT = "right"            # |A(xw)| = |Ax| for unit w
    LEFT = "left"              # |A(wx)| = |Ax| for unit w
    ORTHOGONAL = "orthogonal"  # real A: any orthogonal mix of the components
    TWO_SIDED = "two-sided"    # |A(uxw)| = |Ax| for unit w and unit u in span{1, i}


@dataclass(frozen=True)
class RealLift:
    """Real-linear operator G on R^{n*dim} with aleph(Ax) = G aleph(x)"""

    shape: tuple
    apply: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]
    dense: Optional[Callable[[], np.ndarray]] = None

    def matrix(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense()
        return np.stack([self.apply(col) for col in np.eye(self.shape[1])], axis=1)


def _rng(seed: SeedLike) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _seed_repr(seed: SeedLike):
    if isinstance(seed, np.random.SeedSequence):
        return {"entropy": seed.entropy, "spawn_key": list(seed.spawn_key)}
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    return None


class SensingModel(ABC):
    """Real-linear forward operator x -> Ax over a hypercomplex algebra"""

    kind: ModelKind
    algebra: Algebra
    m: int
    n: int
    phase_side: PhaseSide = PhaseSide.RIGHT

    def _signal(self, x) -> np.ndarray:
        data = x.data if isinstance(x, HyperVector) else np.asarray(x, dtype=float)
        if data.shape != (self.n, self.algebra.dim):
            raise ShapeError(f"{self.kind.value} model expects a signal of shape "
                             f"({self.n}, {self.algebra.dim}), got {data.shape}")
        return data

    def _coefficients(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape != (self.m, self.algebra.dim):
            raise ShapeError(f"{self.kind.value} model expects ({self.m}, {self.algebra.dim}) "
                             f"coefficients, got {z.shape}")
        return z

    def forward(self, x) -> np.ndarray:
        """z = Ax, shape (m, dim)"""
        return self._forward(self._signal(x))

    def adjoint(self, z) -> np.ndarray:
        """Real adjoint A^H z, shape (n, dim)"""
        return self._adjoint(self._coefficients(z))

    def measure(self, x) -> np.ndarray:
        z = self.forward(x)
        return np.sum(z * z, axis=-1)

    def real_lift(self) -> RealLift:
        dim = self.algebra.dim
        return RealLift(
            shape=(self.m * dim, self.n * dim),
            apply=lambda v: self._forward(np.asarray(v, dtype=float).reshape(self.n, dim)).reshape(-1),
            adjoint=lambda u: self._adjoint(np.asarray(u, dtype=float).reshape(self.m, dim)).reshape(-1),
        )

    @abstractmethod
    def _forward(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def _adjoint(self, z: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def row(self, index: int) -> RowFunctional:
        ...

    @property
    @abstractmethod
    def row_energy(self) -> float:
        """Mean of sum_j |a_lj|^2 over rows"""

    @abstractmethod
    def describe(self) -> Dict:
        """Parameters and seed, never raw matrices"""

    def _check_row(self, index: int):
        if not 0 <= index < self.m:
            raise ShapeError(f"Row {index} out of range [0, {self.m})")


class GaussianModel(SensingModel):
    """Dense i.i.d. Gaussian sensing matrix"""

    def __init__(self, kind: ModelKind, matrix: HyperMatrix, seed: SeedLike = None):
        self.kind = kind
        self.matrix = matrix
        self.algebra = matrix.algebra
        self.m, self.n = matrix.shape
        self.seed = seed
        if kind is ModelKind.GAUSSIAN_R and self.algebra is not REAL:
            self.phase_side = PhaseSide.ORTHOGONAL

    def _forward(self, x):
        return self.algebra.matvec(self.matrix.data, x)

    def _adjoint(self, z):
        return self.algebra.rmatvec(self.matrix.data, z)

    def row(self, index):
        self._check_row(index)
        left = np.array(self.matrix.data[index])
        return RowFunctional(self.algebra, left, np.broadcast_to(self.algebra.one(), left.shape).copy())

    def real_lift(self):
        lift = super().real_lift()
        return RealLift(lift.shape, lift.apply, lift.adjoint, dense=lambda: gimel(self.matrix))

    @property
    def row_energy(self):
        return float(np.sum(self.matrix.data ** 2) / self.m)

    def describe(self):
        return {"kind": self.kind.value, "algebra": self.algebra.name, "m": self.m, "n": self.n,
                "seed": _seed_repr(self.seed)}


def sample_gaussian(kind: Union[ModelKind, str], m: int, n: int, seed: SeedLike = None,
                    algebra: Optional[Algebra] = None) -> GaussianModel:
    """
    I.i.d. Gaussian model with E|A_ij|^2 = 1.

    Hypercomplex kinds draw each component with variance 1/dim. The real kind
    draws only the real component (variance 1); over the REAL algebra it is the
    plain real Gaussian matrix used by the concatenated baseline.
    """
    kind = ModelKind(kind)
    if m < 1 or n < 1:
        raise SensingError(f"Gaussian model needs m, n >= 1, got m={m}, n={n}")
    defaults = {ModelKind.GAUSSIAN_R: QUATERNION, ModelKind.GAUSSIAN_Q: QUATERNION,
                ModelKind.GAUSSIAN_O: OCTONION}
    if kind not in defaults:
        raise SensingError(f"{kind.value} is not a Gaussian model")
    algebra = algebra or defaults[kind]

    rng = _rng(seed)
    if kind is ModelKind.GAUSSIAN_R:
        data = np.zeros((m, n, algebra.dim))
        data[..., 0] = rng.standard_normal((m, n))
    else:
        data = algebra.random((m, n), rng)
    logger.debug("Sampled %s model %dx%d over %s", kind.value, m, n, algebra.name)
    return GaussianModel(kind, HyperMatrix(algebra, data), seed)


# --- coded diffraction ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DoeAlphabet:
    """d unit-modulus quaternion coding values"""

    symbols: np.ndarray

    def __post_init__(self):
        symbols = np.array(self.symbols, dtype=float)
        if symbols.ndim != 2 or symbols.shape[1] != 4:
            raise SensingError(f"Alphabet symbols must be quaternions, got shape {symbols.shape}")
        if symbols.shape[0] < 2:
            raise SensingError(f"Alphabet needs at least 2 symbols, got {symbols.shape[0]}")
        moduli = QUATERNION.modulus(symbols)
        if np.any(np.abs(moduli - 1.0) > UNIT_TOL):
            raise SensingError(f"Alphabet symbols must have unit modulus, got {np.round(moduli, 6).tolist()}")
        symbols.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)

    @property
    def d(self) -> int:
        return self.symbols.shape[0]

    @classmethod
    def default(cls, d: int) -> "DoeAlphabet":
        """1, -1, i, -i, j, -j, k, -k, then normalized points of {-1, 0, 1}^4"""
        if not 2 <= d <= MAX_ALPHABET:
            raise SensingError(f"Alphabet size must lie in [2, {MAX_ALPHABET}], got {d}")
        symbols = []
        for axis in range(4):
            for sign in (1.0, -1.0):
                e = np.zeros(4)
                e[axis] = sign
                symbols.append(e)
        for point in itertools.product((-1.0, 0.0, 1.0), repeat=4):
            point = np.array(point)
            if np.count_nonzero(point) > 1:
                symbols.append(point / np.linalg.norm(point))
        return cls(np.array(symbols[:d]))

    def draw(self, shape, rng: np.random.Generator) -> np.ndarray:
        """Each entry picked uniformly from the alphabet"""
        return self.symbols[rng.integers(0, self.d, size=shape)]


class CodedFourierModel(SensingModel):
    """L snapshots |F_Q(D^k x)|^2 stacked snapshot-major"""

    kind = ModelKind.CODED_FOURIER
    algebra = QUATERNION

    def __init__(self, N: int, doe: np.ndarray, alphabet: DoeAlphabet, seed: SeedLike = None):
        self.N = N
        self.plan = Qdft2D(N)
        self.doe = doe
        self.alphabet = alphabet
        self.snapshots = doe.shape[0]
        self.n = N * N
        self.m = self.snapshots * self.n
        self.seed = seed
        if not np.any(alphabet.symbols[:, 2:]):
            # complex codes commute with the left QDFT kernel
            self.phase_side = PhaseSide.TWO_SIDED

    def _forward(self, x):
        image = x.reshape(self.N, self.N, 4)
        return self.plan.forward(QUATERNION.mul(self.doe, image)).reshape(self.m, 4)

    def _adjoint(self, z):
        spectra = z.reshape(self.snapshots, self.N, self.N, 4)
        coded = QUATERNION.mul(QUATERNION.conj(self.doe), self.plan.inverse(spectra))
        return np.sum(coded, axis=0).reshape(self.n, 4)

    def row(self, index):
        self._check_row(index)
        k, alpha = divmod(index, self.n)
        r, s = divmod(alpha, self.N)
        kernel_q, kernel_b = self.plan.kernels(r, s)
        left = QUATERNION.mul(kernel_q[:, None, :], self.doe[k]).reshape(self.n, 4)
        right = np.broadcast_to(kernel_b[None, :, :], (self.N, self.N, 4)).reshape(self.n, 4).copy()
        return RowFunctional(QUATERNION, left, right)

    @property
    def row_energy(self):
        return 1.0

    def describe(self):
        return {"kind": self.kind.value, "algebra": self.algebra.name, "m": self.m, "n": self.n,
                "N": self.N, "snapshots": self.snapshots, "alphabet": self.alphabet.d,
                "seed": _seed_repr(self.seed)}


def build_coded_fourier(N: int, L: int, alphabet: Union[DoeAlphabet, int] = 4,
                        seed: SeedLike = None) -> CodedFourierModel:
    if N < 2:
        raise SensingError(f"Coded Fourier model needs N >= 2, got {N}")
    if L < 1:
        raise SensingError(f"Coded Fourier model needs at least one snapshot, got {L}")
    if not isinstance(alphabet, DoeAlphabet):
        alphabet = DoeAlphabet.default(int(alphabet))
    doe = alphabet.draw((L, N, N), _rng(seed))
    logger.debug("Built coded Fourier model N=%d L=%d d=%d", N, L, alphabet.d)
    return CodedFourierModel(N, doe, alphabet, seed)


# --- short-time Fourier -----------------------------------------------------


class StftModel(SensingModel):
    """|Y_rs|^2 with Y_rs = f_s^* W_r x"""

    kind = ModelKind.STFT
    algebra = QUATERNION

    def __init__(self, plan: QstftPlan, seed: SeedLike = None):
        self.plan = plan
        self.n = plan.length
        self.m = plan.sections * plan.length
        self.seed = seed

    def _forward(self, x):
        return qstft(x, self.plan).reshape(self.m, 4)

    def _adjoint(self, z):
        return qstft_adjoint(z.reshape(self.plan.sections, self.n, 4), self.plan)

    def row(self, index):
        self._check_row(index)
        r, s = divmod(index, self.n)
        return self.plan.row(r, s)

    @property
    def row_energy(self):
        return float(np.sum(self.plan.window ** 2) / self.n)

    def describe(self):
        return {"kind": self.kind.value, "algebra": self.algebra.name, "m": self.m, "n": self.n,
                "window": self.plan.T, "hop": self.plan.hop, "sections": self.plan.sections,
                "seed": _seed_repr(self.seed)}


def build_stft(N: int, window: Union[int, np.ndarray], hop: int, seed: SeedLike = None) -> StftModel:
    """An integer window draws a random unit-energy-per-sample quaternion window of that length"""
    if isinstance(window, (int, np.integer)):
        if window < 1:
            raise SensingError(f"Window length must be positive, got {window}")
        window = QUATERNION.random(int(window), _rng(seed))
    return StftModel(QstftPlan(np.asarray(window, dtype=float), hop, N), seed)


# --- wavelets ---------------------------------------------------------------


class WaveletModel(SensingModel):
    """|f * psi^k|^2 for every member of a quaternion wavelet bank"""

    kind = ModelKind.WAVELET
    algebra = QUATERNION
    phase_side = PhaseSide.LEFT

    def __init__(self, N: int, bank: QwtBank):
        self.N = N
        self.bank = bank
        self.n = N * N
        self.m = len(bank) * self.n
        self._energy = float(np.mean(np.sum(bank.filters(N) ** 2, axis=(1, 2, 3))))

    def _forward(self, x):
        return qwt(x.reshape(self.N, self.N, 4), self.bank).reshape(self.m, 4)

    def _adjoint(self, z):
        return qwt_adjoint(z.reshape(len(self.bank), self.N, self.N, 4), self.bank).reshape(self.n, 4)

    def row(self, index):
        self._check_row(index)
        k, alpha = divmod(index, self.n)
        r, s = divmod(alpha, self.N)
        return self.bank.row(k, r, s, self.N)

    @property
    def row_energy(self):
        return self._energy

    def describe(self):
        return {"kind": self.kind.value, "algebra": self.algebra.name, "m": self.m, "n": self.n,
                "N": self.N, "bank": len(self.bank), "scales": list(self.bank.scales),
                "angles": list(self.bank.angles)}


def build_wavelet(N: int, bank: QwtBank) -> WaveletModel:
    bank.filters(N)  # support check
    return WaveletModel(N, bank)


# --- measurements -----------------------------------------------------------


def measure(model: SensingModel, x) -> np.ndarray:
    return model.measure(x)


def real_lift(model: SensingModel) -> RealLift:
    return model.real_lift()


def add_noise(y: np.ndarray, snr_db: float, seed: SeedLike = None) -> np.ndarray:
    """
    Additive Gaussian noise at the given SNR, clamped to nonnegative intensities.

    sigma = ||y|| / sqrt(m) * 10^(-snr/20) so that E||eta||^2 = ||y||^2 10^(-snr/10).
    An infinite SNR returns an unchanged copy.
    """
    y = np.asarray(y, dtype=float)
    if np.isnan(snr_db):
        raise SensingError("SNR must be a number")
    if np.isposinf(snr_db):
        return y.copy()
    energy = float(np.linalg.norm(y))
    if energy == 0.0:
        raise SensingError("Cannot set a finite SNR on an all-zero measurement")
    sigma = energy / np.sqrt(y.size) * 10.0 ** (-snr_db / 20.0)
    noisy = y + sigma * _rng(seed).standard_normal(y.shape)
    return np.maximum(noisy, 0.0)
