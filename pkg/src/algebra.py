"""
Hypercomplex algebra - quaternion and octonion arithmetic
Scalars, dense vector/matrix containers and the real representations
aleph (vector form) and gimel (matrix form) with aleph(Ax) = gimel(A) aleph(x)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from numbers import Real
from typing import ClassVar, Dict, Sequence, Tuple, Union

import numpy as np

from errors import DomainError, ShapeError

logger = logging.getLogger(__name__)

Pattern = Tuple[Tuple[Tuple[int, int], ...], ...]

# Each entry (row, col) of the representation matrix is (component, sign):
# gimel(x)[row, col] = sign * x[component]

REAL_PATTERN: Pattern = (((0, 1),),)

# Left multiplication by x = a + bi + cj + dk (Hamilton product)
QUATERNION_PATTERN: Pattern = (
    ((0, 1), (1, -1), (2, -1), (3, -1)),
    ((1, 1), (0, 1), (3, -1), (2, 1)),
    ((2, 1), (3, 1), (0, 1), (1, -1)),
    ((3, 1), (2, -1), (1, 1), (0, 1)),
)

# The printed 8x8 pseudo-real representation; the octonion product is read
# off its columns, never typed in by hand
OCTONION_PATTERN: Pattern = (
    ((0, 1), (1, -1), (2, -1), (3, -1), (4, -1), (5, -1), (6, -1), (7, -1)),
    ((1, 1), (0, 1), (3, 1), (2, -1), (5, 1), (4, -1), (7, -1), (6, 1)),
    ((2, 1), (3, -1), (0, 1), (1, 1), (6, 1), (7, 1), (4, -1), (5, -1)),
    ((3, 1), (2, 1), (1, -1), (0, 1), (7, 1), (6, -1), (5, 1), (4, -1)),
    ((4, 1), (5, -1), (6, -1), (7, -1), (0, 1), (1, 1), (2, 1), (3, 1)),
    ((5, 1), (4, 1), (7, -1), (6, 1), (1, -1), (0, 1), (3, -1), (2, 1)),
    ((6, 1), (7, 1), (4, 1), (5, -1), (2, -1), (3, 1), (0, 1), (1, -1)),
    ((7, 1), (6, -1), (5, 1), (4, 1), (3, -1), (2, -1), (1, 1), (0, 1)),
)

DEFAULT_REL_TOL = 1e-12


class Algebra:
    """
    Real algebra defined by structure constants.

    ``table[a, b, k]`` is the coefficient of e_k in the product e_a e_b.
    Elements are real arrays whose last axis holds the ``dim`` coefficients,
    so every operation broadcasts over leading axes.
    """

    def __init__(self, name: str, pattern: Pattern, associative: bool):
        dim = len(pattern)
        table = np.zeros((dim, dim, dim))
        for row, entries in enumerate(pattern):
            if len(entries) != dim:
                raise ShapeError(f"Pattern row {row} of {name} has {len(entries)} entries, expected {dim}")
            for col, (component, sign) in enumerate(entries):
                table[component, col, row] = sign
        table.setflags(write=False)

        self.name = name
        self.dim = dim
        self.associative = associative
        self.table = table
        self._conj_mask = np.array([1.0] + [-1.0] * (dim - 1))

    def __repr__(self) -> str:
        return f"Algebra({self.name!r}, dim={self.dim})"

    # --- elements -------------------------------------------------------

    def basis(self, index: int) -> np.ndarray:
        """Unit e_index"""
        if not 0 <= index < self.dim:
            raise ShapeError(f"Basis index {index} out of range for {self.name}")
        e = np.zeros(self.dim)
        e[index] = 1.0
        return e

    def one(self) -> np.ndarray:
        return self.basis(0)

    def random(self, shape: Union[int, Tuple[int, ...]], rng: np.random.Generator,
               unit: bool = False) -> np.ndarray:
        """I.i.d. normal components with variance 1/dim (E|x|^2 = 1)"""
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        x = rng.standard_normal(shape + (self.dim,)) / np.sqrt(self.dim)
        if unit:
            x = x / np.linalg.norm(x, axis=-1, keepdims=True)
        return x

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise ShapeError(f"Expected trailing axis of size {self.dim} for {self.name}, got shape {x.shape}")
        return x

    # --- arithmetic -----------------------------------------------------

    def mul(self, x, y) -> np.ndarray:
        """Elementwise product x y (order matters)"""
        x, y = np.broadcast_arrays(self._check(x), self._check(y))
        return np.einsum("...a,...b,abk->...k", x, y, self.table)

    def left_matrix(self, x) -> np.ndarray:
        """Matrix L(x) with L(x) @ y = x y; this is gimel(x)"""
        return np.einsum("...a,abk->...kb", self._check(x), self.table)

    def right_matrix(self, y) -> np.ndarray:
        """Matrix R(y) with R(y) @ x = x y"""
        return np.einsum("...b,abk->...ka", self._check(y), self.table)

    def conj(self, x) -> np.ndarray:
        return self._check(x) * self._conj_mask

    def norm_sq(self, x) -> np.ndarray:
        x = self._check(x)
        return np.sum(x * x, axis=-1)

    def modulus(self, x) -> np.ndarray:
        return np.sqrt(self.norm_sq(x))

    def inverse(self, x) -> np.ndarray:
        x = self._check(x)
        n2 = self.norm_sq(x)
        if np.any(n2 == 0):
            raise DomainError(f"Inverse of zero {self.name}")
        return self.conj(x) / n2[..., None]

    def sign(self, x) -> np.ndarray:
        """x / |x|"""
        x = self._check(x)
        r = self.modulus(x)
        if np.any(r == 0):
            raise DomainError(f"Sign of zero {self.name}")
        return x / r[..., None]

    # --- dense products -------------------------------------------------

    def matvec(self, a: np.ndarray, x: np.ndarray) -> np.ndarray:
        """(A x)_i = sum_j A_ij x_j for A of shape (m, n, dim), x of shape (n, dim)"""
        a, x = self._check(a), self._check(x)
        if a.ndim != 3 or x.ndim != 2 or a.shape[1] != x.shape[0]:
            raise ShapeError(f"Cannot multiply {a.shape[:-1]} matrix by {x.shape[:-1]} vector")
        return np.tensordot(a, self.right_matrix(x), axes=([1, 2], [0, 2]))

    def rmatvec(self, a: np.ndarray, z: np.ndarray) -> np.ndarray:
        """(A^H z)_j = sum_i conj(A_ij) z_i, the real adjoint of matvec"""
        a, z = self._check(a), self._check(z)
        if a.ndim != 3 or z.ndim != 2 or a.shape[0] != z.shape[0]:
            raise ShapeError(f"Cannot apply adjoint of {a.shape[:-1]} matrix to {z.shape[:-1]} vector")
        return np.tensordot(self.conj(a), self.right_matrix(z), axes=([0, 2], [0, 2]))


REAL = Algebra("real", REAL_PATTERN, associative=True)
QUATERNION = Algebra("quaternion", QUATERNION_PATTERN, associative=True)
OCTONION = Algebra("octonion", OCTONION_PATTERN, associative=False)

ALGEBRAS: Dict[str, Algebra] = {a.name: a for a in (REAL, QUATERNION, OCTONION)}


def get_algebra(name: str) -> Algebra:
    try:
        return ALGEBRAS[name]
    except KeyError:
        raise ShapeError(f"Unknown algebra: {name}") from None


# --- scalars ----------------------------------------------------------------


class Hypercomplex:
    """Immutable hypercomplex scalar; exact component-wise equality"""

    __slots__ = ("_coefficients",)
    algebra: ClassVar[Algebra]

    def __init__(self, *coefficients):
        if len(coefficients) == 1 and np.ndim(coefficients[0]) == 1:
            coefficients = tuple(coefficients[0])
        dim = self.algebra.dim
        if len(coefficients) > dim:
            raise ShapeError(f"{type(self).__name__} takes at most {dim} coefficients")
        values = tuple(float(c) for c in coefficients) + (0.0,) * (dim - len(coefficients))
        object.__setattr__(self, "_coefficients", values)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @classmethod
    def basis(cls, index: int):
        return cls(cls.algebra.basis(index))

    @property
    def coefficients(self) -> Tuple[float, ...]:
        return self._coefficients

    @property
    def components(self) -> np.ndarray:
        return np.array(self._coefficients)

    @property
    def real(self) -> float:
        return self._coefficients[0]

    def _wrap(self, values) -> "Hypercomplex":
        return type(self)(np.asarray(values))

    def __eq__(self, other) -> bool:
        return type(other) is type(self) and other._coefficients == self._coefficients

    def __hash__(self) -> int:
        return hash((type(self).__name__, self._coefficients))

    def __repr__(self) -> str:
        body = ", ".join(f"{c:g}" for c in self._coefficients)
        return f"{type(self).__name__}({body})"

    def __add__(self, other):
        if isinstance(other, Real):
            other = type(self)(other)
        if type(other) is not type(self):
            return NotImplemented
        return self._wrap(self.components + other.components)

    __radd__ = __add__

    def __neg__(self):
        return self._wrap(-self.components)

    def __sub__(self, other):
        if isinstance(other, Real):
            other = type(self)(other)
        if type(other) is not type(self):
            return NotImplemented
        return self._wrap(self.components - other.components)

    def __mul__(self, other):
        if isinstance(other, Real):
            return self._wrap(self.components * float(other))
        if type(other) is not type(self):
            return NotImplemented
        return self._wrap(self.algebra.mul(self.components, other.components))

    def __rmul__(self, other):
        if isinstance(other, Real):
            return self._wrap(self.components * float(other))
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, Real):
            return self._wrap(self.components / float(other))
        return NotImplemented

    def conj(self):
        return self._wrap(self.algebra.conj(self.components))

    def modulus(self) -> float:
        return float(self.algebra.modulus(self.components))

    __abs__ = modulus

    def inverse(self):
        return self._wrap(self.algebra.inverse(self.components))

    def sign(self):
        return self._wrap(self.algebra.sign(self.components))

    def isclose(self, other: "Hypercomplex", rel_tol: float = DEFAULT_REL_TOL, abs_tol: float = 0.0) -> bool:
        """Approximate equality relative to the larger modulus"""
        diff = float(np.linalg.norm(self.components - other.components))
        scale = max(self.modulus(), other.modulus())
        return diff <= max(rel_tol * scale, abs_tol)


class Quaternion(Hypercomplex):
    """x = a + b i + c j + d k"""

    __slots__ = ()
    algebra = QUATERNION

    @property
    def a(self) -> float:
        return self._coefficients[0]

    @property
    def b(self) -> float:
        return self._coefficients[1]

    @property
    def c(self) -> float:
        return self._coefficients[2]

    @property
    def d(self) -> float:
        return self._coefficients[3]


class Octonion(Hypercomplex):
    """x = a0 + sum_i a_i e_i, i = 1..7"""

    __slots__ = ()
    algebra = OCTONION


SCALAR_TYPES = {QUATERNION.dim: Quaternion, OCTONION.dim: Octonion}


def qmul(x: Quaternion, y: Quaternion) -> Quaternion:
    """Hamilton product"""
    if not (isinstance(x, Quaternion) and isinstance(y, Quaternion)):
        raise TypeError("qmul expects two quaternions")
    return x * y


def omul(x: Octonion, y: Octonion) -> Octonion:
    """Octonion product with aleph(xy) = gimel(x) aleph(y)"""
    if not (isinstance(x, Octonion) and isinstance(y, Octonion)):
        raise TypeError("omul expects two octonions")
    return x * y


def conj(x: Hypercomplex) -> Hypercomplex:
    return x.conj()


def modulus(x: Hypercomplex) -> float:
    return x.modulus()


def inverse(x: Hypercomplex) -> Hypercomplex:
    return x.inverse()


def sign(x: Hypercomplex) -> Hypercomplex:
    return x.sign()


def rotate(x: Quaternion, mu: Quaternion) -> Quaternion:
    """x^mu = mu x mu^-1, a rotation of the vector part of x about the vector part of mu"""
    if mu.modulus() == 0:
        raise DomainError("Rotation by the zero quaternion")
    return (mu * x) * mu.inverse()


# --- containers -------------------------------------------------------------


def _frozen(data, algebra: Algebra, ndim: int, kind: str) -> np.ndarray:
    array = np.array(data, dtype=float)
    if array.ndim != ndim or array.shape[-1] != algebra.dim:
        raise ShapeError(f"{kind} over {algebra.name} needs shape {'(m, n, ' if ndim == 3 else '(n, '}"
                         f"{algebra.dim}), got {array.shape}")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class HyperVector:
    """Dense vector over a hypercomplex algebra, data of shape (n, dim)"""

    algebra: Algebra
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen(self.data, self.algebra, 2, "HyperVector"))

    @classmethod
    def from_scalars(cls, values: Sequence[Hypercomplex]) -> "HyperVector":
        if not values:
            raise ShapeError("Cannot infer the algebra of an empty vector")
        return cls(values[0].algebra, np.array([v.components for v in values]))

    @classmethod
    def zeros(cls, algebra: Algebra, n: int) -> "HyperVector":
        return cls(algebra, np.zeros((n, algebra.dim)))

    @classmethod
    def random(cls, algebra: Algebra, n: int, rng: np.random.Generator) -> "HyperVector":
        return cls(algebra, algebra.random(n, rng))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, index: int):
        scalar = SCALAR_TYPES.get(self.algebra.dim)
        value = self.data[index]
        return scalar(value) if scalar is not None else float(value[0])

    def norm(self) -> float:
        """Euclidean norm sqrt(sum |x_i|^2)"""
        return float(np.linalg.norm(self.data))

    def conj(self) -> "HyperVector":
        return HyperVector(self.algebra, self.algebra.conj(self.data))

    def right_mul(self, w) -> "HyperVector":
        """x_i w for every entry"""
        w = w.components if isinstance(w, Hypercomplex) else np.asarray(w, dtype=float)
        return HyperVector(self.algebra, self.algebra.mul(self.data, w[None, :]))

    def left_mul(self, w) -> "HyperVector":
        """w x_i for every entry"""
        w = w.components if isinstance(w, Hypercomplex) else np.asarray(w, dtype=float)
        return HyperVector(self.algebra, self.algebra.mul(w[None, :], self.data))

    def inner(self, other: "HyperVector") -> np.ndarray:
        """x* y = sum_i conj(x_i) y_i"""
        return np.sum(self.algebra.mul(self.algebra.conj(self.data), other.data), axis=0)

    def aleph(self) -> np.ndarray:
        return self.data.reshape(-1).copy()

    def isclose(self, other: "HyperVector", rel_tol: float = DEFAULT_REL_TOL) -> bool:
        scale = max(self.norm(), other.norm())
        return float(np.linalg.norm(self.data - other.data)) <= rel_tol * scale

    def _combine(self, other, op) -> "HyperVector":
        if not isinstance(other, HyperVector) or other.algebra is not self.algebra:
            return NotImplemented
        if other.n != self.n:
            raise ShapeError(f"Length mismatch: {self.n} vs {other.n}")
        return HyperVector(self.algebra, op(self.data, other.data))

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __neg__(self):
        return HyperVector(self.algebra, -self.data)

    def __mul__(self, scalar):
        if isinstance(scalar, Real):
            return HyperVector(self.algebra, self.data * float(scalar))
        return NotImplemented

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class HyperMatrix:
    """Dense row-major matrix over a hypercomplex algebra, data of shape (m, n, dim)"""

    algebra: Algebra
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen(self.data, self.algebra, 3, "HyperMatrix"))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape[0], self.data.shape[1]

    def row(self, index: int) -> HyperVector:
        return HyperVector(self.algebra, self.data[index])

    def matvec(self, x: HyperVector) -> HyperVector:
        """(A x)_i = sum_j A_ij x_j with A_ij multiplied from the left"""
        if x.algebra is not self.algebra:
            raise ShapeError(f"Algebra mismatch: {self.algebra.name} vs {x.algebra.name}")
        return HyperVector(self.algebra, self.algebra.matvec(self.data, x.data))

    def __matmul__(self, x: HyperVector) -> HyperVector:
        return self.matvec(x)

    def adjoint(self) -> "HyperMatrix":
        return hermitian_adjoint(self)

    def gimel(self) -> np.ndarray:
        return gimel(self)


def aleph(x: Union[HyperVector, Hypercomplex]) -> np.ndarray:
    """Real vector of length dim * n stacking the coefficients entry by entry"""
    if isinstance(x, Hypercomplex):
        return x.components
    return x.aleph()


def aleph_inv(v, algebra: Algebra) -> HyperVector:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size % algebra.dim:
        raise ShapeError(f"Length {v.size} is not a multiple of {algebra.dim}")
    return HyperVector(algebra, v.reshape(-1, algebra.dim))


def gimel(a: Union[HyperMatrix, HyperVector, Hypercomplex]) -> np.ndarray:
    """
    Block real representation with aleph(A x) = gimel(A) aleph(x).

    A vector is treated as an n x 1 matrix, so gimel(x) aleph(z) = aleph(x z).
    """
    if isinstance(a, Hypercomplex):
        return a.algebra.left_matrix(a.components)
    if isinstance(a, HyperVector):
        a = HyperMatrix(a.algebra, a.data[:, None, :])
    dim = a.algebra.dim
    m, n = a.shape
    blocks = a.algebra.left_matrix(a.data)
    return blocks.transpose(0, 2, 1, 3).reshape(m * dim, n * dim)


def hermitian_adjoint(a: HyperMatrix) -> HyperMatrix:
    """(A*)_ij = conj(A_ji)"""
    return HyperMatrix(a.algebra, a.algebra.conj(a.data).transpose(1, 0, 2))
