"""
Hypercomplex spectral transforms
Two-sided 2-D QDFT, 1-D left-sided QDFT, tri-variate ODFT, discrete QSTFT
and the discrete quaternion wavelet transform (circular convolution bank)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from algebra import OCTONION, QUATERNION, Algebra
from errors import ShapeError, TransformError

logger = logging.getLogger(__name__)


# --- complex-pair views of quaternion arrays --------------------------------
# q = z1 + z2 j with z1, z2 in C_i: left multiplication by C_i acts on each
# q = w1 + i w2 with w1, w2 in C_j: right multiplication by C_j acts on each


def _left_pair(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return x[..., 0] + 1j * x[..., 1], x[..., 2] + 1j * x[..., 3]


def _from_left_pair(z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
    return np.stack([z1.real, z1.imag, z2.real, z2.imag], axis=-1)


def _right_pair(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return x[..., 0] + 1j * x[..., 2], x[..., 1] + 1j * x[..., 3]


def _from_right_pair(w1: np.ndarray, w2: np.ndarray) -> np.ndarray:
    return np.stack([w1.real, w2.real, w1.imag, w2.imag], axis=-1)


def _left_fft(x: np.ndarray, axis: int, inverse: bool = False) -> np.ndarray:
    """Left multiplication by the unitary e^{-i 2pi rq/N}/sqrt(N) kernel along ``axis``"""
    transform = np.fft.ifft if inverse else np.fft.fft
    z1, z2 = _left_pair(x)
    return _from_left_pair(transform(z1, axis=axis, norm="ortho"), transform(z2, axis=axis, norm="ortho"))


def _right_fft(x: np.ndarray, axis: int, inverse: bool = False) -> np.ndarray:
    """Right multiplication by the unitary e^{-j 2pi sb/N}/sqrt(N) kernel along ``axis``"""
    transform = np.fft.ifft if inverse else np.fft.fft
    w1, w2 = _right_pair(x)
    return _from_right_pair(transform(w1, axis=axis, norm="ortho"), transform(w2, axis=axis, norm="ortho"))


def _unit_exponential(unit: int, angles: np.ndarray, dim: int) -> np.ndarray:
    """cos(t) - sin(t) e_unit for every angle t"""
    out = np.zeros(np.shape(angles) + (dim,))
    out[..., 0] = np.cos(angles)
    out[..., unit] = -np.sin(angles)
    return out


# --- row access -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RowFunctional:
    """
    Real-linear functional x -> sum_p (left_p x_p) right_p.

    Two-sided transforms cannot be written as a single hypercomplex inner
    product, so every row keeps a left and a right factor per signal entry.
    """

    algebra: Algebra
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        if self.left.shape != self.right.shape or self.left.shape[-1] != self.algebra.dim:
            raise ShapeError(f"Row factors disagree: {self.left.shape} vs {self.right.shape}")

    @property
    def n(self) -> int:
        return self.left.shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(self.n, self.algebra.dim)
        mul = self.algebra.mul
        return np.sum(mul(mul(self.left, x), self.right), axis=0)

    def matrix(self) -> np.ndarray:
        """Real (dim, n*dim) matrix M with M aleph(x) = aleph(apply(x))"""
        blocks = self.algebra.right_matrix(self.right) @ self.algebra.left_matrix(self.left)
        return blocks.transpose(1, 0, 2).reshape(self.algebra.dim, -1)

    def energy(self) -> float:
        """sum_p |left_p|^2 |right_p|^2"""
        return float(np.sum(self.algebra.norm_sq(self.left) * self.algebra.norm_sq(self.right)))


def _check_grid(x: np.ndarray, shape: Tuple[int, ...], what: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-len(shape):] != shape:
        raise ShapeError(f"{what} expects trailing shape {shape}, got {x.shape}")
    return x


def _check_index(value: int, size: int, name: str):
    if not 0 <= value < size:
        raise ShapeError(f"{name}={value} out of range [0, {size})")


# --- quaternion DFTs --------------------------------------------------------


@dataclass(frozen=True)
class Qdft2D:
    """
    Two-sided QDFT on an N x N grid:
    F(r, s) = 1/N sum_{q,b} e^{-i 2pi rq/N} f(q, b) e^{-j 2pi sb/N}
    """

    N: int

    def __post_init__(self):
        if self.N < 1:
            raise TransformError(f"QDFT size must be positive, got {self.N}")

    def forward(self, f: np.ndarray) -> np.ndarray:
        f = _check_grid(f, (self.N, self.N, 4), "qdft_forward")
        return _right_fft(_left_fft(f, axis=-2), axis=-1)

    def inverse(self, spectrum: np.ndarray) -> np.ndarray:
        spectrum = _check_grid(spectrum, (self.N, self.N, 4), "qdft_inverse")
        return _left_fft(_right_fft(spectrum, axis=-1, inverse=True), axis=-2, inverse=True)

    def kernels(self, r: int, s: int) -> Tuple[np.ndarray, np.ndarray]:
        """Left factor per row index q and right factor per column index b"""
        _check_index(r, self.N, "r")
        _check_index(s, self.N, "s")
        grid = np.arange(self.N)
        scale = 1.0 / math.sqrt(self.N)
        left = np.zeros((self.N, 4))
        left[:, 0] = np.cos(2 * np.pi * r * grid / self.N) * scale
        left[:, 1] = -np.sin(2 * np.pi * r * grid / self.N) * scale
        right = np.zeros((self.N, 4))
        right[:, 0] = np.cos(2 * np.pi * s * grid / self.N) * scale
        right[:, 2] = -np.sin(2 * np.pi * s * grid / self.N) * scale
        return left, right

    def row(self, r: int, s: int) -> RowFunctional:
        left, right = self.kernels(r, s)
        size = self.N * self.N
        return RowFunctional(
            QUATERNION,
            np.broadcast_to(left[:, None, :], (self.N, self.N, 4)).reshape(size, 4).copy(),
            np.broadcast_to(right[None, :, :], (self.N, self.N, 4)).reshape(size, 4).copy(),
        )


def qdft_forward(f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim < 3:
        raise ShapeError(f"qdft_forward expects an (N, N, 4) image, got {f.shape}")
    return Qdft2D(f.shape[-2]).forward(f)


def qdft_inverse(spectrum: np.ndarray) -> np.ndarray:
    spectrum = np.asarray(spectrum, dtype=float)
    if spectrum.ndim < 3:
        raise ShapeError(f"qdft_inverse expects an (N, N, 4) spectrum, got {spectrum.shape}")
    return Qdft2D(spectrum.shape[-2]).inverse(spectrum)


def qdft_row(r: int, s: int, N: int) -> RowFunctional:
    return Qdft2D(N).row(r, s)


def qdft1d_forward(x: np.ndarray) -> np.ndarray:
    """Left-sided 1-D QDFT along the sample axis (-2), unitary scaling"""
    x = np.asarray(x, dtype=float)
    if x.ndim < 2 or x.shape[-1] != 4:
        raise ShapeError(f"qdft1d expects (..., N, 4), got {x.shape}")
    return _left_fft(x, axis=-1)


def qdft1d_inverse(spectrum: np.ndarray) -> np.ndarray:
    spectrum = np.asarray(spectrum, dtype=float)
    if spectrum.ndim < 2 or spectrum.shape[-1] != 4:
        raise ShapeError(f"qdft1d expects (..., N, 4), got {spectrum.shape}")
    return _left_fft(spectrum, axis=-1, inverse=True)


def qdft1d_kernel(s: int, N: int) -> np.ndarray:
    """Row s of the 1-D QDFT as left factors e^{-i 2pi sp/N}/sqrt(N)"""
    _check_index(s, N, "s")
    angles = 2 * np.pi * s * np.arange(N) / N
    return _unit_exponential(1, angles, 4) / math.sqrt(N)


# --- octonion DFT -----------------------------------------------------------

ODFT_UNITS = (1, 2, 4)


@dataclass(frozen=True)
class Odft3D:
    """
    Tri-variate ODFT on an N x N x N volume.

    F(k) = 1/N sum_n ((f(n) E1(k1 n1)) E2(k2 n2)) E4(k3 n3) with
    E_m(t) = exp(-e_m 2pi t/N); each kernel multiplies from the right and the
    products are taken left to right, axis 0 with e1, axis 1 with e2, axis 2 with e4.
    """

    N: int
    _cos: np.ndarray = field(init=False, repr=False, compare=False)
    _sin: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.N < 1:
            raise TransformError(f"ODFT size must be positive, got {self.N}")
        grid = np.arange(self.N)
        angles = 2 * np.pi * np.outer(grid, grid) / self.N
        object.__setattr__(self, "_cos", np.cos(angles))
        object.__setattr__(self, "_sin", np.sin(angles))

    def _stage(self, x: np.ndarray, axis: int, unit: int, sign: float) -> np.ndarray:
        """sum_n x(n) (cos(kn) + sign sin(kn) e_unit) along ``axis``"""
        x_unit = OCTONION.mul(x, OCTONION.basis(unit))
        out = (np.tensordot(self._cos, x, axes=([1], [axis]))
               + sign * np.tensordot(self._sin, x_unit, axes=([1], [axis])))
        return np.moveaxis(out, 0, axis)

    def forward(self, f: np.ndarray) -> np.ndarray:
        f = _check_grid(f, (self.N, self.N, self.N, 8), "odft_forward")
        if f.ndim != 4:
            raise ShapeError("odft_forward takes a single (N, N, N, 8) volume")
        out = f
        for axis, unit in enumerate(ODFT_UNITS):
            out = self._stage(out, axis, unit, -1.0)
        return out / self.N

    def inverse(self, spectrum: np.ndarray) -> np.ndarray:
        spectrum = _check_grid(spectrum, (self.N, self.N, self.N, 8), "odft_inverse")
        if spectrum.ndim != 4:
            raise ShapeError("odft_inverse takes a single (N, N, N, 8) volume")
        out = spectrum
        for axis, unit in reversed(list(enumerate(ODFT_UNITS))):
            out = self._stage(out, axis, unit, 1.0)
        return out / self.N ** 2


def odft_forward(f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim != 4:
        raise ShapeError(f"odft_forward expects an (N, N, N, 8) volume, got {f.shape}")
    return Odft3D(f.shape[0]).forward(f)


def odft_inverse(spectrum: np.ndarray) -> np.ndarray:
    spectrum = np.asarray(spectrum, dtype=float)
    if spectrum.ndim != 4:
        raise ShapeError(f"odft_inverse expects an (N, N, N, 8) volume, got {spectrum.shape}")
    return Odft3D(spectrum.shape[0]).inverse(spectrum)


# --- QSTFT ------------------------------------------------------------------


@dataclass(frozen=True)
class QstftPlan:
    """Quaternion window of length T slid with ``hop`` over a length-N signal"""

    window: np.ndarray
    hop: int
    length: int
    _windows: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        window = np.array(self.window, dtype=float)
        if window.ndim != 2 or window.shape[1] != 4:
            raise ShapeError(f"Window must be a (T, 4) quaternion array, got {window.shape}")
        if window.shape[0] > self.length:
            raise TransformError(f"Window length {window.shape[0]} exceeds signal length {self.length}")
        if self.hop < 1:
            raise TransformError(f"Hop must be positive, got {self.hop}")
        window.setflags(write=False)
        object.__setattr__(self, "window", window)

        padded = np.zeros((self.length, 4))
        padded[: window.shape[0]] = window
        windows = np.stack([np.roll(padded, r * self.hop, axis=0) for r in range(self.sections)])
        windows.setflags(write=False)
        object.__setattr__(self, "_windows", windows)

    @property
    def T(self) -> int:
        return self.window.shape[0]

    @property
    def sections(self) -> int:
        """R = ceil((N + T - 1) / hop)"""
        return -(-(self.length + self.T - 1) // self.hop)

    @property
    def windows(self) -> np.ndarray:
        """Diagonals of W_r, shape (R, N, 4)"""
        return self._windows

    def row(self, r: int, s: int) -> RowFunctional:
        _check_index(r, self.sections, "r")
        left = QUATERNION.mul(qdft1d_kernel(s, self.length), self._windows[r])
        return RowFunctional(QUATERNION, left, np.broadcast_to(QUATERNION.one(), left.shape).copy())


def qstft(f: np.ndarray, plan: QstftPlan) -> np.ndarray:
    """Y[r, s] = f_s^* W_r x, shape (..., R, N, 4)"""
    f = _check_grid(f, (plan.length, 4), "qstft")
    windowed = QUATERNION.mul(plan.windows, f[..., None, :, :])
    return qdft1d_forward(windowed)


def qstft_adjoint(spectrum: np.ndarray, plan: QstftPlan) -> np.ndarray:
    spectrum = _check_grid(spectrum, (plan.sections, plan.length, 4), "qstft_adjoint")
    sections = qdft1d_inverse(spectrum)
    return np.sum(QUATERNION.mul(QUATERNION.conj(plan.windows), sections), axis=-3)


# --- quaternion wavelets ----------------------------------------------------


def haar_mother() -> np.ndarray:
    """Quaternion Haar: scaling, horizontal, vertical and diagonal Haar in the 1, i, j, k slots"""
    phi = np.array([[1.0, 1.0], [1.0, 1.0]])
    horizontal = np.array([[1.0, 1.0], [-1.0, -1.0]])
    vertical = np.array([[1.0, -1.0], [1.0, -1.0]])
    diagonal = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return np.stack([phi, horizontal, vertical, diagonal], axis=-1) / 2.0


def _dilate(psi: np.ndarray, scale: float) -> np.ndarray:
    """(1/a) psi(x/a) sampled by nearest neighbour"""
    rows = max(1, int(round(psi.shape[0] * scale)))
    cols = max(1, int(round(psi.shape[1] * scale)))
    ri = np.minimum((np.arange(rows) / scale).astype(int), psi.shape[0] - 1)
    ci = np.minimum((np.arange(cols) / scale).astype(int), psi.shape[1] - 1)
    return psi[np.ix_(ri, ci)] / scale


def _rotate(psi: np.ndarray, angle: float) -> np.ndarray:
    """psi(R_{-theta} x) about the support centre; exact for quarter turns"""
    quarters = angle / (np.pi / 2)
    if np.isclose(quarters, round(quarters)):
        return np.rot90(psi, k=int(round(quarters)) % 4, axes=(0, 1)).copy()

    rows, cols = psi.shape[:2]
    cr, cc = (rows - 1) / 2.0, (cols - 1) / 2.0
    u, v = np.meshgrid(np.arange(rows) - cr, np.arange(cols) - cc, indexing="ij")
    cos, sin = math.cos(angle), math.sin(angle)
    src_r = np.rint(cos * u + sin * v + cr).astype(int)
    src_c = np.rint(-sin * u + cos * v + cc).astype(int)
    inside = (src_r >= 0) & (src_r < rows) & (src_c >= 0) & (src_c < cols)
    out = np.zeros_like(psi)
    out[inside] = psi[src_r[inside], src_c[inside]]
    return out


@dataclass(frozen=True)
class QwtBank:
    """Mother quaternion wavelet with one (scale, angle) pair per family member"""

    mother: np.ndarray
    scales: Tuple[float, ...]
    angles: Tuple[float, ...]

    def __post_init__(self):
        mother = np.array(self.mother, dtype=float)
        if mother.ndim != 3 or mother.shape[-1] != 4:
            raise ShapeError(f"Mother wavelet must be (P, Q, 4), got {mother.shape}")
        if len(self.scales) == 0:
            raise TransformError("Wavelet bank is empty")
        if len(self.scales) != len(self.angles):
            raise TransformError("Wavelet bank needs one angle per scale")
        if any(a <= 0 for a in self.scales):
            raise TransformError(f"Wavelet scales must be positive: {self.scales}")
        mother.setflags(write=False)
        object.__setattr__(self, "mother", mother)
        object.__setattr__(self, "scales", tuple(float(a) for a in self.scales))
        object.__setattr__(self, "angles", tuple(float(t) for t in self.angles))

    def __len__(self) -> int:
        return len(self.scales)

    def member(self, k: int) -> np.ndarray:
        """psi^k on its own support"""
        return _rotate(_dilate(self.mother, self.scales[k]), self.angles[k])

    def filters(self, N: int) -> np.ndarray:
        """Every member embedded at the origin of an N x N periodic grid, shape (L, N, N, 4)"""
        out = np.zeros((len(self), N, N, 4))
        for k in range(len(self)):
            psi = self.member(k)
            if psi.shape[0] > N or psi.shape[1] > N:
                raise TransformError(f"Wavelet member {k} support {psi.shape[:2]} exceeds image size {N}")
            out[k, : psi.shape[0], : psi.shape[1]] = psi
        return out

    def row(self, k: int, r: int, s: int, N: int) -> RowFunctional:
        _check_index(k, len(self), "k")
        _check_index(r, N, "r")
        _check_index(s, N, "s")
        psi = self.filters(N)[k]
        p = np.arange(N)
        right = psi[np.ix_((r - p) % N, (s - p) % N)].reshape(N * N, 4)
        left = np.broadcast_to(QUATERNION.one(), right.shape).copy()
        return RowFunctional(QUATERNION, left, right)


def default_bank(size: int, mother: np.ndarray = None) -> QwtBank:
    """Member k uses scale 1 + k // 4 and angle (k % 4) pi / 2"""
    if size < 1:
        raise TransformError("Wavelet bank is empty")
    mother = haar_mother() if mother is None else mother
    scales = tuple(1.0 + k // 4 for k in range(size))
    angles = tuple((k % 4) * np.pi / 2 for k in range(size))
    return QwtBank(mother, scales, angles)


def qwt(f: np.ndarray, bank: QwtBank) -> np.ndarray:
    """F_k(r, s) = sum_{p,q} f(p, q) psi^k(r - p, s - q), circular, shape (..., L, N, N, 4)"""
    f = np.asarray(f, dtype=float)
    if f.ndim < 3 or f.shape[-1] != 4 or f.shape[-3] != f.shape[-2]:
        raise ShapeError(f"qwt expects (..., N, N, 4), got {f.shape}")
    N = f.shape[-2]
    filters = bank.filters(N)
    out = np.zeros(f.shape[:-3] + (len(bank), N, N, 4))
    for k in range(len(bank)):
        for u, v in zip(*np.nonzero(np.any(filters[k] != 0, axis=-1))):
            shifted = np.roll(f, (u, v), axis=(-3, -2))
            out[..., k, :, :, :] += QUATERNION.mul(shifted, filters[k, u, v])
    return out


def qwt_adjoint(z: np.ndarray, bank: QwtBank) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim < 4 or z.shape[-4] != len(bank):
        raise ShapeError(f"qwt_adjoint expects (..., {len(bank)}, N, N, 4), got {z.shape}")
    N = z.shape[-2]
    filters = bank.filters(N)
    out = np.zeros(z.shape[:-4] + (N, N, 4))
    for k in range(len(bank)):
        for u, v in zip(*np.nonzero(np.any(filters[k] != 0, axis=-1))):
            term = QUATERNION.mul(z[..., k, :, :, :], QUATERNION.conj(filters[k, u, v]))
            out += np.roll(term, (-u, -v), axis=(-3, -2))
    return out
