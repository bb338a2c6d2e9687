"""
Quaternion scalars and quaternion matrices.

A QuaternionMatrix keeps its four component planes in one (4, H, W) array,
ordered (real, i, j, k). Matrix products and linear solves go through the
complex pair form A = A1 + A2 j with A1 = a + b i and A2 = c + d i, whose
complex adjoint is [[A1, A2], [-conj(A2), conj(A1)]].
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Real

import numpy as np
import scipy.linalg

from qivif.exceptions import DimensionMismatchError, SubproblemSolveError


@dataclass(frozen=True)
class Quaternion:
    a: float
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(
            self.a + other.a, self.b + other.b, self.c + other.c, self.d + other.d
        )

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(
            self.a - other.a, self.b - other.b, self.c - other.c, self.d - other.d
        )

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.a, -self.b, -self.c, -self.d)

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return qmul(self, other)
        if isinstance(other, Real):
            return Quaternion(
                self.a * other, self.b * other, self.c * other, self.d * other
            )
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Real):
            return self * other
        return NotImplemented

    def conj(self) -> "Quaternion":
        return Quaternion(self.a, -self.b, -self.c, -self.d)

    def modulus(self) -> float:
        return math.sqrt(self.a**2 + self.b**2 + self.c**2 + self.d**2)

    def is_pure(self) -> bool:
        return self.a == 0.0

    def as_tuple(self) -> tuple:
        return (self.a, self.b, self.c, self.d)


def qmul(p: Quaternion, q: Quaternion) -> Quaternion:
    """Hamilton product, with i*j = k, j*k = i, k*i = j."""
    return Quaternion(
        p.a * q.a - p.b * q.b - p.c * q.c - p.d * q.d,
        p.a * q.b + p.b * q.a + p.c * q.d - p.d * q.c,
        p.a * q.c - p.b * q.d + p.c * q.a + p.d * q.b,
        p.a * q.d + p.b * q.c - p.c * q.b + p.d * q.a,
    )


class QuaternionMatrix:
    """
    Immutable H x W matrix of quaternions.

    Component planes are real for spatial-domain matrices. Spectra produced by
    `qfft` carry complex planes; everything that needs the complex pair form
    (products, adjoints, solves) requires real planes.
    """

    __slots__ = ("_data",)
    # Make `ndarray * QuaternionMatrix` fall through to __rmul__.
    __array_ufunc__ = None

    def __init__(self, components):
        data = np.array(components, copy=True)
        if data.ndim != 3 or data.shape[0] != 4:
            raise ValueError(
                f"expected a (4, H, W) component array, got shape {data.shape}"
            )
        if not np.iscomplexobj(data):
            data = data.astype(np.float64, copy=False)
        data.setflags(write=False)
        self._data = data

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------

    @classmethod
    def _wrap(cls, data: np.ndarray) -> "QuaternionMatrix":
        # Takes ownership of a freshly computed array without copying it.
        obj = cls.__new__(cls)
        if not np.iscomplexobj(data):
            data = data.astype(np.float64, copy=False)
        data.setflags(write=False)
        obj._data = data
        return obj

    @classmethod
    def from_parts(cls, a, b, c, d) -> "QuaternionMatrix":
        return cls._wrap(np.stack([np.asarray(x, dtype=float) for x in (a, b, c, d)]))

    @classmethod
    def from_pure(cls, b, c, d) -> "QuaternionMatrix":
        b = np.asarray(b, dtype=float)
        return cls.from_parts(np.zeros_like(b), b, c, d)

    @classmethod
    def zeros(cls, height: int, width: int) -> "QuaternionMatrix":
        return cls._wrap(np.zeros((4, height, width)))

    @classmethod
    def identity(cls, n: int) -> "QuaternionMatrix":
        data = np.zeros((4, n, n))
        data[0] = np.eye(n)
        return cls._wrap(data)

    @classmethod
    def from_quaternions(cls, diagonal) -> "QuaternionMatrix":
        """Diagonal matrix whose entries are the given Quaternion scalars."""
        entries = np.array([q.as_tuple() for q in diagonal], dtype=float)
        n = len(entries)
        data = np.zeros((4, n, n))
        idx = np.arange(n)
        data[:, idx, idx] = entries.T
        return cls._wrap(data)

    @classmethod
    def from_complex_pair(cls, a1: np.ndarray, a2: np.ndarray) -> "QuaternionMatrix":
        return cls._wrap(np.stack([a1.real, a1.imag, a2.real, a2.imag]))

    @classmethod
    def from_adjoint(cls, chi: np.ndarray) -> "QuaternionMatrix":
        h, w = chi.shape[0] // 2, chi.shape[1] // 2
        return cls.from_complex_pair(chi[:h, :w], chi[:h, w:])

    # ------------------------------------------------------------------
    # Views
    # ------------------------------------------------------------------

    @property
    def components(self) -> np.ndarray:
        return self._data

    @property
    def real(self) -> np.ndarray:
        return self._data[0]

    @property
    def i(self) -> np.ndarray:
        return self._data[1]

    @property
    def j(self) -> np.ndarray:
        return self._data[2]

    @property
    def k(self) -> np.ndarray:
        return self._data[3]

    @property
    def imaginary(self) -> np.ndarray:
        return self._data[1:]

    @property
    def shape(self) -> tuple:
        return self._data.shape[1:]

    @property
    def height(self) -> int:
        return self._data.shape[1]

    @property
    def width(self) -> int:
        return self._data.shape[2]

    @property
    def is_spectral(self) -> bool:
        return np.iscomplexobj(self._data)

    def entry(self, row: int, col: int) -> Quaternion:
        return Quaternion(*(float(x) for x in self._data[:, row, col]))

    def __getitem__(self, key) -> "QuaternionMatrix":
        rows, cols = key
        if isinstance(rows, (int, np.integer)):
            rows = slice(rows, rows + 1)
        if isinstance(cols, (int, np.integer)):
            cols = slice(cols, cols + 1)
        return QuaternionMatrix._wrap(np.array(self._data[:, rows, :][:, :, cols]))

    def __repr__(self) -> str:
        kind = "spectral" if self.is_spectral else "spatial"
        return f"QuaternionMatrix({self.height}x{self.width}, {kind})"

    # ------------------------------------------------------------------
    # Complex pair form
    # ------------------------------------------------------------------

    def _require_spatial(self):
        if self.is_spectral:
            raise TypeError("operation needs real component planes")

    def to_complex_pair(self) -> tuple:
        self._require_spatial()
        a, b, c, d = self._data
        return a + 1j * b, c + 1j * d

    def adjoint(self) -> np.ndarray:
        a1, a2 = self.to_complex_pair()
        return np.block([[a1, a2], [-np.conj(a2), np.conj(a1)]])

    # ------------------------------------------------------------------
    # Algebra
    # ------------------------------------------------------------------

    def conj(self) -> "QuaternionMatrix":
        data = self._data.copy()
        data[1:] *= -1
        return QuaternionMatrix._wrap(data)

    def transpose(self) -> "QuaternionMatrix":
        return QuaternionMatrix._wrap(np.ascontiguousarray(self._data.transpose(0, 2, 1)))

    @property
    def H(self) -> "QuaternionMatrix":
        """Conjugate transpose."""
        return self.conj().transpose()

    def _check_same_shape(self, other: "QuaternionMatrix"):
        if self.shape != other.shape:
            raise DimensionMismatchError(
                "quaternion matrices differ in shape", (self.shape, other.shape)
            )

    def __add__(self, other: "QuaternionMatrix") -> "QuaternionMatrix":
        if not isinstance(other, QuaternionMatrix):
            return NotImplemented
        self._check_same_shape(other)
        return QuaternionMatrix._wrap(self._data + other._data)

    def __sub__(self, other: "QuaternionMatrix") -> "QuaternionMatrix":
        if not isinstance(other, QuaternionMatrix):
            return NotImplemented
        self._check_same_shape(other)
        return QuaternionMatrix._wrap(self._data - other._data)

    def __neg__(self) -> "QuaternionMatrix":
        return QuaternionMatrix._wrap(-self._data)

    def __mul__(self, other) -> "QuaternionMatrix":
        """Scale by a real scalar or pointwise by a real (or spectral) H x W map."""
        if isinstance(other, QuaternionMatrix):
            return NotImplemented
        if np.isscalar(other):
            return QuaternionMatrix._wrap(self._data * other)
        weights = np.asarray(other)
        if weights.shape != self.shape:
            raise DimensionMismatchError(
                "pointwise weights do not match the matrix", (weights.shape, self.shape)
            )
        return QuaternionMatrix._wrap(self._data * weights[None])

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "QuaternionMatrix":
        return QuaternionMatrix._wrap(self._data / scalar)

    def scale_columns(self, factors) -> "QuaternionMatrix":
        factors = np.asarray(factors, dtype=float)
        if factors.shape != (self.width,):
            raise DimensionMismatchError("one factor per column expected", factors.shape)
        return QuaternionMatrix._wrap(self._data * factors[None, None, :])

    def __matmul__(self, other: "QuaternionMatrix") -> "QuaternionMatrix":
        return matmul(self, other)

    def inner(self, other: "QuaternionMatrix") -> float:
        """Real inner product Re tr(self^H other)."""
        self._check_same_shape(other)
        return float(np.sum(self._data * other._data).real)

    # ------------------------------------------------------------------
    # Measures
    # ------------------------------------------------------------------

    def modulus(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self._data) ** 2, axis=0))

    def norm(self, kind: str = "fro") -> float:
        if kind == "fro":
            return float(np.sqrt(np.sum(np.abs(self._data) ** 2)))
        if kind == "l1":
            return float(np.sum(self.modulus()))
        if kind == "max":
            return float(np.max(self.modulus(), initial=0.0))
        if kind == "nuclear":
            from qivif.quaternion.qsvd import qsvd

            return float(np.sum(qsvd(self).S))
        raise ValueError(f"unknown norm kind: {kind}")

    def is_pure(self, atol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self._data[0]) <= atol))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self._data)))

    def allclose(self, other: "QuaternionMatrix", atol: float = 1e-9) -> bool:
        return self.shape == other.shape and bool(
            np.allclose(self._data, other._data, rtol=0.0, atol=atol)
        )


def matmul(A: QuaternionMatrix, B: QuaternionMatrix) -> QuaternionMatrix:
    if A.width != B.height:
        raise DimensionMismatchError("inner dimensions differ", (A.shape, B.shape))
    a1, a2 = A.to_complex_pair()
    b1, b2 = B.to_complex_pair()
    c1 = a1 @ b1 - a2 @ np.conj(b2)
    c2 = a1 @ b2 + a2 @ np.conj(b1)
    return QuaternionMatrix.from_complex_pair(c1, c2)


def solve_right(R: QuaternionMatrix, M: QuaternionMatrix, hermitian: bool = False) -> QuaternionMatrix:
    """Return X with X M = R."""
    if M.height != M.width or R.width != M.height:
        raise DimensionMismatchError("cannot right-divide", (R.shape, M.shape))
    try:
        chi = scipy.linalg.solve(
            M.adjoint().T, R.adjoint().T, assume_a="pos" if hermitian else "gen"
        ).T
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SubproblemSolveError("singular system in right division", str(exc)) from exc
    return QuaternionMatrix.from_adjoint(chi)


def solve_left(M: QuaternionMatrix, R: QuaternionMatrix, hermitian: bool = False) -> QuaternionMatrix:
    """Return X with M X = R."""
    if M.height != M.width or R.height != M.width:
        raise DimensionMismatchError("cannot left-divide", (M.shape, R.shape))
    try:
        chi = scipy.linalg.solve(
            M.adjoint(), R.adjoint(), assume_a="pos" if hermitian else "gen"
        )
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SubproblemSolveError("singular system in left division", str(exc)) from exc
    return QuaternionMatrix.from_adjoint(chi)
