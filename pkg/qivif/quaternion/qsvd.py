"""
Quaternion singular value decomposition through the complex adjoint.

The adjoint of an H x W quaternion matrix has every singular value twice.
Taking one member of each pair gives the quaternion singular values; the
singular vectors are rebuilt so that the quaternion columns of U and V are
orthonormal even when singular values repeat.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qivif.exceptions import NonFiniteInputError, QsvdDiagnosticsError
from qivif.quaternion.algebra import Quaternion, QuaternionMatrix

PAIR_RTOL = 1e-8
# Singular values below this fraction of the largest are completed, not divided by.
ZERO_RTOL = 1e-10
# Candidates with less new direction than this are already spanned.
BASIS_FLOOR = 1e-6


@dataclass(frozen=True)
class QsvdResult:
    U: QuaternionMatrix
    S: np.ndarray
    V: QuaternionMatrix

    @property
    def rank(self) -> int:
        return len(self.S)

    def truncate(self, rank: int) -> "QsvdResult":
        r = min(rank, self.rank)
        return QsvdResult(U=self.U[:, :r], S=self.S[:r].copy(), V=self.V[:, :r])

    def reconstruct(self, values=None) -> QuaternionMatrix:
        """U diag(values) V^H, using S when no replacement values are given."""
        values = self.S if values is None else np.asarray(values, dtype=float)
        return self.U.scale_columns(values) @ self.V.H


def _partner(x: np.ndarray, n: int) -> np.ndarray:
    # [x1; x2] -> [-conj(x2); conj(x1)], the second adjoint column of the same quaternion vector.
    return np.concatenate([-np.conj(x[n:]), np.conj(x[:n])])


def _structured_basis(candidates, n: int, count: int, seed=()) -> list:
    """
    Greedily pick vectors from `candidates` (iterated in order) so that the
    picked vectors together with their partners stay orthonormal.
    """
    picked = list(seed)
    frame = [v for x in picked for v in (x, _partner(x, n))]
    Q = np.stack(frame, axis=1) if frame else np.zeros((2 * n, 0), dtype=complex)
    for x in candidates:
        if len(picked) == count:
            break
        r = x - Q @ (Q.conj().T @ x)
        r = r - Q @ (Q.conj().T @ r)
        nr = np.linalg.norm(r)
        if nr <= BASIS_FLOOR:
            continue
        r = r / nr
        picked.append(r)
        Q = np.concatenate([Q, np.stack([r, _partner(r, n)], axis=1)], axis=1)
    if len(picked) < count:
        raise QsvdDiagnosticsError(
            "could not build a quaternion singular basis", (len(picked), count)
        )
    return picked


def _as_quaternion_columns(vectors, n: int) -> QuaternionMatrix:
    X = np.stack(vectors, axis=1)
    return QuaternionMatrix.from_complex_pair(X[:n], -np.conj(X[n:]))


def _canonical_phases(U: QuaternionMatrix) -> QuaternionMatrix:
    """Unit quaternions that make the largest entry of each U column real positive."""
    modulus = U.modulus()
    rows = np.argmax(modulus, axis=0)
    phases = []
    for col, row in enumerate(rows):
        q = U.entry(int(row), col)
        m = q.modulus()
        phases.append(q.conj() * (1.0 / m) if m > 0 else Quaternion(1.0))
    return QuaternionMatrix.from_quaternions(phases)


def qsvd(A: QuaternionMatrix, pair_rtol: float = PAIR_RTOL) -> QsvdResult:
    if not A.is_finite():
        raise NonFiniteInputError("qsvd input contains NaN or infinite entries")
    h, w = A.shape
    k = min(h, w)
    chi = A.adjoint()
    left, sigma, right_h = np.linalg.svd(chi, full_matrices=True)

    scale = max(float(sigma[0]), 1.0) if sigma.size else 1.0
    gaps = np.abs(sigma[0 : 2 * k : 2] - sigma[1 : 2 * k : 2])
    if np.any(gaps > pair_rtol * scale):
        worst = int(np.argmax(gaps))
        raise QsvdDiagnosticsError(
            "adjoint singular values are not paired", (worst, float(gaps[worst]))
        )
    S = sigma[0 : 2 * k : 2].copy()

    u_vecs = _structured_basis(left.T, h, k)
    positive = S > ZERO_RTOL * max(float(S[0]) if k else 0.0, np.finfo(float).tiny)
    chi_h = chi.conj().T
    v_vecs = [chi_h @ u / s for u, s, keep in zip(u_vecs, S, positive) if keep]
    v_vecs = _structured_basis(right_h.conj(), w, k, seed=v_vecs)

    U = _as_quaternion_columns(u_vecs, h)
    V = _as_quaternion_columns(v_vecs, w)
    phases = _canonical_phases(U)
    return QsvdResult(U=U @ phases, S=S, V=V @ phases)
