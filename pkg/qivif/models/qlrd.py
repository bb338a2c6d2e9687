"""
Low-rank plus detail decomposition of a lighting-suppressed layer.

I = Z + D + E with Z = A B a bilinear low-rank structure layer, D a
column-sparse detail layer and E a small residual. Solved by linearised
alternating directions with an adaptive penalty mu1; J and P are the
auxiliary copies of A and B that carry the weighted Schatten-p shrink.
"""
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from qivif.config import Config
from qivif.exceptions import ConvergenceWarning, DimensionMismatchError, InvalidConfigError
from qivif.models.params import QlrdParams, QlsParams
from qivif.models.proxops import (
    ShrinkParams,
    pssv_wsp_shrink_with_spectrum,
    soft_threshold_columns,
)
from qivif.models.qls import QlsResult, run_qls
from qivif.models.trace import SolverTrace, relative_change
from qivif.quaternion.algebra import QuaternionMatrix, solve_left, solve_right
from qivif.quaternion.qsvd import qsvd

config = Config()


@dataclass(frozen=True)
class Decomposition:
    Z: QuaternionMatrix
    D: QuaternionMatrix
    E: QuaternionMatrix
    A: QuaternionMatrix
    B: QuaternionMatrix
    trace: SolverTrace

    @property
    def rank(self) -> int:
        return self.A.width

    def feasibility(self, I: QuaternionMatrix) -> float:
        return (I - self.Z - self.D - self.E).norm()


@dataclass(frozen=True)
class QlvflResult:
    I: QuaternionMatrix
    G: tuple
    decomposition: Decomposition
    qls: Optional[QlsResult] = None

    def __iter__(self):
        return iter((self.I, self.G, self.decomposition))


# ----------------------------------------------------------------------
# Closed-form block updates
# ----------------------------------------------------------------------


def update_A(Z, B, J, Y2, Y3, mu1) -> QuaternionMatrix:
    """A = ((Z + Y2/mu1) B^H + J - Y3/mu1) (B B^H + I)^-1."""
    rhs = (Z + Y2 / mu1) @ B.H + J - Y3 / mu1
    gram = B @ B.H + QuaternionMatrix.identity(B.height)
    return solve_right(rhs, gram, hermitian=True)


def update_B(A, Z, P, Y2, Y4, mu1) -> QuaternionMatrix:
    """B = (A^H A + I)^-1 (A^H (Z + Y2/mu1) + P - Y4/mu1)."""
    rhs = A.H @ (Z + Y2 / mu1) + P - Y4 / mu1
    gram = A.H @ A + QuaternionMatrix.identity(A.width)
    return solve_left(gram, rhs, hermitian=True)


def update_Z(I, D, E, A, B, Y1, Y2, mu1) -> QuaternionMatrix:
    return (I - D - E + Y1 / mu1 + A @ B - Y2 / mu1) * 0.5


def update_E(I, Z, D, gamma, mu1) -> QuaternionMatrix:
    """E = mu1 (I - Z - D) / (2 gamma + mu1)."""
    return (I - Z - D) * (mu1 / (2.0 * gamma + mu1))


def _shrink_params(params: QlrdParams, mu1: float, rank: int) -> ShrinkParams:
    lam = params.alpha / mu1
    if params.penalty == "nuclear":
        return ShrinkParams(lam=lam, p=1.0, n=0, weights=np.ones(rank))
    # at least the trailing factor component stays penalised
    n = 0 if params.penalty == "wsp" else min(params.n, rank - 1)
    return ShrinkParams(lam=lam, p=params.p, n=n, weight_floor=params.weight_floor)


def _penalty_value(values, weights, p, n) -> float:
    return float(np.sum(weights[n:] * values[n:] ** p))


def initialize_factors(I: QuaternionMatrix, rank: int) -> tuple:
    """A = U_r sqrt(S_r), B = sqrt(S_r) V_r^H from the truncated quaternion SVD."""
    svd = qsvd(I).truncate(rank)
    root = np.sqrt(svd.S)
    return svd.U.scale_columns(root), svd.V.scale_columns(root).H


def run_qlrd(I: QuaternionMatrix, params: QlrdParams, label: str = "image") -> Decomposition:
    h, w = I.shape
    rank = params.resolve_rank((h, w))
    if rank > min(h, w):
        raise InvalidConfigError("factor rank exceeds the image size", (rank, (h, w)))

    A, B = initialize_factors(I, rank)
    J, P = A, B
    Z = A @ B
    D = QuaternionMatrix.zeros(h, w)
    E = QuaternionMatrix.zeros(h, w)
    Y1 = QuaternionMatrix.zeros(h, w)
    Y2 = QuaternionMatrix.zeros(h, w)
    Y3 = QuaternionMatrix.zeros(h, rank)
    Y4 = QuaternionMatrix.zeros(rank, w)
    mu = params.mu1_init
    trace = SolverTrace(solver=f"qlrd[{label}]")
    scale = max(1.0, I.norm())

    for t in range(params.max_iter):
        A = update_A(Z, B, J, Y2, Y3, mu)
        B = update_B(A, Z, P, Y2, Y4, mu)
        Z_new = update_Z(I, D, E, A, B, Y1, Y2, mu)

        shrink = _shrink_params(params, mu, rank)
        J, j_values, j_weights = pssv_wsp_shrink_with_spectrum(A + Y3 / mu, shrink)
        P_h, p_values, p_weights = pssv_wsp_shrink_with_spectrum((B + Y4 / mu).H, shrink)
        P = P_h.H

        D_new = soft_threshold_columns(I - Z_new - E + Y1 / mu, params.beta / mu)
        E = update_E(I + Y1 / mu, Z_new, D_new, params.gamma, mu)

        residual = I - Z_new - D_new - E
        Y1 = Y1 + residual * mu
        coupling = Z_new - A @ B
        Y2 = Y2 + coupling * mu
        Y3 = Y3 + (A - J) * mu
        Y4 = Y4 + (B - P) * mu

        change = max(relative_change(Z_new, Z), relative_change(D_new, D))
        feasibility = residual.norm()
        # relative to the input, over the data constraint and the three factor couplings
        gap = max(feasibility, coupling.norm(), (A - J).norm(), (B - P).norm()) / scale
        objective = (
            params.alpha
            * (
                _penalty_value(j_values, j_weights, shrink.p, shrink.n)
                + _penalty_value(p_values, p_weights, shrink.p, shrink.n)
            )
            + params.beta * D_new.norm("l1")
            + params.gamma * E.norm() ** 2
        )
        trace.record(change, residual=feasibility, objective=objective, penalty=mu)
        config.log("QLRD", f"{label} iter {t + 1} change={change:.3e} feasibility={feasibility:.3e} gap={gap:.3e}")

        Z, D = Z_new, D_new
        mu = min(params.mu1_cap, mu * params.mu1_growth)
        if change < params.tol and gap < params.tol:
            trace.converged = True
            break

    if not trace.converged:
        warnings.warn(
            f"decomposition ({label}) stopped after {params.max_iter} iterations "
            f"with relative change {trace.relative_change[-1]:.3e}",
            ConvergenceWarning,
        )
    return Decomposition(Z=Z, D=D, E=E, A=A, B=B, trace=trace)


def run_qlvfl(
    L: QuaternionMatrix,
    qls_params: QlsParams,
    qlrd_params: QlrdParams,
    label: str = "image",
    suppress_lighting: bool = True,
) -> QlvflResult:
    """Lighting suppression followed by the low-rank plus detail decomposition."""
    if suppress_lighting:
        qls = run_qls(L, qls_params, label=label)
        I, G = qls.I, qls.G
    else:
        qls = None
        zeros = QuaternionMatrix.zeros(*L.shape)
        I, G = L, (zeros, zeros)
    if I.shape != L.shape:
        raise DimensionMismatchError("suppressed layer changed shape", (I.shape, L.shape))
    return QlvflResult(I=I, G=G, decomposition=run_qlrd(I, qlrd_params, label=label), qls=qls)
