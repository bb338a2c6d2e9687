"""
Hierarchical Bayesian fusion.

With T = I_f - I_v, the fused image is F = S + I_v where S and Q = T - S
are Gaussian given their variances and the inverse variances have inverse
Gaussian posteriors. EM alternates posterior means of the inverse variances
(E-step) with a gradient-regularised weighted least-squares solve for S
(M-step).
"""
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from qivif.config import Config
from qivif.exceptions import ConvergenceWarning, DimensionMismatchError
from qivif.models.params import QhbfParams
from qivif.models.trace import SolverTrace, relative_change
from qivif.quaternion.algebra import QuaternionMatrix
from qivif.quaternion.spectral import apply_filter, gradient, gram_spectrum

config = Config()

EXPECTATION_FLOOR = 1e-8
EXPECTATION_CAP = 1e8
EPS_FLOOR = 1e-6


@dataclass
class LatentState:
    S: QuaternionMatrix
    Q: QuaternionMatrix
    M: np.ndarray
    N: np.ndarray
    eps_s: float
    eps_q: float


@dataclass(frozen=True)
class InnerSolve:
    iterations: int
    residual: float
    converged: bool


@dataclass(frozen=True)
class QhbfResult:
    F: QuaternionMatrix
    state: LatentState
    trace: SolverTrace
    m_step_objectives: List[float] = field(default_factory=list)
    inner: List[InnerSolve] = field(default_factory=list)


# ----------------------------------------------------------------------
# E-step
# ----------------------------------------------------------------------


def _expectation(modulus: np.ndarray, eps: float, variant: str) -> np.ndarray:
    c = math.sqrt(2.0 / eps)
    with np.errstate(divide="ignore"):
        if variant == "proportional":
            value = c * modulus
        elif variant == "reciprocal":
            value = c / modulus
        else:
            raise ValueError(f"unknown E-step variant: {variant}")
    return np.clip(value, EXPECTATION_FLOOR, EXPECTATION_CAP)


def e_step(S: QuaternionMatrix, Q: QuaternionMatrix, eps_s: float, eps_q: float, variant: str = "proportional") -> tuple:
    """
    Posterior means of the inverse variances, floored at 1e-8 and capped at 1e8.

    "proportional": sqrt(2 |s|^2 / eps). "reciprocal": sqrt(2 / (eps |s|^2)), the
    mean of the inverse Gaussian posterior m^(-3/2) exp(-(|s|^2 m + 2/(m eps)) / 2).
    """
    if S.shape != Q.shape:
        raise DimensionMismatchError("latent layers differ in shape", (S.shape, Q.shape))
    return (
        _expectation(S.modulus(), eps_s, variant),
        _expectation(Q.modulus(), eps_q, variant),
    )


def update_eps(S: QuaternionMatrix, Q: QuaternionMatrix) -> tuple:
    return (
        max(float(S.modulus().mean()), EPS_FLOOR),
        max(float(Q.modulus().mean()), EPS_FLOOR),
    )


# ----------------------------------------------------------------------
# Objectives
# ----------------------------------------------------------------------


def _smoothness(S: QuaternionMatrix, Q: QuaternionMatrix, w1: float, w2: float) -> float:
    sx, sy = gradient(S)
    qx, qy = gradient(Q)
    return 0.5 * w1 * (sx.norm() ** 2 + sy.norm() ** 2) + 0.5 * w2 * (qx.norm() ** 2 + qy.norm() ** 2)


def m_step_objective(S, T, M, N, w1, w2) -> float:
    """||M*S||^2 + ||N*(T-S)||^2 + w1/2 ||grad S||^2 + w2/2 ||grad(T-S)||^2."""
    Q = T - S
    return float(np.sum(M**2 * S.modulus() ** 2) + np.sum(N**2 * Q.modulus() ** 2) + _smoothness(S, Q, w1, w2))


def _log_penalty(modulus: np.ndarray, eps: float) -> float:
    # c^2 log|s|^2, continued linearly below the knee where c / |s| reaches the cap
    c2 = 2.0 / eps
    x = modulus**2
    knee = c2 / EXPECTATION_CAP**2
    above = c2 * np.log(np.maximum(x, knee))
    below = c2 * (math.log(knee) + x / knee - 1.0)
    return float(np.sum(np.where(x >= knee, above, below)))


def log_objective(S, T, eps_s, eps_q, w1, w2) -> float:
    """
    Energy that EM with the reciprocal E-step and frozen eps does not increase.

    Its derivative in |s|^2 is min(2 / (eps |s|^2), cap^2) = M^2, so the
    M-step objective is its tangent majoriser at the current S.
    """
    Q = T - S
    return _log_penalty(S.modulus(), eps_s) + _log_penalty(Q.modulus(), eps_q) + float(_smoothness(S, Q, w1, w2))


# ----------------------------------------------------------------------
# M-step
# ----------------------------------------------------------------------

JACOBI_SPREAD = 1e3


def _neg_laplacian(planes: np.ndarray) -> np.ndarray:
    return -apply_filter(QuaternionMatrix(planes), "laplacian").components


def _preconditioner(diag: np.ndarray, c: float, shape: tuple):
    """FFT inverse of the mean-diagonal operator, or Jacobi when the weights spread widely."""
    if diag.max() > JACOBI_SPREAD * diag.min():
        inverse_diag = 1.0 / (diag + 4.0 * c)
        return lambda r: (r.reshape(shape) * inverse_diag).ravel()

    inverse_symbol = 1.0 / (float(diag.mean()) + c * gram_spectrum(shape[1:]))

    def precondition(r):
        planes = r.reshape(shape)
        out = np.fft.ifft2(np.fft.fft2(planes, axes=(1, 2)) * inverse_symbol, axes=(1, 2))
        return out.real.ravel()

    return precondition


def _solve(T, M, N, w1, w2, tol, max_iter, x0) -> tuple:
    diag = M**2 + N**2
    c = 0.5 * (w1 + w2)
    rhs = N**2 * T.components
    if w2 > 0:
        rhs = rhs + 0.5 * w2 * _neg_laplacian(T.components)
    if not np.any(rhs):
        return QuaternionMatrix.zeros(*T.shape), InnerSolve(0, 0.0, True)
    if c == 0:
        return QuaternionMatrix(rhs / diag), InnerSolve(0, 0.0, True)

    shape = (4,) + T.shape
    size = int(np.prod(shape))

    def apply(x):
        planes = x.reshape(shape)
        return (diag * planes + c * _neg_laplacian(planes)).ravel()

    operator = LinearOperator((size, size), matvec=apply, dtype=np.float64)
    preconditioner = LinearOperator((size, size), matvec=_preconditioner(diag, c, shape), dtype=np.float64)
    counter = {"n": 0}

    def _count(_):
        counter["n"] += 1

    b = rhs.ravel()
    start = None if x0 is None else x0.components.ravel().copy()
    x, info = cg(operator, b, x0=start, rtol=tol, atol=0.0, maxiter=max_iter, M=preconditioner, callback=_count)
    residual = float(np.linalg.norm(b - apply(x)) / np.linalg.norm(b))
    return QuaternionMatrix(x.reshape(shape)), InnerSolve(counter["n"], residual, info == 0)


def m_step(
    T: QuaternionMatrix,
    M: np.ndarray,
    N: np.ndarray,
    w1: float,
    w2: float,
    tol: float = 1e-6,
    max_iter: int = 200,
    x0: Optional[QuaternionMatrix] = None,
    log: Optional[List[InnerSolve]] = None,
) -> QuaternionMatrix:
    """
    Solve (M^2 + N^2 + (w1+w2)/2 grad^T grad) S = N^2 T + w2/2 grad^T grad T.

    w1 = w2 = 0 is the pointwise closed form N^2 T / (M^2 + N^2); otherwise
    preconditioned conjugate gradients started from x0. The inner solve
    statistics are appended to ``log`` when one is given.
    """
    if M.shape != T.shape or N.shape != T.shape:
        raise DimensionMismatchError("weight maps do not match T", (M.shape, N.shape, T.shape))
    if np.any(M <= 0) or np.any(N <= 0):
        raise ValueError("M-step weight maps must be strictly positive")

    S, inner = _solve(T, M, N, w1, w2, tol, max_iter, x0)
    if not inner.converged:
        warnings.warn(
            f"M-step solve stopped after {inner.iterations} iterations with residual {inner.residual:.3e}",
            ConvergenceWarning,
        )
    if log is not None:
        log.append(inner)
    return S


# ----------------------------------------------------------------------
# EM driver
# ----------------------------------------------------------------------


def run_qhbf(I_v: QuaternionMatrix, I_f: QuaternionMatrix, params: QhbfParams = QhbfParams()) -> QhbfResult:
    if I_v.shape != I_f.shape:
        raise DimensionMismatchError("fusion inputs differ in shape", (I_v.shape, I_f.shape))
    T = I_f - I_v
    S = T * 0.5
    eps_s, eps_q = params.eps_s, params.eps_q
    trace = SolverTrace(solver="qhbf")
    objectives, inner_log = [], []

    for it in range(params.em_iters):
        M, N = e_step(S, T - S, eps_s, eps_q, params.estep_variant)
        S_new = m_step(
            T, M, N, params.w1, params.w2, params.inner_tol, params.inner_max_iter, x0=S, log=inner_log
        )
        inner = inner_log[-1]
        objectives.append(m_step_objective(S_new, T, M, N, params.w1, params.w2))
        energy = log_objective(S_new, T, eps_s, eps_q, params.w1, params.w2)
        if not params.freeze_eps:
            eps_s, eps_q = update_eps(S_new, T - S_new)

        change = relative_change(S_new, S)
        trace.record(change, residual=inner.residual, objective=energy)
        config.log(
            "QHBF",
            f"EM {it + 1} change={change:.3e} cg={inner.iterations} eps=({eps_s:.3e}, {eps_q:.3e})",
        )
        S = S_new

    trace.converged = all(step.converged for step in inner_log)
    state = LatentState(S=S, Q=T - S, M=M, N=N, eps_s=eps_s, eps_q=eps_q)
    return QhbfResult(F=S + I_v, state=state, trace=trace, m_step_objectives=objectives, inner=inner_log)
