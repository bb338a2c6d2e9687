"""
Proximal operators: generalised soft-thresholding of singular values, the
partial-sum weighted Schatten-p shrink, and column soft-thresholding.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from qivif.exceptions import ShrinkDomainError
from qivif.quaternion.algebra import QuaternionMatrix
from qivif.quaternion.qsvd import qsvd

GST_MAX_ITER = 50
GST_STEP_TOL = 1e-12
DEFAULT_WEIGHT_FLOOR = 1e-4


@dataclass(frozen=True)
class ShrinkParams:
    lam: float
    p: float = 1.0
    n: int = 0
    # None -> w_k = 1 / (sigma_k(Y) + weight_floor)
    weights: Optional[np.ndarray] = field(default=None, compare=False)
    weight_floor: float = DEFAULT_WEIGHT_FLOOR

    def validate(self, k: Optional[int] = None):
        if not 0.0 < self.p <= 1.0:
            raise ShrinkDomainError("Schatten exponent must lie in (0, 1]", self.p)
        if self.lam < 0:
            raise ShrinkDomainError("shrink weight must be non-negative", self.lam)
        if self.n < 0 or (k is not None and self.n > k):
            raise ShrinkDomainError("preserved count out of range", (self.n, k))
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0):
                raise ShrinkDomainError("shrink weights must be non-negative")
            if k is not None and w.shape != (k,):
                raise ShrinkDomainError("one weight per singular value expected", w.shape)


def _check_p(p: float):
    if not 0.0 < p <= 1.0:
        raise ShrinkDomainError("Schatten exponent must lie in (0, 1]", p)


def gst_threshold(lam_w, p: float):
    """Value below which the generalised soft-threshold returns zero."""
    lam_w = np.asarray(lam_w, dtype=float)
    if p == 1.0:
        return lam_w
    # (2 lw (1-p))^(1/(2-p)) + lw p (2 lw (1-p))^((p-1)/(2-p)), with lw^(1/(2-p)) factored out
    # so that tiny weights do not underflow into 0^negative.
    c = 2.0 * (1.0 - p)
    shape = c ** (1.0 / (2.0 - p)) + p * c ** ((p - 1.0) / (2.0 - p))
    return lam_w ** (1.0 / (2.0 - p)) * shape


def gst(sigma_y, lam: float, w, p: float):
    """
    Vectorised minimiser of lam*w*x^p + 0.5*(x - sigma_y)^2 over x >= 0.

    Above the threshold the non-zero stationary point is found by the
    fixed-point iteration x <- sigma_y - lam*w*p*x^(p-1), started at sigma_y.
    """
    _check_p(p)
    sigma_y = np.asarray(sigma_y, dtype=float)
    if np.any(sigma_y < 0):
        raise ShrinkDomainError("singular values must be non-negative")
    lam_w = lam * np.broadcast_to(np.asarray(w, dtype=float), sigma_y.shape)
    if p == 1.0:
        return np.maximum(sigma_y - lam_w, 0.0)

    tau = gst_threshold(lam_w, p)
    active = (sigma_y > tau) & (lam_w > 0)
    x = sigma_y.copy()
    step = lam_w * p
    for _ in range(GST_MAX_ITER):
        xa = x[active]
        nxt = sigma_y[active] - step[active] * xa ** (p - 1.0)
        x[active] = nxt
        if xa.size == 0 or np.max(np.abs(nxt - xa)) < GST_STEP_TOL:
            break
    return np.where(active, x, np.where(lam_w > 0, 0.0, sigma_y))


def gst_scalar(sigma_y: float, lam: float, w: float, p: float) -> float:
    return float(gst(np.array([sigma_y]), lam, w, p)[0])


def shrink_spectrum(S: np.ndarray, params: ShrinkParams) -> tuple:
    """Shrunk singular values and the weights used, keeping the leading n untouched."""
    k = len(S)
    params.validate(k)
    if params.weights is None:
        weights = 1.0 / (S + params.weight_floor)
    else:
        weights = np.asarray(params.weights, dtype=float)
    out = S.copy()
    n = params.n
    if n < k:
        out[n:] = gst(S[n:], params.lam, weights[n:], params.p)
    return out, weights


def pssv_wsp_shrink(Y: QuaternionMatrix, params: ShrinkParams) -> QuaternionMatrix:
    return pssv_wsp_shrink_with_spectrum(Y, params)[0]


def pssv_wsp_shrink_with_spectrum(Y: QuaternionMatrix, params: ShrinkParams) -> tuple:
    """Shrink Y and also return (shrunk values, weights) for objective bookkeeping."""
    k = min(Y.shape)
    params.validate(k)
    decomposition = qsvd(Y)
    if params.n >= k:
        _, weights = shrink_spectrum(decomposition.S, params)
        return Y, decomposition.S, weights
    shrunk, weights = shrink_spectrum(decomposition.S, params)
    return decomposition.reconstruct(shrunk), shrunk, weights


def soft_threshold_columns(Y: QuaternionMatrix, tau: float) -> QuaternionMatrix:
    """Scale each column by max(||col||_1 - tau, 0) / ||col||_1, the l1 norm over entry moduli."""
    if tau < 0:
        raise ShrinkDomainError("column threshold must be non-negative", tau)
    l1 = Y.modulus().sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        factors = np.where(l1 > 0, np.maximum(l1 - tau, 0.0) / l1, 0.0)
    return Y.scale_columns(factors)

