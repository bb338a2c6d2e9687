"""
Lighting suppression.

Splits an encoded image L into a lighting-suppressed layer I, which keeps
the large gradients of L, and a sparse gradient field G of the glow. The
augmented Lagrangian alternates an FFT solve for I, a column soft-threshold
for G, and a multiplier step, with a geometrically growing penalty.
"""
import warnings
from dataclasses import dataclass

import numpy as np

from qivif.config import Config
from qivif.exceptions import ConvergenceWarning, DimensionMismatchError, ShrinkDomainError
from qivif.imgcodec import intensity
from qivif.models.params import QlsParams
from qivif.models.proxops import soft_threshold_columns
from qivif.models.trace import SolverTrace, relative_change
from qivif.quaternion.algebra import QuaternionMatrix
from qivif.quaternion.spectral import apply_filter, filter_spectrum, gradient, qfft

config = Config()

SPECTRAL_EPS = 1e-8


@dataclass(frozen=True)
class QlsResult:
    I: QuaternionMatrix
    # Glow gradient field, (x, y).
    G: tuple
    # Suppressed layer after the intensity projection, before normalisation.
    unnormalized: QuaternionMatrix
    trace: SolverTrace

    def __iter__(self):
        return iter((self.I, self.G))


def hard_shrink(X: QuaternionMatrix, tau: float) -> QuaternionMatrix:
    """Zero every entry whose modulus is at most tau."""
    if tau < 0:
        raise ShrinkDomainError("hard threshold must be non-negative", tau)
    return X * (X.modulus() > tau).astype(float)


def project_intensity(I: QuaternionMatrix, L: QuaternionMatrix) -> QuaternionMatrix:
    """
    Rescale the imaginary triple pixel-wise so that
    0 <= intensity(I) <= intensity(L).
    """
    t = intensity(I, clamp=False)
    cap = np.maximum(intensity(L, clamp=False), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(t > cap, cap / t, 1.0)
    factor = np.where(t < 0, 0.0, factor)
    return I * factor


def normalize_intensity(I: QuaternionMatrix) -> QuaternionMatrix:
    """Map intensity affinely onto [0, 1] by scaling each pixel's imaginary triple."""
    t = intensity(I, clamp=False)
    lo, hi = float(t.min()), float(t.max())
    if hi - lo <= 1e-12:
        return I
    target = (t - lo) / (hi - lo)
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(t > 0, target / t, 0.0)
    return I * factor


def update_lighting_layer(
    L: QuaternionMatrix,
    G: tuple,
    lam: float,
    mu2: float,
    eps: float = SPECTRAL_EPS,
    constrain: bool = True,
) -> QuaternionMatrix:
    """
    Minimise lam*||lap(I) - lap(L)||^2 + mu2/2 * ||grad(I) - G||^2 in the
    Fourier domain. The DC term, which the quadratic leaves free, is taken
    from L. With `constrain` the intensity projection is applied afterwards.
    """
    gx, gy = G
    if gx.shape != L.shape or gy.shape != L.shape:
        raise DimensionMismatchError("gradient field does not match the image", (gx.shape, L.shape))
    shape = L.shape
    fx = filter_spectrum("grad1_x", shape)
    fy = filter_spectrum("grad1_y", shape)
    flap2 = np.abs(filter_spectrum("laplacian", shape)) ** 2

    F_L = qfft(L).components
    numerator = 2.0 * lam * flap2 * F_L + mu2 * (
        np.conj(fx) * qfft(gx).components + np.conj(fy) * qfft(gy).components
    )
    denominator = mu2 * (np.abs(fx) ** 2 + np.abs(fy) ** 2) + 2.0 * lam * flap2 + eps
    F_I = numerator / denominator
    F_I[:, 0, 0] = F_L[:, 0, 0]

    I = qfft(QuaternionMatrix(F_I), inverse=True)
    if I.is_spectral:
        I = QuaternionMatrix(I.components.real)
    return project_intensity(I, L) if constrain else I


def lighting_objective(I: QuaternionMatrix, L: QuaternionMatrix, G: tuple, lam: float, mu2: float) -> float:
    """The quadratic `update_lighting_layer` minimises."""
    d = apply_filter(I - L, "laplacian")
    gx, gy = gradient(I)
    return lam * d.norm() ** 2 + 0.5 * mu2 * ((gx - G[0]).norm() ** 2 + (gy - G[1]).norm() ** 2)


def _relative_tau(L: QuaternionMatrix, params: QlsParams) -> float:
    if params.tau is not None:
        return params.tau
    gx, gy = gradient(L)
    return params.tau_relative * max(gx.norm("max"), gy.norm("max"))


def _run_quaternion(L: QuaternionMatrix, params: QlsParams, label: str) -> QlsResult:
    tau = _relative_tau(L, params)
    zeros = QuaternionMatrix.zeros(*L.shape)
    I = L
    G = (zeros, zeros)
    Y = (zeros, zeros)
    mu = params.mu2_init
    trace = SolverTrace(solver=f"qls[{label}]")

    for t in range(params.max_iter):
        target = (G[0] + Y[0] / mu, G[1] + Y[1] / mu)
        I_new = update_lighting_layer(L, target, params.lam, mu)

        hx, hy = (hard_shrink(g, tau) for g in gradient(I_new))
        G = (
            soft_threshold_columns(hx - Y[0] / mu, 1.0 / mu),
            soft_threshold_columns(hy - Y[1] / mu, 1.0 / mu),
        )
        rx, ry = G[0] - hx, G[1] - hy
        Y = (Y[0] + rx * mu, Y[1] + ry * mu)

        change = relative_change(I_new, I)
        residual = float(np.hypot(rx.norm(), ry.norm()))
        objective = (
            G[0].norm("l1")
            + G[1].norm("l1")
            + params.lam * apply_filter(I_new - L, "laplacian").norm() ** 2
        )
        trace.record(change, residual=residual, objective=objective, penalty=mu)
        config.log("QLS", f"{label} iter {t + 1} change={change:.3e} residual={residual:.3e}")

        mu = min(params.mu2_cap, mu * params.mu2_growth)
        I = I_new
        if change < params.tol:
            trace.converged = True
            break

    if not trace.converged:
        warnings.warn(
            f"lighting suppression ({label}) stopped after {params.max_iter} iterations "
            f"with relative change {trace.relative_change[-1]:.3e}",
            ConvergenceWarning,
        )
    return QlsResult(I=normalize_intensity(I), G=G, unnormalized=I, trace=trace)


def _run_channelwise(L: QuaternionMatrix, params: QlsParams, label: str) -> QlsResult:
    """Suppress each colour channel on its own, treating it as a gray image."""
    layers, fields_x, fields_y, raws = [], [], [], []
    trace = SolverTrace(solver=f"qls[{label}/channelwise]", converged=True)
    for c in range(1, 4):
        plane = L.components[c]
        result = _run_quaternion(
            QuaternionMatrix.from_pure(plane, plane, plane), params, f"{label}/{'ijk'[c - 1]}"
        )
        layers.append(result.I.i)
        raws.append(result.unnormalized.i)
        fields_x.append(result.G[0].i)
        fields_y.append(result.G[1].i)
        trace.converged &= result.trace.converged
        for row in result.trace.rows():
            trace.record(*row[1:])

    def _pure(planes):
        return QuaternionMatrix.from_pure(*planes)

    return QlsResult(
        I=_pure(layers), G=(_pure(fields_x), _pure(fields_y)), unnormalized=_pure(raws), trace=trace
    )


def run_qls(L: QuaternionMatrix, params: QlsParams = QlsParams(), label: str = "image") -> QlsResult:
    if params.domain == "channelwise":
        return _run_channelwise(L, params, label)
    return _run_quaternion(L, params, label)
