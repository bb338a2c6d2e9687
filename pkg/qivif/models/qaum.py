import numpy as np

from qivif.config import Config
from qivif.exceptions import DimensionMismatchError
from qivif.imgcodec import intensity
from qivif.models.params import QaumMode
from qivif.quaternion.algebra import QuaternionMatrix

config = Config()


def _min_max(values: np.ndarray) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi - lo <= 0.0:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def gain_maps(I_v: QuaternionMatrix, D_f: QuaternionMatrix, mode: QaumMode) -> tuple:
    """Pointwise gains (for D_f, for D_v): unit in summation mode, ranged in adaptive mode."""
    if mode.mode == "summation":
        ones = np.ones(I_v.shape)
        return ones, ones
    span = mode.g_max - mode.g_min
    lam_f = mode.g_min + span * _min_max(D_f.modulus())
    lam_v = mode.g_min + span * _min_max(intensity(I_v))
    return lam_f, lam_v


def enhance(
    I_v: QuaternionMatrix,
    D_f: QuaternionMatrix,
    D_v: QuaternionMatrix,
    mode: QaumMode = QaumMode(),
) -> QuaternionMatrix:
    """Add infrared and visible detail layers onto the suppressed visible layer."""
    if not (I_v.shape == D_f.shape == D_v.shape):
        raise DimensionMismatchError(
            "enhancement operands differ in shape", (I_v.shape, D_f.shape, D_v.shape)
        )
    lam_f, lam_v = gain_maps(I_v, D_f, mode)
    config.log("QAUM", f"mode={mode.mode} gain range=({lam_f.min():.3f}, {lam_f.max():.3f})")
    return I_v + D_f * lam_f + D_v * lam_v
