"""
No-reference and reference-based fusion quality metrics.

All metrics work on 8-bit luma: colour rasters are reduced with BT.601
weights and rounded, grayscale rasters are used as they are.
"""
import csv
from dataclasses import astuple, dataclass, fields
from typing import Iterable, List, Sequence

import numpy as np
from scipy import ndimage

from qivif.exceptions import DimensionMismatchError
from qivif.imgcodec import RasterImage
from qivif.utils.atomic import atomic_write

LUMA_WEIGHTS = (0.299, 0.587, 0.114)
LEVELS = 256

# Edge preservation constants.
GAMMA_G, KAPPA_G, SIGMA_G = 0.9994, -15.0, 0.5
GAMMA_A, KAPPA_A, SIGMA_A = 0.9879, -22.0, 0.8
EDGE_EXPONENT = 1.0

SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = np.array([[1.0, 2.0, 1.0], [0.0, 0.0, 0.0], [-1.0, -2.0, -1.0]])


@dataclass(frozen=True)
class MetricReport:
    """Columns in reporting order."""

    sd: float
    sf: float
    ag: float
    mi: float
    en: float
    qabf: float

    @classmethod
    def columns(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def as_row(self) -> List[float]:
        return list(astuple(self))

    @classmethod
    def mean(cls, reports: Sequence["MetricReport"]) -> "MetricReport":
        values = np.mean([r.as_row() for r in reports], axis=0)
        return cls(*(float(v) for v in values))


def luma(img: RasterImage) -> np.ndarray:
    """8-bit luma as float64."""
    pixels = img.to_uint8().astype(np.float64)
    if img.channels == 1:
        return pixels[:, :, 0]
    y = pixels @ np.array(LUMA_WEIGHTS)
    return np.clip(np.floor(y + 0.5), 0, 255)


def entropy(gray: np.ndarray) -> float:
    hist = np.bincount(gray.astype(np.int64).ravel(), minlength=LEVELS).astype(float)
    p = hist[hist > 0] / hist.sum()
    return float(-np.sum(p * np.log2(p)))


def standard_deviation(gray: np.ndarray) -> float:
    return float(np.std(gray))


def average_gradient(gray: np.ndarray) -> float:
    """Mean over interior pixels of sqrt((gx^2 + gy^2) / 2), forward differences."""
    if min(gray.shape) < 2:
        return 0.0
    gx = gray[:-1, 1:] - gray[:-1, :-1]
    gy = gray[1:, :-1] - gray[:-1, :-1]
    return float(np.mean(np.sqrt((gx**2 + gy**2) / 2.0)))


def spatial_frequency(gray: np.ndarray) -> float:
    rf2 = np.mean((gray[:, 1:] - gray[:, :-1]) ** 2) if gray.shape[1] > 1 else 0.0
    cf2 = np.mean((gray[1:, :] - gray[:-1, :]) ** 2) if gray.shape[0] > 1 else 0.0
    return float(np.sqrt(rf2 + cf2))


def mutual_information(a: np.ndarray, b: np.ndarray) -> float:
    joint, _, _ = np.histogram2d(
        a.ravel(), b.ravel(), bins=LEVELS, range=[[0, LEVELS], [0, LEVELS]]
    )
    joint /= joint.sum()
    pa = joint.sum(axis=1, keepdims=True)
    pb = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float(np.sum(joint[nz] * np.log2(joint[nz] / (pa @ pb)[nz])))


def _edges(gray: np.ndarray) -> tuple:
    sx = ndimage.correlate(gray, SOBEL_X, mode="reflect")
    sy = ndimage.correlate(gray, SOBEL_Y, mode="reflect")
    strength = np.hypot(sx, sy)
    with np.errstate(divide="ignore", invalid="ignore"):
        angle = np.where(sx == 0, np.pi / 2, np.arctan(sy / sx))
    return strength, angle


def _edge_preservation(g_src, a_src, g_fused, a_fused) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(
            g_src > g_fused,
            g_fused / g_src,
            np.where(g_src == g_fused, 1.0, g_src / g_fused),
        )
    a = 1.0 - np.abs(a_src - a_fused) / (np.pi / 2)
    qg = GAMMA_G / (1.0 + np.exp(KAPPA_G * (g - SIGMA_G)))
    qa = GAMMA_A / (1.0 + np.exp(KAPPA_A * (a - SIGMA_A)))
    return qg * qa


def qabf(fused: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Gradient-based edge preservation of sources a and b in the fused image."""
    g_f, a_f = _edges(fused)
    g_a, a_a = _edges(a)
    g_b, a_b = _edges(b)
    q_af = _edge_preservation(g_a, a_a, g_f, a_f)
    q_bf = _edge_preservation(g_b, a_b, g_f, a_f)
    w_a = g_a**EDGE_EXPONENT
    w_b = g_b**EDGE_EXPONENT
    total = np.sum(w_a + w_b)
    if total == 0:
        return 0.0
    return float(np.sum(q_af * w_a + q_bf * w_b) / total)


def compute_metrics(fused: RasterImage, visible: RasterImage, infrared: RasterImage) -> MetricReport:
    if not (fused.shape == visible.shape == infrared.shape):
        raise DimensionMismatchError(
            "metric inputs differ in size", (fused.shape, visible.shape, infrared.shape)
        )
    f, v, r = luma(fused), luma(visible), luma(infrared)
    return MetricReport(
        sd=standard_deviation(f),
        sf=spatial_frequency(f),
        ag=average_gradient(f),
        mi=mutual_information(f, v) + mutual_information(f, r),
        en=entropy(f),
        qabf=qabf(f, v, r),
    )


def write_metrics_csv(path, rows: Iterable[tuple], mean_row: bool = True, id_column: str = "image_id") -> None:
    """
    Write `(row_id, MetricReport)` pairs with six decimals, in the given
    order, plus a trailing mean row when there is at least one row.
    """
    rows = list(rows)

    def _write(fh):
        writer = csv.writer(fh)
        writer.writerow([id_column] + MetricReport.columns())
        for row_id, report in rows:
            writer.writerow([row_id] + [f"{v:.6f}" for v in report.as_row()])
        if mean_row and rows:
            mean = MetricReport.mean([report for _, report in rows])
            writer.writerow(["mean"] + [f"{v:.6f}" for v in mean.as_row()])

    atomic_write(path, _write)
