"""
Deterministic synthetic visible/infrared pairs.

The visible frame is a textured colour scene degraded by a glow source, haze
and a warm colour cast; the infrared frame is a dim, smooth background with
a hot target inside a known box. Both are quantised to 8 bits.
"""
import os
from dataclasses import dataclass
from typing import List

import numpy as np

from qivif.imgcodec import RasterImage, quantize, write_png
from qivif.quaternion import QuaternionMatrix
from qivif.utils.atomic import atomic_write


@dataclass(frozen=True)
class SamplePair:
    name: str
    visible: RasterImage
    infrared: RasterImage
    # (row0, row1, col0, col1), half-open.
    target_box: tuple


def _grid(size: int) -> tuple:
    axis = (np.arange(size) + 0.5) / size
    return np.meshgrid(axis, axis, indexing="ij")


def _box(size: int, center: tuple, half: tuple) -> tuple:
    r0 = int(round((center[0] - half[0]) * size))
    r1 = int(round((center[0] + half[0]) * size))
    c0 = int(round((center[1] - half[1]) * size))
    c1 = int(round((center[1] + half[1]) * size))
    return max(r0, 0), min(r1, size), max(c0, 0), min(c1, size)


def synthesize_pair(size: int = 64, seed: int = 7, name: str = "sample") -> SamplePair:
    rng = np.random.default_rng(seed)
    yy, xx = _grid(size)
    target_center = (0.45 + 0.2 * rng.random(), 0.25 + 0.5 * rng.random())
    box = _box(size, target_center, (0.15, 0.10))

    # Visible: texture, a dark structure, glow, haze, colour cast.
    checker = ((np.floor(yy * 8) + np.floor(xx * 8)) % 2).astype(float)
    red = 0.30 + 0.12 * np.sin(2 * np.pi * 6 * xx) + 0.05 * checker
    green = 0.28 + 0.10 * checker + 0.04 * np.cos(2 * np.pi * 3 * yy)
    blue = 0.22 + 0.08 * np.cos(2 * np.pi * 4 * yy) + 0.05 * (1 - checker)
    rgb = np.stack([red, green, blue], axis=-1)
    rgb[size // 8 : size // 3, size // 2 : 7 * size // 8] *= 0.4

    r0, r1, c0, c1 = box
    rgb[r0:r1, c0:c1] = rgb[r0:r1, c0:c1] * 0.8 + 0.03

    glow_center = (0.2 + 0.2 * rng.random(), 0.6 + 0.2 * rng.random())
    glow = np.exp(-((yy - glow_center[0]) ** 2 + (xx - glow_center[1]) ** 2) / (2 * 0.12**2))
    rgb += 0.55 * glow[..., None] * np.array([1.0, 0.8, 0.45])

    rgb = 0.8 * rgb + 0.2 * 0.65
    rgb *= np.array([1.05, 0.97, 0.85])
    rgb += rng.normal(0.0, 0.01, rgb.shape)

    # Infrared: smooth background, a hot target whose silhouette varies from
    # column to column inside the box, and a warm strip.
    ir = 0.18 + 0.08 * yy + 0.03 * np.sin(2 * np.pi * 2 * xx)
    span = r1 - r0
    top = r0 + np.floor(rng.random(c1 - c0) * span * 0.4).astype(int)
    bottom = r1 - np.floor(rng.random(c1 - c0) * span * 0.4).astype(int)
    rows = np.arange(size)[:, None]
    body = (rows >= top) & (rows < bottom)
    hot = 0.85 + 0.05 * np.cos(np.pi * (yy[:, c0:c1] - target_center[0]) * 4)
    ir[:, c0:c1] = np.where(body, hot, ir[:, c0:c1])
    ir[7 * size // 8 :, :] += 0.25
    ir += rng.normal(0.0, 0.005, ir.shape)

    visible = RasterImage.from_uint8(quantize(rgb))
    infrared = RasterImage.from_uint8(quantize(ir))
    return SamplePair(name=name, visible=visible, infrared=infrared, target_box=box)


@dataclass(frozen=True)
class OutlierInstance:
    """Low-rank structure plus a few outlier columns with known support."""

    I: QuaternionMatrix
    Z: QuaternionMatrix
    D: QuaternionMatrix
    support: np.ndarray


def low_rank_with_outliers(
    size: int = 64,
    rank: int = 2,
    outliers: int = 3,
    reserved_rows: int = 16,
    norms: tuple = (1.5, 2.0, 2.5),
    seed: int = 0,
) -> OutlierInstance:
    """
    Pure quaternion Z of the given rank whose outlier columns are zero, plus
    outlier columns in D that live on rows Z never touches, each on its own
    block of rows so the outliers are mutually orthogonal as well.
    """
    if not 1 <= outliers <= reserved_rows < size:
        raise ValueError(f"cannot fit {outliers} outliers in {reserved_rows} of {size} rows")
    rng = np.random.default_rng(seed)
    columns = rng.choice(size, size=outliers, replace=False)
    support = np.zeros(size, dtype=bool)
    support[columns] = True

    left = rng.standard_normal((4, size, rank))
    left[0] = 0.0
    left[:, size - reserved_rows :, :] = 0.0
    right = rng.standard_normal((4, rank, size))
    right[0] = 0.0
    right[:, :, support] = 0.0
    Z = QuaternionMatrix(left) @ QuaternionMatrix(right) * (1.0 / rank)

    D = np.zeros((4, size, size))
    block = reserved_rows // outliers
    for k, column in enumerate(columns):
        start = size - reserved_rows + k * block
        values = rng.standard_normal((3, block))
        D[1:, start : start + block, column] = values * (norms[k % len(norms)] / np.linalg.norm(values))
    D = QuaternionMatrix(D)
    return OutlierInstance(I=Z + D, Z=Z, D=D, support=support)


def sample_pairs(count: int = 3, size: int = 64) -> List[SamplePair]:
    return [synthesize_pair(size=size, seed=7 + 11 * k, name=f"sample_{k:02d}") for k in range(count)]


def write_samples(out_dir, count: int = 3, size: int = 64) -> str:
    """Write PNG pairs and a tab-separated manifest; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    lines = []
    for pair in sample_pairs(count, size):
        vis_name, ir_name = f"{pair.name}_vis.png", f"{pair.name}_ir.png"
        write_png(pair.visible, os.path.join(out_dir, vis_name))
        write_png(pair.infrared, os.path.join(out_dir, ir_name))
        lines.append(f"{vis_name}\t{ir_name}\n")
    manifest = os.path.join(out_dir, "manifest.tsv")
    atomic_write(manifest, lambda fh: fh.writelines(lines))
    return manifest
