"""
PNG rasters and their quaternion encodings.

Pixels map to pure quaternions: a colour pixel (r, g, b) becomes
r i + g j + b k, a grayscale pixel v becomes v i + v j + v k.
"""
from __future__ import annotations

import os
import warnings
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from qivif.exceptions import (
    AlphaChannelWarning,
    DimensionMismatchError,
    ImageIOError,
    MissingInputError,
)
from qivif.quaternion.algebra import QuaternionMatrix
from qivif.utils.atomic import atomic_write

# H x W reals in [0, 1].
IntensityMap = np.ndarray

_EIGHT_BIT_MODES = {"L", "RGB", "RGBA", "LA", "P", "1", "CMYK", "YCbCr"}


@dataclass(frozen=True)
class RasterImage:
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim == 2:
            samples = samples[:, :, None]
        object.__setattr__(self, "samples", samples)
        self.validate()

    def validate(self):
        if self.samples.ndim != 3 or self.samples.shape[2] not in (1, 3):
            raise ValueError(f"raster must be H x W x 1 or H x W x 3, got {self.samples.shape}")
        if self.samples.shape[0] == 0 or self.samples.shape[1] == 0:
            raise ValueError("raster must not be empty")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("raster samples must be finite")
        if self.samples.min() < 0.0 or self.samples.max() > 1.0:
            raise ValueError("raster samples must lie in [0, 1]")

    @classmethod
    def from_uint8(cls, pixels: np.ndarray) -> "RasterImage":
        return cls(np.asarray(pixels, dtype=np.float64) / 255.0)

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def channels(self) -> int:
        return self.samples.shape[2]

    @property
    def shape(self) -> tuple:
        return self.samples.shape[:2]

    def to_uint8(self) -> np.ndarray:
        return quantize(self.samples)


def quantize(values: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] and round half up onto 8 bits."""
    return np.floor(np.clip(values, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def encode_visible(img: RasterImage) -> QuaternionMatrix:
    if img.channels != 3:
        raise ValueError(f"visible raster needs 3 channels, got {img.channels}")
    s = img.samples
    return QuaternionMatrix.from_pure(s[:, :, 0], s[:, :, 1], s[:, :, 2])


def encode_infrared(img: RasterImage) -> QuaternionMatrix:
    if img.channels != 1:
        raise ValueError(f"infrared raster needs 1 channel, got {img.channels}")
    v = img.samples[:, :, 0]
    return QuaternionMatrix.from_pure(v, v, v)


def intensity(A: QuaternionMatrix, clamp: bool = True) -> IntensityMap:
    """Mean of the three imaginary components, clamped to [0, 1] for constraint checks."""
    t = A.imaginary.mean(axis=0)
    return np.clip(t, 0.0, 1.0) if clamp else t


def decode(A: QuaternionMatrix) -> RasterImage:
    if A.is_spectral:
        raise TypeError("cannot decode a spectral matrix")
    rgb = np.moveaxis(A.imaginary, 0, -1)
    return RasterImage.from_uint8(quantize(rgb))


def signed_visual(A: QuaternionMatrix) -> RasterImage:
    """Map a signed matrix (such as a detail layer) to 0.5 +/- half its peak modulus."""
    peak = A.norm("max")
    scale = 0.5 / peak if peak > 0 else 0.0
    return decode(QuaternionMatrix(0.5 + A.components * scale))


# ----------------------------------------------------------------------
# PNG I/O
# ----------------------------------------------------------------------


def read_png(path, mode: str = "rgb") -> RasterImage:
    """Read an 8-bit PNG as a 3-channel (mode "rgb") or 1-channel (mode "gray") raster."""
    if mode not in ("rgb", "gray"):
        raise ValueError(f"unknown raster mode: {mode}")
    path = os.fspath(path)
    if not os.path.exists(path):
        raise MissingInputError("input image not found", path)
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode not in _EIGHT_BIT_MODES:
                raise ImageIOError(f"unsupported raster mode {img.mode}", path)
            if img.mode == "P" and "transparency" in img.info:
                img = img.convert("RGBA")
            if img.mode in ("RGBA", "LA"):
                warnings.warn(f"alpha channel dropped: {path}", AlphaChannelWarning)
            pixels = np.asarray(img.convert("RGB" if mode == "rgb" else "L"))
    except ImageIOError:
        raise
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise ImageIOError("could not read image", f"{path} ({exc})") from exc
    return RasterImage.from_uint8(pixels)


def write_png(img: RasterImage, path) -> None:
    pixels = img.to_uint8()
    if img.channels == 1:
        pixels = pixels[:, :, 0]
    try:
        atomic_write(path, lambda fh: Image.fromarray(pixels).save(fh, format="PNG"), binary=True)
    except OSError as exc:
        raise ImageIOError("could not write image", f"{path} ({exc})") from exc


def check_pair(visible: RasterImage, infrared: RasterImage) -> None:
    if visible.shape != infrared.shape:
        raise DimensionMismatchError(
            "visible and infrared images differ in size", (visible.shape, infrared.shape)
        )
