"""Image containers, color conversion, and lossless PNG I/O.

All images are numpy-backed: 8-bit rasters for pixel data on disk, float
rasters for intermediate resampled images and score planes. PNG is the only
interchange format (lossless round-trips are required by the exactness
tests downstream).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image


@dataclass(frozen=True)
class Raster:
    """8-bit image, shape (height, width, channels), channels in {1, 3}.

    The backing array is made read-only on construction; Raster values are
    safe to share across threads.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.dtype != np.uint8:
            raise ValueError(f"Raster data must be uint8, got {arr.dtype}")
        if arr.ndim != 3:
            raise ValueError(f"Raster data must be (H, W, C), got shape {arr.shape}")
        h, w, c = arr.shape
        if h < 1 or w < 1:
            raise ValueError(f"Raster dimensions must be >= 1, got {w}x{h}")
        if c not in (1, 3):
            raise ValueError(f"Raster channels must be 1 or 3, got {c}")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class FloatRaster:
    """Real-valued image, float32, shape (height, width, channels).

    Holds intermediate resampled images and score planes. Stored values must
    be finite.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.dtype != np.float32:
            raise ValueError(f"FloatRaster data must be float32, got {arr.dtype}")
        if arr.ndim != 3:
            raise ValueError(f"FloatRaster data must be (H, W, C), got shape {arr.shape}")
        h, w, c = arr.shape
        if h < 1 or w < 1:
            raise ValueError(f"FloatRaster dimensions must be >= 1, got {w}x{h}")
        if c not in (1, 3):
            raise ValueError(f"FloatRaster channels must be 1 or 3, got {c}")
        if not np.isfinite(arr).all():
            raise ValueError("FloatRaster data must be finite (no NaN/Inf)")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


def load_image(path: str) -> Raster:
    """Load an 8-bit, 1- or 3-channel PNG as a Raster.

    Args:
        path: Path to a PNG file.

    Returns:
        Raster with samples bit-identical to the file content.

    Raises:
        FileNotFoundError: if the file does not exist.
        ValueError: for non-PNG files, unsupported bit depth, alpha, palette
            or unsupported channel counts (the message says which).
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"image file not found: {path}")
    with Image.open(path) as img:
        if img.format != "PNG":
            raise ValueError(f"unsupported format {img.format!r} (only PNG): {path}")
        if img.mode in ("I", "I;16", "I;16B", "I;16L", "I;16N"):
            raise ValueError(f"unsupported bit depth (16-bit PNG): {path}")
        if img.mode in ("RGBA", "LA", "PA"):
            raise ValueError(f"alpha channel not supported (mode {img.mode}): {path}")
        if img.mode == "P":
            raise ValueError(f"palette PNG not supported: {path}")
        if img.mode not in ("L", "RGB"):
            raise ValueError(f"unsupported PNG mode {img.mode!r}: {path}")
        arr = np.asarray(img, dtype=np.uint8)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return Raster(arr)


def quantize_to_u8(arr: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255] and round half away from zero to uint8."""
    clipped = np.clip(np.asarray(arr, dtype=np.float64), 0.0, 255.0)
    return np.floor(clipped + 0.5).astype(np.uint8)


def save_image(raster, path: str) -> None:
    """Write a Raster (or FloatRaster, quantized) as a lossless PNG.

    FloatRaster inputs are clamped to [0, 255] and rounded half away from
    zero before writing. The parent directory must exist.
    """
    if isinstance(raster, FloatRaster):
        arr = quantize_to_u8(raster.data)
    elif isinstance(raster, Raster):
        arr = raster.data
    else:
        raise TypeError(f"expected Raster or FloatRaster, got {type(raster).__name__}")
    if arr.shape[2] == 1:
        img = Image.fromarray(arr[:, :, 0], mode="L")
    else:
        img = Image.fromarray(arr, mode="RGB")
    img.save(path, format="PNG")


# Studio-swing BT.601 luma, the convention SR benchmarks score with.
_LUMA_WEIGHTS = (65.481, 128.553, 24.966)


def luma_plane(arr: np.ndarray) -> np.ndarray:
    """BT.601 studio-swing luma of an (H, W, 3) array, float64 (H, W)."""
    a = np.asarray(arr, dtype=np.float64)
    r, g, b = a[:, :, 0], a[:, :, 1], a[:, :, 2]
    return 16.0 + (_LUMA_WEIGHTS[0] * r + _LUMA_WEIGHTS[1] * g + _LUMA_WEIGHTS[2] * b) / 255.0


def rgb_to_luma(raster) -> FloatRaster:
    """Convert a 3-channel raster to its luminance plane.

    Y = 16 + (65.481 R + 128.553 G + 24.966 B) / 255, so 8-bit inputs map
    into [16, 235].

    Args:
        raster: Raster or FloatRaster with channels == 3.

    Returns:
        Single-channel FloatRaster.
    """
    if not isinstance(raster, (Raster, FloatRaster)):
        raise TypeError(f"expected Raster or FloatRaster, got {type(raster).__name__}")
    if raster.channels != 3:
        raise ValueError(f"luma conversion requires 3 channels, got {raster.channels}")
    y = luma_plane(raster.data)
    return FloatRaster(y[:, :, None].astype(np.float32))
