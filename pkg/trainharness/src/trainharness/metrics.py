"""Validation metric: Y-channel PSNR with border cropping."""

from __future__ import annotations

import math

import numpy as np

# Studio-swing BT.601, the conventional SR-benchmark luminance.
_LUMA_WEIGHTS = (65.481, 128.553, 24.966)


def luma(arr: np.ndarray) -> np.ndarray:
    """Y plane of an (H, W, C) array; single-channel input passes through."""
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim != 3:
        raise ValueError(f"expected (H, W, C), got shape {a.shape}")
    if a.shape[2] == 1:
        return a[:, :, 0]
    if a.shape[2] != 3:
        raise ValueError(f"expected 1 or 3 channels, got {a.shape[2]}")
    r, g, b = a[:, :, 0], a[:, :, 1], a[:, :, 2]
    return 16.0 + (_LUMA_WEIGHTS[0] * r + _LUMA_WEIGHTS[1] * g + _LUMA_WEIGHTS[2] * b) / 255.0


def eval_psnr_y(sr_image: np.ndarray, hr_image: np.ndarray, border: int = 0) -> float:
    """PSNR between the luminance planes, ignoring `border` pixels per side.

    Returns +inf when the cropped planes are identical.
    """
    sr = np.asarray(sr_image)
    hr = np.asarray(hr_image)
    if sr.shape != hr.shape:
        raise ValueError(f"shape mismatch: {sr.shape} vs {hr.shape}")
    ys = luma(sr)
    yh = luma(hr)
    if border:
        if 2 * border >= min(ys.shape):
            raise ValueError(f"border {border} leaves no pixels for {ys.shape}")
        ys = ys[border:-border, border:-border]
        yh = yh[border:-border, border:-border]
    d = ys - yh
    mse = float(np.mean(d * d))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 * 255.0 / mse)
