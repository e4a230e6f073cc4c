"""Deterministic resampling kernels.

Bicubic downscale (Keys kernel, a = -0.5, antialiased) synthesizes LR images
from HR ground truth; bilinear upscale produces the linear SR reference the
informativeness metric compares against. Both use half-pixel-center
alignment and clamp-to-edge borders, and both preserve constant images.

The bilinear path is implemented in integer arithmetic: with an integer
scale s and half-pixel centers every interpolation weight is a multiple of
1/(2s), so sample values are exact rationals with denominator (2s)^2. The
public upscale converts those to float32; the scoring pipeline consumes the
exact fixed-point form directly.
"""

from __future__ import annotations

import numpy as np

from .imagecore import FloatRaster, Raster, quantize_to_u8
from .integral import FIXED_POINT_SCALE

SCALE_FACTORS = (2, 3, 4)


def validate_scale(s: int) -> int:
    if s not in SCALE_FACTORS:
        raise ValueError(f"scale must be one of {SCALE_FACTORS}, got {s}")
    return s


def crop_to_multiple(img: Raster, s: int) -> Raster:
    """Top-left sub-image whose sides are the largest multiples of s."""
    validate_scale(s)
    if img.width < s or img.height < s:
        raise ValueError(
            f"image {img.width}x{img.height} smaller than scale factor {s}"
        )
    h = img.height - img.height % s
    w = img.width - img.width % s
    if h == img.height and w == img.width:
        return img
    return Raster(img.data[:h, :w])


def keys_kernel(u: np.ndarray) -> np.ndarray:
    """Keys cubic convolution kernel with a = -0.5, support |u| < 2."""
    a = -0.5
    x = np.abs(np.asarray(u, dtype=np.float64))
    out = np.zeros_like(x)
    near = x <= 1.0
    out[near] = (a + 2.0) * x[near] ** 3 - (a + 3.0) * x[near] ** 2 + 1.0
    far = (x > 1.0) & (x < 2.0)
    out[far] = a * (x[far] ** 3 - 5.0 * x[far] ** 2 + 8.0 * x[far] - 4.0)
    return out


def _bicubic_down_taps(s: int):
    """Tap offsets and normalized weights shared by every output sample.

    Output o samples input at center c = o*s + (s-1)/2; the antialiased
    kernel covers |j - c| <= 2s, so the offset pattern (and hence the weight
    vector) is identical for all o.
    """
    half = (s - 1) / 2.0
    m_lo = int(np.ceil(half - 2 * s))
    m_hi = int(np.floor(half + 2 * s))
    offsets = np.arange(m_lo, m_hi + 1)
    weights = keys_kernel((offsets - half) / s) / s
    weights = weights / weights.sum()
    return offsets, weights


def _downscale_axis(arr: np.ndarray, s: int) -> np.ndarray:
    """Antialiased bicubic decimation along axis 0, float64 in, float64 out."""
    n_in = arr.shape[0]
    n_out = n_in // s
    offsets, weights = _bicubic_down_taps(s)
    pad_lo = max(0, -int(offsets[0]))
    pad_hi = max(0, int(offsets[-1]) - (s - 1))
    pad_width = [(pad_lo, pad_hi)] + [(0, 0)] * (arr.ndim - 1)
    padded = np.pad(arr, pad_width, mode="edge")
    out = np.zeros((n_out,) + arr.shape[1:], dtype=np.float64)
    for m, w in zip(offsets, weights):
        start = pad_lo + int(m)
        out += w * padded[start : start + n_out * s : s]
    return out


def bicubic_downscale(hr: Raster, s: int) -> Raster:
    """Downscale by an integer factor with the antialiased Keys kernel.

    Args:
        hr: source raster; width and height must be divisible by s.
        s: scale factor in {2, 3, 4}.

    Returns:
        Raster of size (width/s, height/s), clamped and rounded half away
        from zero.
    """
    validate_scale(s)
    if hr.width % s or hr.height % s:
        raise ValueError(
            f"dimensions not divisible by scale: {hr.width}x{hr.height} at s={s}"
        )
    work = hr.data.astype(np.float64)
    work = _downscale_axis(work, s)
    work = np.moveaxis(_downscale_axis(np.moveaxis(work, 1, 0), s), 0, 1)
    return Raster(quantize_to_u8(work))


def _lerp_axis_int(arr: np.ndarray, s: int) -> np.ndarray:
    """Bilinear upscale along axis 0 with integer weights summing to 2s.

    Output o = s*i + p samples the source at i + (2p+1-s)/(2s); clamp-to-edge
    is realized by a one-sample edge pad. Input int32, output int32 scaled
    by 2s relative to the input.
    """
    n = arr.shape[0]
    pad = np.concatenate([arr[:1], arr, arr[-1:]], axis=0)
    out = np.empty((n * s,) + arr.shape[1:], dtype=np.int32)
    for p in range(s):
        r = 2 * p + 1 - s
        if r >= 0:
            j0, w0, w1 = 0, 2 * s - r, r
        else:
            j0, w0, w1 = -1, -r, 2 * s + r
        t0 = pad[1 + j0 : 1 + j0 + n]
        t1 = pad[2 + j0 : 2 + j0 + n]
        if w1 == 0:
            out[p::s] = w0 * t0
        else:
            out[p::s] = w0 * t0 + w1 * t1
    return out


def _bilinear_upscale_int(lr: Raster, s: int) -> np.ndarray:
    """Exact bilinear upscale; int32 values scaled by (2s)^2."""
    work = lr.data.astype(np.int32)
    work = _lerp_axis_int(work, s)
    work = np.moveaxis(_lerp_axis_int(np.moveaxis(work, 1, 0), s), 0, 1)
    return work


def bilinear_upscale(lr: Raster, s: int) -> FloatRaster:
    """Upscale by an integer factor with half-pixel-center bilinear weights.

    No quantization is applied: the result keeps real precision so the
    informativeness metric sees unrounded SR values.

    Args:
        lr: source raster.
        s: scale factor in {2, 3, 4}.

    Returns:
        FloatRaster of size (width*s, height*s).
    """
    validate_scale(s)
    scaled = _bilinear_upscale_int(lr, s)
    denom = float((2 * s) ** 2)
    return FloatRaster((scaled.astype(np.float64) / denom).astype(np.float32))


def bilinear_upscale_fixed_point(lr: Raster, s: int) -> np.ndarray:
    """Bilinear-upscaled samples on the 2^-16 fixed-point grid, int32.

    Values are round(v * 65536) of the exact rational bilinear result, i.e.
    the fixed-point form the integral-image scorer integrates. Rounding is
    half away from zero (everything is nonnegative here, so half up).
    """
    validate_scale(s)
    scaled = _bilinear_upscale_int(lr, s)
    denom = (2 * s) ** 2
    if FIXED_POINT_SCALE % denom == 0:
        return scaled * np.int32(FIXED_POINT_SCALE // denom)
    wide = scaled.astype(np.int64) * FIXED_POINT_SCALE
    return ((wide + denom // 2) // denom).astype(np.int32)
