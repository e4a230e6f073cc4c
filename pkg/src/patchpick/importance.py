"""Informativeness score maps over all candidate patch anchors.

The primary metric scores each k-by-k HR patch by the PSNR between the HR
pixels and a bilinearly upscaled SR reference: low PSNR means linear
restoration fails there, i.e. the patch is informative for training. The
fast path expands the windowed MSE into three correlation terms

    sum (sr - hr)^2  =  sum hr*hr  -  2 sum hr*sr  +  sum sr*sr

and builds one integral image per term, so every anchor costs O(1) after an
O(H*W) build. The naive path evaluates the same windows by direct per-anchor
summation and acts as the correctness oracle and benchmark baseline.

Exactness: SR samples live on a 2^-16 fixed-point grid (see `integral`), so
all three product planes are integers. Products of scaled samples reach
2^48 per pixel, beyond what a single 64-bit prefix table can accumulate at
2K resolution, so each plane is carried as two 16-bit limbs (value >> 16 and
value & 0xFFFF) with one exact integral per limb. Both paths recombine limb
window sums with identical arithmetic, which makes fast == naive an exact
equality, including the MSE = 0 -> +inf sentinel.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .imagecore import FloatRaster, Raster, luma_plane
from .integral import (
    FIXED_POINT_SCALE,
    IntegralImage,
    build_integral,
    fixed_point_quantize,
)
from .resample import bilinear_upscale, bilinear_upscale_fixed_point, validate_scale

# Largest supported patch size; keeps the limb-recombination arithmetic
# inside signed 64-bit range.
MAX_PATCH_SIZE = 8192

# Largest supported plane size for the fast path (limb integrals of
# squared fixed-point samples stay below 2^63).
_MAX_PLANE_PIXELS = 1 << 29

PEAK_VALUE = 255.0


class MetricKind(str, Enum):
    """Importance metrics; the tag also fixes ranking polarity."""

    PSNR_BILINEAR = "psnr-bilinear"
    STD0 = "std0"
    STD1 = "std1"
    STD2 = "std2"
    SOBEL = "sobel"
    LAPLACIAN = "laplacian"

    @property
    def higher_is_informative(self) -> bool:
        # PSNR: low = hard to restore linearly = informative. Everything
        # else measures texture/edges where high = informative.
        return self is not MetricKind.PSNR_BILINEAR

    @property
    def code(self) -> int:
        return _METRIC_CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "MetricKind":
        for kind, c in _METRIC_CODES.items():
            if c == code:
                return kind
        raise ValueError(f"unknown metric code {code}")


_METRIC_CODES = {
    MetricKind.PSNR_BILINEAR: 0,
    MetricKind.STD0: 1,
    MetricKind.STD1: 2,
    MetricKind.STD2: 3,
    MetricKind.SOBEL: 4,
    MetricKind.LAPLACIAN: 5,
}


@dataclass(frozen=True)
class PatchGeometry:
    """HR patch size, anchor stride, and scale factor.

    k must be divisible by scale so the LR crop k/scale is integral. stride
    defaults to scale, which keeps anchors on integer LR coordinates.
    """

    k: int
    scale: int
    stride: int | None = None

    def __post_init__(self):
        validate_scale(self.scale)
        if self.k < 1:
            raise ValueError(f"patch size must be >= 1, got {self.k}")
        if self.k % self.scale:
            raise ValueError(f"patch size {self.k} not divisible by scale {self.scale}")
        if self.k > MAX_PATCH_SIZE:
            raise ValueError(f"patch size {self.k} exceeds supported maximum {MAX_PATCH_SIZE}")
        if self.stride is None:
            object.__setattr__(self, "stride", self.scale)
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")

    def grid_shape(self, height: int, width: int) -> tuple[int, int]:
        """Anchor grid (rows, cols) for an HR image of the given size."""
        if self.k > height or self.k > width:
            raise ValueError(
                f"patch size {self.k} exceeds image size {width}x{height}"
            )
        return (
            (height - self.k) // self.stride + 1,
            (width - self.k) // self.stride + 1,
        )


@dataclass(frozen=True)
class ImportanceMap:
    """Per-anchor scores on the anchor grid, float32.

    Entry (r, c) scores the patch anchored at HR pixel (r*stride, c*stride).
    Scores are finite except the +inf sentinel (MSE = 0: nothing for a
    network to learn there, so it ranks least informative).
    """

    scores: np.ndarray
    geometry: PatchGeometry
    metric: MetricKind = MetricKind.PSNR_BILINEAR

    def __post_init__(self):
        arr = np.asarray(self.scores)
        if arr.dtype != np.float32 or arr.ndim != 2:
            raise ValueError(
                f"scores must be a 2-D float32 array, got {arr.dtype} {arr.shape}"
            )
        if not (np.isfinite(arr) | np.isposinf(arr)).all():
            raise ValueError("scores must be finite or +inf")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "scores", arr)

    @property
    def rows(self) -> int:
        return self.scores.shape[0]

    @property
    def cols(self) -> int:
        return self.scores.shape[1]


def patch_mse(sr_patch: np.ndarray, hr_patch: np.ndarray) -> float:
    """Mean squared error between two patches, averaged over all samples."""
    a = np.asarray(sr_patch, dtype=np.float64)
    b = np.asarray(hr_patch, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.mean(d * d))


def mse_to_psnr(mse: float) -> float:
    """10 * log10(255^2 / mse); mse == 0 maps to the +inf sentinel."""
    if mse < 0:
        raise ValueError(f"mse must be >= 0, got {mse}")
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(PEAK_VALUE * PEAK_VALUE / mse)


# ---------------------------------------------------------------------------
# Shared fixed-point plane preparation (fast path and naive oracle)
# ---------------------------------------------------------------------------


def _prepare_planes(hr: Raster, lr: Raster, geom: PatchGeometry, on_luma: bool):
    """Quantized (H, W, C) int32 planes a (HR side) and b (SR side).

    Returns (a, b, channels, luma_mode): in RGB mode a carries raw 8-bit
    values (scale 1) and b fixed-point SR samples (scale 2^16); in luma mode
    both carry fixed-point luminance (scale 2^16).
    """
    s = geom.scale
    if hr.height != s * lr.height or hr.width != s * lr.width:
        raise ValueError(
            f"dimension mismatch: hr {hr.width}x{hr.height} is not {s}x "
            f"lr {lr.width}x{lr.height}"
        )
    if hr.channels != lr.channels:
        raise ValueError(
            f"channel mismatch: hr has {hr.channels}, lr has {lr.channels}"
        )
    if not on_luma:
        a = hr.data.astype(np.int32)
        b = bilinear_upscale_fixed_point(lr, s)
        return a, b, hr.channels, False
    if hr.channels == 1:
        # Single channel: identity stands in for the luma transform, so the
        # HR side is exact (value * 2^16) and the SR side is the fixed-point
        # bilinear output itself.
        a = hr.data.astype(np.int32) * np.int32(FIXED_POINT_SCALE)
        b = bilinear_upscale_fixed_point(lr, s)
        return a, b, 1, True
    ya = fixed_point_quantize(luma_plane(hr.data)).astype(np.int32)
    sr = bilinear_upscale(lr, s)
    yb = fixed_point_quantize(luma_plane(sr.data)).astype(np.int32)
    return ya[:, :, None], yb[:, :, None], 1, True


def _limb_planes(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Channel-summed product planes split into 16-bit limbs, (6, H, W) int64.

    Order: hh_mid, hh_low, hs_mid, hs_low, ss_mid, ss_low.
    """
    a64 = a.astype(np.int64)
    b64 = b.astype(np.int64)
    p_hh = (a64 * a64).sum(axis=2)
    p_hs = (a64 * b64).sum(axis=2)
    p_ss = (b64 * b64).sum(axis=2)
    mask = np.int64(0xFFFF)
    return np.stack(
        [p_hh >> 16, p_hh & mask, p_hs >> 16, p_hs & mask, p_ss >> 16, p_ss & mask]
    )


def _build_tables_impl(a, b, t_hh_m, t_hh_l, t_hs_m, t_hs_l, t_ss_m, t_ss_l):
    # Single fused pass: per-pixel channel-summed products, 16-bit limb
    # split, and 2-D exclusive prefix sums into the six tables.
    h, w, c = a.shape
    mask = np.int64(0xFFFF)
    for i in range(h):
        r0 = np.int64(0)
        r1 = np.int64(0)
        r2 = np.int64(0)
        r3 = np.int64(0)
        r4 = np.int64(0)
        r5 = np.int64(0)
        for j in range(w):
            hh = np.int64(0)
            hs = np.int64(0)
            ss = np.int64(0)
            for ch in range(c):
                av = np.int64(a[i, j, ch])
                bv = np.int64(b[i, j, ch])
                hh += av * av
                hs += av * bv
                ss += bv * bv
            r0 += hh >> 16
            r1 += hh & mask
            r2 += hs >> 16
            r3 += hs & mask
            r4 += ss >> 16
            r5 += ss & mask
            t_hh_m[i + 1, j + 1] = t_hh_m[i, j + 1] + r0
            t_hh_l[i + 1, j + 1] = t_hh_l[i, j + 1] + r1
            t_hs_m[i + 1, j + 1] = t_hs_m[i, j + 1] + r2
            t_hs_l[i + 1, j + 1] = t_hs_l[i, j + 1] + r3
            t_ss_m[i + 1, j + 1] = t_ss_m[i, j + 1] + r4
            t_ss_l[i + 1, j + 1] = t_ss_l[i, j + 1] + r5


_TABLE_BUILDER = None


def _get_table_builder():
    global _TABLE_BUILDER
    if _TABLE_BUILDER is None:
        from numba import njit

        _TABLE_BUILDER = njit(cache=True)(_build_tables_impl)
    return _TABLE_BUILDER


def _combine_window_sums(w_hh_m, w_hh_l, w_hs_m, w_hs_l, w_ss_m, w_ss_l, luma_mode):
    """Exact numerator sum((sr - hr)^2) in units of 2^-32, as float64.

    In RGB mode the HR plane carries scale 1 and the SR plane 2^16, so
    num = 2^32*hh - 2^17*hs + ss; in luma mode both carry 2^16 and
    num = hh - 2*hs + ss. The 16-bit-limb regrouping keeps every
    intermediate inside int64; the one float64 rounding at the end is
    shared by the fast and naive paths.
    """
    if luma_mode:
        inner = w_ss_m - 2 * w_hs_m + w_hh_m
        low = w_ss_l - 2 * w_hs_l + w_hh_l
    else:
        inner = (
            (w_hh_m << 32)
            + (w_hh_l << 16)
            - (w_hs_m << 17)
            - 2 * w_hs_l
            + w_ss_m
        )
        low = w_ss_l
    return 65536.0 * np.asarray(inner, dtype=np.float64) + np.asarray(low, dtype=np.float64)


def _psnr_from_num(num: np.ndarray, channels: int, k: int) -> np.ndarray:
    denom = float(channels) * float(k) * float(k) * float(FIXED_POINT_SCALE) ** 2
    scores = np.full(num.shape, np.inf, dtype=np.float64)
    pos = num > 0.0
    scores[pos] = 10.0 * np.log10(PEAK_VALUE * PEAK_VALUE * denom / num[pos])
    return scores.astype(np.float32)


def score_map_fast(
    hr: Raster, lr: Raster, geom: PatchGeometry, on_luma: bool = False
) -> ImportanceMap:
    """Score every anchor via the three-term integral-image expansion.

    Builds the SR reference once for the whole image, then one integral
    image per product term (HR*HR, HR*SR, SR*SR; two 16-bit-limb tables
    each) and evaluates all anchors through O(1) window sums.
    """
    a, b, channels, luma_mode = _prepare_planes(hr, lr, geom, on_luma)
    h, w = a.shape[:2]
    if h * w > _MAX_PLANE_PIXELS:
        raise ValueError(
            f"image of {h * w} pixels exceeds the exact-accumulator bound "
            f"({_MAX_PLANE_PIXELS})"
        )
    rows, cols = geom.grid_shape(h, w)
    tables = [np.zeros((h + 1, w + 1), dtype=np.int64) for _ in range(6)]
    _get_table_builder()(a, b, *tables)
    sources = ("hr*hr:mid", "hr*hr:low", "hr*sr:mid", "hr*sr:low", "sr*sr:mid", "sr*sr:low")
    grids = [
        IntegralImage.from_table(t, src).window_sum_grid(geom.k, geom.stride)
        for t, src in zip(tables, sources)
    ]
    num = _combine_window_sums(*grids, luma_mode=luma_mode)
    assert num.shape == (rows, cols)
    return ImportanceMap(_psnr_from_num(num, channels, geom.k), geom, MetricKind.PSNR_BILINEAR)


def score_map_naive(
    hr: Raster, lr: Raster, geom: PatchGeometry, on_luma: bool = False
) -> ImportanceMap:
    """Sliding-window baseline: direct per-anchor summation, no integrals.

    Same contract and same fixed-point planes as score_map_fast, so the two
    agree exactly; each anchor costs O(k^2) work.
    """
    a, b, channels, luma_mode = _prepare_planes(hr, lr, geom, on_luma)
    h, w = a.shape[:2]
    rows, cols = geom.grid_shape(h, w)
    planes = _limb_planes(a, b)
    k, stride = geom.k, geom.stride
    num = np.empty((rows, cols), dtype=np.float64)
    for r in range(rows):
        u = r * stride
        for c in range(cols):
            v = c * stride
            w6 = planes[:, u : u + k, v : v + k].sum(axis=(1, 2))
            num[r, c] = _combine_window_sums(
                w6[0], w6[1], w6[2], w6[3], w6[4], w6[5], luma_mode=luma_mode
            )
    return ImportanceMap(_psnr_from_num(num, channels, geom.k), geom, MetricKind.PSNR_BILINEAR)


# ---------------------------------------------------------------------------
# Alternative heuristic metrics (read HR only; higher = more informative)
# ---------------------------------------------------------------------------


def _luma_or_single(arr: np.ndarray) -> np.ndarray:
    if arr.shape[2] == 3:
        return luma_plane(arr)
    return arr[:, :, 0].astype(np.float64)


def _wide_square_window(yq: np.ndarray, k: int, stride: int) -> np.ndarray:
    """Window sums of yq^2 via two 16-bit-limb integrals, float64."""
    sq = yq * yq
    mid = build_integral(sq >> 16, "y*y:mid").window_sum_grid(k, stride)
    low = build_integral(sq & np.int64(0xFFFF), "y*y:low").window_sum_grid(k, stride)
    return 65536.0 * mid.astype(np.float64) + low.astype(np.float64)


def _sobel_magnitude(y: np.ndarray) -> np.ndarray:
    p = np.pad(y, 1, mode="edge")
    gx = (p[:-2, 2:] + 2.0 * p[1:-1, 2:] + p[2:, 2:]) - (
        p[:-2, :-2] + 2.0 * p[1:-1, :-2] + p[2:, :-2]
    )
    gy = (p[2:, :-2] + 2.0 * p[2:, 1:-1] + p[2:, 2:]) - (
        p[:-2, :-2] + 2.0 * p[:-2, 1:-1] + p[:-2, 2:]
    )
    return np.hypot(gx, gy)


def _laplacian_abs(y: np.ndarray) -> np.ndarray:
    p = np.pad(y, 1, mode="edge")
    lap = p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:] - 4.0 * y
    return np.abs(lap)


def score_map_alternative(hr: Raster, metric: MetricKind, geom: PatchGeometry) -> ImportanceMap:
    """Heuristic texture metrics over the anchor grid (no LR needed).

    std0 pools all channels of the patch into one population std; std1
    averages per-channel stds; std2 takes the std of the luminance patch.
    sobel / laplacian average the image-wide operator response magnitude
    over the patch. Luminance-based metrics fall back to the single channel
    for grayscale input.
    """
    metric = MetricKind(metric)
    if metric is MetricKind.PSNR_BILINEAR:
        raise ValueError("psnr-bilinear is computed by score_map_fast/score_map_naive")
    arr = hr.data
    h, w, c = arr.shape
    rows, cols = geom.grid_shape(h, w)
    k, stride = geom.k, geom.stride
    n = k * k

    if metric is MetricKind.STD0:
        x = arr.astype(np.int64)
        w1 = build_integral(x.sum(axis=2), "sum(x)").window_sum_grid(k, stride)
        w2 = build_integral((x * x).sum(axis=2), "sum(x*x)").window_sum_grid(k, stride)
        total = float(c * n)
        mean = w1 / total
        var = w2 / total - mean * mean
        scores = np.sqrt(np.maximum(var, 0.0))
    elif metric is MetricKind.STD1:
        acc = np.zeros((rows, cols), dtype=np.float64)
        for ch in range(c):
            x = arr[:, :, ch].astype(np.int64)
            w1 = build_integral(x, f"x[{ch}]").window_sum_grid(k, stride)
            w2 = build_integral(x * x, f"x[{ch}]^2").window_sum_grid(k, stride)
            mean = w1 / float(n)
            var = w2 / float(n) - mean * mean
            acc += np.sqrt(np.maximum(var, 0.0))
        scores = acc / c
    elif metric is MetricKind.STD2:
        yq = fixed_point_quantize(_luma_or_single(arr))
        w1 = build_integral(yq, "luma").window_sum_grid(k, stride).astype(np.float64)
        w2 = _wide_square_window(yq, k, stride)
        scale = float(FIXED_POINT_SCALE)
        mean = w1 / (n * scale)
        var = w2 / (n * scale * scale) - mean * mean
        scores = np.sqrt(np.maximum(var, 0.0))
    elif metric in (MetricKind.SOBEL, MetricKind.LAPLACIAN):
        y = _luma_or_single(arr)
        resp = _sobel_magnitude(y) if metric is MetricKind.SOBEL else _laplacian_abs(y)
        rq = fixed_point_quantize(resp)
        wr = build_integral(rq, metric.value).window_sum_grid(k, stride)
        scores = wr / (float(n) * FIXED_POINT_SCALE)
    else:  # pragma: no cover
        raise ValueError(f"unhandled metric {metric}")
    return ImportanceMap(scores.astype(np.float32), geom, metric)


# ---------------------------------------------------------------------------
# Importance-map binary format (IIMP)
# ---------------------------------------------------------------------------

MAP_MAGIC = b"IIMP"
MAP_VERSION = 1
_HEADER = struct.Struct("<4sHIIIIIB")


def write_map(m: ImportanceMap, path: str) -> None:
    """Serialize an ImportanceMap (little-endian IIMP, version 1)."""
    header = _HEADER.pack(
        MAP_MAGIC,
        MAP_VERSION,
        m.rows,
        m.cols,
        m.geometry.k,
        m.geometry.stride,
        m.geometry.scale,
        m.metric.code,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(m.scores, dtype="<f4").tobytes())


def read_map(path: str) -> ImportanceMap:
    """Read an IIMP file written by write_map."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise ValueError(f"truncated map file: {path}")
    magic, version, rows, cols, k, stride, scale, metric_code = _HEADER.unpack_from(blob)
    if magic != MAP_MAGIC:
        raise ValueError(f"not an importance map (bad magic): {path}")
    if version != MAP_VERSION:
        raise ValueError(f"unsupported map version {version}: {path}")
    payload = blob[_HEADER.size :]
    expected = rows * cols * 4
    if len(payload) != expected:
        raise ValueError(
            f"map payload size mismatch: expected {expected} bytes, got {len(payload)}"
        )
    scores = np.frombuffer(payload, dtype="<f4").reshape(rows, cols)
    geom = PatchGeometry(k=k, scale=scale, stride=stride)
    return ImportanceMap(scores.astype(np.float32), geom, MetricKind.from_code(metric_code))
