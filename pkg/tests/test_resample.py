import math

import numpy as np
import pytest

from patchpick.imagecore import Raster
from patchpick.resample import (
    bicubic_downscale,
    bilinear_upscale,
    bilinear_upscale_fixed_point,
    crop_to_multiple,
    keys_kernel,
)

from conftest import constant_raster, random_raster


# --- independent scalar oracles -------------------------------------------


def keys_scalar(u: float) -> float:
    a = -0.5
    x = abs(u)
    if x <= 1.0:
        return (a + 2.0) * x**3 - (a + 3.0) * x**2 + 1.0
    if x < 2.0:
        return a * (x**3 - 5.0 * x**2 + 8.0 * x - 4.0)
    return 0.0


def bicubic_down_axis_oracle(vals, s):
    """Antialiased Keys decimation of a 1-D sequence, per output sample."""
    n_out = len(vals) // s
    out = []
    for o in range(n_out):
        c = (o + 0.5) * s - 0.5
        j_lo = math.ceil(c - 2 * s)
        j_hi = math.floor(c + 2 * s)
        weights = [keys_scalar((j - c) / s) / s for j in range(j_lo, j_hi + 1)]
        total = sum(weights)
        acc = 0.0
        for j, w in zip(range(j_lo, j_hi + 1), weights):
            acc += (w / total) * vals[min(max(j, 0), len(vals) - 1)]
        out.append(acc)
    return out


def bilinear_point_oracle(img, s, oy, ox, ch):
    """Half-pixel-center bilinear lookup with edge clamping, float64."""
    h, w = img.shape[:2]
    sy = (oy + 0.5) / s - 0.5
    sx = (ox + 0.5) / s - 0.5
    y0 = math.floor(sy)
    x0 = math.floor(sx)
    fy = sy - y0
    fx = sx - x0
    y0c, y1c = min(max(y0, 0), h - 1), min(max(y0 + 1, 0), h - 1)
    x0c, x1c = min(max(x0, 0), w - 1), min(max(x0 + 1, 0), w - 1)
    p = img.astype(np.float64)
    top = (1.0 - fx) * p[y0c, x0c, ch] + fx * p[y0c, x1c, ch]
    bot = (1.0 - fx) * p[y1c, x0c, ch] + fx * p[y1c, x1c, ch]
    return (1.0 - fy) * top + fy * bot


# --- crop_to_multiple -------------------------------------------------------


def test_crop_to_multiple_floors():
    r = crop_to_multiple(constant_raster(7, 1353, 2041, 1), 4)
    assert (r.width, r.height) == (2040, 1352)


def test_crop_to_multiple_identity():
    r = constant_raster(7, 192, 192)
    assert crop_to_multiple(r, 3) is r


def test_crop_to_multiple_too_small():
    with pytest.raises(ValueError, match="smaller"):
        crop_to_multiple(constant_raster(0, 3, 3), 4)


def test_invalid_scale():
    with pytest.raises(ValueError, match="scale"):
        crop_to_multiple(constant_raster(0, 8, 8), 5)


# --- bicubic downscale ------------------------------------------------------


def test_bicubic_preserves_constant():
    lr = bicubic_downscale(constant_raster(97, 8, 8), 2)
    assert (lr.width, lr.height) == (4, 4)
    assert (lr.data == 97).all()


def test_bicubic_rejects_indivisible():
    with pytest.raises(ValueError, match="not divisible"):
        bicubic_downscale(constant_raster(0, 5, 5), 2)


def test_bicubic_ramp_matches_scalar_oracle():
    ramp = np.tile(np.arange(0, 256, 64, dtype=np.uint8), (4, 1))[:, :, None]
    got = bicubic_downscale(Raster(ramp), 2)
    rows = [bicubic_down_axis_oracle(ramp[i, :, 0].tolist(), 2) for i in range(4)]
    cols = np.array(rows, dtype=np.float64).T  # (w_out, h_in)
    expect = np.array([bicubic_down_axis_oracle(col.tolist(), 2) for col in cols]).T
    expect_u8 = np.floor(np.clip(expect, 0, 255) + 0.5).astype(np.uint8)
    assert np.array_equal(got.data[:, :, 0], expect_u8)


@pytest.mark.parametrize("s", [2, 3, 4])
def test_bicubic_random_matches_scalar_oracle(rng, s):
    hr = random_raster(rng, 4 * s, 5 * s, 1)
    got = bicubic_downscale(hr, s)
    plane = hr.data[:, :, 0]
    cols = np.array(
        [bicubic_down_axis_oracle(plane[i, :].tolist(), s) for i in range(plane.shape[0])]
    )
    expect = np.array(
        [bicubic_down_axis_oracle(cols[:, j].tolist(), s) for j in range(cols.shape[1])]
    ).T
    expect_u8 = np.floor(np.clip(expect, 0, 255) + 0.5).astype(np.uint8)
    assert np.array_equal(got.data[:, :, 0], expect_u8)


def test_keys_kernel_shape():
    assert keys_kernel(np.array([0.0]))[0] == 1.0
    assert keys_kernel(np.array([1.0]))[0] == 0.0
    assert keys_kernel(np.array([2.0]))[0] == 0.0
    assert keys_kernel(np.array([2.5]))[0] == 0.0


# --- bilinear upscale -------------------------------------------------------


def test_bilinear_preserves_constant():
    up = bilinear_upscale(constant_raster(42, 3, 5), 3)
    assert (up.width, up.height) == (15, 9)
    assert (up.data == 42.0).all()


def test_bilinear_2x1_matches_point_oracle():
    lr = Raster(np.array([[[0], [255]]], dtype=np.uint8))
    up = bilinear_upscale(lr, 2)
    assert up.data.shape == (2, 4, 1)
    for oy in range(2):
        for ox in range(4):
            want = bilinear_point_oracle(lr.data, 2, oy, ox, 0)
            assert up.data[oy, ox, 0] == pytest.approx(want, abs=1e-4)


@pytest.mark.parametrize("s", [2, 3, 4])
def test_bilinear_random_matches_point_oracle(rng, s):
    lr = random_raster(rng, 4, 3, 3)
    up = bilinear_upscale(lr, s)
    for oy in range(lr.height * s):
        for ox in range(lr.width * s):
            for ch in range(3):
                want = bilinear_point_oracle(lr.data, s, oy, ox, ch)
                assert up.data[oy, ox, ch] == pytest.approx(want, abs=1e-4)


@pytest.mark.parametrize("s", [2, 3, 4])
def test_bilinear_convex_bounds(rng, s):
    for _ in range(5):
        lr = random_raster(rng, 6, 7, 3)
        up = bilinear_upscale(lr, s)
        assert up.data.min() >= lr.data.min() - 1e-3
        assert up.data.max() <= lr.data.max() + 1e-3


def test_down_then_up_constant_identity():
    hr = constant_raster(131, 12, 12)
    lr = bicubic_downscale(hr, 2)
    up = bilinear_upscale(lr, 2)
    assert (up.data == 131.0).all()


@pytest.mark.parametrize("s", [2, 3, 4])
def test_fixed_point_matches_exact_rational(rng, s):
    lr = random_raster(rng, 5, 4, 3)
    q = bilinear_upscale_fixed_point(lr, s)
    d = (2 * s) ** 2
    from patchpick.resample import _bilinear_upscale_int

    exact = _bilinear_upscale_int(lr, s).astype(object)
    want = (exact * 65536 + d // 2) // d
    assert np.array_equal(q.astype(object), want)
