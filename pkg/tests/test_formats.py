"""Golden-file checks: the on-disk formats must stay byte-stable."""

import os

import numpy as np

from patchpick.imagecore import Raster
from patchpick.importance import PatchGeometry, read_map, score_map_fast, write_map
from patchpick.resample import bicubic_downscale
from patchpick.sampling import (
    SamplingConfig,
    load_manifest,
    manifest_to_json,
    sample_nms,
)

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")
MAP_GOLDEN = os.path.join(GOLDEN, "map_v1.iimp")
MANIFEST_GOLDEN = os.path.join(GOLDEN, "manifest_v1.json")


def golden_inputs():
    rng = np.random.default_rng(1234)
    hr = Raster(rng.integers(0, 256, (40, 48, 3), dtype=np.uint8))
    lr = bicubic_downscale(hr, 2)
    return hr, lr


def test_map_golden_round_trip(tmp_path):
    m = read_map(MAP_GOLDEN)
    assert m.scores.shape == (13, 17)
    assert m.geometry == PatchGeometry(k=16, scale=2, stride=2)
    out = tmp_path / "rewrite.iimp"
    write_map(m, str(out))
    with open(MAP_GOLDEN, "rb") as fh:
        assert out.read_bytes() == fh.read()


def test_map_golden_reproducible_from_source():
    hr, lr = golden_inputs()
    m = score_map_fast(hr, lr, PatchGeometry(k=16, scale=2))
    golden = read_map(MAP_GOLDEN)
    assert np.array_equal(m.scores, golden.scores)


def test_manifest_golden_round_trip():
    manifest = load_manifest(MANIFEST_GOLDEN)
    with open(MANIFEST_GOLDEN, "r", encoding="utf-8") as fh:
        assert manifest_to_json(manifest) == fh.read()


def test_manifest_golden_reproducible_from_source():
    hr, lr = golden_inputs()
    m = score_map_fast(hr, lr, PatchGeometry(k=16, scale=2))
    manifest = sample_nms(
        m,
        SamplingConfig(strategy="nms", count=6, nms_iou_threshold=0.0),
        image="golden",
        hr_path="golden_hr.png",
        lr_path="golden_lr.png",
    )
    with open(MANIFEST_GOLDEN, "r", encoding="utf-8") as fh:
        assert manifest_to_json(manifest) == fh.read()
