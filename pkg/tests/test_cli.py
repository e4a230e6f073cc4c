import json
import os

import numpy as np
import pytest

from patchpick.cli import main
from patchpick.imagecore import load_image, save_image
from patchpick.importance import read_map
from patchpick.sampling import load_manifest

from conftest import constant_raster, random_raster
from test_sampling import pairwise_ious

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


@pytest.fixture
def images(tmp_path, rng):
    hr_path = tmp_path / "hr.png"
    save_image(random_raster(rng, 64, 64), str(hr_path))
    return tmp_path, str(hr_path)


def run_score(tmp_path, hr_path, *extra):
    out = str(tmp_path / "map.iimp")
    code = main(["score", "--hr", hr_path, "--scale", "2", "--patch-size", "16",
                 "--out-map", out, *extra])
    return code, out


# --- degrade -----------------------------------------------------------------


def test_degrade_file(tmp_path, rng):
    src = tmp_path / "in.png"
    save_image(constant_raster(50, 100, 100), str(src))
    dst = tmp_path / "out.png"
    assert main(["degrade", "--input", str(src), "--output", str(dst), "--scale", "2"]) == 0
    img = load_image(str(dst))
    assert (img.width, img.height) == (50, 50)


def test_degrade_rejects_scale_5(tmp_path, capsys):
    code = main(["degrade", "--input", "x.png", "--output", "y.png", "--scale", "5"])
    assert code == 1
    err = capsys.readouterr().err
    assert "2" in err and "3" in err and "4" in err


def test_degrade_directory(tmp_path, rng):
    src = tmp_path / "in"
    os.makedirs(src)
    for name in ("a.png", "b.png"):
        save_image(random_raster(rng, 33, 41), str(src / name))
    dst = tmp_path / "out"
    assert main(["degrade", "--input", str(src), "--output", str(dst), "--scale", "4"]) == 0
    assert sorted(os.listdir(dst)) == ["a.png", "b.png"]
    img = load_image(str(dst / "a.png"))
    assert (img.width, img.height) == (40 // 4, 32 // 4)


def test_degrade_missing_input_is_io_error(tmp_path):
    code = main(["degrade", "--input", str(tmp_path / "no.png"),
                 "--output", str(tmp_path / "o.png"), "--scale", "2"])
    assert code == 3


def test_unknown_flag_is_usage_error():
    assert main(["degrade", "--input", "a", "--output", "b", "--scale", "2",
                 "--frobnicate"]) == 1


# --- score -------------------------------------------------------------------


def test_score_defaults(images):
    tmp_path, hr_path = images
    code, out = run_score(tmp_path, hr_path)
    assert code == 0
    m = read_map(out)
    assert m.geometry.stride == 2  # default: stride = scale
    assert m.metric.value == "psnr-bilinear"
    assert m.scores.shape == ((64 - 16) // 2 + 1,) * 2


def test_score_naive_matches_fast_byte_identical(images):
    tmp_path, hr_path = images
    _, fast_map = run_score(tmp_path, hr_path)
    naive_out = str(tmp_path / "naive.iimp")
    code = main(["score", "--hr", hr_path, "--scale", "2", "--patch-size", "16",
                 "--out-map", naive_out, "--naive"])
    assert code == 0
    with open(fast_map, "rb") as a, open(naive_out, "rb") as b:
        assert a.read() == b.read()


def test_score_indivisible_patch_is_data_error(images):
    tmp_path, hr_path = images
    code = main(["score", "--hr", hr_path, "--scale", "2", "--patch-size", "191",
                 "--out-map", str(tmp_path / "m.iimp")])
    assert code == 2


def test_score_alternative_metric(images):
    tmp_path, hr_path = images
    code, out = run_score(tmp_path, hr_path, "--metric", "std0")
    assert code == 0
    assert read_map(out).metric.value == "std0"


def test_score_luma_flag(images):
    tmp_path, hr_path = images
    code, _ = run_score(tmp_path, hr_path, "--luma")
    assert code == 0
    code = main(["score", "--hr", hr_path, "--scale", "2", "--patch-size", "16",
                 "--out-map", str(tmp_path / "x.iimp"), "--luma", "--metric", "std0"])
    assert code == 1


# --- sample ------------------------------------------------------------------


@pytest.fixture
def scored(images):
    tmp_path, hr_path = images
    _, map_path = run_score(tmp_path, hr_path)
    return tmp_path, map_path


def test_sample_greedy_full_portion(scored):
    tmp_path, map_path = scored
    out = str(tmp_path / "m.json")
    code = main(["sample", "--map", map_path, "--strategy", "greedy",
                 "--portion", "1.0", "--out-manifest", out])
    assert code == 0
    manifest = load_manifest(out)
    assert manifest.count_selected == 25 * 25


def test_sample_dart_without_seed_is_usage_error(scored):
    tmp_path, map_path = scored
    code = main(["sample", "--map", map_path, "--strategy", "dart",
                 "--count", "5", "--out-manifest", str(tmp_path / "m.json")])
    assert code == 1


def test_sample_budget_flags_are_data_errors(scored):
    tmp_path, map_path = scored
    base = ["sample", "--map", map_path, "--strategy", "greedy",
            "--out-manifest", str(tmp_path / "m.json")]
    assert main(base) == 2  # neither
    assert main(base + ["--portion", "0.5", "--count", "3"]) == 2  # both


def test_sample_nms_disjoint(scored):
    tmp_path, map_path = scored
    out = str(tmp_path / "m.json")
    code = main(["sample", "--map", map_path, "--strategy", "nms", "--count", "8",
                 "--iou-threshold", "0", "--out-manifest", out])
    assert code == 0
    assert all(v == 0.0 for v in pairwise_ious(load_manifest(out)))


def test_sample_dart_reproducible(scored):
    tmp_path, map_path = scored
    outs = []
    for name in ("a.json", "b.json"):
        out = str(tmp_path / name)
        code = main(["sample", "--map", map_path, "--strategy", "dart",
                     "--count", "5", "--seed", "7", "--out-manifest", out])
        assert code == 0
        with open(out, "rb") as fh:
            outs.append(fh.read())
    assert outs[0] == outs[1]


# --- crop / heatmap ----------------------------------------------------------


def test_crop_and_heatmap(scored):
    tmp_path, map_path = scored
    manifest_path = str(tmp_path / "m.json")
    main(["sample", "--map", map_path, "--strategy", "greedy", "--count", "3",
          "--out-manifest", manifest_path])
    out_dir = str(tmp_path / "crops")
    code = main(["crop", "--manifest", manifest_path, "--hr", str(tmp_path / "hr.png"),
                 "--out-dir", out_dir])
    assert code == 0
    assert len(os.listdir(out_dir)) == 6
    heat = str(tmp_path / "heat.png")
    assert main(["heatmap", "--map", map_path, "--output", heat]) == 0
    assert load_image(heat).data.shape == (25, 25, 1)


# --- bench -------------------------------------------------------------------


def test_bench_json(tmp_path, rng, capsys):
    hr_path = str(tmp_path / "hr.png")
    lr_path = str(tmp_path / "lr.png")
    hr = random_raster(rng, 96, 96)
    save_image(hr, hr_path)
    main(["degrade", "--input", hr_path, "--output", lr_path, "--scale", "2"])
    capsys.readouterr()
    code = main(["bench", "--hr", hr_path, "--lr", lr_path, "--scale", "2",
                 "--patch-size", "32", "--repeats", "1", "--json"])
    assert code == 0
    result = json.loads(capsys.readouterr().out)
    assert result["equal"] is True
    assert result["speedup"] > 0
    assert result["anchors"] == ((96 - 32) // 2 + 1) ** 2


def test_bench_geometry_error(tmp_path, rng):
    hr_path = str(tmp_path / "hr.png")
    save_image(random_raster(rng, 32, 32), hr_path)
    code = main(["bench", "--hr", hr_path, "--lr", hr_path, "--scale", "2",
                 "--patch-size", "16", "--repeats", "1"])
    assert code == 2  # lr not hr/2: dimension mismatch


# --- run ---------------------------------------------------------------------


def write_config(tmp_path, **overrides):
    cfg = {
        "input": str(tmp_path / "in"),
        "output": str(tmp_path / "out"),
        "scale": 2,
        "patch_size": 16,
        "strategy": "greedy",
        "portion": 0.1,
    }
    cfg.update(overrides)
    cfg = {k: v for k, v in cfg.items() if v is not None}
    path = tmp_path / "job.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_run_minimal_config(tmp_path, rng):
    os.makedirs(tmp_path / "in")
    for i in range(2):
        save_image(random_raster(rng, 48, 48), str(tmp_path / "in" / f"i{i}.png"))
    code = main(["run", "--config", write_config(tmp_path)])
    assert code == 0
    assert sorted(os.listdir(tmp_path / "out")) == ["manifests", "maps", "report.json"]
    assert len(os.listdir(tmp_path / "out" / "maps")) == 2


def test_run_missing_scale_names_field(tmp_path, capsys):
    code = main(["run", "--config", write_config(tmp_path, scale=None)])
    assert code == 1
    assert "scale" in capsys.readouterr().err


def test_run_unknown_field_rejected(tmp_path, capsys):
    code = main(["run", "--config", write_config(tmp_path, typo_field=1)])
    assert code == 1
    assert "typo_field" in capsys.readouterr().err


def test_run_rerun_byte_identical(tmp_path, rng):
    os.makedirs(tmp_path / "in")
    save_image(random_raster(rng, 48, 48), str(tmp_path / "in" / "a.png"))
    cfg = write_config(tmp_path, emit={"maps": True, "manifests": True,
                                       "heatmaps": True, "crops": True})
    assert main(["run", "--config", cfg]) == 0

    def snapshot():
        out = {}
        for base, _, names in os.walk(tmp_path / "out"):
            for name in names:
                if name == "report.json":
                    continue
                p = os.path.join(base, name)
                with open(p, "rb") as fh:
                    out[os.path.relpath(p, tmp_path / "out")] = fh.read()
        return out

    first = snapshot()
    assert main(["run", "--config", cfg]) == 0
    assert snapshot() == first


# --- help snapshots ----------------------------------------------------------


@pytest.mark.parametrize("args", [
    [],
    ["degrade"], ["score"], ["sample"], ["crop"], ["heatmap"], ["bench"], ["run"],
])
def test_help_snapshots(args, capsys, monkeypatch):
    monkeypatch.setenv("COLUMNS", "100")
    name = "help_" + (args[0] if args else "main") + ".txt"
    code = main(args + ["--help"])
    assert code == 0
    out = capsys.readouterr().out
    with open(os.path.join(GOLDEN, name), "r", encoding="utf-8") as fh:
        assert out == fh.read()
