"""Dataset-level orchestration: degrade, score, sample, and export per image.

Walks a directory of PNGs, runs the scoring/sampling chain on each, and
writes the requested artifacts under a deterministic layout:

    out/maps/{stem}.iimp
    out/manifests/{stem}.json
    out/heatmaps/{stem}.png
    out/crops/{stem}/{stem}_{index:06}_{hr|lr}.png
    out/report.json

Images are independent, so worker parallelism never changes any output
byte; per-image failures are recorded in the report instead of aborting
the run.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .imagecore import Raster, load_image, save_image, quantize_to_u8
from .importance import (
    ImportanceMap,
    MetricKind,
    PatchGeometry,
    score_map_alternative,
    score_map_fast,
    write_map,
)
from .resample import bicubic_downscale, crop_to_multiple
from .sampling import Manifest, SamplingConfig, sample, save_manifest


@dataclass(frozen=True)
class EmitFlags:
    maps: bool = True
    manifests: bool = True
    heatmaps: bool = False
    crops: bool = False


@dataclass(frozen=True)
class DatasetJob:
    input_dir: str
    output_dir: str
    geometry: PatchGeometry
    sampling: SamplingConfig
    metric: MetricKind = MetricKind.PSNR_BILINEAR
    on_luma: bool = False
    emit: EmitFlags = field(default_factory=EmitFlags)
    workers: int = 1
    lr_dir: str | None = None

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


def _find_lr_path(lr_dir: str, stem: str, scale: int) -> str:
    # Accept both plain stems and the DIV2K-style "{stem}x{s}.png" naming.
    for name in (f"{stem}.png", f"{stem}x{scale}.png"):
        candidate = os.path.join(lr_dir, name)
        if os.path.exists(candidate):
            return candidate
    raise FileNotFoundError(f"no LR image for {stem!r} in {lr_dir}")


def _rank_normalize(key: np.ndarray) -> np.ndarray:
    """Average ranks of a 1-D array, normalized to [0, 1]."""
    n = key.size
    if n == 1:
        return np.array([0.5])
    order = np.argsort(key, kind="stable")
    ranks = np.empty(n, dtype=np.float64)
    sorted_vals = key[order]
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0
        i = j + 1
    return ranks / (n - 1)


def emit_heatmap(m: ImportanceMap, path: str) -> None:
    """Render the map as a grayscale PNG at anchor-grid resolution.

    Brightness is rank-normalized informativeness: the most informative
    anchor renders 255, ties share their average rank (an all-tied map is
    mid-gray 128), and +inf sentinels render 0. Rank rather than min-max
    normalization keeps outliers from flattening the picture.
    """
    scores = m.scores.ravel().astype(np.float64)
    if scores.size == 0:
        raise ValueError("cannot render an empty map")
    finite = np.isfinite(scores)
    pixels = np.zeros(scores.size, dtype=np.float64)
    if finite.any():
        vals = scores[finite]
        key = -vals if m.metric.higher_is_informative else vals
        # norm 0 = most informative.
        pixels[finite] = 255.0 * (1.0 - _rank_normalize(key))
    img = quantize_to_u8(pixels.reshape(m.rows, m.cols))[:, :, None]
    save_image(Raster(img), path)


def export_crops(manifest: Manifest, hr: Raster, lr: Raster, out_dir: str) -> None:
    """Write each entry's HR and LR crops as PNGs.

    Files are named {stem}_{index:06}_hr.png / _lr.png with the 0-based
    entry index. The manifest geometry must match both images.
    """
    k = manifest.patch_size
    s = manifest.scale
    if k % s:
        raise ValueError(f"geometry mismatch: patch size {k} not divisible by scale {s}")
    if hr.height != s * lr.height or hr.width != s * lr.width:
        raise ValueError(
            f"geometry mismatch: hr {hr.width}x{hr.height} is not {s}x "
            f"lr {lr.width}x{lr.height}"
        )
    kl = k // s
    os.makedirs(out_dir, exist_ok=True)
    stem = manifest.image
    for i, e in enumerate(manifest.entries):
        if e.u < 0 or e.v < 0 or e.u + k > hr.height or e.v + k > hr.width:
            raise ValueError(
                f"geometry mismatch: entry {i} at ({e.u}, {e.v}) exceeds "
                f"hr {hr.width}x{hr.height} with k={k}"
            )
        if e.lr_u * s != e.u or e.lr_v * s != e.v:
            raise ValueError(
                f"geometry mismatch: entry {i} anchor ({e.u}, {e.v}) is not "
                f"scale-aligned with lr anchor ({e.lr_u}, {e.lr_v})"
            )
        hr_crop = Raster(hr.data[e.u : e.u + k, e.v : e.v + k])
        lr_crop = Raster(lr.data[e.lr_u : e.lr_u + kl, e.lr_v : e.lr_v + kl])
        save_image(hr_crop, os.path.join(out_dir, f"{stem}_{i:06d}_hr.png"))
        save_image(lr_crop, os.path.join(out_dir, f"{stem}_{i:06d}_lr.png"))


def _process_image(job: DatasetJob, path: str):
    stem = os.path.splitext(os.path.basename(path))[0]
    stages = {}
    t0 = time.perf_counter()
    hr = crop_to_multiple(load_image(path), job.geometry.scale)
    if job.lr_dir is not None:
        lr_path = _find_lr_path(job.lr_dir, stem, job.geometry.scale)
        lr = load_image(lr_path)
    else:
        lr_path = None
        lr = bicubic_downscale(hr, job.geometry.scale)
    t1 = time.perf_counter()
    stages["degrade"] = t1 - t0

    if job.metric is MetricKind.PSNR_BILINEAR:
        m = score_map_fast(hr, lr, job.geometry, on_luma=job.on_luma)
    else:
        m = score_map_alternative(hr, job.metric, job.geometry)
    t2 = time.perf_counter()
    stages["score"] = t2 - t1

    manifest = sample(m, job.sampling, image=stem, hr_path=path, lr_path=lr_path)
    t3 = time.perf_counter()
    stages["sample"] = t3 - t2

    out = job.output_dir
    if job.emit.maps:
        write_map(m, os.path.join(out, "maps", f"{stem}.iimp"))
    if job.emit.manifests:
        save_manifest(manifest, os.path.join(out, "manifests", f"{stem}.json"))
    if job.emit.heatmaps:
        emit_heatmap(m, os.path.join(out, "heatmaps", f"{stem}.png"))
    if job.emit.crops:
        export_crops(manifest, hr, lr, os.path.join(out, "crops", stem))
    stages["emit"] = time.perf_counter() - t3
    return {
        "image": stem,
        "anchors": m.rows * m.cols,
        "selected": manifest.count_selected,
        "stages": stages,
        "lr_source": "provided" if lr_path else "synthesized",
    }


def run_dataset(job: DatasetJob) -> dict:
    """Process every PNG under the job's input directory.

    Returns the summary report (also written to output_dir/report.json):
    image and anchor counts, per-stage milliseconds, and per-image failures.
    A failing image is reported but never aborts the run.
    """
    if not os.path.isdir(job.input_dir):
        raise FileNotFoundError(f"input directory not found: {job.input_dir}")
    names = sorted(n for n in os.listdir(job.input_dir) if n.lower().endswith(".png"))
    if not names:
        raise ValueError(f"no PNG images in {job.input_dir}")
    paths = [os.path.join(job.input_dir, n) for n in names]

    os.makedirs(job.output_dir, exist_ok=True)
    for sub, wanted in (
        ("maps", job.emit.maps),
        ("manifests", job.emit.manifests),
        ("heatmaps", job.emit.heatmaps),
        ("crops", job.emit.crops),
    ):
        if wanted:
            os.makedirs(os.path.join(job.output_dir, sub), exist_ok=True)

    t_start = time.perf_counter()
    results: list = [None] * len(paths)

    def worker(i_path):
        i, path = i_path
        try:
            return i, _process_image(job, path), None
        except Exception as exc:  # noqa: BLE001 - failure isolation by design
            return i, None, f"{os.path.basename(path)}: {exc}"

    if job.workers > 1:
        with ThreadPoolExecutor(max_workers=job.workers) as pool:
            for i, ok, err in pool.map(worker, enumerate(paths)):
                results[i] = (ok, err)
    else:
        for i, ok, err in map(worker, enumerate(paths)):
            results[i] = (ok, err)

    wall = time.perf_counter() - t_start
    stage_totals: dict = {}
    images = []
    failures = []
    anchors = 0
    for ok, err in results:
        if err is not None:
            failures.append(err)
            continue
        images.append(ok)
        anchors += ok["anchors"]
        for name, dt in ok["stages"].items():
            stage_totals[name] = stage_totals.get(name, 0.0) + dt

    report = {
        "images_processed": len(images),
        "anchors_scored": anchors,
        "wall_ms": round(wall * 1000.0, 3),
        "stage_ms": {k: round(v * 1000.0, 3) for k, v in sorted(stage_totals.items())},
        "failures": failures,
        "lr_source": "provided" if job.lr_dir is not None else "synthesized",
        "images": images,
    }
    with open(os.path.join(job.output_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    return report
