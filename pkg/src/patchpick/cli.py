"""Command-line front end.

Subcommands: degrade, score, sample, crop, heatmap, bench, run. Every
subcommand is a pure function of its inputs and flags: no hidden state, no
network. Exit codes: 0 success, 1 usage error, 2 data error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import pipeline
from .imagecore import load_image, save_image
from .importance import (
    MetricKind,
    PatchGeometry,
    read_map,
    score_map_alternative,
    score_map_fast,
    score_map_naive,
    write_map,
)
from .resample import SCALE_FACTORS, bicubic_downscale, crop_to_multiple
from .sampling import SamplingConfig, load_manifest, sample, save_manifest

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_geometry_flags(p, lr_optional=False):
    p.add_argument("--hr", required=True, help="HR PNG image")
    if lr_optional:
        p.add_argument("--lr", help="LR PNG image (default: synthesized by bicubic downscale)")
    else:
        p.add_argument("--lr", required=True, help="LR PNG image")
    p.add_argument("--scale", type=int, choices=SCALE_FACTORS, required=True,
                   help="scale factor")
    p.add_argument("--patch-size", type=int, required=True,
                   help="HR patch size k (must be divisible by --scale)")
    p.add_argument("--stride", type=int, default=None,
                   help="anchor stride in HR pixels (default: --scale)")


def build_parser() -> _Parser:
    parser = _Parser(prog="patchpick",
                     description="Score and sample informative LR-HR training patches.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("degrade", help="bicubic-downscale an image or directory")
    p.add_argument("--input", required=True, help="input PNG file or directory")
    p.add_argument("--output", required=True, help="output PNG file or directory")
    p.add_argument("--scale", type=int, choices=SCALE_FACTORS, required=True,
                   help="scale factor")
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("score", help="compute an importance map")
    _add_geometry_flags(p, lr_optional=True)
    p.add_argument("--metric", choices=[m.value for m in MetricKind],
                   default=MetricKind.PSNR_BILINEAR.value,
                   help="importance metric (default psnr-bilinear)")
    p.add_argument("--luma", action="store_true",
                   help="score PSNR on the luminance channel instead of RGB")
    p.add_argument("--naive", action="store_true",
                   help="use the sliding-window baseline instead of integral images")
    p.add_argument("--out-map", required=True, help="output .iimp map path")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("sample", help="select patches from an importance map")
    p.add_argument("--map", required=True, help="input .iimp map path")
    p.add_argument("--strategy", choices=["greedy", "nms", "dart"], required=True,
                   help="sampling strategy")
    p.add_argument("--portion", type=float, default=None,
                   help="fraction of anchors to keep, in (0, 1]")
    p.add_argument("--count", type=int, default=None,
                   help="explicit number of patches to keep")
    p.add_argument("--iou-threshold", type=float, default=0.0,
                   help="NMS suppression threshold (default 0.0: non-overlapping)")
    p.add_argument("--seed", type=int, default=None,
                   help="PRNG seed (required for dart)")
    p.add_argument("--dart-max-attempts", type=int, default=None,
                   help="consecutive-rejection budget (default: 10x requested count)")
    p.add_argument("--out-manifest", required=True, help="output manifest JSON path")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("crop", help="export HR/LR crops listed in a manifest")
    p.add_argument("--manifest", required=True, help="manifest JSON path")
    p.add_argument("--hr", required=True, help="HR PNG image")
    p.add_argument("--lr", help="LR PNG image (default: synthesized by bicubic downscale)")
    p.add_argument("--out-dir", required=True, help="output directory for crops")
    p.set_defaults(func=cmd_crop)

    p = sub.add_parser("heatmap", help="render an importance map as a PNG heatmap")
    p.add_argument("--map", required=True, help="input .iimp map path")
    p.add_argument("--output", required=True, help="output PNG path")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("bench", help="time the naive baseline against the fast path")
    _add_geometry_flags(p, lr_optional=False)
    p.add_argument("--repeats", type=int, default=3,
                   help="timing repetitions, best-of (default 3)")
    p.add_argument("--json", action="store_true", help="print machine-readable JSON")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("run", help="run the full pipeline from a job config")
    p.add_argument("--config", required=True, help="job config JSON path")
    p.set_defaults(func=cmd_run)

    return parser


def cmd_degrade(args) -> int:
    if os.path.isdir(args.input):
        names = sorted(n for n in os.listdir(args.input) if n.lower().endswith(".png"))
        if not names:
            raise ValueError(f"no PNG images in {args.input}")
        os.makedirs(args.output, exist_ok=True)
        for name in names:
            hr = crop_to_multiple(load_image(os.path.join(args.input, name)), args.scale)
            save_image(bicubic_downscale(hr, args.scale), os.path.join(args.output, name))
        print(f"degraded {len(names)} images -> {args.output}")
    else:
        hr = crop_to_multiple(load_image(args.input), args.scale)
        save_image(bicubic_downscale(hr, args.scale), args.output)
        print(f"degraded {args.input} -> {args.output}")
    return EXIT_OK


def _load_pair(args):
    geom = PatchGeometry(k=args.patch_size, scale=args.scale, stride=args.stride)
    hr = load_image(args.hr)
    if getattr(args, "lr", None):
        lr = load_image(args.lr)
    else:
        hr = crop_to_multiple(hr, args.scale)
        lr = bicubic_downscale(hr, args.scale)
    return hr, lr, geom


def cmd_score(args) -> int:
    metric = MetricKind(args.metric)
    if args.luma and metric is not MetricKind.PSNR_BILINEAR:
        raise UsageError("--luma only applies to the psnr-bilinear metric")
    if args.naive and metric is not MetricKind.PSNR_BILINEAR:
        raise UsageError("--naive only applies to the psnr-bilinear metric")
    hr, lr, geom = _load_pair(args)
    if metric is MetricKind.PSNR_BILINEAR:
        fn = score_map_naive if args.naive else score_map_fast
        m = fn(hr, lr, geom, on_luma=args.luma)
    else:
        m = score_map_alternative(hr, metric, geom)
    write_map(m, args.out_map)
    print(f"scored {m.rows}x{m.cols} anchors ({metric.value}) -> {args.out_map}")
    return EXIT_OK


def cmd_sample(args) -> int:
    if (args.portion is None) == (args.count is None):
        # Data error by contract, unlike most flag mistakes.
        raise ValueError("exactly one of --portion/--count must be given")
    if args.strategy == "dart" and args.seed is None:
        raise UsageError("--seed is required for dart sampling (reproducibility)")
    m = read_map(args.map)
    cfg = SamplingConfig(
        strategy=args.strategy,
        portion=args.portion,
        count=args.count,
        nms_iou_threshold=args.iou_threshold,
        dart_max_attempts=args.dart_max_attempts,
        seed=args.seed,
    )
    stem = os.path.splitext(os.path.basename(args.map))[0]
    manifest = sample(m, cfg, image=stem)
    save_manifest(manifest, args.out_manifest)
    print(f"selected {manifest.count_selected}/{manifest.count_requested} patches "
          f"-> {args.out_manifest}")
    return EXIT_OK


def cmd_crop(args) -> int:
    manifest = load_manifest(args.manifest)
    hr = load_image(args.hr)
    if args.lr:
        lr = load_image(args.lr)
    else:
        hr = crop_to_multiple(hr, manifest.scale)
        lr = bicubic_downscale(hr, manifest.scale)
    pipeline.export_crops(manifest, hr, lr, args.out_dir)
    print(f"wrote {2 * manifest.count_selected} crops -> {args.out_dir}")
    return EXIT_OK


def cmd_heatmap(args) -> int:
    m = read_map(args.map)
    pipeline.emit_heatmap(m, args.output)
    print(f"heatmap {m.rows}x{m.cols} -> {args.output}")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.repeats < 1:
        raise UsageError(f"--repeats must be >= 1, got {args.repeats}")
    hr, lr, geom = _load_pair(args)

    fast_map = score_map_fast(hr, lr, geom)
    naive_map = score_map_naive(hr, lr, geom)
    import numpy as np

    if not np.array_equal(fast_map.scores, naive_map.scores):
        raise ValueError("fast/naive maps disagree; refusing to time a wrong result")

    def best_of(fn):
        best = None
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            fn()
            dt = time.perf_counter() - t0
            best = dt if best is None else min(best, dt)
        return best

    fast_s = best_of(lambda: score_map_fast(hr, lr, geom))
    naive_s = best_of(lambda: score_map_naive(hr, lr, geom))
    result = {
        "anchors": fast_map.rows * fast_map.cols,
        "fast_seconds": round(fast_s, 6),
        "naive_seconds": round(naive_s, 6),
        "speedup": round(naive_s / fast_s, 2),
        "equal": True,
        "repeats": args.repeats,
    }
    if args.json:
        print(json.dumps(result, indent=2))
    else:
        print(f"fast:  {fast_s:.4f} s")
        print(f"naive: {naive_s:.4f} s")
        print(f"speedup: {result['speedup']}x over {result['anchors']} anchors "
              f"(best of {args.repeats})")
    return EXIT_OK


_EMIT_KEYS = ("maps", "manifests", "heatmaps", "crops")
_CONFIG_KEYS = {
    "input", "output", "scale", "patch_size", "stride", "metric", "luma",
    "strategy", "portion", "count", "iou_threshold", "seed",
    "dart_max_attempts", "emit", "workers", "lr_dir",
}


def _config_error(path: str, message: str):
    raise UsageError(f"config {path}: {message}")


def load_job_config(path: str) -> pipeline.DatasetJob:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        _config_error("", "top level must be an object")
    for key in obj:
        if key not in _CONFIG_KEYS:
            _config_error(key, "unknown field")
    for key in ("input", "output", "scale", "patch_size", "strategy"):
        if key not in obj:
            _config_error(key, "missing required field")
    if ("portion" in obj) == ("count" in obj):
        _config_error("portion/count", "exactly one must be set")
    try:
        geom = PatchGeometry(k=int(obj["patch_size"]), scale=int(obj["scale"]),
                             stride=obj.get("stride"))
    except (TypeError, ValueError) as exc:
        _config_error("patch_size/scale/stride", str(exc))
    try:
        cfg = SamplingConfig(
            strategy=obj["strategy"],
            portion=obj.get("portion"),
            count=obj.get("count"),
            nms_iou_threshold=obj.get("iou_threshold", 0.0),
            dart_max_attempts=obj.get("dart_max_attempts"),
            seed=obj.get("seed"),
        )
    except (TypeError, ValueError) as exc:
        _config_error("strategy/portion/count", str(exc))
    if cfg.strategy == "dart" and cfg.seed is None:
        _config_error("seed", "required for dart sampling")
    try:
        metric = MetricKind(obj.get("metric", MetricKind.PSNR_BILINEAR.value))
    except ValueError as exc:
        _config_error("metric", str(exc))
    emit_obj = obj.get("emit", {})
    if not isinstance(emit_obj, dict):
        _config_error("emit", "must be an object")
    for key in emit_obj:
        if key not in _EMIT_KEYS:
            _config_error(f"emit.{key}", "unknown field")
    emit = pipeline.EmitFlags(
        maps=bool(emit_obj.get("maps", True)),
        manifests=bool(emit_obj.get("manifests", True)),
        heatmaps=bool(emit_obj.get("heatmaps", False)),
        crops=bool(emit_obj.get("crops", False)),
    )
    try:
        return pipeline.DatasetJob(
            input_dir=obj["input"],
            output_dir=obj["output"],
            geometry=geom,
            sampling=cfg,
            metric=metric,
            on_luma=bool(obj.get("luma", False)),
            emit=emit,
            workers=int(obj.get("workers", 1)),
            lr_dir=obj.get("lr_dir"),
        )
    except (TypeError, ValueError) as exc:
        _config_error("workers", str(exc))


def cmd_run(args) -> int:
    job = load_job_config(args.config)
    report = pipeline.run_dataset(job)
    print(f"processed {report['images_processed']} images, "
          f"{report['anchors_scored']} anchors in {report['wall_ms']:.0f} ms "
          f"({len(report['failures'])} failures)")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
