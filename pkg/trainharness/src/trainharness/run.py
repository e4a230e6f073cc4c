"""CLI: run the selected-vs-uniform training comparison."""

from __future__ import annotations

import argparse
import json
import sys

from .train import TrainConfig, train_compare


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="trainharness",
        description="Compare toy-SR training on manifest-selected vs uniform patches.",
    )
    p.add_argument("--manifest-dir", required=True, help="directory of manifest JSON files")
    p.add_argument("--hr-dir", required=True, help="training HR images")
    p.add_argument("--lr-dir", required=True, help="training LR images")
    p.add_argument("--val-hr-dir", required=True, help="validation HR images")
    p.add_argument("--val-lr-dir", required=True, help="validation LR images")
    p.add_argument("--scale", type=int, default=2, help="scale factor")
    p.add_argument("--epochs", type=int, default=30, help="training epochs")
    p.add_argument("--batch-size", type=int, default=16, help="patches per step")
    p.add_argument("--learning-rate", type=float, default=1e-3, help="Adam learning rate")
    p.add_argument("--seed", type=int, default=0, help="init/shuffle seed")
    p.add_argument("--border", type=int, default=None,
                   help="validation border crop (default: scale)")
    p.add_argument("--out-json", default=None, help="metrics report path")
    p.add_argument("--out-plot", default=None, help="PSNR curve PNG path")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = TrainConfig(
        manifest_dir=args.manifest_dir,
        hr_dir=args.hr_dir,
        lr_dir=args.lr_dir,
        val_hr_dir=args.val_hr_dir,
        val_lr_dir=args.val_lr_dir,
        scale=args.scale,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        seed=args.seed,
        border=args.border,
        out_json=args.out_json,
        out_plot=args.out_plot,
    )
    report = train_compare(cfg)
    print(json.dumps(
        {
            "patches_per_epoch": report["patches_per_epoch"],
            "final_selected": report["final_selected"],
            "final_uniform": report["final_uniform"],
            "final_delta": report["final_delta"],
        },
        indent=2,
    ))
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
