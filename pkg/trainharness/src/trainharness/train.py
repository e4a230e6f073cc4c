"""Train the toy model on manifest-selected vs uniformly sampled patches.

This is a desk-scale directional check of the selection method, not a
reproduction of full-dataset benchmark numbers: both models start from
bit-identical weights and see the same number of patches per epoch; only
where those patches come from differs.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
import torch

from .datasets import ManifestPatchDataset, UniformPatchDataset, load_pairs
from .formats import read_manifest
from .metrics import eval_psnr_y
from .model import build_model


@dataclass
class TrainConfig:
    manifest_dir: str
    hr_dir: str
    lr_dir: str
    val_hr_dir: str
    val_lr_dir: str
    scale: int = 2
    epochs: int = 30
    batch_size: int = 16
    learning_rate: float = 1e-3
    seed: int = 0
    border: int | None = None  # defaults to scale
    out_json: str | None = None
    out_plot: str | None = None


def _val_pairs(cfg: TrainConfig):
    names = sorted(n for n in os.listdir(cfg.val_hr_dir) if n.endswith(".png"))
    if not names:
        raise ValueError(f"no validation PNGs in {cfg.val_hr_dir}")
    from .datasets import mod_crop
    from .formats import load_png

    pairs = []
    for name in names:
        stem = os.path.splitext(name)[0]
        hr = mod_crop(load_png(os.path.join(cfg.val_hr_dir, name)), cfg.scale)
        lr_name = name if os.path.exists(os.path.join(cfg.val_lr_dir, name)) \
            else f"{stem}x{cfg.scale}.png"
        lr = load_png(os.path.join(cfg.val_lr_dir, lr_name))
        pairs.append((lr, hr))
    return pairs


def _validate(model, pairs, border: int) -> float:
    model.eval()
    scores = []
    with torch.no_grad():
        for lr, hr in pairs:
            x = torch.from_numpy(lr.astype(np.float32) / 255.0).permute(2, 0, 1)[None]
            y = model(x)[0].permute(1, 2, 0).clamp(0.0, 1.0).numpy() * 255.0
            sr = np.floor(y + 0.5).astype(np.uint8)
            scores.append(eval_psnr_y(sr, hr, border=border))
    finite = [s for s in scores if math.isfinite(s)]
    return float(np.mean(finite)) if finite else math.inf


def _train_one(dataset, cfg: TrainConfig, pairs, border: int, channels: int):
    torch.manual_seed(cfg.seed)
    model = build_model(channels, cfg.scale, seed=cfg.seed)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate,
                           betas=(0.9, 0.999))
    # Step decay settles the tail of the curve so the final epoch is not a
    # constant-learning-rate lottery.
    milestones = [m for m in (cfg.epochs // 2, (3 * cfg.epochs) // 4) if m > 0]
    sched = torch.optim.lr_scheduler.MultiStepLR(opt, milestones=milestones, gamma=0.5)
    loss_fn = torch.nn.MSELoss()
    curve = [_validate(model, pairs, border)]
    for epoch in range(cfg.epochs):
        model.train()
        for lr_batch, hr_batch in dataset.epoch_batches(epoch, cfg.batch_size):
            x = torch.from_numpy(lr_batch.astype(np.float32) / 255.0).permute(0, 3, 1, 2)
            t = torch.from_numpy(hr_batch.astype(np.float32) / 255.0).permute(0, 3, 1, 2)
            opt.zero_grad()
            loss = loss_fn(model(x), t)
            loss.backward()
            opt.step()
        sched.step()
        curve.append(_validate(model, pairs, border))
    return curve


def train_compare(cfg: TrainConfig) -> dict:
    """Identically initialized models on selected vs uniform patches.

    Returns the metrics report: per-epoch validation PSNR-Y curves for both
    models (index 0 is the shared initialization) and the final delta.
    """
    torch.use_deterministic_algorithms(True)
    border = cfg.border if cfg.border is not None else cfg.scale
    manifest_paths = sorted(
        os.path.join(cfg.manifest_dir, n)
        for n in os.listdir(cfg.manifest_dir)
        if n.endswith(".json")
    )
    if not manifest_paths:
        raise ValueError(f"no manifests in {cfg.manifest_dir}")
    selected = ManifestPatchDataset(manifest_paths, cfg.hr_dir, cfg.lr_dir, seed=cfg.seed)
    uniform = UniformPatchDataset(manifest_paths, cfg.hr_dir, cfg.lr_dir, seed=cfg.seed)
    channels = next(iter(selected.pairs.values())).hr.shape[2]
    pairs = _val_pairs(cfg)

    curve_sel = _train_one(selected, cfg, pairs, border, channels)
    curve_uni = _train_one(uniform, cfg, pairs, border, channels)
    assert curve_sel[0] == curve_uni[0], "shared init must evaluate identically"

    report = {
        "config": asdict(cfg),
        "patches_per_epoch": len(selected),
        "val_psnr_selected": curve_sel,
        "val_psnr_uniform": curve_uni,
        "final_selected": curve_sel[-1],
        "final_uniform": curve_uni[-1],
        "final_delta": curve_sel[-1] - curve_uni[-1],
    }
    if cfg.out_json:
        with open(cfg.out_json, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    if cfg.out_plot:
        _plot(report, cfg.out_plot)
    return report


def _plot(report: dict, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    epochs = range(len(report["val_psnr_selected"]))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, report["val_psnr_selected"], label="selected patches")
    ax.plot(epochs, report["val_psnr_uniform"], label="uniform patches")
    ax.set_xlabel("epoch")
    ax.set_ylabel("val PSNR-Y (dB)")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
