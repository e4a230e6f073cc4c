"""Shared fixture: a synthetic corpus processed by the selection CLI.

The harness must consume the selection toolkit purely through its artifacts,
so everything here goes through `python -m patchpick.cli` subprocesses:
degrade to materialize LR images, then a pipeline run to emit manifests,
maps, and crops.
"""

import json
import os
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

SCALE = 2
PATCH = 24
COUNT_PER_IMAGE = 10
N_TRAIN = 14
N_VAL = 4


def synth_image(rng, size=96):
    """Smooth random field sprinkled with sharp rectangles and one grating.

    Every patch contains learnable low-frequency content; the rectangles and
    the grating are the hard-to-restore details an informativeness sampler
    should chase.
    """
    coarse = rng.uniform(40, 215, (6, 6)).astype(np.float32)
    img = np.asarray(
        Image.fromarray(coarse, mode="F").resize((size, size), Image.BICUBIC)
    ).copy()
    for _ in range(7):
        w, h = int(rng.integers(3, 10)), int(rng.integers(3, 10))
        u, v = int(rng.integers(0, size - h)), int(rng.integers(0, size - w))
        img[u : u + h, v : v + w] = float(rng.uniform(0, 255))
    blob = 12
    u = int(rng.integers(0, size - blob))
    v = int(rng.integers(0, size - blob))
    period = float(rng.uniform(5.0, 9.0))
    theta = float(rng.uniform(0, np.pi))
    yy, xx = np.mgrid[0:blob, 0:blob]
    wave = np.sin(
        2 * np.pi * (np.cos(theta) * xx + np.sin(theta) * yy) / period
        + float(rng.uniform(0, 2 * np.pi))
    )
    img[u : u + blob, v : v + blob] = 127.5 + float(rng.uniform(50, 90)) * wave
    rgb = np.repeat(np.clip(img, 0, 255)[:, :, None], 3, axis=2)
    return np.floor(rgb + 0.5).astype(np.uint8)


def cli(*args):
    proc = subprocess.run(
        [sys.executable, "-m", "patchpick.cli", *args],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, f"patchpick {args} failed:\n{proc.stdout}\n{proc.stderr}"
    return proc.stdout


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    train_hr = root / "train_hr"
    train_lr = root / "train_lr"
    val_hr = root / "val_hr"
    val_lr = root / "val_lr"
    out = root / "out"
    for d in (train_hr, val_hr):
        os.makedirs(d)
    rng = np.random.default_rng(2024)
    for i in range(N_TRAIN):
        Image.fromarray(synth_image(rng)).save(train_hr / f"t{i:02d}.png")
    for i in range(N_VAL):
        Image.fromarray(synth_image(rng)).save(val_hr / f"v{i:02d}.png")

    cli("degrade", "--input", str(train_hr), "--output", str(train_lr), "--scale", str(SCALE))
    cli("degrade", "--input", str(val_hr), "--output", str(val_lr), "--scale", str(SCALE))

    config = {
        "input": str(train_hr),
        "output": str(out),
        "scale": SCALE,
        "patch_size": PATCH,
        "strategy": "greedy",
        "count": COUNT_PER_IMAGE,
        "lr_dir": str(train_lr),
        "emit": {"maps": True, "manifests": True, "heatmaps": False, "crops": True},
    }
    cfg_path = root / "job.json"
    cfg_path.write_text(json.dumps(config))
    cli("run", "--config", str(cfg_path))

    return {
        "root": root,
        "train_hr": str(train_hr),
        "train_lr": str(train_lr),
        "val_hr": str(val_hr),
        "val_lr": str(val_lr),
        "manifests": str(out / "manifests"),
        "maps": str(out / "maps"),
        "crops": str(out / "crops"),
    }


def manifest_paths(corpus):
    d = corpus["manifests"]
    return sorted(os.path.join(d, n) for n in os.listdir(d) if n.endswith(".json"))
