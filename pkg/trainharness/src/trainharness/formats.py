"""Readers for the patch-selection toolkit's on-disk formats.

This package deliberately talks to the selection toolkit only through its
published artifacts (manifest JSON, IIMP importance maps, PNG images), so
these readers are the contract surface: nothing here imports the producer.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image


@dataclass(frozen=True)
class ManifestEntry:
    u: int
    v: int
    lr_u: int
    lr_v: int
    score: float


@dataclass(frozen=True)
class Manifest:
    image: str
    hr_path: str | None
    lr_path: str | None
    scale: int
    patch_size: int
    stride: int
    metric: str
    strategy: str
    entries: tuple


def read_manifest(path: str) -> Manifest:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    entries = tuple(
        ManifestEntry(
            u=int(e["u"]),
            v=int(e["v"]),
            lr_u=int(e["lr_u"]),
            lr_v=int(e["lr_v"]),
            score=math.inf if e["score"] == "inf" else float(e["score"]),
        )
        for e in obj["entries"]
    )
    return Manifest(
        image=obj["image"],
        hr_path=obj.get("hr_path"),
        lr_path=obj.get("lr_path"),
        scale=int(obj["scale"]),
        patch_size=int(obj["patch_size"]),
        stride=int(obj["stride"]),
        metric=obj["metric"],
        strategy=obj["strategy"],
        entries=entries,
    )


@dataclass(frozen=True)
class ImportanceMap:
    scores: np.ndarray  # (rows, cols) float32
    patch_size: int
    stride: int
    scale: int
    metric_code: int


_IIMP_HEADER = struct.Struct("<4sHIIIIIB")


def read_importance_map(path: str) -> ImportanceMap:
    """Parse an IIMP v1 map (little-endian, float32 scores row-major)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _IIMP_HEADER.size:
        raise ValueError(f"truncated importance map: {path}")
    magic, version, rows, cols, k, stride, scale, code = _IIMP_HEADER.unpack_from(blob)
    if magic != b"IIMP" or version != 1:
        raise ValueError(f"not an IIMP v1 file: {path}")
    payload = blob[_IIMP_HEADER.size :]
    if len(payload) != rows * cols * 4:
        raise ValueError(f"importance map payload size mismatch: {path}")
    scores = np.frombuffer(payload, dtype="<f4").reshape(rows, cols)
    return ImportanceMap(scores=scores, patch_size=k, stride=stride, scale=scale,
                         metric_code=code)


def load_png(path: str) -> np.ndarray:
    """8-bit PNG as (H, W, C) uint8 with C in {1, 3}."""
    with Image.open(path) as img:
        if img.mode not in ("L", "RGB"):
            raise ValueError(f"unsupported PNG mode {img.mode!r}: {path}")
        arr = np.asarray(img, dtype=np.uint8)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr
