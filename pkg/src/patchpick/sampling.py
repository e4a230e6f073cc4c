"""Patch selection strategies over an importance map.

Three strategies: greedy (top-n by informativeness, overlaps allowed), NMS
(informativeness order with IoU suppression; the default threshold 0.0
selects strictly non-overlapping patches), and dart throwing (seeded random
non-overlapping candidates pruned to the most informative n).

Informativeness polarity follows the map's metric tag: for psnr-bilinear the
lowest PSNR ranks first, for the texture metrics the highest value does.
Ties break by (u, v) lexicographic order, so every strategy is fully
deterministic for a given map, config, and seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .importance import ImportanceMap, MetricKind

STRATEGIES = ("greedy", "nms", "dart")

_MASK64 = (1 << 64) - 1


class Xorshift64Star:
    """xorshift64* generator: shifts 12/25/27, multiplier 0x2545F4914F6CDD1D.

    The 64-bit seed is mixed through one splitmix64 step so any seed
    (including 0) yields a valid nonzero state. Fully specified so manifests
    reproduce across platforms.
    """

    MULTIPLIER = 0x2545F4914F6CDD1D

    def __init__(self, seed: int):
        z = (int(seed) + 0x9E3779B97F4A7C15) & _MASK64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        z ^= z >> 31
        self.state = z or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= (x >> 12)
        x ^= (x << 25) & _MASK64
        x ^= (x >> 27)
        self.state = x
        return (x * self.MULTIPLIER) & _MASK64

    def next_below(self, n: int) -> int:
        """Uniform-ish draw in [0, n) by modulo; bias is negligible for n << 2^64."""
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        return self.next_u64() % n


@dataclass(frozen=True)
class PatchCandidate:
    """A scored anchor: HR top-left (u, v), raw score, and rank key.

    The rank key is the polarity-adjusted score: ascending key order is
    informativeness order regardless of metric.
    """

    u: int
    v: int
    score: float
    key: float


@dataclass(frozen=True)
class SamplingConfig:
    """Strategy plus its knobs; exactly one of portion/count must be set."""

    strategy: str
    portion: float | None = None
    count: int | None = None
    nms_iou_threshold: float = 0.0
    dart_max_attempts: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if (self.portion is None) == (self.count is None):
            raise ValueError("exactly one of portion/count must be set")
        if self.portion is not None and not (0.0 < self.portion <= 1.0):
            raise ValueError(f"portion must be in (0, 1], got {self.portion}")
        if self.count is not None and self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")
        if not (0.0 <= self.nms_iou_threshold < 1.0):
            raise ValueError(
                f"nms_iou_threshold must be in [0, 1), got {self.nms_iou_threshold}"
            )
        if self.dart_max_attempts is not None and self.dart_max_attempts < 1:
            raise ValueError(
                f"dart_max_attempts must be >= 1, got {self.dart_max_attempts}"
            )


@dataclass(frozen=True)
class ManifestEntry:
    u: int
    v: int
    lr_u: int
    lr_v: int
    score: float


@dataclass(frozen=True)
class Manifest:
    """Ordered selection result plus the provenance needed to re-crop it."""

    image: str
    hr_path: str | None
    lr_path: str | None
    scale: int
    patch_size: int
    stride: int
    metric: str
    strategy: str
    portion: float | None
    count_requested: int
    seed: int | None
    entries: tuple = field(default_factory=tuple)

    @property
    def count_selected(self) -> int:
        return len(self.entries)


def resolve_count(p: float, total_anchors: int) -> int:
    """max(1, floor(p * total)): at least one patch per image."""
    if not (0.0 < p <= 1.0):
        raise ValueError(f"portion must be in (0, 1], got {p}")
    if total_anchors < 1:
        raise ValueError(f"total_anchors must be >= 1, got {total_anchors}")
    # The epsilon absorbs binary-float artifacts like 0.3 * 10 -> 2.9999...
    return max(1, int(math.floor(p * total_anchors + 1e-9)))


def iou(a: PatchCandidate, b: PatchCandidate, k: int) -> float:
    """Intersection-over-union of two axis-aligned k-by-k patches."""
    return _iou_uv(a.u, a.v, b.u, b.v, k)


def _iou_uv(u1: int, v1: int, u2: int, v2: int, k: int) -> float:
    dv = max(0, k - abs(v1 - v2))
    du = max(0, k - abs(u1 - u2))
    inter = du * dv
    if inter == 0:
        return 0.0
    return inter / (2.0 * k * k - inter)


def _candidate_arrays(m: ImportanceMap):
    """Anchor coordinates, scores, and rank keys in informativeness order."""
    rows, cols = m.rows, m.cols
    stride = m.geometry.stride
    u = (np.arange(rows, dtype=np.int64)[:, None] * stride).repeat(cols, axis=1).ravel()
    v = np.tile(np.arange(cols, dtype=np.int64) * stride, rows)
    scores = m.scores.ravel().astype(np.float64)
    key = -scores if m.metric.higher_is_informative else scores
    order = np.lexsort((v, u, key))
    return u[order], v[order], scores[order]


def _resolved_count(cfg: SamplingConfig, total: int) -> int:
    if cfg.count is not None:
        return cfg.count
    return resolve_count(cfg.portion, total)


def _make_manifest(m: ImportanceMap, cfg: SamplingConfig, u, v, scores, requested: int,
                   image: str, hr_path: str | None, lr_path: str | None) -> Manifest:
    s = m.geometry.scale
    entries = tuple(
        ManifestEntry(int(uu), int(vv), int(uu) // s, int(vv) // s, float(sc))
        for uu, vv, sc in zip(u, v, scores)
    )
    return Manifest(
        image=image,
        hr_path=hr_path,
        lr_path=lr_path,
        scale=s,
        patch_size=m.geometry.k,
        stride=m.geometry.stride,
        metric=m.metric.value,
        strategy=cfg.strategy,
        portion=cfg.portion,
        count_requested=requested,
        seed=cfg.seed,
        entries=entries,
    )


def sample_greedy(m: ImportanceMap, cfg: SamplingConfig, image: str = "",
                  hr_path: str | None = None, lr_path: str | None = None) -> Manifest:
    """Top-n anchors by informativeness; overlaps permitted."""
    if cfg.strategy != "greedy":
        raise ValueError(f"config strategy is {cfg.strategy!r}, expected 'greedy'")
    u, v, scores = _candidate_arrays(m)
    if u.size == 0:
        raise ValueError("empty anchor grid")
    n = min(_resolved_count(cfg, u.size), u.size)
    return _make_manifest(m, cfg, u[:n], v[:n], scores[:n], n, image, hr_path, lr_path)


def sample_nms(m: ImportanceMap, cfg: SamplingConfig, image: str = "",
               hr_path: str | None = None, lr_path: str | None = None) -> Manifest:
    """Informativeness order with IoU suppression against accepted patches.

    May select fewer than requested when candidates run out; the manifest
    records both the requested and selected counts.
    """
    if cfg.strategy != "nms":
        raise ValueError(f"config strategy is {cfg.strategy!r}, expected 'nms'")
    u, v, scores = _candidate_arrays(m)
    if u.size == 0:
        raise ValueError("empty anchor grid")
    n = min(_resolved_count(cfg, u.size), u.size)
    k = m.geometry.k
    thr = cfg.nms_iou_threshold
    acc_u = np.empty(n, dtype=np.int64)
    acc_v = np.empty(n, dtype=np.int64)
    taken = []
    count = 0
    for i in range(u.size):
        if count == n:
            break
        if count:
            du = np.maximum(0, k - np.abs(acc_u[:count] - u[i]))
            dv = np.maximum(0, k - np.abs(acc_v[:count] - v[i]))
            inter = du * dv
            union = 2.0 * k * k - inter
            if (inter / union > thr).any():
                continue
        acc_u[count] = u[i]
        acc_v[count] = v[i]
        taken.append(i)
        count += 1
    idx = np.asarray(taken, dtype=np.int64)
    return _make_manifest(m, cfg, u[idx], v[idx], scores[idx], n, image, hr_path, lr_path)


def sample_dart(m: ImportanceMap, cfg: SamplingConfig, image: str = "",
                hr_path: str | None = None, lr_path: str | None = None) -> Manifest:
    """Dart throwing: seeded random non-overlapping candidates, pruned to n.

    Phase 1 draws anchors uniformly from the grid, accepting only darts
    disjoint from all accepted ones, until the consecutive-rejection budget
    (dart_max_attempts, default 10 * requested count) is spent. Phase 2
    keeps the n most informative accepted darts.
    """
    if cfg.strategy != "dart":
        raise ValueError(f"config strategy is {cfg.strategy!r}, expected 'dart'")
    if cfg.seed is None:
        raise ValueError("dart sampling requires a seed")
    rows, cols = m.rows, m.cols
    total = rows * cols
    if total == 0:
        raise ValueError("empty anchor grid")
    n = min(_resolved_count(cfg, total), total)
    budget = cfg.dart_max_attempts if cfg.dart_max_attempts is not None else 10 * n
    k = m.geometry.k
    stride = m.geometry.stride
    rng = Xorshift64Star(cfg.seed)
    # Disjoint k-by-k squares admit at most one accepted anchor per k-by-k
    # cell, so overlap checks reduce to the 3x3 cell neighborhood.
    cells: dict = {}
    accepted: list = []
    rejections = 0
    while rejections < budget and len(accepted) < total:
        idx = rng.next_below(total)
        uu = (idx // cols) * stride
        vv = (idx % cols) * stride
        cu, cv = uu // k, vv // k
        hit = False
        for dcu in (-1, 0, 1):
            for dcv in (-1, 0, 1):
                other = cells.get((cu + dcu, cv + dcv))
                if other is not None and abs(other[0] - uu) < k and abs(other[1] - vv) < k:
                    hit = True
                    break
            if hit:
                break
        if hit:
            rejections += 1
            continue
        cells[(cu, cv)] = (uu, vv)
        accepted.append((uu, vv))
        rejections = 0
    du = np.array([p[0] for p in accepted], dtype=np.int64)
    dv = np.array([p[1] for p in accepted], dtype=np.int64)
    r = du // stride
    c = dv // stride
    scores = m.scores[r, c].astype(np.float64)
    key = -scores if m.metric.higher_is_informative else scores
    order = np.lexsort((dv, du, key))[: min(n, len(accepted))]
    return _make_manifest(
        m, cfg, du[order], dv[order], scores[order], n, image, hr_path, lr_path
    )


def sample(m: ImportanceMap, cfg: SamplingConfig, image: str = "",
           hr_path: str | None = None, lr_path: str | None = None) -> Manifest:
    """Dispatch to the strategy named in the config."""
    fn = {"greedy": sample_greedy, "nms": sample_nms, "dart": sample_dart}[cfg.strategy]
    return fn(m, cfg, image, hr_path, lr_path)


# ---------------------------------------------------------------------------
# Manifest JSON serialization
# ---------------------------------------------------------------------------


def _score_to_json(score: float):
    if math.isinf(score):
        return "inf"
    return score


def manifest_to_json(manifest: Manifest) -> str:
    obj = {
        "image": manifest.image,
        "hr_path": manifest.hr_path,
        "lr_path": manifest.lr_path,
        "scale": manifest.scale,
        "patch_size": manifest.patch_size,
        "stride": manifest.stride,
        "metric": manifest.metric,
        "strategy": manifest.strategy,
        "portion": manifest.portion,
        "count_requested": manifest.count_requested,
        "count_selected": manifest.count_selected,
        "seed": manifest.seed,
        "entries": [
            {
                "u": e.u,
                "v": e.v,
                "lr_u": e.lr_u,
                "lr_v": e.lr_v,
                "score": _score_to_json(e.score),
            }
            for e in manifest.entries
        ],
    }
    return json.dumps(obj, indent=2) + "\n"


def manifest_from_json(text: str) -> Manifest:
    obj = json.loads(text)
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
        hr_path=obj["hr_path"],
        lr_path=obj["lr_path"],
        scale=int(obj["scale"]),
        patch_size=int(obj["patch_size"]),
        stride=int(obj["stride"]),
        metric=obj["metric"],
        strategy=obj["strategy"],
        portion=obj["portion"],
        count_requested=int(obj["count_requested"]),
        seed=obj["seed"],
        entries=entries,
    )


def save_manifest(manifest: Manifest, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(manifest_to_json(manifest))


def load_manifest(path: str) -> Manifest:
    with open(path, "r", encoding="utf-8") as fh:
        return manifest_from_json(fh.read())
