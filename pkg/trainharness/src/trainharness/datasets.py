"""Patch datasets: manifest-driven selection and the uniform baseline.

Both yield (lr_patch, hr_patch) uint8 crops; the training loop normalizes.
Crops are taken exactly as the selection toolkit's crop exporter takes them,
so a manifest entry's patches match the exported PNG files byte for byte.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .formats import Manifest, load_png, read_manifest


def mod_crop(arr: np.ndarray, scale: int) -> np.ndarray:
    h = arr.shape[0] - arr.shape[0] % scale
    w = arr.shape[1] - arr.shape[1] % scale
    return arr[:h, :w]


@dataclass(frozen=True)
class ImagePair:
    stem: str
    hr: np.ndarray
    lr: np.ndarray


def _resolve(path_from_manifest, directory, stem, scale=None):
    if path_from_manifest and os.path.exists(path_from_manifest):
        return path_from_manifest
    if directory is None:
        raise FileNotFoundError(f"cannot resolve image for {stem!r}")
    for name in (f"{stem}.png",) + ((f"{stem}x{scale}.png",) if scale else ()):
        candidate = os.path.join(directory, name)
        if os.path.exists(candidate):
            return candidate
    raise FileNotFoundError(f"no image for {stem!r} in {directory}")


def load_pairs(manifests, hr_dir=None, lr_dir=None):
    pairs = {}
    for m in manifests:
        hr = mod_crop(load_png(_resolve(m.hr_path, hr_dir, m.image)), m.scale)
        lr = load_png(_resolve(m.lr_path, lr_dir, m.image, m.scale))
        if hr.shape[0] != m.scale * lr.shape[0] or hr.shape[1] != m.scale * lr.shape[1]:
            raise ValueError(
                f"geometry mismatch for {m.image!r}: hr {hr.shape} vs lr {lr.shape} "
                f"at scale {m.scale}"
            )
        pairs[m.image] = ImagePair(m.image, hr, lr)
    return pairs


class ManifestPatchDataset:
    """All entries of the given manifests, reshuffled each epoch by seed."""

    def __init__(self, manifest_paths, hr_dir=None, lr_dir=None, seed: int = 0):
        self.manifests = [read_manifest(p) for p in sorted(manifest_paths)]
        if not self.manifests:
            raise ValueError("no manifests given")
        self.scale = self.manifests[0].scale
        self.patch_size = self.manifests[0].patch_size
        for m in self.manifests:
            if (m.scale, m.patch_size) != (self.scale, self.patch_size):
                raise ValueError("manifests disagree on scale/patch size")
        self.pairs = load_pairs(self.manifests, hr_dir, lr_dir)
        self.index = [
            (m.image, e) for m in self.manifests for e in m.entries
        ]
        self.seed = seed

    def __len__(self) -> int:
        return len(self.index)

    def crop(self, i: int):
        """(lr_patch, hr_patch) uint8 crops of entry i, export-file parity."""
        stem, e = self.index[i]
        pair = self.pairs[stem]
        k = self.patch_size
        kl = k // self.scale
        hr = pair.hr[e.u : e.u + k, e.v : e.v + k]
        lr = pair.lr[e.lr_u : e.lr_u + kl, e.lr_v : e.lr_v + kl]
        return lr, hr

    def epoch_order(self, epoch: int) -> np.ndarray:
        rng = np.random.default_rng((self.seed, epoch))
        return rng.permutation(len(self.index))

    def epoch_batches(self, epoch: int, batch_size: int):
        order = self.epoch_order(epoch)
        for start in range(0, len(order), batch_size):
            chunk = order[start : start + batch_size]
            lrs, hrs = zip(*(self.crop(int(i)) for i in chunk))
            yield np.stack(lrs), np.stack(hrs)


class UniformPatchDataset:
    """Uniformly sampled scale-aligned anchors, same per-epoch volume.

    The baseline the selection method is compared against: each epoch draws
    `count` fresh anchors uniformly from the valid stride-s grid of a random
    image, seeded for reproducibility.
    """

    def __init__(self, manifest_paths, hr_dir=None, lr_dir=None, seed: int = 0,
                 count: int | None = None):
        manifests = [read_manifest(p) for p in sorted(manifest_paths)]
        if not manifests:
            raise ValueError("no manifests given")
        self.scale = manifests[0].scale
        self.patch_size = manifests[0].patch_size
        self.pairs = load_pairs(manifests, hr_dir, lr_dir)
        self.stems = sorted(self.pairs)
        self.count = count if count is not None else sum(len(m.entries) for m in manifests)
        self.seed = seed

    def __len__(self) -> int:
        return self.count

    def epoch_batches(self, epoch: int, batch_size: int):
        rng = np.random.default_rng((self.seed, epoch, 1))
        k = self.patch_size
        kl = k // self.scale
        for start in range(0, self.count, batch_size):
            n = min(batch_size, self.count - start)
            lrs, hrs = [], []
            for _ in range(n):
                pair = self.pairs[self.stems[rng.integers(len(self.stems))]]
                max_lu = pair.lr.shape[0] - kl
                max_lv = pair.lr.shape[1] - kl
                lu = int(rng.integers(max_lu + 1))
                lv = int(rng.integers(max_lv + 1))
                lrs.append(pair.lr[lu : lu + kl, lv : lv + kl])
                u, v = lu * self.scale, lv * self.scale
                hrs.append(pair.hr[u : u + k, v : v + k])
            yield np.stack(lrs), np.stack(hrs)
