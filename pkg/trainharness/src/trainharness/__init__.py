"""Toy SR training harness consuming patch-selection artifacts."""

from .datasets import ManifestPatchDataset, UniformPatchDataset
from .formats import read_importance_map, read_manifest
from .metrics import eval_psnr_y
from .model import EspcnTiny, build_model
from .train import TrainConfig, train_compare

__version__ = "0.1.0"
