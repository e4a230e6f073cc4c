"""patchpick: score and sample informative LR-HR training patches for SR."""

from .imagecore import FloatRaster, Raster, load_image, rgb_to_luma, save_image
from .importance import (
    ImportanceMap,
    MetricKind,
    PatchGeometry,
    mse_to_psnr,
    patch_mse,
    read_map,
    score_map_alternative,
    score_map_fast,
    score_map_naive,
    write_map,
)
from .integral import IntegralImage, build_integral, product_planes
from .pipeline import DatasetJob, EmitFlags, emit_heatmap, export_crops, run_dataset
from .resample import bicubic_downscale, bilinear_upscale, crop_to_multiple
from .sampling import (
    Manifest,
    PatchCandidate,
    SamplingConfig,
    iou,
    load_manifest,
    resolve_count,
    sample,
    sample_dart,
    sample_greedy,
    sample_nms,
    save_manifest,
)

__version__ = "0.1.0"
