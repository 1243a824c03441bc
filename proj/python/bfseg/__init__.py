"""Building footprint segmentation with lenient deep supervision.

Thin Python layer over the C++ core. Images are float64 arrays of shape
(3, H, W) with values in [0, 1]; labels are uint8 arrays of shape (H, W)
holding 0 or 1. H and W must be multiples of 32.
"""

from ._bfseg import (
    STRIDES,
    Model,
    binarize,
    block_average,
    build_mask_pyramid,
    compute_metrics,
    confusion,
    count_lightfpn,
    count_unet_reference,
    downsample_label,
    evaluate,
    generate_scene,
    purity_mask,
    total_loss,
    train,
)

from ._bfseg import __version__

__all__ = [
    "STRIDES",
    "Model",
    "binarize",
    "block_average",
    "build_mask_pyramid",
    "compute_metrics",
    "confusion",
    "count_lightfpn",
    "count_unet_reference",
    "downsample_label",
    "evaluate",
    "generate_scene",
    "purity_mask",
    "total_loss",
    "train",
]
