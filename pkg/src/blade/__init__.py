"""Trainable edge-adaptive image filtering.

Each output pixel is the inner product of one linear filter with the local
input patch; the filter is picked from a trained bank by quantized
structure-tensor features (orientation, strength, coherence). Training is
closed form per bucket via streaming Gram accumulation.
"""

from .bank import (
    BankFormatError,
    BankStats,
    FilterBank,
    blend_with_identity,
    delta_filter,
    deserialize,
    render_montage,
    serialize,
)
from .image import (
    Footprint,
    add_awgn,
    bayer_mosaic,
    bilinear_demosaic,
    downsample_2x,
    extract_patch,
    luma,
    mssim,
    psnr,
    upsample_2x,
)
from .inference import apply, apply_color, apply_per_channel, apply_two_stream
from .io import read_image, write_image
from .operators import FlowParams, bilateral, edge_tangent_flow, tv_flow
from .quantizer import QuantizerSpec, quantize, selection_map
from .structure_tensor import (
    Features,
    TensorField,
    diagonal_gradient,
    smooth_tensor,
    tensor_eigen,
    tensor_features,
    tensor_field,
)
from .training import (
    GramAccumulator,
    accumulate,
    augment_d4,
    build_gradient_q,
    solve_bucket,
    train,
    train_report,
)

__version__ = "0.1.0"

__all__ = [
    "BankFormatError",
    "BankStats",
    "FilterBank",
    "Features",
    "FlowParams",
    "Footprint",
    "GramAccumulator",
    "QuantizerSpec",
    "TensorField",
    "accumulate",
    "add_awgn",
    "apply",
    "apply_color",
    "apply_per_channel",
    "apply_two_stream",
    "augment_d4",
    "bayer_mosaic",
    "bilateral",
    "bilinear_demosaic",
    "blend_with_identity",
    "build_gradient_q",
    "delta_filter",
    "deserialize",
    "diagonal_gradient",
    "downsample_2x",
    "edge_tangent_flow",
    "extract_patch",
    "luma",
    "mssim",
    "psnr",
    "quantize",
    "read_image",
    "render_montage",
    "selection_map",
    "serialize",
    "smooth_tensor",
    "solve_bucket",
    "tensor_eigen",
    "tensor_features",
    "tensor_field",
    "train",
    "train_report",
    "tv_flow",
    "upsample_2x",
    "write_image",
]
