"""HEVC-style intra image codec whose decoder can replace residuals with
zero, a constant, or a Gaussian perturbation series."""

__version__ = "0.1.0"

from .codec import (DecodeResult, EncodedImage, StageTimings, deblock, decode_frame,
                    encode_frame, reconstruct_cu)
from .core import (CodecConfig, CodingTree, ConstantResidual, Frame, RandomPerturbation,
                   Standard, ZeroResidual, parse_strategy)
from .metrics import average_precision, iou, mean_average_precision, psnr
from .perturb import RpSeries, generate_rp_series

__all__ = [
    "CodecConfig", "CodingTree", "ConstantResidual", "DecodeResult", "EncodedImage", "Frame",
    "RandomPerturbation", "RpSeries", "StageTimings", "Standard", "ZeroResidual",
    "average_precision", "deblock", "decode_frame", "encode_frame", "generate_rp_series",
    "iou", "mean_average_precision", "parse_strategy", "psnr", "reconstruct_cu",
]
