"""Weakly-supervised joint convolutional sparse coding for simultaneous
super-resolution and cross-modality synthesis of volumetric images."""

from .align import (
    AlignedPair,
    AlignmentMatrix,
    KernelMatrix,
    align_features,
    alignment_residual,
    binarize_alignment,
    build_kernel_matrix,
    kernel_value,
    make_virtual_pairs,
)
from .csc import (
    EncodeResult,
    SolverConfig,
    csc_objective,
    encode,
    encode_coupled,
    reconstruct,
    soft_threshold,
    update_filters,
)
from .estimator import VolumeSynthesizer
from .features import HfFeatures, extract_hf_hr, extract_hf_lr
from .grid import conv_fourier, conv_spatial, crop_margin, fft2, ifft2, pad_periodic
from .quality import MetricReport, evaluate, psnr, ssim
from .resample import (
    DegradationSpec,
    PhantomSpec,
    bicubic_resize,
    degrade,
    generate_phantoms,
)
from .synth import SynthesisConfig, synthesize_slice, synthesize_volume
from .training import (
    MmdWeights,
    TrainConfig,
    TrainedModel,
    TrainingPair,
    TrainResult,
    build_mmd_weights,
    joint_objective,
    train,
    update_mapping,
)

__version__ = "0.1.0"

__all__ = [
    "AlignedPair", "AlignmentMatrix", "KernelMatrix", "align_features",
    "alignment_residual", "binarize_alignment", "build_kernel_matrix",
    "kernel_value", "make_virtual_pairs",
    "EncodeResult", "SolverConfig", "csc_objective", "encode",
    "encode_coupled", "reconstruct", "soft_threshold", "update_filters",
    "VolumeSynthesizer",
    "HfFeatures", "extract_hf_hr", "extract_hf_lr",
    "conv_fourier", "conv_spatial", "crop_margin", "fft2", "ifft2",
    "pad_periodic",
    "MetricReport", "evaluate", "psnr", "ssim",
    "DegradationSpec", "PhantomSpec", "bicubic_resize", "degrade",
    "generate_phantoms",
    "SynthesisConfig", "synthesize_slice", "synthesize_volume",
    "MmdWeights", "TrainConfig", "TrainedModel", "TrainingPair",
    "TrainResult", "build_mmd_weights", "joint_objective", "train",
    "update_mapping",
]
