"""Adaptive discriminator augmentation toolkit.

A framework-agnostic implementation of the stochastic augmentation pipeline
(pixel blitting, geometry, color, frequency-band filtering, noise, cutout)
with exact reverse-mode gradients, the feedback controller that adapts the
shared strength p from overfitting heuristics, and an analyzer that tests
augmentation operators for the invertibility that makes them non-leaking.
"""

from .controller import (ControllerState, OverfitStats, heuristic_rt,
                         heuristic_rv, simulate, update)
from .errors import AugmentError, ContractError, PaddingError
from .geometry import calculate_padding, execute_geometry, warp_affine
from .leakage import (LeakVerdict, MarkovOperator, MixtureSpec,
                      build_group_operator, build_projection_mixture,
                      dft_zero_check, gated_uniform_mixture,
                      null_space_witness, product_noise_cf)
from .params import (ColorMatrix, CorruptionParams, FilterGain, GeomParams,
                     sample_color, sample_corruption, sample_filter,
                     sample_geom)
from .photometric import (apply_color, apply_corruption, apply_filter,
                          build_amplification_filter)
from .pipeline import (AugmentRecord, PipelineConfig, augment, augment_replay,
                       augment_vjp)
from .rng import ImageRng
from .wavelets import WaveletFilter, downsample2x2, upsample2x2, wavelet

__all__ = [
    "AugmentError", "AugmentRecord", "ColorMatrix", "ContractError",
    "ControllerState", "CorruptionParams", "FilterGain", "GeomParams",
    "ImageRng", "LeakVerdict", "MarkovOperator", "MixtureSpec",
    "OverfitStats", "PaddingError", "PipelineConfig", "WaveletFilter", "apply_color",
    "apply_corruption", "apply_filter", "augment", "augment_replay",
    "augment_vjp", "build_amplification_filter", "build_group_operator",
    "build_projection_mixture", "calculate_padding", "dft_zero_check",
    "downsample2x2", "execute_geometry", "gated_uniform_mixture",
    "heuristic_rt", "heuristic_rv", "null_space_witness", "product_noise_cf",
    "sample_color", "sample_corruption", "sample_filter", "sample_geom",
    "simulate", "update", "upsample2x2", "warp_affine", "wavelet",
]

__version__ = "0.1.0"
