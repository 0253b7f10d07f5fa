"""Quantized spectral super-resolution: noise-shaping encoders and atomic-measure decoders."""

from .blasso import BlassoConfig, blasso_grid, blasso_grid_solve, tvmin_decode_quantized
from .esprit import EspritConfig, esprit, esprit_decode_quantized
from .harness import TrialSpec, generate_measure, msq_floor_experiment, run_trial, sweep
from .measure import AtomicMeasure, fourier_coefficients, hankel, torus_distance, vandermonde
from .metrics import ErrorReport, error_inf2, error_report, errors_e123
from .noise_shaping import (
    QuantizerConfig,
    beta_quantize,
    condense,
    msq_quantize,
    reweight_decode,
    weight,
)

__version__ = "0.1.0"

__all__ = [
    "AtomicMeasure",
    "BlassoConfig",
    "ErrorReport",
    "EspritConfig",
    "QuantizerConfig",
    "TrialSpec",
    "beta_quantize",
    "blasso_grid",
    "blasso_grid_solve",
    "condense",
    "error_inf2",
    "error_report",
    "errors_e123",
    "esprit",
    "esprit_decode_quantized",
    "fourier_coefficients",
    "generate_measure",
    "hankel",
    "msq_floor_experiment",
    "msq_quantize",
    "reweight_decode",
    "run_trial",
    "sweep",
    "torus_distance",
    "tvmin_decode_quantized",
    "vandermonde",
    "weight",
]
