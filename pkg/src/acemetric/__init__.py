"""Advection and convection error (ACE) for spatiotemporal forecasts."""
from .core import (EvalCase, FlowField2D, NormalizationTransform, ScalarField2D,
                   denormalize_case, normalize_case)
from .estimators import AceScorer, TvL1OpticalFlow
from .exceptions import AceError, ValidationError
from .metrics import (AceConfig, MetricReport, advection_error, baseline_metrics,
                      combine_ace, convection_error, evaluate_case)
from .tvl1 import Pyramid, TvL1Config, build_pyramid, extract_flow, median_filter
from .warp import de_advect, remap

__version__ = "0.1.0"

__all__ = [
    "AceConfig", "AceError", "AceScorer", "EvalCase", "FlowField2D", "MetricReport",
    "NormalizationTransform", "Pyramid", "ScalarField2D", "TvL1Config", "TvL1OpticalFlow",
    "ValidationError", "advection_error", "baseline_metrics", "build_pyramid", "combine_ace",
    "convection_error", "de_advect", "denormalize_case", "evaluate_case", "extract_flow",
    "median_filter", "normalize_case", "remap",
]
