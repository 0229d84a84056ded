"""Advection error, convection error, their combination, and baseline scores."""
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy import ndimage

from ._validation import as_values, check_same_shape
from .core import (EvalCase, FlowField2D, NormalizationTransform, ScalarField2D,
                   normalize_case)
from .exceptions import InvalidParameter, NegativeInput, ValidationError
from .tvl1 import TvL1Config, extract_flow
from .warp import remap_array

AE_REDUCTION = "mean(|dvx| + |dvy|)"
CE_REDUCTION = "mean(||obs - remap(pred)| - |obs - remap(truth)||)"
SSIM_WINDOW = "uniform 7x7, sample covariance, k1=0.01, k2=0.03, border cropped"
PSNR_CAP_DB = 100.0
SSIM_WIN = 7
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class AceConfig:
    tvl1: TvL1Config = field(default_factory=TvL1Config)
    ace_epsilon: float = 1e-6
    emit_maps: bool = False
    data_range: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.ace_epsilon) and self.ace_epsilon > 0):
            raise InvalidParameter(f"ace_epsilon must be > 0, got {self.ace_epsilon!r}")
        if not (math.isfinite(self.data_range) and self.data_range > 0):
            raise InvalidParameter(f"data_range must be > 0, got {self.data_range!r}")

    def to_dict(self):
        return {
            "tvl1": self.tvl1.to_dict(),
            "ace_epsilon": self.ace_epsilon,
            "emit_maps": self.emit_maps,
            "data_range": self.data_range,
            "reductions": {"ae": AE_REDUCTION, "ce": CE_REDUCTION,
                           "ssim": SSIM_WINDOW, "psnr_cap_db": PSNR_CAP_DB},
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d.pop("reductions", None)
        tvl1 = TvL1Config.from_dict(d.pop("tvl1", {}))
        return cls(tvl1=tvl1, **d)


@dataclass(eq=False)
class MetricReport:
    case_id: str
    ae: float
    ce: float
    ace: float
    mae: float
    mse: float
    rmse: float
    psnr: float
    ssim: float
    normalization: NormalizationTransform = field(default_factory=NormalizationTransform)
    maps: Optional[Dict[str, ScalarField2D]] = None

    SCALARS = ("ae", "ce", "ace", "mae", "mse", "rmse", "psnr", "ssim")

    def scalars(self):
        return {name: getattr(self, name) for name in self.SCALARS}


def flow_difference_map(flow_a: FlowField2D, flow_b: FlowField2D) -> np.ndarray:
    """Per-pixel ``|dvx| + |dvy|`` between two flows."""
    check_same_shape(("flow_a", flow_a.vx), ("flow_b", flow_b.vx))
    return np.abs(flow_a.vx - flow_b.vx) + np.abs(flow_a.vy - flow_b.vy)


def advection_error(observation, truth, prediction, config: AceConfig = AceConfig()):
    """Mean L1 difference between the truth and prediction advection fields.

    Returns ``(ae, flow_truth, flow_pred, ae_map)``. Both flows are extracted
    from the observation, so they describe the motion each field implies
    since issue time.
    """
    obs, tru, pred = as_values(observation), as_values(truth), as_values(prediction)
    check_same_shape(("observation", obs), ("truth", tru), ("prediction", pred))
    flow_truth = extract_flow(obs, tru, config.tvl1)
    flow_pred = extract_flow(obs, pred, config.tvl1)
    ae_map = flow_difference_map(flow_truth, flow_pred)
    return float(ae_map.mean()), flow_truth, flow_pred, ScalarField2D(ae_map)


def convection_error_map(observation, truth, prediction, flow_truth, flow_pred):
    obs, tru, pred = as_values(observation), as_values(truth), as_values(prediction)
    check_same_shape(("observation", obs), ("truth", tru), ("prediction", pred),
                     ("flow_truth", flow_truth.vx), ("flow_pred", flow_pred.vx))
    truth_back = remap_array(tru, flow_truth.vx, flow_truth.vy)
    pred_back = remap_array(pred, flow_pred.vx, flow_pred.vy)
    return np.abs(np.abs(obs - pred_back) - np.abs(obs - truth_back))


def convection_error(observation, truth, prediction, flow_truth: FlowField2D,
                     flow_pred: FlowField2D):
    """Intensity-change error left after each field's own advection is undone.

    Returns ``(ce, ce_map)``.
    """
    ce_map = convection_error_map(observation, truth, prediction, flow_truth, flow_pred)
    return float(ce_map.mean()), ScalarField2D(ce_map)


def combine_ace(ae, ce, config: AceConfig = AceConfig()):
    """``ae + ce / max(ae, ace_epsilon)``.

    Poor advection shrinks the weight given to convection; a perfect
    forecast (both zero) scores 0.
    """
    if not (ae >= 0 and ce >= 0):
        raise NegativeInput(f"ae and ce must be >= 0, got ae={ae!r}, ce={ce!r}")
    return ae + ce / max(ae, config.ace_epsilon)


def psnr(mse, data_range=1.0):
    if mse < data_range ** 2 * 1e-10:
        return PSNR_CAP_DB
    return 10.0 * math.log10(data_range ** 2 / mse)


def ssim(x, y, data_range=1.0):
    """Mean SSIM over 7x7 uniform windows (border of 3 px excluded)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    check_same_shape(("x", x), ("y", y))
    n = SSIM_WIN * SSIM_WIN
    cov_norm = n / (n - 1.0)
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2

    def filt(a):
        return ndimage.uniform_filter(a, size=SSIM_WIN, mode="reflect")

    ux, uy = filt(x), filt(y)
    uxx, uyy, uxy = filt(x * x), filt(y * y), filt(x * y)
    vx = cov_norm * (uxx - ux * ux)
    vy = cov_norm * (uyy - uy * uy)
    vxy = cov_norm * (uxy - ux * uy)

    num = (2 * ux * uy + c1) * (2 * vxy + c2)
    den = (ux * ux + uy * uy + c1) * (vx + vy + c2)
    s = num / den
    pad = (SSIM_WIN - 1) // 2
    return float(s[pad:-pad, pad:-pad].mean())


def baseline_metrics(truth, prediction, data_range=1.0):
    """``(mae, mse, rmse, psnr, ssim)`` of prediction against truth."""
    tru, pred = as_values(truth), as_values(prediction)
    tru = np.asarray(tru, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    check_same_shape(("truth", tru), ("prediction", pred))
    if not data_range > 0:
        raise InvalidParameter(f"data_range must be > 0, got {data_range!r}")
    diff = pred - tru
    mae = float(np.abs(diff).mean())
    mse = float((diff * diff).mean())
    rmse = math.sqrt(mse)
    return mae, mse, rmse, psnr(mse, data_range), ssim(tru, pred, data_range)


def evaluate_normalized(case: EvalCase, config: AceConfig = AceConfig(), flow_truth=None,
                        normalization=None) -> MetricReport:
    """All metrics for a case that is already on the [0, 1] scale.

    ``flow_truth`` may be passed in when several predictions share one truth.
    """
    obs, tru, pred = case.observation.values, case.truth.values, case.prediction.values
    if flow_truth is None:
        flow_truth = extract_flow(obs, tru, config.tvl1)
    flow_pred = extract_flow(obs, pred, config.tvl1)
    ae_map = flow_difference_map(flow_truth, flow_pred)
    ae = float(ae_map.mean())
    ce_map = convection_error_map(obs, tru, pred, flow_truth, flow_pred)
    ce = float(ce_map.mean())
    mae, mse, rmse, psnr_db, ssim_val = baseline_metrics(tru, pred, config.data_range)
    maps = None
    if config.emit_maps:
        maps = {"ae": ScalarField2D(ae_map), "ce": ScalarField2D(ce_map)}
    return MetricReport(
        case_id=case.case_id, ae=ae, ce=ce, ace=combine_ace(ae, ce, config),
        mae=mae, mse=mse, rmse=rmse, psnr=psnr_db, ssim=ssim_val,
        normalization=normalization or NormalizationTransform(), maps=maps)


def evaluate_case(case: EvalCase, config: AceConfig = AceConfig()) -> MetricReport:
    """Normalize, then score a case. Errors name the case."""
    try:
        normalized, transform = normalize_case(case)
        return evaluate_normalized(normalized, config, normalization=transform)
    except ValidationError as exc:
        if case.case_id in str(exc):
            raise
        raise type(exc)(f"case {case.case_id!r}: {exc}") from exc
