"""Field types and intensity normalization.

Grids are row-major with the origin at the top-left: ``values[row, col]``,
``y`` grows downward with the row index and ``x`` grows with the column.
Flow components follow the same axes: positive ``vx`` points toward larger
column indices, positive ``vy`` toward larger row indices.
"""
from dataclasses import dataclass
from datetime import datetime
from typing import Optional, Tuple

import numpy as np

from ._validation import check_grid, check_same_shape
from .exceptions import DegenerateRange, InvalidParameter, ShapeMismatch


def _frozen(arr):
    arr = np.array(arr, dtype=np.float64, order="C", copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField2D:
    """One scalar variable on a 2-D grid at one time."""

    values: np.ndarray
    variable_name: Optional[str] = None
    valid_time: Optional[datetime] = None

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(check_grid(self.values, "field")))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    def with_values(self, values) -> "ScalarField2D":
        return ScalarField2D(values, self.variable_name, self.valid_time)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True, eq=False)
class FlowField2D:
    """Per-pixel displacement in pixels per frame interval."""

    vx: np.ndarray
    vy: np.ndarray

    def __post_init__(self):
        vx = check_grid(self.vx, "vx", min_size=1)
        vy = check_grid(self.vy, "vy", min_size=1)
        check_same_shape(("vx", vx), ("vy", vy))
        object.__setattr__(self, "vx", _frozen(vx))
        object.__setattr__(self, "vy", _frozen(vy))

    @classmethod
    def zeros(cls, shape) -> "FlowField2D":
        return cls(np.zeros(shape), np.zeros(shape))

    @classmethod
    def uniform(cls, shape, dx, dy) -> "FlowField2D":
        return cls(np.full(shape, float(dx)), np.full(shape, float(dy)))

    @property
    def height(self) -> int:
        return self.vx.shape[0]

    @property
    def width(self) -> int:
        return self.vx.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.vx.shape

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.vx, self.vy)


@dataclass(frozen=True, eq=False)
class EvalCase:
    """Observation at issue time, verifying truth, and the forecast of it."""

    observation: ScalarField2D
    truth: ScalarField2D
    prediction: ScalarField2D
    case_id: str = "case"

    def __post_init__(self):
        for name in ("observation", "truth", "prediction"):
            value = getattr(self, name)
            if not isinstance(value, ScalarField2D):
                object.__setattr__(self, name, ScalarField2D(value))
        try:
            check_same_shape(("observation", self.observation.values),
                             ("truth", self.truth.values),
                             ("prediction", self.prediction.values))
        except ShapeMismatch as exc:
            raise ShapeMismatch(f"case {self.case_id!r}: {exc}") from None

    @property
    def shape(self):
        return self.observation.shape


@dataclass(frozen=True)
class NormalizationTransform:
    """Affine map ``normalized = (raw - offset) * scale``."""

    offset: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise InvalidParameter(f"scale must be finite and > 0, got {self.scale}")
        if not np.isfinite(self.offset):
            raise InvalidParameter(f"offset must be finite, got {self.offset}")

    def apply(self, values):
        return (np.asarray(values, dtype=np.float64) - self.offset) * self.scale

    def invert(self, values):
        return np.asarray(values, dtype=np.float64) / self.scale + self.offset

    def to_dict(self):
        return {"offset": self.offset, "scale": self.scale}


def normalize_case(case: EvalCase) -> Tuple[EvalCase, NormalizationTransform]:
    """Rescale a case so observation and truth jointly span [0, 1].

    The transform comes from observation and truth only and is then applied
    unchanged to the prediction, so a forecast cannot move its own yardstick.
    Predicted values outside [0, 1] are kept as they are.
    """
    lo = min(case.observation.values.min(), case.truth.values.min())
    hi = max(case.observation.values.max(), case.truth.values.max())
    if not hi > lo:
        raise DegenerateRange(
            f"case {case.case_id!r}: observation and truth are jointly constant "
            f"({lo!r}); cannot normalize")
    lo, hi = float(lo), float(hi)
    # an exact [0, 1] case maps through the identity without rounding noise
    if lo == 0.0 and hi == 1.0:
        transform = NormalizationTransform(0.0, 1.0)
    else:
        transform = NormalizationTransform(lo, 1.0 / (hi - lo))
    normalized = EvalCase(
        observation=case.observation.with_values(transform.apply(case.observation.values)),
        truth=case.truth.with_values(transform.apply(case.truth.values)),
        prediction=case.prediction.with_values(transform.apply(case.prediction.values)),
        case_id=case.case_id,
    )
    return normalized, transform


def denormalize_case(case: EvalCase, transform: NormalizationTransform) -> EvalCase:
    return EvalCase(
        observation=case.observation.with_values(transform.invert(case.observation.values)),
        truth=case.truth.with_values(transform.invert(case.truth.values)),
        prediction=case.prediction.with_values(transform.invert(case.prediction.values)),
        case_id=case.case_id,
    )
