"""Input validation helpers shared by the public functions and estimators."""
import numpy as np

from .exceptions import FieldTooSmall, NonFiniteInput, ShapeMismatch

MIN_SIZE = 8


def check_grid(values, name="field", min_size=MIN_SIZE):
    """Return ``values`` as a C-contiguous 2-D float64 array, or raise.

    Rejects non-finite entries and grids smaller than ``min_size`` per side.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < min_size or arr.shape[1] < min_size:
        raise FieldTooSmall(
            f"{name} is {arr.shape[0]}x{arr.shape[1]}; "
            f"both sides must be >= {min_size}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{name} contains NaN or Inf")
    return np.ascontiguousarray(arr)


def check_same_shape(*named):
    """``named`` is a sequence of ``(name, array)``; all shapes must agree."""
    shapes = [(n, np.shape(a)) for n, a in named]
    first = shapes[0][1]
    if any(s != first for _, s in shapes[1:]):
        desc = ", ".join(f"{n} {s[0]}x{s[1]}" if len(s) == 2 else f"{n} {s}"
                         for n, s in shapes)
        raise ShapeMismatch(f"shape mismatch: {desc}")
    return first


def as_values(obj):
    """Accept a field-like object (anything with ``.values``) or a raw array."""
    return getattr(obj, "values", obj)
