"""Backward warping along a flow field (the remapping used to undo advection)."""
import numpy as np

from ._validation import as_values, check_same_shape
from .core import EvalCase, FlowField2D, ScalarField2D


def sample_bilinear(values, y, x):
    """Sample ``values`` at fractional ``(y, x)`` positions, clamping to the border."""
    values = np.asarray(values, dtype=np.float64)
    h, w = values.shape
    x = np.clip(x, 0.0, w - 1)
    y = np.clip(y, 0.0, h - 1)
    x0 = np.floor(x).astype(np.intp)
    y0 = np.floor(y).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0

    a = values[y0, x0]
    b = values[y0, x1]
    c = values[y1, x0]
    d = values[y1, x1]
    # a + f*(b - a) keeps integer positions exact (f == 0 returns a untouched)
    top = a + fx * (b - a)
    bottom = c + fx * (d - c)
    out = top + fy * (bottom - top)
    # guard the convex-combination bound against last-bit rounding
    return np.clip(out, values.min(), values.max())


def remap_array(values, vx, vy):
    """Bilinearly sample ``values`` at ``(col + vx, row + vy)``.

    Sample positions outside the grid are clamped to the border, which
    amounts to edge replication. Plain arrays in, plain array out; this is
    the hot path inside the flow solver.
    """
    rows, cols = np.indices(np.shape(values), dtype=np.float64)
    return sample_bilinear(values, rows + vy, cols + vx)


def remap(field: ScalarField2D, flow: FlowField2D) -> ScalarField2D:
    """Warp ``field`` backward along ``flow``.

    ``output(x, y) = field(x + vx(x, y), y + vy(x, y))``. With the flow
    returned by ``extract_flow(a, b)``, ``remap(b, flow)`` lines ``b`` up
    with ``a``.
    """
    values = as_values(field)
    check_same_shape(("field", values), ("flow", flow.vx))
    out = remap_array(values, flow.vx, flow.vy)
    if isinstance(field, ScalarField2D):
        return field.with_values(out)
    return ScalarField2D(out)


def de_advect(case: EvalCase, flow_truth: FlowField2D, flow_pred: FlowField2D):
    """Remove advection from truth and prediction.

    Returns ``(remap(truth, flow_truth), remap(prediction, flow_pred))``;
    whatever still differs from the observation afterwards is intensity
    change at fixed location.
    """
    return remap(case.truth, flow_truth), remap(case.prediction, flow_pred)
