"""Coarse-to-fine TV-L1 optical flow.

Duality-based solver: the intensity-constancy residual is linearized around
the current flow at each warp, then the energy

    sum |grad vx| + |grad vy| + lambda * |rho(v)|

is minimized by alternating a pointwise thresholding step on an auxiliary
flow with projected ascent on the dual variables of the total variation.
``theta`` couples the auxiliary flow to the primal one.

The returned flow ``v`` satisfies ``to(x + v(x)) ~= from(x)``, so it is the
displacement each pixel of ``from`` underwent to reach ``to``; remapping
``to`` with it undoes the motion.
"""
import math
from dataclasses import asdict, dataclass, fields
from typing import List

import numpy as np
from scipy import ndimage

from ._validation import MIN_SIZE, as_values, check_grid, check_same_shape
from .core import FlowField2D, ScalarField2D
from .exceptions import EvenKernel, FieldTooSmall, InvalidParameter
from .warp import remap_array, sample_bilinear

# below this squared gradient norm the data term carries no direction
_GRAD2_FLOOR = 1e-10


@dataclass(frozen=True)
class TvL1Config:
    tau: float = 0.25
    lambda_: float = 0.15
    theta: float = 0.3
    nscales: int = 5
    warps: int = 5
    epsilon: float = 0.01
    inner_iterations: int = 30
    outer_iterations: int = 10
    scale_step: float = 0.8
    median_filter_size: int = 5
    # the default lambda is tuned for 8-bit gray levels; normalized [0, 1]
    # inputs are multiplied by this before solving
    intensity_scale: float = 255.0

    def __post_init__(self):
        positive = ("tau", "lambda_", "theta", "epsilon", "intensity_scale")
        for name in positive:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidParameter(f"{name} must be > 0, got {value!r}")
        for name in ("nscales", "warps", "inner_iterations", "outer_iterations"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise InvalidParameter(f"{name} must be an integer >= 1, got {value!r}")
            object.__setattr__(self, name, int(value))
        if not 0 < self.scale_step < 1:
            raise InvalidParameter(f"scale_step must lie in (0, 1), got {self.scale_step!r}")
        k = self.median_filter_size
        if int(k) != k or k < 1 or k % 2 == 0:
            raise InvalidParameter(f"median_filter_size must be odd and >= 1, got {k!r}")
        object.__setattr__(self, "median_filter_size", int(k))

    def to_dict(self):
        """Plain dict with ``lambda`` spelled out (the trailing underscore is a Python artefact)."""
        d = asdict(self)
        d["lambda"] = d.pop("lambda_")
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "lambda" in d:
            d["lambda_"] = d.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidParameter(f"unknown solver parameter(s): {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True, eq=False)
class Pyramid:
    levels: List[ScalarField2D]

    def __len__(self):
        return len(self.levels)

    @property
    def shapes(self):
        return [lvl.shape for lvl in self.levels]


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def pyramid_shapes(shape, config: TvL1Config):
    """Level shapes, finest first, stopping before any side would drop below 8."""
    h, w = shape
    if h < MIN_SIZE or w < MIN_SIZE:
        raise FieldTooSmall(f"field is {h}x{w}; both sides must be >= {MIN_SIZE}")
    shapes = [(h, w)]
    while len(shapes) < config.nscales:
        h, w = shapes[-1]
        nh = _round_half_up(h * config.scale_step)
        nw = _round_half_up(w * config.scale_step)
        if nh < MIN_SIZE or nw < MIN_SIZE or (nh, nw) == (h, w):
            break
        shapes.append((nh, nw))
    return shapes


def _resize(values, shape):
    """Bilinear resampling with pixel centres aligned, borders replicated."""
    h, w = values.shape
    nh, nw = shape
    ys = (np.arange(nh) + 0.5) * (h / nh) - 0.5
    xs = (np.arange(nw) + 0.5) * (w / nw) - 0.5
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return sample_bilinear(values, yy, xx)


def _pyramid_arrays(values, config):
    shapes = pyramid_shapes(values.shape, config)
    sigma = 0.8 * math.sqrt(1.0 / config.scale_step ** 2 - 1.0)
    levels = [values]
    for shape in shapes[1:]:
        smoothed = ndimage.gaussian_filter(levels[-1], sigma, mode="nearest")
        levels.append(_resize(smoothed, shape))
    return levels


def build_pyramid(field, config: TvL1Config = TvL1Config()) -> Pyramid:
    """Gaussian pyramid; level 0 is the input itself.

    Each coarser level is the previous one smoothed with
    ``sigma = 0.8 * sqrt(1/scale_step**2 - 1)`` and resampled to
    ``round(size * scale_step)``. Fewer than ``nscales`` levels come back when
    a further level would be smaller than 8 pixels on a side.
    """
    if not isinstance(field, ScalarField2D):
        field = ScalarField2D(field)
    levels = _pyramid_arrays(field.values, config)
    out = [field] + [field.with_values(lvl) for lvl in levels[1:]]
    return Pyramid(out)


def median_filter(values, kernel):
    """Median over a ``kernel`` x ``kernel`` window with edge replication."""
    if int(kernel) != kernel or kernel < 1 or kernel % 2 == 0:
        raise EvenKernel(f"median kernel must be odd and >= 1, got {kernel!r}")
    values = np.asarray(values, dtype=np.float64)
    if kernel == 1:
        return values.copy()
    r = kernel // 2
    padded = np.pad(values, r, mode="edge")
    windows = np.lib.stride_tricks.sliding_window_view(padded, (kernel, kernel))
    return np.median(windows.reshape(values.shape + (kernel * kernel,)), axis=-1)


def _central_gradient(values):
    padded = np.pad(values, 1, mode="edge")
    gx = 0.5 * (padded[1:-1, 2:] - padded[1:-1, :-2])
    gy = 0.5 * (padded[2:, 1:-1] - padded[:-2, 1:-1])
    return gx, gy


def _forward_gradient(u):
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[:, :-1] = u[:, 1:] - u[:, :-1]
    gy[:-1, :] = u[1:, :] - u[:-1, :]
    return gx, gy


def _divergence(px, py):
    """Negative adjoint of :func:`_forward_gradient`."""
    div = np.zeros_like(px)
    div[:, 0] = px[:, 0]
    div[:, 1:-1] = px[:, 1:-1] - px[:, :-2]
    div[:, -1] = -px[:, -2]
    div[0, :] += py[0, :]
    div[1:-1, :] += py[1:-1, :] - py[:-2, :]
    div[-1, :] -= py[-2, :]
    return div


def _threshold(u1, u2, rho, gx, gy, grad2, lt):
    """Closed-form minimizer of the linearized data term around ``u``."""
    v1 = u1.copy()
    v2 = u2.copy()
    thr = lt * grad2
    low = rho < -thr
    high = rho > thr
    mid = ~(low | high) & (grad2 > _GRAD2_FLOOR)
    v1[low] += lt * gx[low]
    v2[low] += lt * gy[low]
    v1[high] -= lt * gx[high]
    v2[high] -= lt * gy[high]
    step = rho[mid] / grad2[mid]
    v1[mid] -= step * gx[mid]
    v2[mid] -= step * gy[mid]
    return v1, v2


def _solve_level(I0, I1, u1, u2, config):
    lt = config.lambda_ * config.theta
    taut = config.tau / config.theta
    theta = config.theta
    p11 = np.zeros_like(I0)
    p12 = np.zeros_like(I0)
    p21 = np.zeros_like(I0)
    p22 = np.zeros_like(I0)

    for _ in range(config.warps):
        I1w = remap_array(I1, u1, u2)
        gx, gy = _central_gradient(I1w)
        grad2 = gx * gx + gy * gy
        rho_c = I1w - gx * u1 - gy * u2 - I0

        for _ in range(config.outer_iterations):
            u1_prev, u2_prev = u1, u2
            rho = rho_c + gx * u1 + gy * u2
            v1, v2 = _threshold(u1, u2, rho, gx, gy, grad2, lt)
            for _ in range(config.inner_iterations):
                u1 = v1 + theta * _divergence(p11, p12)
                u2 = v2 + theta * _divergence(p21, p22)
                u1x, u1y = _forward_gradient(u1)
                u2x, u2y = _forward_gradient(u2)
                ng1 = 1.0 + taut * np.sqrt(u1x * u1x + u1y * u1y)
                ng2 = 1.0 + taut * np.sqrt(u2x * u2x + u2y * u2y)
                p11 = (p11 + taut * u1x) / ng1
                p12 = (p12 + taut * u1y) / ng1
                p21 = (p21 + taut * u2x) / ng2
                p22 = (p22 + taut * u2y) / ng2
            change = np.mean(np.abs(u1 - u1_prev) + np.abs(u2 - u2_prev))
            if change < config.epsilon:
                break

        u1 = median_filter(u1, config.median_filter_size)
        u2 = median_filter(u2, config.median_filter_size)
    return u1, u2


def extract_flow_arrays(src, dst, config: TvL1Config = TvL1Config()):
    """Array-level :func:`extract_flow`; returns ``(vx, vy)``."""
    src = check_grid(src, "from")
    dst = check_grid(dst, "to")
    check_same_shape(("from", src), ("to", dst))
    if config.intensity_scale != 1.0:
        src = src * config.intensity_scale
        dst = dst * config.intensity_scale
    pyr0 = _pyramid_arrays(src, config)
    pyr1 = _pyramid_arrays(dst, config)

    u1 = np.zeros_like(pyr0[-1])
    u2 = np.zeros_like(pyr0[-1])
    for level in range(len(pyr0) - 1, -1, -1):
        I0, I1 = pyr0[level], pyr1[level]
        if u1.shape != I0.shape:
            # flow is in pixels of its own level; rescale to the finer grid
            sy = I0.shape[0] / u1.shape[0]
            sx = I0.shape[1] / u1.shape[1]
            u1 = _resize(u1, I0.shape) * sx
            u2 = _resize(u2, I0.shape) * sy
        u1, u2 = _solve_level(I0, I1, u1, u2, config)
    return u1, u2


def extract_flow(src, dst, config: TvL1Config = TvL1Config()) -> FlowField2D:
    """Advection field between two scalar fields.

    ``remap(dst, flow)`` approximates ``src``. Inputs should share an
    intensity scale in [0, 1] (see :func:`acemetric.core.normalize_case`);
    ``config.intensity_scale`` maps that range onto the gray levels the
    default ``lambda`` was tuned for.
    """
    vx, vy = extract_flow_arrays(as_values(src), as_values(dst), config)
    return FlowField2D(vx, vy)
