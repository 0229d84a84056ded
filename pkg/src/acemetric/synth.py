"""Synthetic sequences with known advection and convection.

Frames are evaluated from closed-form patterns at translated coordinates, so
the true motion carries no interpolation error. Convection is an additive
intensity change per step applied where the (moving) pattern exceeds 5% of
its peak.
"""
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .core import ScalarField2D
from .exceptions import InvalidParameter, InvalidSpec
from .io import parse_kv_text
from .warp import remap_array

SUPPORT_FRACTION = 0.05
MIN_SIGMA = 2.0


@dataclass(frozen=True)
class GaussianBlob:
    cx: float
    cy: float
    sigma: float
    amplitude: float = 1.0

    def evaluate(self, x, y):
        r2 = (x - self.cx) ** 2 + (y - self.cy) ** 2
        return self.amplitude * np.exp(-r2 / (2.0 * self.sigma ** 2))


@dataclass(frozen=True)
class BlobMixture:
    """Sum of blobs. With ``blobs`` empty, ``count`` blobs are placed from the seed."""

    blobs: Tuple[GaussianBlob, ...] = ()
    count: int = 0
    sigma: float = 6.0

    def resolve(self, height, width, seed):
        if self.blobs:
            return self
        rng = np.random.default_rng(seed)
        margin = min(3 * self.sigma, (min(height, width) - 1) / 4)
        blobs = []
        for _ in range(self.count):
            cx = rng.uniform(margin, width - 1 - margin)
            cy = rng.uniform(margin, height - 1 - margin)
            sigma = self.sigma * rng.uniform(0.8, 1.25)
            amp = rng.uniform(0.5, 1.0)
            blobs.append(GaussianBlob(cx, cy, sigma, amp))
        return BlobMixture(tuple(blobs), len(blobs), self.sigma)

    def evaluate(self, x, y):
        out = np.zeros(np.broadcast(x, y).shape)
        for blob in self.blobs:
            out += blob.evaluate(x, y)
        return out


@dataclass(frozen=True)
class Band:
    """Sinusoidal stripes in [0, 1]; ``orientation`` in degrees from the x axis."""

    orientation: float = 0.0
    wavelength: float = 16.0

    def evaluate(self, x, y):
        a = math.radians(self.orientation)
        phase = (x * math.cos(a) + y * math.sin(a)) * (2.0 * math.pi / self.wavelength)
        return 0.5 + 0.5 * np.sin(phase)


@dataclass(frozen=True)
class Plateau:
    """Flat-topped cell: a disc of ``radius`` with a tanh rim of ``edge_width``.

    Inside the flat top an intensity change cannot be mistaken for motion,
    which makes it the pattern of choice for checking convection recovery.
    """

    cx: float
    cy: float
    radius: float
    edge_width: float = 2.0
    amplitude: float = 1.0

    def evaluate(self, x, y):
        r = np.hypot(x - self.cx, y - self.cy)
        return self.amplitude * 0.5 * (1.0 - np.tanh((r - self.radius) / self.edge_width))


@dataclass(frozen=True)
class SynthSpec:
    height: int = 128
    width: int = 128
    pattern: object = field(default_factory=lambda: GaussianBlob(64.0, 64.0, 8.0))
    advection: Tuple[float, float] = (0.0, 0.0)
    convection_rate: float = 0.0
    steps: int = 2
    seed: int = 0

    def __post_init__(self):
        if int(self.height) != self.height or int(self.width) != self.width:
            raise InvalidSpec("height and width must be integers")
        if self.height < 8 or self.width < 8:
            raise InvalidSpec(f"grid {self.height}x{self.width} is smaller than 8x8")
        if self.steps < 1:
            raise InvalidSpec(f"steps must be >= 1, got {self.steps}")
        dx, dy = self.advection
        limit = min(self.height, self.width) / 8
        if abs(dx) > limit or abs(dy) > limit:
            raise InvalidSpec(
                f"advection ({dx}, {dy}) exceeds the motion bound "
                f"min(height, width)/8 = {limit:g}")
        if not all(map(math.isfinite, (dx, dy, self.convection_rate))):
            raise InvalidSpec("advection and convection_rate must be finite")
        _check_pattern(self.pattern)


def _check_pattern(pattern):
    if isinstance(pattern, GaussianBlob):
        if pattern.sigma < MIN_SIGMA:
            raise InvalidSpec(f"blob sigma {pattern.sigma} is below {MIN_SIGMA} px")
    elif isinstance(pattern, BlobMixture):
        if not pattern.blobs and pattern.count < 1:
            raise InvalidSpec("blob_mixture needs explicit blobs or count >= 1")
        if not pattern.blobs and pattern.sigma * 0.8 < MIN_SIGMA:
            raise InvalidSpec(f"blob_mixture sigma {pattern.sigma} is too small")
        for blob in pattern.blobs:
            _check_pattern(blob)
    elif isinstance(pattern, Plateau):
        if pattern.edge_width < MIN_SIGMA or pattern.radius <= 0:
            raise InvalidSpec(
                f"plateau needs radius > 0 and edge_width >= {MIN_SIGMA} px")
    elif isinstance(pattern, Band):
        if pattern.wavelength < 2 * MIN_SIGMA:
            raise InvalidSpec(f"band wavelength {pattern.wavelength} is too short")
    else:
        raise InvalidSpec(f"unknown pattern {pattern!r}")


def _resolved_pattern(spec):
    if isinstance(spec.pattern, BlobMixture):
        return spec.pattern.resolve(spec.height, spec.width, spec.seed)
    return spec.pattern


def support_mask(spec: SynthSpec, step: int = 0) -> np.ndarray:
    """Where the pattern exceeds 5% of its peak at frame ``step``."""
    pattern = _resolved_pattern(spec)
    base = _evaluate(pattern, spec, 0)
    values = _evaluate(pattern, spec, step)
    return values > SUPPORT_FRACTION * base.max()


def _evaluate(pattern, spec, step):
    y, x = np.mgrid[0:spec.height, 0:spec.width].astype(np.float64)
    dx, dy = spec.advection
    return pattern.evaluate(x - step * dx, y - step * dy)


def generate(spec: SynthSpec):
    """Frames ``0 .. steps-1`` as a list of fields.

    Frame ``t`` is the pattern translated by ``t * advection`` plus
    ``t * convection_rate`` inside the translated support mask.
    """
    pattern = _resolved_pattern(spec)
    peak = _evaluate(pattern, spec, 0).max()
    frames = []
    for t in range(spec.steps):
        values = _evaluate(pattern, spec, t)
        if spec.convection_rate and t:
            mask = values > SUPPORT_FRACTION * peak
            values = values + mask * (t * spec.convection_rate)
        frames.append(ScalarField2D(values))
    return frames


def _gaussian_kernel(sigma):
    radius = int(math.ceil(3 * sigma))
    offsets = np.arange(-radius, radius + 1)
    w = np.exp(-0.5 * (offsets / sigma) ** 2)
    return offsets, w / w.sum()


def _blur_axis(values, offsets, weights, axis):
    radius = offsets[-1]
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    padded = np.pad(values, pad, mode="edge")
    n = values.shape[axis]
    out = values.copy()
    # accumulate weighted differences so constant regions stay bit-exact
    for k, w in zip(offsets, weights):
        if k == 0:
            continue
        sl = slice(radius + k, radius + k + n)
        neighbour = padded[sl, :] if axis == 0 else padded[:, sl]
        out += w * (neighbour - values)
    return out


def gaussian_blur(values, sigma):
    """Separable truncated Gaussian (radius ``ceil(3 sigma)``), edge replication."""
    if not (math.isfinite(sigma) and sigma > 0):
        raise InvalidParameter(f"blur sigma must be > 0, got {sigma!r}")
    offsets, weights = _gaussian_kernel(sigma)
    values = np.asarray(values, dtype=np.float64)
    return _blur_axis(_blur_axis(values, offsets, weights, 0), offsets, weights, 1)


def shift(values, dx, dy):
    """Move content by ``(dx, dy)``: ``out(x, y) = values(x - dx, y - dy)``.

    Integer shifts are exact index moves with edge replication; fractional
    ones are bilinear.
    """
    values = np.asarray(values, dtype=np.float64)
    h, w = values.shape
    if float(dx).is_integer() and float(dy).is_integer():
        rows = np.clip(np.arange(h) - int(dy), 0, h - 1)
        cols = np.clip(np.arange(w) - int(dx), 0, w - 1)
        return values[np.ix_(rows, cols)]
    return remap_array(values, np.full((h, w), -float(dx)), np.full((h, w), -float(dy)))


def perturb(frame, kind, **params):
    """Degrade a frame the way imperfect forecasts do.

    ``kind`` is ``"blur"`` (``sigma``), ``"shift"`` (``dx``, ``dy``) or
    ``"scale_amplitude"`` (``factor``, applied to deviations from the mean).
    """
    values = getattr(frame, "values", frame)
    values = np.asarray(values, dtype=np.float64)
    for name, value in params.items():
        if not math.isfinite(value):
            raise InvalidParameter(f"{name} must be finite, got {value!r}")
    if kind == "blur":
        out = gaussian_blur(values, params["sigma"])
    elif kind == "shift":
        out = shift(values, params.get("dx", 0.0), params.get("dy", 0.0))
    elif kind == "scale_amplitude":
        factor = params["factor"]
        if factor <= 0:
            raise InvalidParameter(f"amplitude factor must be > 0, got {factor!r}")
        out = values + (factor - 1.0) * (values - values.mean())
    else:
        raise InvalidParameter(f"unknown perturbation {kind!r}")
    if isinstance(frame, ScalarField2D):
        return frame.with_values(out)
    return ScalarField2D(out)


# -- flat key = value spec files ------------------------------------------

def _floats(text, n=None, where=""):
    try:
        vals = tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise InvalidSpec(f"{where}: expected numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise InvalidSpec(f"{where}: expected {n} numbers, got {text!r}")
    return vals


_SPEC_KEYS = {"height", "width", "pattern", "center", "sigma", "amplitude", "blobs",
              "radius", "edge_width",
              "count", "orientation", "wavelength", "advection", "convection_rate",
              "steps", "seed"}


def spec_from_text(text, source="<spec>") -> SynthSpec:
    """Build a :class:`SynthSpec` from flat key = value text.

    Keys: ``height``, ``width``, ``pattern`` (``gaussian_blob``,
    ``blob_mixture``, ``plateau`` or ``band``), ``center = x, y``, ``sigma``,
    ``radius``, ``edge_width``,
    ``amplitude``, ``blobs = x, y, sigma[, amp]; ...``, ``count``,
    ``orientation``, ``wavelength``, ``advection = dx, dy``,
    ``convection_rate``, ``steps``, ``seed``.
    """
    kv = parse_kv_text(text, source, InvalidSpec)
    for key, (_, lineno) in kv.items():
        if key not in _SPEC_KEYS:
            raise InvalidSpec(f"{source}:{lineno}: unknown field {key!r}")

    def where(key):
        return f"{source}:{kv[key][1]}: field {key!r}" if key in kv else f"{source}: field {key!r}"

    def num(key, default, cast=float):
        if key not in kv:
            return default
        (v,) = _floats(kv[key][0], 1, where(key))
        if cast is int:
            if not v.is_integer():
                raise InvalidSpec(f"{where(key)}: expected an integer, got {kv[key][0]!r}")
            return int(v)
        return v

    height = num("height", 128, int)
    width = num("width", 128, int)
    kind = kv.get("pattern", ("gaussian_blob", 0))[0]
    if kind == "gaussian_blob":
        cx, cy = _floats(kv["center"][0], 2, where("center")) if "center" in kv \
            else ((width - 1) / 2, (height - 1) / 2)
        pattern = GaussianBlob(cx, cy, num("sigma", 8.0), num("amplitude", 1.0))
    elif kind == "plateau":
        cx, cy = _floats(kv["center"][0], 2, where("center")) if "center" in kv \
            else ((width - 1) / 2, (height - 1) / 2)
        pattern = Plateau(cx, cy, num("radius", min(height, width) / 4),
                          num("edge_width", 2.0), num("amplitude", 1.0))
    elif kind == "blob_mixture":
        blobs = []
        if "blobs" in kv:
            for chunk in kv["blobs"][0].split(";"):
                if not chunk.strip():
                    continue
                vals = _floats(chunk, None, where("blobs"))
                if len(vals) not in (3, 4):
                    raise InvalidSpec(f"{where('blobs')}: each blob is 'x, y, sigma[, amplitude]'")
                blobs.append(GaussianBlob(*vals))
        pattern = BlobMixture(tuple(blobs), num("count", 0, int), num("sigma", 6.0))
    elif kind == "band":
        pattern = Band(num("orientation", 0.0), num("wavelength", 16.0))
    else:
        raise InvalidSpec(f"{where('pattern')}: unknown pattern {kind!r}")

    advection = _floats(kv["advection"][0], 2, where("advection")) if "advection" in kv else (0.0, 0.0)
    try:
        return SynthSpec(height=height, width=width, pattern=pattern, advection=advection,
                         convection_rate=num("convection_rate", 0.0),
                         steps=num("steps", 2, int), seed=num("seed", 0, int))
    except InvalidSpec as exc:
        raise InvalidSpec(f"{source}: {exc}") from None


def random_spec(seed, size=96, convection_rate=0.0, max_shift=3, count=4, sigma=6.0) -> SynthSpec:
    """A seeded blob-mixture spec with random integer motion, for test suites."""
    rng = np.random.default_rng(seed)
    dx, dy = rng.integers(-max_shift, max_shift + 1, size=2)
    return SynthSpec(height=size, width=size, pattern=BlobMixture(count=count, sigma=sigma),
                     advection=(float(dx), float(dy)), convection_rate=convection_rate,
                     steps=2, seed=int(seed))
