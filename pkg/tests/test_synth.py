import numpy as np
import pytest
from dataclasses import replace

from acemetric.exceptions import InvalidParameter, InvalidSpec
from acemetric.synth import (Band, BlobMixture, GaussianBlob, Plateau, SynthSpec, generate,
                             perturb, random_spec, spec_from_text, support_mask)


def peak(values):
    return np.unravel_index(np.argmax(values), values.shape)


def test_static_spec_gives_identical_frames():
    frames = generate(SynthSpec(steps=3))
    assert len(frames) == 3
    assert all(np.array_equal(frames[0].values, f.values) for f in frames)


def test_translation_moves_peak():
    spec = SynthSpec(64, 64, GaussianBlob(30, 30, 4), advection=(3, -2), steps=2)
    f0, f1 = generate(spec)
    r0, c0 = peak(f0.values)
    r1, c1 = peak(f1.values)
    assert (c1 - c0, r1 - r0) == (3, -2)


def test_convection_rate_is_exact_at_peak():
    spec = SynthSpec(64, 64, GaussianBlob(32, 32, 5), convection_rate=0.05, steps=2)
    f0, f1 = generate(spec)
    assert f1.values.max() - f0.values.max() == pytest.approx(0.05, abs=1e-15)
    mask = support_mask(spec)
    np.testing.assert_allclose((f1.values - f0.values)[mask], 0.05, atol=1e-15)
    assert not (f1.values - f0.values)[~mask].any()


def test_generate_deterministic():
    spec = random_spec(7)
    a, b = generate(spec), generate(spec)
    assert all(np.array_equal(x.values, y.values) for x, y in zip(a, b))
    c = generate(replace(spec, seed=8))
    assert not np.array_equal(a[0].values, c[0].values)


@pytest.mark.parametrize("kwargs", [
    {"advection": (17, 0)},
    {"pattern": GaussianBlob(10, 10, 1.5)},
    {"height": 4},
    {"steps": 0},
    {"pattern": BlobMixture()},
    {"pattern": Plateau(10, 10, 5, edge_width=1)},
])
def test_invalid_specs(kwargs):
    with pytest.raises(InvalidSpec):
        SynthSpec(**kwargs)


def test_patterns_finite():
    for pattern in (Band(30, 12), Plateau(40, 40, 20), BlobMixture(count=5, sigma=4)):
        frames = generate(SynthSpec(80, 80, pattern, advection=(2, 1), convection_rate=0.1, steps=3))
        assert all(np.isfinite(f.values).all() for f in frames)


def test_blur_small_sigma_is_near_identity(rng):
    f = generate(random_spec(1))[0]
    out = perturb(f, "blur", sigma=0.1)
    assert np.max(np.abs(out.values - f.values)) < 1e-3


def test_blur_constant_is_exact():
    c = np.full((16, 16), 0.37)
    for sigma in (0.5, 1, 3, 7.5):
        assert np.array_equal(perturb(c, "blur", sigma=sigma).values, c)


def test_blur_matches_scipy_reference():
    from scipy import ndimage
    f = generate(random_spec(2))[0].values
    for sigma in (1.0, 2.0, 3.0):
        ref = ndimage.gaussian_filter(f, sigma, mode="nearest", truncate=np.ceil(3 * sigma) / sigma)
        np.testing.assert_allclose(perturb(f, "blur", sigma=sigma).values, ref, atol=1e-12)


@pytest.mark.parametrize("sigma", [1.0, 2.0, 3.0])
def test_blur_preserves_mass(sigma):
    f = generate(SynthSpec(96, 96, GaussianBlob(48, 48, 6)))[0].values
    out = perturb(f, "blur", sigma=sigma).values
    assert abs(out.mean() - f.mean()) / f.mean() < 1e-6


def test_scale_amplitude():
    f = generate(random_spec(3))[0]
    assert np.array_equal(perturb(f, "scale_amplitude", factor=1.0).values, f.values)
    out = perturb(f, "scale_amplitude", factor=2.0).values
    np.testing.assert_allclose(out - f.values.mean(), 2 * (f.values - f.values.mean()), atol=1e-12)


def test_shift_integer_and_fractional():
    spec = SynthSpec(64, 64, GaussianBlob(30, 30, 5))
    f = generate(spec)[0]
    moved = generate(replace(spec, advection=(2, -1)))[1]
    out = perturb(f, "shift", dx=2, dy=-1)
    np.testing.assert_allclose(out.values[5:-5, 5:-5], moved.values[5:-5, 5:-5], atol=1e-12)
    half = perturb(f, "shift", dx=0.5, dy=0).values
    np.testing.assert_allclose(half[:, 1:], 0.5 * (f.values[:, 1:] + f.values[:, :-1]), atol=1e-12)


@pytest.mark.parametrize("kind,params", [
    ("blur", {"sigma": 0}), ("blur", {"sigma": -1}), ("scale_amplitude", {"factor": 0}),
    ("shift", {"dx": np.nan}), ("warp", {}),
])
def test_perturb_invalid(kind, params):
    with pytest.raises(InvalidParameter):
        perturb(np.zeros((8, 8)), kind, **params)


SPEC_TEXT = """
# blob moving right and up
height = 64
width = 80
pattern = gaussian_blob
center = 30, 32
sigma = 5
advection = 3, -2
convection_rate = 0.05
steps = 2
seed = 4
"""


def test_spec_from_text():
    spec = spec_from_text(SPEC_TEXT)
    assert (spec.height, spec.width, spec.advection, spec.convection_rate) == (64, 80, (3.0, -2.0), 0.05)
    assert spec.pattern == GaussianBlob(30, 32, 5)
    mix = spec_from_text("pattern = blob_mixture\nblobs = 20, 20, 4; 40, 40, 5, 0.5\n")
    assert len(mix.pattern.blobs) == 2 and mix.pattern.blobs[1].amplitude == 0.5
    plateau = spec_from_text("pattern = plateau\nradius = 20\nedge_width = 3\n")
    assert plateau.pattern.radius == 20
    band = spec_from_text("pattern = band\norientation = 45\nwavelength = 12\n")
    assert band.pattern == Band(45, 12)


@pytest.mark.parametrize("text,where", [
    ("height = 64\nbogus = 1\n", ":2: unknown field 'bogus'"),
    ("sigma = abc\n", ":1: field 'sigma'"),
    ("advection = 1\n", ":1: field 'advection'"),
    ("advection = 30, 0\n", "motion bound"),
    ("pattern = spiral\n", "unknown pattern"),
    ("just text\n", ":1: expected 'key = value'"),
])
def test_spec_errors_name_location(text, where):
    with pytest.raises(InvalidSpec, match=where):
        spec_from_text(text, "s.txt")
