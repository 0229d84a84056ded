import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from acemetric.core import EvalCase, FlowField2D, ScalarField2D
from acemetric.exceptions import ShapeMismatch
from acemetric.warp import de_advect, remap, remap_array

from conftest import textured


def brute_bilinear(values, y, x):
    """Scalar reference: clamp, then weight the four neighbours explicitly."""
    h, w = values.shape
    x = min(max(x, 0.0), w - 1.0)
    y = min(max(y, 0.0), h - 1.0)
    i0, j0 = int(np.floor(y)), int(np.floor(x))
    i1, j1 = min(i0 + 1, h - 1), min(j0 + 1, w - 1)
    fy, fx = y - i0, x - j0
    return ((1 - fy) * (1 - fx) * values[i0, j0] + (1 - fy) * fx * values[i0, j1]
            + fy * (1 - fx) * values[i1, j0] + fy * fx * values[i1, j1])


def test_zero_flow_is_bit_identical(rng):
    f = ScalarField2D(rng.normal(size=(16, 12)))
    out = remap(f, FlowField2D.zeros(f.shape))
    assert np.array_equal(out.values, f.values)


def test_integer_shift_takes_right_neighbour():
    values = np.tile(np.arange(10, 90, 10, dtype=float), (8, 1))
    out = remap(ScalarField2D(values), FlowField2D.uniform((8, 8), 1, 0)).values
    np.testing.assert_array_equal(out[:, :-1], values[:, 1:])
    np.testing.assert_array_equal(out[:, -1], values[:, -1])


def test_half_pixel_is_midpoint():
    values = np.zeros((8, 8))
    values[:, 1] = 1.0
    out = remap_array(values, np.full((8, 8), 0.5), np.zeros((8, 8)))
    assert out[4, 0] == pytest.approx(0.5, abs=1e-6)
    # hand-computed weights (0.5, 0.5) on columns [0, 1]
    cols = np.tile(np.arange(8.0), (8, 1))
    out = remap_array(cols, np.full((8, 8), 0.5), np.zeros((8, 8)))
    np.testing.assert_allclose(out[:, :-1], cols[:, :-1] + 0.5, atol=1e-12)


def test_matches_scalar_reference(rng):
    values = rng.normal(size=(9, 11))
    vx = rng.uniform(-4, 4, size=values.shape)
    vy = rng.uniform(-4, 4, size=values.shape)
    out = remap_array(values, vx, vy)
    for i in range(values.shape[0]):
        for j in range(values.shape[1]):
            assert out[i, j] == pytest.approx(brute_bilinear(values, i + vy[i, j], j + vx[i, j]),
                                              abs=1e-12)


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        remap(ScalarField2D(np.zeros((8, 8))), FlowField2D.zeros((8, 9)))


@settings(max_examples=50, deadline=None)
@given(values=arrays(np.float64, (8, 10), elements=st.floats(-1e3, 1e3)),
       flow=arrays(np.float64, (2, 8, 10), elements=st.floats(-20, 20)))
def test_range_never_exceeds_input(values, flow):
    out = remap_array(values, flow[0], flow[1])
    assert out.min() >= values.min()
    assert out.max() <= values.max()


@settings(max_examples=30, deadline=None)
@given(dx=st.integers(-3, 3), dy=st.integers(-3, 3), seed=st.integers(0, 1000))
def test_integer_uniform_flow_is_index_shift(dx, dy, seed):
    values = np.random.default_rng(seed).normal(size=(12, 12))
    out = remap_array(values, np.full((12, 12), float(dx)), np.full((12, 12), float(dy)))
    rows = slice(max(0, -dy), 12 - max(0, dy))
    cols = slice(max(0, -dx), 12 - max(0, dx))
    src = values[rows.start + dy:rows.stop + dy, cols.start + dx:cols.stop + dx]
    assert np.array_equal(out[rows, cols], src)


def test_de_advect_identical_inputs_are_identical(rng):
    f = rng.random((16, 16))
    case = EvalCase(f, f, f)
    flow = FlowField2D(rng.normal(size=(16, 16)), rng.normal(size=(16, 16)))
    a, b = de_advect(case, flow, flow)
    assert np.array_equal(a.values, b.values)


def test_de_advect_recovers_observation_from_shift():
    obs = textured(64, seed=1)
    truth = textured(64, seed=1, dx=3)
    case = EvalCase(obs, truth, truth)
    back, _ = de_advect(case, FlowField2D.uniform(obs.shape, 3, 0), FlowField2D.zeros(obs.shape))
    np.testing.assert_allclose(back.values[:, :-3], obs[:, :-3], atol=1e-12)


def test_de_advect_zero_flow_keeps_offset(rng):
    obs = rng.random((8, 8))
    case = EvalCase(obs, obs + 0.1, obs)
    back, _ = de_advect(case, FlowField2D.zeros((8, 8)), FlowField2D.zeros((8, 8)))
    assert np.array_equal(back.values, obs + 0.1)
