from datetime import datetime

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acemetric.core import (EvalCase, FlowField2D, NormalizationTransform, ScalarField2D,
                            denormalize_case, normalize_case)
from acemetric.exceptions import (DegenerateRange, FieldTooSmall, InvalidParameter,
                                  NonFiniteInput, ShapeMismatch)


def test_field_is_immutable_and_copied():
    src = np.arange(64.0).reshape(8, 8)
    f = ScalarField2D(src, variable_name="t2m", valid_time=datetime(2020, 1, 1))
    src[0, 0] = 99
    assert f.values[0, 0] == 0
    assert (f.height, f.width) == (8, 8)
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0


@pytest.mark.parametrize("shape", [(7, 8), (8, 7), (3, 3)])
def test_field_minimum_size(shape):
    with pytest.raises(FieldTooSmall):
        ScalarField2D(np.zeros(shape))


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_field_rejects_non_finite(bad):
    values = np.zeros((8, 8))
    values[3, 4] = bad
    with pytest.raises(NonFiniteInput):
        ScalarField2D(values)


def test_flow_shapes_must_match():
    with pytest.raises(ShapeMismatch):
        FlowField2D(np.zeros((8, 8)), np.zeros((8, 9)))
    flow = FlowField2D.uniform((8, 9), 1.5, -2)
    assert flow.shape == (8, 9)
    assert np.all(flow.vx == 1.5) and np.all(flow.vy == -2)


def test_eval_case_shapes_must_match():
    a = np.zeros((8, 8))
    with pytest.raises(ShapeMismatch, match="case 'x'"):
        EvalCase(a, a, np.zeros((9, 8)), "x")


def test_transform_rejects_bad_scale():
    with pytest.raises(InvalidParameter):
        NormalizationTransform(0.0, 0.0)
    with pytest.raises(InvalidParameter):
        NormalizationTransform(0.0, -1.0)


def test_normalize_identity_case():
    values = np.zeros((8, 8))
    values[::2] = 1.0
    case = EvalCase(values, values, values)
    out, tr = normalize_case(case)
    assert (tr.offset, tr.scale) == (0.0, 1.0)
    np.testing.assert_array_equal(out.prediction.values, values)


def test_normalize_kelvin_like():
    obs = np.linspace(250, 310, 64).reshape(8, 8)
    truth = np.linspace(252, 308, 64).reshape(8, 8)
    pred = np.full((8, 8), 280.0)
    pred[0, 0] = 320.0
    out, tr = normalize_case(EvalCase(obs, truth, pred))
    assert tr.offset == 250.0
    assert tr.scale == pytest.approx(1 / 60, rel=1e-15)
    assert out.prediction.values[1, 1] == pytest.approx(0.5, rel=1e-12)
    # not clamped
    assert out.prediction.values[0, 0] == pytest.approx(7 / 6, rel=1e-12)
    assert out.observation.values.min() == 0.0
    assert out.observation.values.max() == pytest.approx(1.0, rel=1e-12)


def test_normalize_ignores_prediction_range():
    obs = np.linspace(0, 2, 64).reshape(8, 8)
    pred = obs * 100
    _, tr = normalize_case(EvalCase(obs, obs, pred))
    assert tr.scale == 0.5


def test_normalize_constant_raises_with_case_id():
    c = np.full((8, 8), 3.0)
    with pytest.raises(DegenerateRange, match="case 'c1'"):
        normalize_case(EvalCase(c, c, c + 1, "c1"))


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lo=finite, span=st.floats(1e-3, 1e6))
def test_normalize_round_trip_and_idempotence(seed, lo, span):
    rng = np.random.default_rng(seed)
    fields = [lo + span * rng.random((8, 8)) for _ in range(3)]
    case = EvalCase(*fields)
    norm, tr = normalize_case(case)
    back = denormalize_case(norm, tr)
    for a, b in zip((case.observation, case.truth, case.prediction),
                    (back.observation, back.truth, back.prediction)):
        scale = np.abs(a.values).max()
        np.testing.assert_allclose(b.values, a.values, rtol=1e-12, atol=1e-12 * scale)
    _, tr2 = normalize_case(norm)
    assert abs(tr2.offset) <= 1e-12
    assert tr2.scale == pytest.approx(1.0, rel=1e-12)
