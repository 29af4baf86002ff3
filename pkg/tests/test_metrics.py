import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epiforecast import metrics

pairs = st.integers(min_value=1, max_value=40).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(-1e6, 1e6), min_size=n, max_size=n),
        st.lists(st.floats(-1e6, 1e6), min_size=n, max_size=n),
    )
)


def test_perfect_prediction():
    a = np.array([1.0, 2.0, 3.0])
    assert metrics.rmse(a, a) == 0.0
    assert metrics.mae(a, a) == 0.0
    assert metrics.r2(a, a) == 1.0


def test_constant_offset():
    assert metrics.rmse([0, 0, 0, 0], [1, 1, 1, 1]) == 1.0
    assert metrics.mae([0, 0, 0, 0], [1, 1, 1, 1]) == 1.0


def test_hand_computed_values():
    actual = [1.0, 2.0, 3.0]
    predicted = [2.0, 2.0, 2.0]
    assert metrics.rmse(actual, predicted) == pytest.approx(np.sqrt(2.0 / 3.0))
    assert metrics.mae(actual, predicted) == pytest.approx(2.0 / 3.0)
    assert metrics.r2(actual, predicted) == pytest.approx(0.0)


def test_adj_r2_formula():
    actual = [1.0, 2.0, 3.0, 5.0, 4.0, 6.0]
    predicted = [1.1, 2.2, 2.7, 4.6, 4.4, 5.8]
    plain = metrics.r2(actual, predicted)
    adjusted = metrics.adj_r2(actual, predicted, k=2)
    assert adjusted == pytest.approx(1 - (1 - plain) * 5 / 3)
    assert adjusted <= plain


def test_length_mismatch_rejected():
    with pytest.raises(ValueError, match="mismatch"):
        metrics.rmse([1, 2], [1, 2, 3])


def test_constant_actual_r2_undefined():
    with pytest.raises(ValueError, match="constant"):
        metrics.r2([2, 2, 2], [1, 2, 3])


def test_report_handles_undefined_r2():
    report = metrics.report([2, 2, 2], [1, 2, 3])
    assert report.r2 is None
    assert report.rmse > 0


@given(pairs)
@settings(max_examples=200, deadline=None)
def test_mae_never_exceeds_rmse(pair):
    actual, predicted = pair
    assert metrics.mae(actual, predicted) <= metrics.rmse(actual, predicted) + 1e-12


@given(pairs, st.randoms())
@settings(max_examples=100, deadline=None)
def test_permutation_invariance(pair, rand):
    actual, predicted = pair
    idx = list(range(len(actual)))
    rand.shuffle(idx)
    a2 = [actual[i] for i in idx]
    p2 = [predicted[i] for i in idx]
    assert metrics.rmse(a2, p2) == pytest.approx(metrics.rmse(actual, predicted), rel=1e-12)
    assert metrics.mae(a2, p2) == pytest.approx(metrics.mae(actual, predicted), rel=1e-12)
