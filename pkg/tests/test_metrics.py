import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import random_simplex
from liftsap.metrics import (
    METRIC_NAMES,
    MetricVector,
    aggregate,
    aggregate_trials,
    evaluate,
    evaluate_rows,
)

# hand evaluation for pred=[0.25,0.75], truth=[0.5,0.5]
HAND = {
    "chebyshev": 0.25,
    "clark": np.sqrt((0.25 / 0.75) ** 2 + (0.25 / 1.25) ** 2),
    "canberra": 0.25 / 0.75 + 0.25 / 1.25,
    "kl": 0.5 * np.log(0.5 / 0.25) + 0.5 * np.log(0.5 / 0.75),
    "cosine": 0.5 / (np.sqrt(0.625) * np.sqrt(0.5)),
    "intersection": 0.75,
}


def test_hand_case_matches_rounded_values():
    got = evaluate([0.25, 0.75], [0.5, 0.5]).as_dict()
    rounded = dict(chebyshev=0.25, clark=0.38873, canberra=0.53333, kl=0.14384, cosine=0.89443,
                   intersection=0.75)
    for k in METRIC_NAMES:
        assert got[k] == pytest.approx(HAND[k], abs=1e-12)
        assert got[k] == pytest.approx(rounded[k], abs=1e-4)


def test_identity_on_five_label_distribution():
    y = [0.32, 0.21, 0.28, 0.13, 0.06]
    assert evaluate(y, y).as_tuple() == pytest.approx((0, 0, 0, 0, 1, 1), abs=1e-15)


def test_kl_clipping_keeps_value_finite():
    v = evaluate([0.0, 1.0], [1.0, 0.0])
    assert np.all(np.isfinite(v.as_tuple()))
    assert v.kl == pytest.approx(-np.log(1e-12 / (1 + 1e-12)), rel=1e-9)
    assert v.kl == pytest.approx(27.6, abs=0.05)


def test_zero_over_zero_terms():
    v = evaluate([0.5, 0.5, 0.0], [0.4, 0.6, 0.0])
    assert np.isfinite(v.clark) and np.isfinite(v.canberra)
    assert v.canberra == pytest.approx(0.1 / 0.9 + 0.1 / 1.1)


def test_errors():
    with pytest.raises(ValueError):
        evaluate([0.5, 0.5], [1 / 3] * 3)
    with pytest.raises(ValueError):
        evaluate([-0.1, 1.1], [0.5, 0.5])
    with pytest.raises(ValueError):
        evaluate(np.ones((2, 2)) / 2, np.ones((2, 2)) / 2)


def test_batch_matches_single(rng):
    q, y = random_simplex(rng, 30, 5), random_simplex(rng, 30, 5)
    batch = evaluate_rows(q, y)
    for i in range(30):
        np.testing.assert_allclose(batch[i], evaluate(q[i], y[i]).as_tuple(), rtol=1e-14)


def test_kl_asymmetry(rng):
    q, y = random_simplex(rng, 1, 4)[0], random_simplex(rng, 1, 4)[0]
    assert evaluate(q, y).kl != pytest.approx(evaluate(y, q).kl, rel=1e-6)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 18), st.integers(0, 2**32 - 1))
def test_metric_properties(p, seed):
    rng = np.random.default_rng(seed)
    q, y = random_simplex(rng, 2, p)
    a, b = evaluate(q, y), evaluate(y, q)
    for k in ("chebyshev", "clark", "canberra", "cosine", "intersection"):
        assert getattr(a, k) == pytest.approx(getattr(b, k), rel=1e-12, abs=1e-15)
    assert 0 <= a.chebyshev <= 1 and 0 <= a.intersection <= 1 + 1e-12
    assert 0 <= a.cosine <= 1 + 1e-12 and a.kl >= -1e-15 and a.clark >= 0 and a.canberra >= 0
    assert a.intersection == pytest.approx(1 - 0.5 * np.abs(q - y).sum(), abs=1e-12)
    np.testing.assert_allclose(evaluate(q, q).as_tuple(), (0, 0, 0, 0, 1, 1), atol=1e-9)


class TestAggregate:
    def test_single(self):
        v = MetricVector(0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
        rep = aggregate([v])
        assert rep.mean == v and rep.std.as_tuple() == (0,) * 6 and rep.count == 1

    def test_identical_pair(self):
        v = MetricVector(0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
        assert aggregate([v, v]).std.as_tuple() == (0,) * 6

    def test_population_std(self):
        rep = aggregate([MetricVector(*[0.1] * 6), MetricVector(*[0.3] * 6)])
        np.testing.assert_allclose(rep.mean.as_tuple(), 0.2)
        np.testing.assert_allclose(rep.std.as_tuple(), 0.1)

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate([])

    def test_two_level(self):
        r1 = aggregate([MetricVector(*[0.1] * 6), MetricVector(*[0.3] * 6)])
        r2 = aggregate([MetricVector(*[0.6] * 6)])
        rep = aggregate_trials([r1, r2])
        np.testing.assert_allclose(rep.mean.as_tuple(), 0.4)
        np.testing.assert_allclose(rep.std.as_tuple(), 0.2)
        assert rep.count == 2
