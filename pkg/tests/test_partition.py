import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from liftsap.partition import partition_by_percentile, partition_by_threshold


def test_sizes_twenty_distinct(rng):
    part = partition_by_percentile(rng.permutation(20) / 20.0)
    assert part.sizes == (11, 7, 2)


def test_all_equal_uses_index_tie_break():
    part = partition_by_percentile(np.full(10, 0.1))
    np.testing.assert_array_equal(part.positive, np.arange(6))
    np.testing.assert_array_equal(part.negative, [7, 8, 9])
    np.testing.assert_array_equal(part.uncertain, [6])


def test_three_instances():
    assert partition_by_percentile([0.2, 0.5, 0.3]).sizes == (2, 1, 0)


def test_picks_top_and_bottom():
    part = partition_by_percentile([0.9, 0.1, 0.5, 0.7, 0.3], 0.4, 0.4)
    np.testing.assert_array_equal(part.positive, [0, 3])
    np.testing.assert_array_equal(part.negative, [1, 4])
    np.testing.assert_array_equal(part.uncertain, [2])


@pytest.mark.parametrize("degrees, pos, neg", [([], 0.55, 0.35), ([0.1, 0.2], 0.7, 0.4),
                                               ([0.5, 0.5], 0.55, 0.35)])
def test_errors(degrees, pos, neg):
    with pytest.raises(ValueError):
        partition_by_percentile(degrees, pos, neg)


degree_lists = st.lists(st.floats(0, 1), min_size=3, max_size=60)


@given(degree_lists)
def test_disjoint_cover_and_monotone(degrees):
    d = np.array(degrees)
    part = partition_by_percentile(d)
    union = np.concatenate([part.positive, part.negative, part.uncertain])
    np.testing.assert_array_equal(np.sort(union), np.arange(d.size))
    assert len(part.positive) >= 1 and len(part.negative) >= 1
    if part.uncertain.size:
        assert d[part.positive].min() >= d[part.uncertain].max()
        assert d[part.uncertain].min() >= d[part.negative].max()
    assert d[part.positive].min() >= d[part.negative].max()


@given(st.lists(st.floats(0, 1), min_size=3, max_size=40, unique=True), st.randoms())
def test_permutation_relabels_only(degrees, random):
    d = np.array(degrees)
    perm = np.arange(d.size)
    random.shuffle(perm)
    base = partition_by_percentile(d)
    moved = partition_by_percentile(d[perm])
    for a, b in zip((base.positive, base.negative, base.uncertain),
                    (moved.positive, moved.negative, moved.uncertain)):
        np.testing.assert_array_equal(np.sort(perm[b]), a)


def test_threshold_variant():
    part = partition_by_threshold([0.9, 0.1, 0.5, 0.6], tau_high=0.55, tau_low=0.3)
    np.testing.assert_array_equal(part.positive, [0, 3])
    np.testing.assert_array_equal(part.negative, [1])
    np.testing.assert_array_equal(part.uncertain, [2])
