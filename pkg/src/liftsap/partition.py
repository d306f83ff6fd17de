"""Per-label positive / negative / uncertain partitions of training instances."""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LabelPartition:
    """Disjoint index sets over the training rows for one label.

    Indices refer to positions in the degree vector passed to the
    partitioning function, and each list is sorted ascending.
    """

    label_index: int
    positive: np.ndarray
    negative: np.ndarray
    uncertain: np.ndarray

    @property
    def sizes(self):
        return len(self.positive), len(self.negative), len(self.uncertain)


def _snap(x):
    # 0.55 * 20 evaluates to 11.000000000000002; snap before ceil/floor
    return round(x, 9)


def partition_by_percentile(degrees, pos_frac=0.55, neg_frac=0.35, label_index=0):
    """Split instances by their rank in description degree.

    The top ``ceil(pos_frac * n)`` instances form the positive set and the
    bottom ``floor(neg_frac * n)`` the negative set; whatever remains is
    uncertain. Equal degrees are ordered by ascending index.
    """
    d = np.asarray(degrees, dtype=float).reshape(-1)
    n = d.size
    if n == 0:
        raise ValueError("cannot partition an empty degree vector")
    if pos_frac < 0 or neg_frac < 0 or _snap(pos_frac + neg_frac) > 1:
        raise ValueError(f"need pos_frac, neg_frac >= 0 with sum <= 1, got {pos_frac}, {neg_frac}")
    n_pos = math.ceil(_snap(pos_frac * n))
    n_neg = math.floor(_snap(neg_frac * n))
    if n_pos < 1 or n_neg < 1:
        raise ValueError(
            f"{n} instances with fractions ({pos_frac}, {neg_frac}) leave the positive or "
            "negative set empty"
        )
    # stable sort on -d: descending degree, ascending index among ties
    order = np.argsort(-d, kind="stable")
    return LabelPartition(
        label_index,
        np.sort(order[:n_pos]),
        np.sort(order[n - n_neg:]),
        np.sort(order[n_pos:n - n_neg]),
    )


def partition_by_threshold(degrees, tau_high, tau_low, label_index=0):
    """Absolute-threshold partition: ``d > tau_high`` positive, ``d < tau_low`` negative."""
    if tau_low > tau_high:
        raise ValueError(f"tau_low {tau_low} exceeds tau_high {tau_high}")
    d = np.asarray(degrees, dtype=float).reshape(-1)
    pos = np.flatnonzero(d > tau_high)
    neg = np.flatnonzero(d < tau_low)
    unc = np.flatnonzero((d >= tau_low) & (d <= tau_high))
    if pos.size == 0 or neg.size == 0:
        raise ValueError("thresholds leave the positive or negative set empty")
    return LabelPartition(label_index, pos, neg, unc)
