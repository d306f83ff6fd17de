"""Six distance/similarity measures between predicted and true label distributions.

Chebyshev, Clark, Canberra and K-L are distances (lower is better); cosine
and intersection are similarities (higher is better).
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

METRIC_NAMES = ("chebyshev", "clark", "canberra", "kl", "cosine", "intersection")
HIGHER_IS_BETTER = {"chebyshev": False, "clark": False, "canberra": False, "kl": False,
                    "cosine": True, "intersection": True}
KL_FLOOR = 1e-12


@dataclass(frozen=True)
class MetricVector:
    chebyshev: float
    clark: float
    canberra: float
    kl: float
    cosine: float
    intersection: float

    def as_tuple(self):
        return tuple(getattr(self, k) for k in METRIC_NAMES)

    def as_dict(self):
        return dict(zip(METRIC_NAMES, self.as_tuple()))


@dataclass(frozen=True)
class TrialReport:
    """Per-metric mean and population standard deviation."""

    mean: MetricVector
    std: MetricVector
    count: int


def _safe_ratio(num, den):
    # 0/0 terms (both entries zero) contribute nothing
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def evaluate_rows(pred, truth):
    """Metric matrix ``(n, 6)`` for row-aligned predictions and truths."""
    q = np.atleast_2d(np.asarray(pred, dtype=float))
    y = np.atleast_2d(np.asarray(truth, dtype=float))
    if q.shape != y.shape:
        raise ValueError(f"prediction shape {q.shape} does not match truth shape {y.shape}")
    if np.any(q < 0) or np.any(y < 0):
        raise ValueError("distributions must be non-negative")
    diff = np.abs(q - y)
    total = q + y
    chebyshev = diff.max(axis=1)
    clark = np.sqrt(np.sum(_safe_ratio(diff, total) ** 2, axis=1))
    canberra = np.sum(_safe_ratio(diff, total), axis=1)
    q_kl = np.maximum(q, KL_FLOOR)
    q_kl = q_kl / q_kl.sum(axis=1, keepdims=True)
    kl = np.sum(xlogy(y, y) - xlogy(y, q_kl), axis=1)
    norms = np.linalg.norm(q, axis=1) * np.linalg.norm(y, axis=1)
    cosine = _safe_ratio(np.sum(q * y, axis=1), norms)
    intersection = np.minimum(q, y).sum(axis=1)
    return np.column_stack([chebyshev, clark, canberra, kl, cosine, intersection])


def evaluate(pred, truth):
    """All six metrics for a single predicted/true distribution pair."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.ndim != 1 or truth.ndim != 1:
        raise ValueError("evaluate expects two 1-D distributions; use evaluate_rows for batches")
    return MetricVector(*(float(v) for v in evaluate_rows(pred, truth)[0]))


def _stack(vectors):
    rows = [v.as_tuple() if isinstance(v, MetricVector) else tuple(v) for v in vectors]
    if not rows:
        raise ValueError("cannot aggregate an empty list")
    return np.asarray(rows, dtype=float)


def aggregate(per_instance):
    """Mean and population std of each metric over a list of MetricVectors (or an ``(n, 6)`` array)."""
    a = per_instance if isinstance(per_instance, np.ndarray) else _stack(per_instance)
    if a.shape[0] == 0:
        raise ValueError("cannot aggregate an empty list")
    return TrialReport(MetricVector(*map(float, a.mean(axis=0))),
                       MetricVector(*map(float, a.std(axis=0))), a.shape[0])


def aggregate_trials(reports):
    """Mean and population std of per-trial means across repeated trials."""
    return aggregate([r.mean for r in reports])
