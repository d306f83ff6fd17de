"""Friedman test and Nemenyi post-hoc analysis over algorithm score tables."""

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

# Two-tailed Nemenyi critical values at alpha = 0.05 (studentized range / sqrt(2)).
Q_ALPHA_05 = {2: 1.960, 3: 2.343, 4: 2.569, 5: 2.728, 6: 2.850,
              7: 2.949, 8: 3.031, 9: 3.102, 10: 3.164}


@dataclass(frozen=True)
class RankTable:
    """Scores ``(N datasets, s algorithms)`` and their per-dataset ranks (1 = best)."""

    scores: np.ndarray
    higher_is_better: bool
    ranks: np.ndarray
    algorithms: tuple = ()

    @property
    def avg_ranks(self):
        return self.ranks.mean(axis=0)

    @property
    def dataset_count(self):
        return self.ranks.shape[0]

    @property
    def algorithm_count(self):
        return self.ranks.shape[1]


@dataclass(frozen=True)
class FriedmanResult:
    chi_sq: float
    f_f: float | None
    saturated: bool = False


def rank(scores, higher_is_better=False, algorithms=None):
    """Rank each row of ``scores``; tied scores share the average of their ranks."""
    s = np.asarray(scores, dtype=float)
    if s.ndim != 2 or s.shape[0] < 2 or s.shape[1] < 2:
        raise ValueError("need a score matrix with at least 2 datasets and 2 algorithms")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    ranks = rankdata(-s if higher_is_better else s, method="average", axis=1)
    names = tuple(algorithms) if algorithms is not None else tuple(f"A{j + 1}" for j in range(s.shape[1]))
    if len(names) != s.shape[1]:
        raise ValueError("one algorithm name per column required")
    return RankTable(s, higher_is_better, ranks, names)


def rank_table_from_ranks(ranks, algorithms=None):
    r = np.asarray(ranks, dtype=float)
    names = tuple(algorithms) if algorithms is not None else tuple(f"A{j + 1}" for j in range(r.shape[1]))
    return RankTable(r, False, r, names)


def friedman(table):
    """Friedman chi-square over average ranks and the Iman-Davenport F statistic.

    When every dataset ranks the algorithms identically the F denominator
    vanishes; the result is then flagged ``saturated`` with ``f_f=None``.
    """
    n, s = table.dataset_count, table.algorithm_count
    r = table.avg_ranks
    chi_sq = 12.0 * n / (s * (s + 1)) * (float(np.sum(r ** 2)) - s * (s + 1) ** 2 / 4.0)
    if abs(chi_sq) < 1e-12:
        chi_sq = 0.0
    denom = n * (s - 1) - chi_sq
    if denom <= 1e-12 * n * (s - 1):
        return FriedmanResult(chi_sq, None, saturated=True)
    return FriedmanResult(chi_sq, (n - 1) * chi_sq / denom)


def q_alpha(s, override=None):
    if override is not None:
        return float(override)
    try:
        return Q_ALPHA_05[s]
    except KeyError:
        raise ValueError(f"no tabulated q_alpha for {s} algorithms; pass one explicitly") from None


def nemenyi_cd(s, n, q):
    """Critical difference of average ranks for ``s`` algorithms over ``n`` datasets."""
    if s < 2 or n < 1 or q <= 0:
        raise ValueError("need s >= 2, N >= 1 and q > 0")
    return q * np.sqrt(s * (s + 1) / (6.0 * n))


def cd_diagram_data(table, cd):
    """Algorithms sorted by average rank plus the maximal cliques closer than ``cd``.

    Only groups with at least two members are reported; a group is maximal
    when no other group contains it.
    """
    avg = table.avg_ranks
    order = np.argsort(avg, kind="stable")
    names = [table.algorithms[i] for i in order]
    sorted_ranks = avg[order]
    groups = []
    for start in range(len(order)):
        end = start
        while end + 1 < len(order) and sorted_ranks[end + 1] - sorted_ranks[start] < cd:
            end += 1
        if end > start and not (groups and groups[-1][1] >= end):
            groups.append((start, end))
    return {
        "cd": float(cd),
        "algorithms": names,
        "average_ranks": [float(v) for v in sorted_ranks],
        "groups": [names[a:b + 1] for a, b in groups],
    }
