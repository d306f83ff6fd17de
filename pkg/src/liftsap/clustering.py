"""Spectral clustering, k-means, and grouping of cluster centers into blocks."""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.spatial.distance import cdist, pdist, squareform

from liftsap._seeding import derive_seed


@dataclass(frozen=True)
class ClusterResult:
    """Cluster centers ``(k, m)`` and one cluster index per input point.

    ``degenerate`` marks the fallback used when all points coincide, and
    ``inertia_history`` records the within-cluster sum of squares after each
    k-means iteration (empty for results not produced by Lloyd iterations).
    """

    centers: np.ndarray
    assignment: np.ndarray
    degenerate: bool = False
    inertia_history: tuple = field(default=(), repr=False)

    @property
    def k(self):
        return self.centers.shape[0]


@dataclass(frozen=True)
class BlockStructure:
    block_of: np.ndarray
    block_count: int

    def members(self, block):
        return np.flatnonzero(self.block_of == block)


def _as_points(points):
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2:
        raise ValueError("points must be a 2-D array")
    return x


def _check_k(n, k):
    if k < 1:
        raise ValueError(f"cluster count must be >= 1, got {k}")
    if k > n:
        raise ValueError(f"cannot form {k} clusters from {n} points")


def _means(x, assignment, k):
    counts = np.bincount(assignment, minlength=k).astype(float)
    sums = np.zeros((k, x.shape[1]))
    np.add.at(sums, assignment, x)
    return sums / counts[:, None]


def _inertia(x, assignment, centers):
    return float(np.sum((x - centers[assignment]) ** 2))


def kmeans_plusplus(x, k, rng):
    """Indices of ``k`` seeds chosen by D^2 sampling."""
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = cdist(x, x[chosen[-1:]], "sqeuclidean")[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            # every remaining point coincides with a seed
            rest = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(rest))
        chosen.append(idx)
        d2 = np.minimum(d2, cdist(x, x[idx:idx + 1], "sqeuclidean")[:, 0])
    return np.array(chosen)


def _repair_empty(x, assignment, centers, k):
    """Give each empty cluster the farthest point of the currently largest cluster."""
    assignment = assignment.copy()
    counts = np.bincount(assignment, minlength=k)
    for empty in np.flatnonzero(counts == 0):
        largest = int(np.argmax(counts))
        members = np.flatnonzero(assignment == largest)
        d2 = np.sum((x[members] - centers[largest]) ** 2, axis=1)
        moved = members[int(np.argmax(d2))]
        assignment[moved] = empty
        counts[largest] -= 1
        counts[empty] = 1
    return assignment


def kmeans(points, k, seed=0, max_iter=100):
    """Lloyd's algorithm from k-means++ seeds.

    Iterates until the assignment stops changing or ``max_iter`` rounds have
    run. Returned centers are exact means of the returned assignment.
    """
    x = _as_points(points)
    n = x.shape[0]
    _check_k(n, k)
    rng = np.random.default_rng(seed)
    centers = x[kmeans_plusplus(x, k, rng)].copy()
    assignment = None
    history = []
    for _ in range(max_iter):
        new = np.argmin(cdist(x, centers, "sqeuclidean"), axis=1)
        new = _repair_empty(x, new, centers, k)
        centers = _means(x, new, k)
        history.append(_inertia(x, new, centers))
        if assignment is not None and np.array_equal(new, assignment):
            break
        assignment = new
    return ClusterResult(centers, assignment, inertia_history=tuple(history))


def affinity_matrix(x):
    """Gaussian affinities with bandwidth equal to the median pairwise distance.

    Returns ``(A, degenerate)``; ``degenerate`` is true when all points
    coincide and no bandwidth exists.
    """
    d = pdist(x)
    if d.size == 0 or not np.any(d > 0):
        return None, True
    gamma = np.median(d)
    if gamma <= 0:
        # more than half the pairs are duplicates
        gamma = np.median(d[d > 0])
    a = squareform(np.exp(-(d ** 2) / (2.0 * gamma ** 2)))
    return a, False


def spectral_embedding(affinity, k):
    """Rows of the ``k`` bottom eigenvectors of the symmetric normalized Laplacian, unit-normalized."""
    deg = affinity.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(np.maximum(deg, np.finfo(float).tiny))
    lap = np.eye(len(deg)) - inv_sqrt[:, None] * affinity * inv_sqrt[None, :]
    lap = 0.5 * (lap + lap.T)
    _, vecs = eigh(lap, subset_by_index=[0, k - 1])
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    return np.divide(vecs, norms, out=np.zeros_like(vecs), where=norms > 0)


def spectral_cluster(points, k, seed=0):
    """Normalized spectral clustering; centers are means in the input space."""
    x = _as_points(points)
    n = x.shape[0]
    _check_k(n, k)
    if k == 1:
        return ClusterResult(x.mean(axis=0, keepdims=True), np.zeros(n, dtype=int))
    if k == n:
        return ClusterResult(x.copy(), np.arange(n))
    affinity, degenerate = affinity_matrix(x)
    if degenerate:
        warnings.warn("all points identical; using a balanced arbitrary assignment", RuntimeWarning)
        assignment = np.arange(n) % k
        return ClusterResult(_means(x, assignment, k), assignment, degenerate=True)
    embedding = spectral_embedding(affinity, k)
    inner = kmeans(embedding, k, seed=derive_seed(seed, "embedding"))
    return ClusterResult(_means(x, inner.assignment, k), inner.assignment)


def form_blocks(centers, target_size=4, seed=0):
    """Group cluster centers into ``ceil(k / target_size)`` blocks with k-means.

    ``target_size=None`` keeps every center in one block.
    """
    c = _as_points(centers)
    k = c.shape[0]
    if k < 1:
        raise ValueError("need at least one center to form blocks")
    if target_size is None or k <= target_size:
        return BlockStructure(np.zeros(k, dtype=int), 1)
    if target_size < 1:
        raise ValueError(f"target block size must be >= 1, got {target_size}")
    count = math.ceil(k / target_size)
    result = kmeans(c, count, seed=seed)
    return BlockStructure(result.assignment, count)
