"""Label-specific features built from prototypes and structural anchor points.

For one label the training instances are split into positive, negative, and
uncertain sets, each set is clustered, and an instance is re-described by

* its distances to every cluster center (``phi``),
* its distances to the midpoints of center pairs sharing a block (``chi``),
* the cosines between it and those midpoints (``psi``),

concatenated with fusion weights ``(lam, mu, eps)``. Uncertain-set entries of
all three parts are scaled by the discount ``alpha``.

All functions accept either a single feature vector or a matrix of row
vectors and return an array of matching dimensionality.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial.distance import cdist

from liftsap._seeding import derive_seed
from liftsap.clustering import BlockStructure, ClusterResult, form_blocks, spectral_cluster
from liftsap.partition import LabelPartition, partition_by_percentile
from liftsap.textio import TextReader, TextWriter

SETS = ("positive", "negative", "uncertain")
COSINE_NORM_FLOOR = 1e-12


@dataclass(frozen=True)
class FusionWeights:
    lam: float
    mu: float
    eps: float

    def __post_init__(self):
        if min(self.lam, self.mu, self.eps) < 0:
            raise ValueError(f"fusion weights must be non-negative, got {self.as_tuple()}")
        if abs(self.lam + self.mu + self.eps - 1.0) > 1e-9:
            raise ValueError(f"fusion weights must sum to 1, got {self.as_tuple()}")

    def as_tuple(self):
        return (self.lam, self.mu, self.eps)

    @classmethod
    def normalized(cls, lam, mu, eps):
        total = lam + mu + eps
        if total <= 0:
            raise ValueError("at least one fusion weight must be positive")
        return cls(lam / total, mu / total, eps / total)

    @classmethod
    def parse(cls, text):
        parts = [float(v) for v in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected three comma-separated weights, got {text!r}")
        return cls(*parts)


EQUAL_WEIGHTS = FusionWeights(1 / 3, 1 / 3, 1 / 3)


@dataclass(frozen=True)
class FeatureConfig:
    sigma: float = 0.1
    alpha: float = 0.5
    pos_frac: float = 0.55
    neg_frac: float = 0.35
    # None keeps all centers of a set in one block
    target_block_size: int | None = 4
    fusion: FusionWeights = EQUAL_WEIGHTS

    def __post_init__(self):
        if not 0.0 <= self.sigma <= 1.0:
            raise ValueError(f"sigma must lie in [0, 1], got {self.sigma}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")

    def with_fusion(self, fusion):
        return replace(self, fusion=fusion)


@dataclass(frozen=True)
class Standardizer:
    """Column z-scoring with statistics from the training rows.

    Constant columns keep unit scale so they map to zero instead of NaN.
    """

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, features):
        x = np.asarray(features, dtype=float)
        mean = x.mean(axis=0)
        scale = x.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        return cls(mean, scale)

    def transform(self, features):
        return (np.asarray(features, dtype=float) - self.mean) / self.scale


@dataclass(frozen=True)
class SapSet:
    sap_p: np.ndarray
    sap_n: np.ndarray
    sap_u: np.ndarray

    @property
    def counts(self):
        return len(self.sap_p), len(self.sap_n), len(self.sap_u)

    @property
    def total(self):
        return sum(self.counts)


def cluster_counts(p_size, n_size, u_size, sigma):
    """Cluster counts ``(m_j, m_j*)`` for the positive/negative and uncertain sets."""
    if p_size < 1 or n_size < 1:
        raise ValueError("positive and negative sets must be non-empty")
    m = max(1, math.ceil(round(sigma * min(p_size, n_size), 9)))
    m_star = math.ceil(round(sigma * u_size, 9)) if u_size > 0 else 0
    return m, m_star


def _rows(x):
    a = np.asarray(x, dtype=float)
    return (a.reshape(1, -1), True) if a.ndim == 1 else (a, False)


def _check_dim(x, m):
    if x.shape[1] != m:
        raise ValueError(f"feature vector has dimension {x.shape[1]}, expected {m}")


def _dist(x, points):
    if len(points) == 0:
        return np.zeros((x.shape[0], 0))
    return cdist(x, points)


def _cos(x, points):
    if len(points) == 0:
        return np.zeros((x.shape[0], 0))
    xn = np.linalg.norm(x, axis=1)
    pn = np.linalg.norm(points, axis=1)
    denom = np.outer(xn, pn)
    ok = (xn[:, None] >= COSINE_NORM_FLOOR) & (pn[None, :] >= COSINE_NORM_FLOOR)
    out = np.divide(x @ points.T, denom, out=np.zeros_like(denom), where=ok)
    return np.clip(out, -1.0, 1.0)


def _centers(prototypes):
    return [p.centers if isinstance(p, ClusterResult) else np.asarray(p, dtype=float)
            for p in prototypes]


def build_phi(x, prototypes, alpha):
    """Distances to positive, negative, then (discounted) uncertain centers."""
    xs, single = _rows(x)
    cp, cn, cu = _centers(prototypes)
    _check_dim(xs, cp.shape[1])
    out = np.hstack([_dist(xs, cp), _dist(xs, cn), alpha * _dist(xs, cu)])
    return out[0] if single else out


def _pair_midpoints(centers, blocks):
    mids = []
    for b in range(blocks.block_count):
        members = blocks.members(b)
        for a in range(len(members)):
            for c in range(a + 1, len(members)):
                mids.append(0.5 * (centers[members[a]] + centers[members[c]]))
    if not mids:
        return np.zeros((0, centers.shape[1]))
    return np.vstack(mids)


def build_saps(prototypes, blocks):
    """Midpoints of every center pair within a block, per set.

    Ordered by block, then by the pair's center indices lexicographically.
    """
    cp, cn, cu = _centers(prototypes)
    return SapSet(*(_pair_midpoints(c, b) for c, b in zip((cp, cn, cu), blocks)))


def build_chi(x, saps, alpha):
    xs, single = _rows(x)
    if saps.total:
        _check_dim(xs, next(s for s in (saps.sap_p, saps.sap_n, saps.sap_u) if len(s)).shape[1])
    out = np.hstack([_dist(xs, saps.sap_p), _dist(xs, saps.sap_n), alpha * _dist(xs, saps.sap_u)])
    return out[0] if single else out


def build_psi(x, saps, alpha):
    """Cosines between ``x`` and each anchor point; zero when either norm is below 1e-12."""
    xs, single = _rows(x)
    if saps.total:
        _check_dim(xs, next(s for s in (saps.sap_p, saps.sap_n, saps.sap_u) if len(s)).shape[1])
    out = np.hstack([_cos(xs, saps.sap_p), _cos(xs, saps.sap_n), alpha * _cos(xs, saps.sap_u)])
    return out[0] if single else out


def fuse(phi, chi, psi, weights):
    w = weights
    return np.concatenate(
        [w.lam * np.asarray(phi, float), w.mu * np.asarray(chi, float),
         w.eps * np.asarray(psi, float)],
        axis=-1,
    )


@dataclass(frozen=True)
class LsfMapper:
    """Fitted feature map for one label.

    ``prototypes`` and ``blocks`` are ordered (positive, negative, uncertain).
    Inputs to :meth:`transform` must already be standardized with the same
    statistics used at fit time.
    """

    label_index: int
    prototypes: tuple
    blocks: tuple
    saps: SapSet
    config: FeatureConfig
    partition: LabelPartition | None = field(default=None, repr=False)

    @property
    def feature_count(self):
        return self.prototypes[0].centers.shape[1]

    @property
    def cluster_counts(self):
        return self.prototypes[0].k, self.prototypes[2].k

    @property
    def phi_dim(self):
        return sum(p.k for p in self.prototypes)

    @property
    def output_dim(self):
        return self.phi_dim + 2 * self.saps.total

    def transform_parts(self, x):
        """Unweighted ``(phi, chi, psi)`` blocks."""
        xs, single = _rows(x)
        _check_dim(xs, self.feature_count)
        alpha = self.config.alpha
        parts = (build_phi(xs, self.prototypes, alpha), build_chi(xs, self.saps, alpha),
                 build_psi(xs, self.saps, alpha))
        return tuple(p[0] for p in parts) if single else parts

    def transform(self, x, weights=None):
        return fuse(*self.transform_parts(x), weights or self.config.fusion)

    def dumps(self):
        w = TextWriter("liftsap-mapper")
        self._write(w)
        return w.getvalue()

    def _write(self, w):
        w.scalar("label_index", self.label_index)
        c = self.config
        for name in ("sigma", "alpha", "pos_frac", "neg_frac"):
            w.scalar(name, getattr(c, name))
        w.scalar("target_block_size", c.target_block_size if c.target_block_size else 0)
        w.vector("fusion", c.fusion.as_tuple())
        for set_name, proto, blocks in zip(SETS, self.prototypes, self.blocks):
            w.section(set_name)
            w.matrix("centers", proto.centers)
            w.vector("assignment", proto.assignment)
            w.vector("block_of", blocks.block_of)
            w.scalar("block_count", blocks.block_count)
        w.matrix("sap_p", self.saps.sap_p)
        w.matrix("sap_n", self.saps.sap_n)
        w.matrix("sap_u", self.saps.sap_u)

    @classmethod
    def loads(cls, text):
        r = TextReader(text, "liftsap-mapper")
        mapper = cls._read(r)
        r.finish()
        return mapper

    @classmethod
    def _read(cls, r):
        label_index = r.scalar("label_index", int)
        kw = {name: r.scalar(name) for name in ("sigma", "alpha", "pos_frac", "neg_frac")}
        block_size = r.scalar("target_block_size", int) or None
        fusion = FusionWeights(*r.vector("fusion"))
        config = FeatureConfig(target_block_size=block_size, fusion=fusion, **kw)
        protos, blocks = [], []
        for set_name in SETS:
            r.section(set_name)
            centers = r.matrix("centers")
            assignment = r.vector("assignment").astype(int)
            block_of = r.vector("block_of").astype(int)
            protos.append(ClusterResult(centers, assignment))
            blocks.append(BlockStructure(block_of, r.scalar("block_count", int)))
        m = protos[0].centers.shape[1]
        saps = SapSet(*(r.matrix(n).reshape(-1, m) for n in ("sap_p", "sap_n", "sap_u")))
        return cls(label_index, tuple(protos), tuple(blocks), saps, config)


def _empty_cluster(m):
    return ClusterResult(np.zeros((0, m)), np.zeros(0, dtype=int))


def fit_lsf_mapper(features, degrees, config=FeatureConfig(), seed=0, label_index=0):
    """Fit the feature map for one label on (standardized) training features.

    Partitions the rows by description degree, clusters each set, groups
    centers into blocks and places anchor points between paired centers.
    """
    x = np.asarray(features, dtype=float)
    d = np.asarray(degrees, dtype=float).reshape(-1)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("training features must be a non-empty 2-D array")
    if x.shape[0] != d.size:
        raise ValueError(f"{x.shape[0]} feature rows but {d.size} degrees")
    part = partition_by_percentile(d, config.pos_frac, config.neg_frac, label_index)
    m_j, m_star = cluster_counts(*part.sizes, config.sigma)
    counts = (m_j, m_j, m_star)
    protos, blocks = [], []
    for set_name, idx, k in zip(SETS, (part.positive, part.negative, part.uncertain), counts):
        if k == 0:
            protos.append(_empty_cluster(x.shape[1]))
            blocks.append(BlockStructure(np.zeros(0, dtype=int), 0))
            continue
        proto = spectral_cluster(x[idx], k, seed=derive_seed(seed, label_index, "cluster", set_name))
        protos.append(proto)
        blocks.append(form_blocks(proto.centers, config.target_block_size,
                                  seed=derive_seed(seed, label_index, "blocks", set_name)))
    saps = build_saps(protos, blocks)
    return LsfMapper(label_index, tuple(protos), tuple(blocks), saps, config, part)
