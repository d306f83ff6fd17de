"""Two-stage stacking learner over per-label LIFT-SAP feature spaces.

Training fits one feature map per label on the whole training split, trains
a base model per label on the ``Tr`` group, and trains a softmax meta model
on the base models' ``Val`` predictions. Prediction chains the same steps.
"""

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from liftsap._seeding import derive_seed
from liftsap.dataset import LabelDistributionDataset, split_random
from liftsap.lsf import FeatureConfig, FusionWeights, LsfMapper, Standardizer, fit_lsf_mapper, fuse
from liftsap.maxent import (
    BaseModel,
    MetaModel,
    OptimizerConfig,
    predict_base,
    predict_meta,
    train_base,
    train_meta,
)
from liftsap.metrics import evaluate_rows
from liftsap.textio import TextReader, TextWriter

VARIANTS = ("A", "B", "C", "D")


@dataclass(frozen=True)
class TrainConfig:
    features: FeatureConfig = FeatureConfig()
    optimizer: OptimizerConfig = OptimizerConfig()
    tr_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.tr_fraction < 1.0:
            raise ValueError(f"tr_fraction must lie in (0, 1), got {self.tr_fraction}")


@dataclass(frozen=True, eq=False)
class TrainedPipeline:
    standardizer: Standardizer
    mappers: tuple
    base_models: tuple
    meta: MetaModel
    config: TrainConfig
    # run facts (timings, dimensions); not part of the serialized model
    info: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def label_count(self):
        return len(self.mappers)

    def predict(self, x):
        return predict(self, x)

    def dumps(self):
        w = TextWriter("liftsap-pipeline")
        w.scalar("label_count", self.label_count)
        w.scalar("tr_fraction", self.config.tr_fraction)
        w.scalar("seed", self.config.seed)
        opt = self.config.optimizer
        w.scalar("gradient_tolerance", opt.gradient_tolerance)
        w.scalar("max_iterations", opt.max_iterations)
        w.scalar("l2_penalty", opt.l2_penalty)
        w.vector("feature_mean", self.standardizer.mean)
        w.vector("feature_scale", self.standardizer.scale)
        for mapper, base in zip(self.mappers, self.base_models):
            w.section(f"label_{mapper.label_index}")
            mapper._write(w)
            w.vector("base_weights", base.weights)
            w.scalar("base_bias", base.bias)
        w.section("meta")
        w.matrix("meta_weights", self.meta.weights)
        w.vector("meta_bias", self.meta.bias)
        return w.getvalue()

    @classmethod
    def loads(cls, text):
        r = TextReader(text, "liftsap-pipeline")
        p = r.scalar("label_count", int)
        tr_fraction = r.scalar("tr_fraction")
        seed = r.scalar("seed", int)
        opt = OptimizerConfig(r.scalar("gradient_tolerance"), r.scalar("max_iterations", int),
                              r.scalar("l2_penalty"))
        std = Standardizer(r.vector("feature_mean"), r.vector("feature_scale"))
        mappers, bases = [], []
        for j in range(p):
            r.section(f"label_{j}")
            mapper = LsfMapper._read(r)
            mappers.append(mapper)
            bases.append(BaseModel(r.vector("base_weights"), r.scalar("base_bias"), j))
        r.section("meta")
        meta = MetaModel(r.matrix("meta_weights"), r.vector("meta_bias"))
        r.finish()
        cfg = TrainConfig(mappers[0].config, opt, tr_fraction, seed)
        return cls(std, tuple(mappers), tuple(bases), meta, cfg)


def _map(fn, items, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _unpack(data, distributions=None):
    if isinstance(data, LabelDistributionDataset):
        return np.asarray(data.features), np.asarray(data.distributions)
    return np.asarray(data, dtype=float), np.asarray(distributions, dtype=float)


@dataclass
class FeatureMaps:
    """Weight-independent training artifacts shared by fusion-weight candidates."""

    standardizer: Standardizer
    mappers: list
    parts: list  # per label: unweighted (phi, chi, psi) over the training rows
    split_train: np.ndarray
    split_val: np.ndarray
    timings: dict


def fit_feature_maps(features, distributions, cfg, workers=1):
    """Standardize, draw the shared Tr/Val split, and fit every label's feature map."""
    x, y = features, distributions
    n, p = y.shape
    if n < 4:
        raise ValueError(f"need at least 4 training instances, got {n}")
    t0 = time.perf_counter()
    std = Standardizer.fit(x)
    xs = std.transform(x)
    split = split_random(n, cfg.tr_fraction, derive_seed(cfg.seed, "tr-val"))

    def fit(j):
        mapper = fit_lsf_mapper(xs, y[:, j], cfg.features, seed=cfg.seed, label_index=j)
        return mapper, mapper.transform_parts(xs)

    fitted = _map(fit, range(p), workers)
    return FeatureMaps(std, [f[0] for f in fitted], [f[1] for f in fitted],
                       split.train, split.test, {"feature_maps": time.perf_counter() - t0})


def fit_stack(maps, distributions, weights, opt_cfg, workers=1):
    """Train base models on Tr and the meta model on their Val predictions.

    Returns ``(base_models, meta, val_predictions)``.
    """
    y = distributions
    tr, val = maps.split_train, maps.split_val

    def base(j):
        z = fuse(*maps.parts[j], weights)
        model = train_base(z[tr], y[tr, j], opt_cfg, label_index=j)
        return model, predict_base(model, z[val])

    fitted = _map(base, range(y.shape[1]), workers)
    second_level = np.column_stack([f[1] for f in fitted])
    meta = train_meta(second_level, y[val], opt_cfg)
    return [f[0] for f in fitted], meta, predict_meta(meta, second_level)


def _assemble(maps, bases, meta, cfg, weights, info):
    mappers = tuple(
        LsfMapper(m.label_index, m.prototypes, m.blocks, m.saps, m.config.with_fusion(weights),
                  m.partition)
        for m in maps.mappers
    )
    feat_cfg = cfg.features.with_fusion(weights)
    out_cfg = TrainConfig(feat_cfg, cfg.optimizer, cfg.tr_fraction, cfg.seed)
    return TrainedPipeline(maps.standardizer, mappers, tuple(bases), meta, out_cfg, info)


def _info(maps, timings):
    return {
        "labels": [
            {
                "label": m.label_index,
                "partition_sizes": list(m.partition.sizes),
                "cluster_counts": list(m.cluster_counts),
                "sap_counts": list(m.saps.counts),
                "block_counts": [b.block_count for b in m.blocks],
                "output_dim": m.output_dim,
            }
            for m in maps.mappers
        ],
        "tr_size": int(len(maps.split_train)),
        "val_size": int(len(maps.split_val)),
        "timings": timings,
    }


def train(data, cfg=TrainConfig(), workers=1, distributions=None, maps=None):
    """Fit the full stacking pipeline on a training split.

    ``data`` is a :class:`LabelDistributionDataset` or a feature matrix (with
    ``distributions`` given separately). Precomputed ``maps`` from
    :func:`fit_feature_maps` may be passed to reuse clustering.
    """
    x, y = _unpack(data, distributions)
    maps = maps or fit_feature_maps(x, y, cfg, workers)
    weights = cfg.features.fusion
    t0 = time.perf_counter()
    bases, meta, _ = fit_stack(maps, y, weights, cfg.optimizer, workers)
    timings = dict(maps.timings, stack=time.perf_counter() - t0)
    return _assemble(maps, bases, meta, cfg, weights, _info(maps, timings))


def second_level_features(pipeline, x):
    xs, single = (np.asarray(x, float).reshape(1, -1), True) if np.ndim(x) == 1 else (np.asarray(x, float), False)
    if xs.shape[1] != pipeline.standardizer.mean.size:
        raise ValueError(f"expected {pipeline.standardizer.mean.size} features, got {xs.shape[1]}")
    z = pipeline.standardizer.transform(xs)
    f = np.column_stack([predict_base(b, m.transform(z)) for m, b in
                         zip(pipeline.mappers, pipeline.base_models)])
    return f, single


def predict(pipeline, x):
    """Predicted label distribution(s) for one feature vector or a matrix of rows."""
    f, single = second_level_features(pipeline, x)
    out = predict_meta(pipeline.meta, f)
    return out[0] if single else out


# --------------------------------------------------------------------------
# fusion weights

def simplex_lattice(step=0.05):
    """All ``(lam, mu, eps)`` on the grid ``{0, step, ..., 1}`` summing to one, lexicographic."""
    k = round(1.0 / step)
    if k < 1 or abs(k * step - 1.0) > 1e-9:
        raise ValueError(f"step {step} does not divide 1 evenly")
    return [FusionWeights(a / k, b / k, (k - a - b) / k)
            for a in range(k + 1) for b in range(k + 1 - a)]


def face_lattice(step, drop):
    """Lattice points with the weight at index ``drop`` fixed to zero."""
    return [w for w in simplex_lattice(step) if w.as_tuple()[drop] == 0.0]


@dataclass(frozen=True)
class GridSearchResult:
    weights: FusionWeights
    scores: tuple  # ((lam, mu, eps), mean Val K-L) per candidate, lattice order


def grid_search_fusion(data, cfg=TrainConfig(), step=0.05, workers=1, distributions=None,
                       candidates=None, maps=None):
    """Choose fusion weights by mean K-L of the stacked predictions on the Val group.

    Clustering does not depend on the weights, so feature maps are fitted once
    and reused for every candidate. Ties go to the lexicographically smallest
    weights.
    """
    x, y = _unpack(data, distributions)
    maps = maps or fit_feature_maps(x, y, cfg, workers)
    candidates = candidates if candidates is not None else simplex_lattice(step)
    y_val = y[maps.split_val]
    scores = []
    for w in candidates:
        _, _, val_pred = fit_stack(maps, y, w, cfg.optimizer, workers)
        scores.append((w.as_tuple(), float(evaluate_rows(val_pred, y_val)[:, 3].mean())))
    best = min(range(len(scores)), key=lambda i: (scores[i][1], scores[i][0]))
    return GridSearchResult(candidates[best], tuple(scores))


def variant_weights(variant, weights):
    """Fusion weights for ablation variant A (LIFT), B (no direction), C (no distance) or D (full).

    B and C zero one weight and rescale the remaining two to sum to one; when
    both remaining weights are zero they are split evenly.
    """
    lam, mu, eps = weights.as_tuple()
    if variant == "A":
        return FusionWeights(1.0, 0.0, 0.0)
    if variant == "B":
        return FusionWeights.normalized(lam, mu, 0.0) if lam + mu > 0 else FusionWeights(0.5, 0.5, 0.0)
    if variant == "C":
        return FusionWeights.normalized(lam, 0.0, eps) if lam + eps > 0 else FusionWeights(0.5, 0.0, 0.5)
    if variant == "D":
        return weights
    raise ValueError(f"unknown variant {variant!r}; choose from {VARIANTS}")


def variant_candidates(variant, step):
    """Grid candidates searched for a variant when weights are tuned."""
    if variant == "A":
        return [FusionWeights(1.0, 0.0, 0.0)]
    if variant == "B":
        return face_lattice(step, 2)
    if variant == "C":
        return face_lattice(step, 1)
    return simplex_lattice(step)


def train_variants(data, cfg=TrainConfig(), variants=VARIANTS, grid_step=None, workers=1,
                   distributions=None):
    """Train ablation variants that share one set of feature maps (and clustering).

    With ``grid_step`` set, each variant's weights are tuned over its own face
    of the lattice; otherwise they derive from ``cfg.features.fusion``.
    """
    x, y = _unpack(data, distributions)
    maps = fit_feature_maps(x, y, cfg, workers)
    out = {}
    for v in variants:
        if grid_step is None:
            w = variant_weights(v, cfg.features.fusion)
        else:
            w = grid_search_fusion(x, cfg, distributions=y, maps=maps, workers=workers,
                                   candidates=variant_candidates(v, grid_step)).weights
        vcfg = TrainConfig(cfg.features.with_fusion(w), cfg.optimizer, cfg.tr_fraction, cfg.seed)
        out[v] = train(x, vcfg, workers, distributions=y, maps=maps)
    return out


def fingerprint(pipeline):
    """Hash of the weight-independent artifacts (partitions, prototypes, anchors)."""
    h = hashlib.sha256()
    for m in pipeline.mappers:
        for arr in (m.partition.positive, m.partition.negative, m.partition.uncertain):
            h.update(np.asarray(arr, dtype=np.int64).tobytes())
        for proto in m.prototypes:
            h.update(np.ascontiguousarray(proto.centers).tobytes())
        for s in (m.saps.sap_p, m.saps.sap_n, m.saps.sap_u):
            h.update(np.ascontiguousarray(s).tobytes())
    return h.hexdigest()
