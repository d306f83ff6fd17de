"""Synthetic label distribution datasets for tests and smoke runs."""

import numpy as np
from scipy.special import softmax

from liftsap.dataset import LabelDistributionDataset


def softmax_linear(n=500, m=5, p=4, seed=0, scale=1.0, name="softmax-linear"):
    """Gaussian features with distributions ``softmax(scale * x @ W)``."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, m))
    w = rng.standard_normal((m, p))
    return LabelDistributionDataset(name, x, softmax(scale * x @ w, axis=1))


def mixture_geometry(n=600, m=4, p=4, components=6, seed=0, spread=0.6, sharpness=2.0,
                     name="mixture-geometry"):
    """Mixture of Gaussian blobs whose label distributions depend on blob geometry.

    Each label owns a random direction and a random anchor location; its
    score mixes the alignment of ``x`` (taken about the mixture centroid)
    with that direction and the (negative) distance from ``x`` to the
    anchor, so both distance- and angle-type features carry signal.
    """
    rng = np.random.default_rng(seed)
    means = rng.normal(scale=3.0, size=(components, m))
    comp = rng.integers(components, size=n)
    x = means[comp] + spread * rng.standard_normal((n, m))
    directions = rng.standard_normal((p, m))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    anchors = means[rng.choice(components, size=p, replace=components < p)]
    # angles are measured around the mixture centroid, not the raw origin
    centered = x - means.mean(axis=0)
    norms = np.linalg.norm(centered, axis=1, keepdims=True)
    cosines = (centered @ directions.T) / np.maximum(norms, 1e-12)
    dists = np.linalg.norm(x[:, None, :] - anchors[None, :, :], axis=2)
    scores = sharpness * (cosines - dists / dists.std())
    return LabelDistributionDataset(name, x, softmax(scores, axis=1))
