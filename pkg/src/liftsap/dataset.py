"""Loading, validating, and splitting label distribution datasets.

Two on-disk formats are supported:

``canonical-text``
    First line ``n m p``; each following line holds ``m`` feature values, a
    literal ``|``, then ``p`` description degrees, whitespace-delimited.

``csv``
    Header row ``f1,...,fm,y1,...,yp`` followed by one instance per row.
"""

import csv
import io
import math
import os
from dataclasses import dataclass

import numpy as np

SIMPLEX_TOLERANCE = 1e-6
RENORMALIZE_TOLERANCE = 1e-3
FORMATS = ("canonical-text", "csv")


class DatasetFormatError(ValueError):
    """Raised for malformed files or rows that violate the simplex constraint."""


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LabelDistributionDataset:
    """Features ``(n, m)`` paired with label distributions ``(n, p)``.

    Arrays are read-only after construction so a dataset can be shared
    between threads without copying.
    """

    name: str
    features: np.ndarray
    distributions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "features", _frozen(self.features))
        object.__setattr__(self, "distributions", _frozen(self.distributions))
        x, y = self.features, self.distributions
        if x.ndim != 2 or y.ndim != 2:
            raise DatasetFormatError("features and distributions must be 2-D")
        if x.shape[0] != y.shape[0]:
            raise DatasetFormatError(
                f"features have {x.shape[0]} rows but distributions have {y.shape[0]}"
            )
        if x.shape[0] == 0 or x.shape[1] == 0 or y.shape[1] == 0:
            raise DatasetFormatError("dataset must have n, m, p >= 1")
        if not np.all(np.isfinite(x)):
            bad = int(np.argwhere(~np.isfinite(x))[0, 0])
            raise DatasetFormatError(f"row {bad + 1}: non-finite feature value")
        _check_simplex(y, SIMPLEX_TOLERANCE)

    @property
    def instance_count(self):
        return self.features.shape[0]

    @property
    def feature_count(self):
        return self.features.shape[1]

    @property
    def label_count(self):
        return self.distributions.shape[1]

    n = instance_count
    m = feature_count
    p = label_count

    def subset(self, indices, name=None):
        idx = np.asarray(indices, dtype=int)
        return LabelDistributionDataset(
            name or self.name, self.features[idx], self.distributions[idx]
        )


@dataclass(frozen=True)
class SplitIndices:
    train: np.ndarray
    test: np.ndarray


def _check_simplex(y, tol):
    if not np.all(np.isfinite(y)):
        bad = int(np.argwhere(~np.isfinite(y))[0, 0])
        raise DatasetFormatError(f"row {bad + 1}: non-finite description degree")
    bad_range = np.flatnonzero(((y < 0) | (y > 1)).any(axis=1))
    if bad_range.size:
        i = int(bad_range[0])
        raise DatasetFormatError(f"row {i + 1}: description degree outside [0, 1]")
    sums = y.sum(axis=1)
    bad_sum = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if bad_sum.size:
        i = int(bad_sum[0])
        raise DatasetFormatError(
            f"row {i + 1}: distribution sums to {float(sums[i]):.6g}, not 1 (tolerance {tol})"
        )


def renormalize(dataset, tolerance=RENORMALIZE_TOLERANCE):
    """Divide every distribution row by its sum.

    Rows must already sum to 1 within ``tolerance`` and contain no negative
    entries; anything further off is treated as corruption, not noise.
    """
    y = np.asarray(dataset.distributions if isinstance(dataset, LabelDistributionDataset)
                   else dataset, dtype=float)
    y = _renormalize_rows(y, tolerance)
    if isinstance(dataset, LabelDistributionDataset):
        return LabelDistributionDataset(dataset.name, dataset.features, y)
    return y


def _renormalize_rows(y, tolerance):
    if np.any(y < 0):
        i = int(np.argwhere(y < 0)[0, 0])
        raise DatasetFormatError(f"row {i + 1}: negative description degree")
    sums = y.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > tolerance)
    if bad.size:
        i = int(bad[0])
        raise DatasetFormatError(
            f"row {i + 1}: distribution sums to {float(sums[i]):.6g}, outside renormalization "
            f"tolerance {tolerance}"
        )
    out = y / sums[:, None]
    # a row already on the simplex to machine precision is kept verbatim
    exact = np.abs(sums - 1.0) <= 2 * np.finfo(float).eps * y.shape[1]
    out[exact] = y[exact]
    return out


def _parse_float(token, lineno):
    try:
        return float(token)
    except ValueError:
        raise DatasetFormatError(f"line {lineno}: cannot parse {token!r} as a number") from None


def _read_canonical(text):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DatasetFormatError("empty file")
    head = lines[0].split()
    if len(head) != 3:
        raise DatasetFormatError(f"line 1: malformed header {lines[0]!r}; expected 'n m p'")
    try:
        n, m, p = (int(v) for v in head)
    except ValueError:
        raise DatasetFormatError(f"line 1: malformed header {lines[0]!r}") from None
    if n < 1 or m < 1 or p < 1:
        raise DatasetFormatError(f"line 1: header values must be positive, got {n} {m} {p}")
    if len(lines) - 1 != n:
        raise DatasetFormatError(f"header declares {n} rows but file has {len(lines) - 1}")
    x = np.empty((n, m))
    y = np.empty((n, p))
    for i, line in enumerate(lines[1:]):
        lineno = i + 2
        tokens = line.split()
        if tokens.count("|") != 1:
            raise DatasetFormatError(f"line {lineno}: expected exactly one '|' separator")
        bar = tokens.index("|")
        feats, degs = tokens[:bar], tokens[bar + 1:]
        if len(feats) != m or len(degs) != p:
            raise DatasetFormatError(
                f"line {lineno}: row has {len(feats)}+{len(degs)} values, expected {m}+{p}"
            )
        x[i] = [_parse_float(t, lineno) for t in feats]
        y[i] = [_parse_float(t, lineno) for t in degs]
    return x, y


def _read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise DatasetFormatError("empty file")
    header = [c.strip() for c in rows[0]]
    m = sum(1 for c in header if c.startswith("f"))
    p = len(header) - m
    expected = [f"f{k + 1}" for k in range(m)] + [f"y{k + 1}" for k in range(p)]
    if m < 1 or p < 1 or header != expected:
        raise DatasetFormatError(f"line 1: malformed header; expected f1..fm,y1..yp")
    data = np.empty((len(rows) - 1, m + p))
    for i, row in enumerate(rows[1:]):
        lineno = i + 2
        if len(row) != m + p:
            raise DatasetFormatError(f"line {lineno}: row has {len(row)} values, expected {m + p}")
        data[i] = [_parse_float(t, lineno) for t in row]
    return data[:, :m], data[:, m:]


def _detect_format(path):
    return "csv" if str(path).lower().endswith(".csv") else "canonical-text"


def load_dataset(path, format=None, renormalize_rows=False, name=None):
    """Read a dataset file.

    Parameters
    ----------
    path : str or PathLike
    format : {"canonical-text", "csv"}, optional
        Inferred from the extension when omitted (``.csv`` or canonical text).
    renormalize_rows : bool
        Rescale rows whose sums are within 1e-3 of one instead of rejecting
        them. Public LDL files carry rounding noise at about that level.
    """
    format = format or _detect_format(path)
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; choose from {FORMATS}")
    with open(path, encoding="ascii") as fh:
        text = fh.read()
    x, y = _read_canonical(text) if format == "canonical-text" else _read_csv(text)
    if renormalize_rows:
        y = _renormalize_rows(y, RENORMALIZE_TOLERANCE)
    if name is None:
        name = os.path.splitext(os.path.basename(str(path)))[0]
    return LabelDistributionDataset(name, x, y)


def _fmt(v):
    return repr(float(v))


def dumps_dataset(dataset, format="canonical-text"):
    x, y = dataset.features, dataset.distributions
    if format == "canonical-text":
        lines = [f"{dataset.n} {dataset.m} {dataset.p}"]
        for xi, yi in zip(x, y):
            lines.append(" ".join(map(_fmt, xi)) + " | " + " ".join(map(_fmt, yi)))
        return "\n".join(lines) + "\n"
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"f{k + 1}" for k in range(dataset.m)] + [f"y{k + 1}" for k in range(dataset.p)])
        for xi, yi in zip(x, y):
            w.writerow([_fmt(v) for v in xi] + [_fmt(v) for v in yi])
        return buf.getvalue()
    raise ValueError(f"unknown format {format!r}; choose from {FORMATS}")


def save_dataset(dataset, path, format=None):
    format = format or _detect_format(path)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dumps_dataset(dataset, format))


def split_random(n, fraction, seed):
    """Sample a train/test split without replacement.

    The train size is ``fraction * n`` rounded half up. Both index arrays are
    returned in ascending order.
    """
    if n < 2:
        raise ValueError(f"need at least 2 instances to split, got {n}")
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    n_train = math.floor(fraction * n + 0.5)
    if n_train < 1 or n_train > n - 1:
        raise ValueError(f"fraction {fraction} of {n} leaves an empty train or test set")
    perm = np.random.default_rng(seed).permutation(n)
    return SplitIndices(np.sort(perm[:n_train]), np.sort(perm[n_train:]))
