#!/usr/bin/env python3
"""Convert a MATLAB LDL dataset (.mat) to the canonical text or CSV format.

The public LDL benchmark files store an ``n x m`` matrix ``features`` and an
``n x p`` matrix ``labels``; other variable names can be given with
``--features-key`` and ``--labels-key``.

Example::

    python3 scripts/convert_mat.py Yeast_cold.mat data/yeast-cold.txt --renormalize
"""

import argparse
import sys

import numpy as np
from scipy.io import loadmat

from liftsap.dataset import LabelDistributionDataset, renormalize as renormalize_rows, save_dataset


def convert(src, dst, features_key="features", labels_key="labels", renormalize=False,
            fmt=None, name=None):
    mat = loadmat(src)
    missing = [k for k in (features_key, labels_key) if k not in mat]
    if missing:
        found = sorted(k for k in mat if not k.startswith("__"))
        raise KeyError(f"{src}: missing variable(s) {missing}; file has {found}")
    x = np.asarray(mat[features_key], dtype=float)
    y = np.asarray(mat[labels_key], dtype=float)
    if renormalize:
        y = renormalize_rows(y)
    ds = LabelDistributionDataset(name or "converted", x, y)
    save_dataset(ds, dst, fmt)
    return ds


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("input", help=".mat file")
    ap.add_argument("output", help="destination (.csv selects CSV, anything else canonical text)")
    ap.add_argument("--features-key", default="features")
    ap.add_argument("--labels-key", default="labels")
    ap.add_argument("--renormalize", action="store_true",
                    help="rescale rows whose sums are within 1e-3 of one")
    ap.add_argument("--to", choices=("canonical-text", "csv"))
    args = ap.parse_args(argv)
    try:
        ds = convert(args.input, args.output, args.features_key, args.labels_key,
                     args.renormalize, args.to)
    except (KeyError, ValueError, OSError) as exc:
        print(f"convert_mat: error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.output}: n={ds.n} m={ds.m} p={ds.p}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
