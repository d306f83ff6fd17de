"""Command line benchmark harness.

Commands: ``run``, ``ablate``, ``gridsearch``, ``stats``, ``convert``.
Settings come from an optional JSON config file (``--config``) with command
line flags taking precedence.
"""

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from liftsap import stats
from liftsap.dataset import FORMATS, load_dataset, save_dataset, split_random
from liftsap.lsf import FeatureConfig, FusionWeights
from liftsap.maxent import OptimizerConfig
from liftsap.metrics import HIGHER_IS_BETTER, METRIC_NAMES, aggregate, aggregate_trials, evaluate_rows
from liftsap.pipeline import (
    VARIANTS,
    TrainConfig,
    fingerprint,
    grid_search_fusion,
    predict,
    train,
    train_variants,
    variant_candidates,
    variant_weights,
)

log = logging.getLogger("liftsap")


@dataclass
class ExperimentConfig:
    datasets: list = field(default_factory=list)
    trials: int = 10
    fraction: float = 0.5
    seed: int = 0
    sigma: float = 0.1
    alpha: float = 0.5
    pos_frac: float = 0.55
    neg_frac: float = 0.35
    block_size: int | None = 4
    weights: str = "grid"
    grid_step: float = 0.05
    variant: str = "D"
    tr_fraction: float = 0.5
    gradient_tolerance: float = 1e-6
    max_iterations: int = 200
    l2_penalty: float = 1e-6
    renormalize: bool = False
    out: str = "results"
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.weights != "grid":
            FusionWeights.parse(self.weights)

    def fixed_weights(self):
        return None if self.weights == "grid" else FusionWeights.parse(self.weights)

    def train_config(self, seed, weights=None):
        fusion = weights or self.fixed_weights() or FeatureConfig().fusion
        feat = FeatureConfig(self.sigma, self.alpha, self.pos_frac, self.neg_frac,
                             self.block_size, fusion)
        opt = OptimizerConfig(self.gradient_tolerance, self.max_iterations, self.l2_penalty)
        return TrainConfig(feat, opt, self.tr_fraction, seed)

    def result_fields(self):
        """Settings that influence results (excludes output location and worker count)."""
        d = dataclasses.asdict(self)
        d.pop("out")
        d.pop("workers")
        d["datasets"] = [os.path.basename(p) for p in d["datasets"]]
        return d

    def hash(self):
        blob = json.dumps(self.result_fields(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def trial_seed(base_seed, trial):
    return base_seed + trial


# --------------------------------------------------------------------------
# output helpers

def _fmt(v):
    return f"{v:.10g}" if isinstance(v, float) else str(v)


def write_csv(path, header, rows, cfg_hash, seed, extra=""):
    buf = io.StringIO()
    buf.write(f"# config_hash={cfg_hash} seed={seed}{extra}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_csv_rows(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


# --------------------------------------------------------------------------
# experiment runs

def _choose_weights(cfg, variant, x, y, tcfg, workers=1):
    fixed = cfg.fixed_weights()
    if fixed is not None:
        return variant_weights(variant, fixed)
    return grid_search_fusion(x, tcfg, distributions=y, workers=workers,
                              candidates=variant_candidates(variant, cfg.grid_step)).weights


def run_trial(cfg, dataset, trial):
    """Split, train and evaluate one trial. Returns a dict of results."""
    seed = trial_seed(cfg.seed, trial)
    split = split_random(dataset.n, cfg.fraction, seed)
    x_tr, y_tr = dataset.features[split.train], dataset.distributions[split.train]
    t0 = time.perf_counter()
    weights = _choose_weights(cfg, cfg.variant, x_tr, y_tr, cfg.train_config(seed))
    pipeline = train(x_tr, cfg.train_config(seed, weights), distributions=y_tr)
    pred = predict(pipeline, dataset.features[split.test])
    per_instance = evaluate_rows(pred, dataset.distributions[split.test])
    return {
        "trial": trial,
        "seed": seed,
        "weights": list(weights.as_tuple()),
        "report": aggregate(per_instance),
        "labels": pipeline.info["labels"],
        "fingerprint": fingerprint(pipeline),
        "seconds": time.perf_counter() - t0,
    }


def _run_trials(fn, trials, workers):
    """Run ``fn(trial)`` for each trial, logging and recording failures instead of raising."""

    def safe(t):
        try:
            return fn(t)
        except Exception as exc:  # noqa: BLE001 - trial isolation
            log.error("trial %d failed: %s: %s", t, type(exc).__name__, exc)
            return {"trial": t, "error": f"{type(exc).__name__}: {exc}"}

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(safe, range(trials)))
    return [safe(t) for t in range(trials)]


def run_experiment(cfg):
    """Repeated split/train/evaluate over each dataset; writes CSV/JSON reports.

    Returns a dict mapping dataset name to its output directory.
    """
    outputs = {}
    h = cfg.hash()
    for path in cfg.datasets:
        ds = load_dataset(path, renormalize_rows=cfg.renormalize)
        out_dir = os.path.join(cfg.out, ds.name)
        os.makedirs(out_dir, exist_ok=True)
        t0 = time.perf_counter()
        results = _run_trials(lambda t: run_trial(cfg, ds, t), cfg.trials, cfg.workers)
        ok = [r for r in results if "error" not in r]
        rows = []
        for r in results:
            if "error" in r:
                rows.append([r["trial"], "failed"] + [""] * len(METRIC_NAMES) + [r["error"]])
            else:
                rows.append([r["trial"], r["seed"], *r["report"].mean.as_tuple(),
                             ",".join(_fmt(w) for w in r["weights"])])
        write_csv(os.path.join(out_dir, "trials.csv"),
                  ["trial", "seed", *METRIC_NAMES, "weights"], rows, h, cfg.seed)
        algo = f"LIFT-SAP-{cfg.variant}"
        write_csv(os.path.join(out_dir, "scores_long.csv"),
                  ["dataset", "algorithm", "metric", "trial", "value"],
                  [[ds.name, algo, k, r["trial"], v] for r in ok
                   for k, v in r["report"].mean.as_dict().items()], h, cfg.seed)
        summary = {}
        if ok:
            agg = aggregate_trials([r["report"] for r in ok])
            summary = {k: {"mean": agg.mean.as_dict()[k], "std": agg.std.as_dict()[k]}
                       for k in METRIC_NAMES}
            write_csv(os.path.join(out_dir, "summary.csv"), ["metric", "mean", "std"],
                      [[k, summary[k]["mean"], summary[k]["std"]] for k in METRIC_NAMES],
                      h, cfg.seed)
        write_json(os.path.join(out_dir, "summary.json"), {
            "config_hash": h, "seed": cfg.seed, "dataset": ds.name, "variant": cfg.variant,
            "trials_completed": len(ok), "trials_failed": len(results) - len(ok),
            "metrics": summary,
        })
        write_json(os.path.join(out_dir, "manifest.json"), {
            "config_hash": h, "seed": cfg.seed, "config": cfg.result_fields(),
            "dataset": {"name": ds.name, "n": ds.n, "m": ds.m, "p": ds.p},
            "trials": [{k: v for k, v in r.items() if k not in ("report", "seconds")}
                       for r in results],
        })
        # wall-clock facts live apart so every other file reproduces byte for byte
        write_json(os.path.join(out_dir, "timings.json"), {
            "config_hash": h, "seed": cfg.seed, "total_seconds": time.perf_counter() - t0,
            "trial_seconds": [r.get("seconds") for r in results],
        })
        log.info("%s: %d/%d trials completed -> %s", ds.name, len(ok), len(results), out_dir)
        outputs[ds.name] = out_dir
    return outputs


def run_ablation_trial(cfg, dataset, trial):
    seed = trial_seed(cfg.seed, trial)
    split = split_random(dataset.n, cfg.fraction, seed)
    x_tr, y_tr = dataset.features[split.train], dataset.distributions[split.train]
    fixed = cfg.fixed_weights()
    tcfg = cfg.train_config(seed, fixed)
    grid = None if fixed is not None else cfg.grid_step
    pipelines = train_variants(x_tr, tcfg, VARIANTS, grid_step=grid, distributions=y_tr)
    out = {"trial": trial, "seed": seed, "variants": {}}
    for v, pl in pipelines.items():
        per_instance = evaluate_rows(predict(pl, dataset.features[split.test]),
                                     dataset.distributions[split.test])
        out["variants"][v] = {"report": aggregate(per_instance),
                              "weights": list(pl.config.features.fusion.as_tuple()),
                              "fingerprint": fingerprint(pl)}
    return out


def run_ablation(cfg):
    """Variants A-D with shared seeds and clustering; long-format and wide CSVs per dataset."""
    outputs = {}
    h = cfg.hash()
    os.makedirs(cfg.out, exist_ok=True)
    long_rows, wide_rows, manifest = [], [], {"config_hash": h, "seed": cfg.seed,
                                              "config": cfg.result_fields(), "datasets": {}}
    for path in cfg.datasets:
        ds = load_dataset(path, renormalize_rows=cfg.renormalize)
        results = _run_trials(lambda t: run_ablation_trial(cfg, ds, t), cfg.trials, cfg.workers)
        ok = [r for r in results if "error" not in r]
        for r in ok:
            for v in VARIANTS:
                for k, val in r["variants"][v]["report"].mean.as_dict().items():
                    long_rows.append([ds.name, v, k, r["trial"], val])
        if ok:
            means = {v: aggregate_trials([r["variants"][v]["report"] for r in ok]).mean.as_dict()
                     for v in VARIANTS}
            for k in METRIC_NAMES:
                wide_rows.append([ds.name, k] + [means[v][k] for v in VARIANTS])
        manifest["datasets"][ds.name] = [
            r if "error" in r else {
                "trial": r["trial"], "seed": r["seed"],
                "variants": {v: {"weights": d["weights"], "fingerprint": d["fingerprint"]}
                             for v, d in r["variants"].items()},
            }
            for r in results
        ]
        outputs[ds.name] = cfg.out
    write_csv(os.path.join(cfg.out, "ablation_long.csv"),
              ["dataset", "variant", "metric", "trial", "value"], long_rows, h, cfg.seed)
    write_csv(os.path.join(cfg.out, "ablation_summary.csv"),
              ["dataset", "metric", *VARIANTS], wide_rows, h, cfg.seed)
    write_json(os.path.join(cfg.out, "ablation_manifest.json"), manifest)
    return outputs


def run_gridsearch(cfg):
    """Grid search on the first trial's training split of each dataset."""
    h = cfg.hash()
    os.makedirs(cfg.out, exist_ok=True)
    chosen = {}
    for path in cfg.datasets:
        ds = load_dataset(path, renormalize_rows=cfg.renormalize)
        seed = trial_seed(cfg.seed, 0)
        split = split_random(ds.n, cfg.fraction, seed)
        res = grid_search_fusion(ds.features[split.train], cfg.train_config(seed),
                                 distributions=ds.distributions[split.train],
                                 step=cfg.grid_step, workers=cfg.workers)
        write_csv(os.path.join(cfg.out, f"{ds.name}_grid.csv"), ["lam", "mu", "eps", "val_kl"],
                  [[*w, s] for w, s in res.scores], h, cfg.seed)
        chosen[ds.name] = list(res.weights.as_tuple())
    write_json(os.path.join(cfg.out, "gridsearch.json"),
               {"config_hash": h, "seed": cfg.seed, "step": cfg.grid_step, "weights": chosen})
    return chosen


# --------------------------------------------------------------------------
# statistics

def load_score_tables(paths):
    """Read long-format score files into ``{metric: (datasets, algorithms, matrix)}``.

    Rows need ``dataset``, ``metric``, ``value`` and either ``algorithm`` or
    ``variant``; repeated rows for one cell (e.g. trials) are averaged.
    """
    cells = {}
    for path in paths:
        for row in read_csv_rows(path):
            algo = row.get("algorithm") or row.get("variant")
            if algo is None:
                raise ValueError(f"{path}: rows need an 'algorithm' or 'variant' column")
            cells.setdefault(row["metric"], {}).setdefault((row["dataset"], algo), []).append(
                float(row["value"]))
    tables = {}
    for metric, entries in cells.items():
        datasets = sorted({d for d, _ in entries}, key=_natural_key)
        algos = list(dict.fromkeys(a for _, a in entries))
        missing = [(d, a) for d in datasets for a in algos if (d, a) not in entries]
        if missing:
            raise ValueError(f"metric {metric}: missing score cells {missing[:5]}")
        matrix = np.array([[np.mean(entries[(d, a)]) for a in algos] for d in datasets])
        tables[metric] = (datasets, algos, matrix)
    return tables


def _natural_key(s):
    return (0, int(s)) if s.isdigit() else (1, s)


def run_stats(paths, out, cv=None, q=None, seed="-"):
    """Friedman test, Nemenyi CD and diagram groups for each metric in the score files."""
    tables = load_score_tables(paths)
    os.makedirs(out, exist_ok=True)
    h = hashlib.sha256(json.dumps({"inputs": [os.path.basename(p) for p in paths], "cv": cv,
                                   "q": q}, sort_keys=True).encode()).hexdigest()[:16]
    report = {"config_hash": h, "seed": seed, "metrics": {}}
    rows = []
    cd_values = set()
    ordered = [k for k in METRIC_NAMES if k in tables] + sorted(set(tables) - set(METRIC_NAMES))
    for metric in ordered:
        datasets, algos, matrix = tables[metric]
        table = stats.rank(matrix, HIGHER_IS_BETTER.get(metric, False), algos)
        fr = stats.friedman(table)
        s, n = table.algorithm_count, table.dataset_count
        qa = stats.q_alpha(s, q)
        cd = stats.nemenyi_cd(s, n, qa)
        cd_values.add((s, n, qa, round(cd, 4)))
        report["metrics"][metric] = {
            "datasets": datasets, "s": s, "N": n, "chi_sq": fr.chi_sq, "f_f": fr.f_f,
            "saturated": fr.saturated, "cv": cv,
            "reject_null": None if cv is None or fr.saturated else bool(fr.f_f > cv),
            "q_alpha": qa, "diagram": stats.cd_diagram_data(table, cd),
        }
        rows.append([metric, s, n, fr.chi_sq, "saturated" if fr.saturated else fr.f_f,
                     "" if cv is None else cv, qa, cd])
    extra = "".join(f" s={s} N={n} q_alpha={qa} cd={cd:.4f}" for s, n, qa, cd in sorted(cd_values))
    write_csv(os.path.join(out, "stats.csv"),
              ["metric", "s", "N", "chi_sq", "f_f", "cv", "q_alpha", "cd"], rows, h, seed, extra)
    write_json(os.path.join(out, "stats.json"), report)
    return report


# --------------------------------------------------------------------------
# argument handling

def _add_common(p):
    p.add_argument("--config", help="JSON file mirroring the experiment settings")
    p.add_argument("--dataset", action="append", dest="datasets", help="dataset file (repeatable)")
    p.add_argument("--trials", type=int)
    p.add_argument("--fraction", type=float, help="train fraction of each trial split")
    p.add_argument("--seed", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--block-size", type=int, dest="block_size",
                   help="target centers per block (0 = one block per set)")
    p.add_argument("--weights", help="'lam,mu,eps' or 'grid'")
    p.add_argument("--grid-step", type=float, dest="grid_step")
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--max-iterations", type=int, dest="max_iterations")
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.add_argument("--renormalize", action="store_true", default=None)


def build_parser():
    parser = argparse.ArgumentParser(prog="liftsap", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "repeated train/test trials"),
                        ("ablate", "variants A-D on shared clustering"),
                        ("gridsearch", "tune fusion weights on the Val group")):
        _add_common(sub.add_parser(name, help=help_))
    st = sub.add_parser("stats", help="Friedman test and Nemenyi CD over score tables")
    st.add_argument("scores", nargs="+", help="long-format CSV score files")
    st.add_argument("--cv", type=float, help="Fisher critical value to compare F_F against")
    st.add_argument("--q-alpha", type=float, dest="q_alpha")
    st.add_argument("--out", default="stats")
    cv = sub.add_parser("convert", help="convert between dataset formats")
    cv.add_argument("input")
    cv.add_argument("output")
    cv.add_argument("--from", dest="src_format", choices=FORMATS)
    cv.add_argument("--to", dest="dst_format", choices=FORMATS)
    cv.add_argument("--renormalize", action="store_true")
    return parser


def config_from_args(args):
    values = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            values.update(json.load(fh))
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for name in known:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    if values.get("block_size") == 0:
        values["block_size"] = None
    cfg = ExperimentConfig(**values)
    if not cfg.datasets:
        raise ValueError("no datasets given (--dataset or config 'datasets')")
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "convert":
            ds = load_dataset(args.input, args.src_format, renormalize_rows=args.renormalize)
            save_dataset(ds, args.output, args.dst_format)
        elif args.command == "stats":
            run_stats(args.scores, args.out, args.cv, args.q_alpha)
        else:
            cfg = config_from_args(args)
            {"run": run_experiment, "ablate": run_ablation, "gridsearch": run_gridsearch}[
                args.command](cfg)
    except (ValueError, OSError) as exc:
        print(f"liftsap: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
