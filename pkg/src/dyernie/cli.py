"""Command-line entry points (``python -m dyernie <command>``).

Settings resolve as command-line flag > JSON config file (``--config``) >
built-in default. Exit status is 0 on success, 2 for usage, configuration,
input or vocabulary errors and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import curvature as curv
from .checkpoint import load_checkpoint, save_checkpoint
from .data import DataError, Dataset, TimeScale, from_arrays, load_dataset, make_rng, reciprocal
from .evaluate import FILTER_MODES, TIE_MODES, CandidateFilter, evaluate_split, write_ranks_csv
from .export import EXPORT_KINDS, export_table, write_table
from .grad import Batch, NonFiniteGradient, fd_check
from .model import REPR_VARIANTS, SCORE_VARIANTS, ModelConfig, random_params, score_all_objects
from .product import Signature
from .train import NumericalError, TrainConfig, enumerate_candidates, fit, json_log_writer, signature_search


class UsageError(Exception):
    """Bad flags, config file or query; maps to exit status 2."""


@dataclass
class RunConfig:
    train: str | None = None
    valid: str | None = None
    test: str | None = None
    out: str | None = None
    seed: int = 0
    signature: str = "P10@-1"
    repr_variant: str = "linear"
    score_variant: str = "default"
    time_scale: str = "normalized"
    lr: float = 50.0
    negatives: int = 50
    batch_size: int = 256
    max_epochs: int = 500
    validate_every: int = 50
    patience: int = 3
    filter_mode: str = "triple"
    tie_mode: str = "mean"
    workers: int | None = None  # None: number of cores
    deterministic: bool = False

    def validate(self):
        choices = {
            "repr_variant": REPR_VARIANTS,
            "score_variant": SCORE_VARIANTS,
            "time_scale": ("normalized", "raw"),
            "filter_mode": FILTER_MODES,
            "tie_mode": TIE_MODES,
        }
        for name, allowed in choices.items():
            if getattr(self, name) not in allowed:
                raise UsageError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        try:
            Signature.parse(self.signature)
            self.train_config()
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if self.workers is not None and self.workers < 1:
            raise UsageError("workers must be >= 1")
        return self

    @property
    def effective_workers(self) -> int:
        if self.deterministic:
            return 1
        return self.workers or os.cpu_count() or 1

    def train_config(self) -> TrainConfig:
        return TrainConfig(lr=self.lr, negatives=self.negatives, batch_size=self.batch_size,
                           max_epochs=self.max_epochs, validate_every=self.validate_every,
                           patience=self.patience, seed=self.seed, filter_mode=self.filter_mode,
                           tie_mode=self.tie_mode, workers=self.effective_workers)

    def model_config(self, dataset: Dataset) -> ModelConfig:
        return ModelConfig(Signature.parse(self.signature), self.repr_variant, self.score_variant,
                           TimeScale.for_timestamps(dataset.num_timestamps, self.time_scale))


_FIELD_TYPES = {
    "train": str, "valid": str, "test": str, "out": str, "seed": int, "signature": str,
    "repr_variant": str, "score_variant": str, "time_scale": str, "lr": float, "negatives": int,
    "batch_size": int, "max_epochs": int, "validate_every": int, "patience": int,
    "filter_mode": str, "tie_mode": str, "workers": int, "deterministic": bool,
}


def read_config_file(path) -> dict:
    """Load and type-check a JSON config; unknown keys are rejected."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    unknown = sorted(set(data) - set(_FIELD_TYPES))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    for key, val in data.items():
        want = _FIELD_TYPES[key]
        ok = (
            isinstance(val, bool) if want is bool
            else isinstance(val, (int, float)) and not isinstance(val, bool) if want is float
            else isinstance(val, int) and not isinstance(val, bool) if want is int
            else isinstance(val, str)
        )
        if val is None and key in ("train", "valid", "test", "out", "workers"):
            ok = True
        if not ok:
            raise UsageError(f"config key {key!r} must be of type {want.__name__}")
    return data


def resolve_config(args) -> RunConfig:
    """Defaults, then the config file, then explicitly given flags."""
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    names = {f.name for f in fields(RunConfig)}
    values.update({k: v for k, v in vars(args).items() if k in names})
    return RunConfig(**values).validate()


# -- shared helpers ----------------------------------------------------------

def _load(cfg: RunConfig, vocabs=None, need=("train",)) -> Dataset:
    for split in need:
        if getattr(cfg, split) is None:
            raise UsageError(f"--{split} is required for this command")
    if cfg.train is None:
        raise UsageError("--train is required")
    for p in (cfg.train, cfg.valid, cfg.test):
        if p is not None and not Path(p).is_file():
            raise UsageError(f"no such file: {p}")
    return load_dataset(cfg.train, cfg.valid, cfg.test, vocabs=vocabs)


def _out_dir(cfg: RunConfig) -> Path:
    if cfg.out is None:
        raise UsageError("--out is required for this command")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_json(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def _checkpoint(path):
    if path is None:
        raise UsageError("--checkpoint is required")
    if not (Path(path) / "manifest.json").is_file():
        raise UsageError(f"no checkpoint at {path}")
    return load_checkpoint(path)


# -- commands ----------------------------------------------------------------

def cmd_estimate_curvature(args, cfg: RunConfig) -> int:
    ds = _load(cfg)
    hist = curv.estimate_all(ds, n_iter=args.n_iter, seed=cfg.seed, aggregation=args.mode,
                             formula=args.formula, workers=cfg.effective_workers,
                             exhaustive=args.exhaustive)
    if cfg.out is not None:
        hist.write_csv(_out_dir(cfg) / "curvature.csv")
    _print_json(hist.summary())
    return 0


def cmd_propose_signature(args, cfg: RunConfig) -> int:
    if args.histogram:
        if not Path(args.histogram).is_file():
            raise UsageError(f"no such file: {args.histogram}")
        hist = curv.CurvatureHistogram.read_csv(args.histogram)
    else:
        hist = curv.estimate_all(_load(cfg), n_iter=args.n_iter, seed=cfg.seed,
                                 workers=cfg.effective_workers)
    if len(hist) == 0:
        raise UsageError("the curvature histogram is empty")
    try:
        sig = curv.propose_signature(hist, args.dim, args.max_components)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(sig)
    return 0


def cmd_train(args, cfg: RunConfig) -> int:
    ds = _load(cfg, need=("train", "valid"))
    out = _out_dir(cfg)
    config = cfg.model_config(ds)
    tc = cfg.train_config()
    t0 = time.time()
    with open(out / "train.jsonl", "w") as fh:
        write = json_log_writer(fh)

        def log(record):
            if not cfg.deterministic:
                record = dict(record, elapsed=round(time.time() - t0, 3))
            write(record)

        result = fit(ds, config, tc, log=log)
    save_checkpoint(result.best, out / "checkpoint")
    report = evaluate_split(result.best.params, ds, "valid", config, filter_mode=cfg.filter_mode,
                            tie_mode=cfg.tie_mode, workers=cfg.effective_workers)
    _print_json({"split": "valid", "epoch": result.best.epoch, **asdict(report)})
    return 0


def cmd_evaluate(args, cfg: RunConfig) -> int:
    ckpt = _checkpoint(args.checkpoint)
    ds = _load(cfg, vocabs=ckpt.vocabs or None)
    report, ranks = evaluate_split(ckpt.params, ds, args.split, ckpt.config, filter_mode=cfg.filter_mode,
                                   tie_mode=cfg.tie_mode, workers=cfg.effective_workers, return_ranks=True)
    if args.ranks_csv:
        write_ranks_csv(args.ranks_csv, ranks)
    if cfg.out is not None:
        (_out_dir(cfg) / "metrics.json").write_text(report.to_json() + "\n")
    print(report.to_json())
    return 0


def parse_query(text, vocabs, num_raw_predicates):
    """``s,p,?,t`` or ``?,p,o,t`` -> (known entity, predicate index, timestamp index)."""
    parts = [x.strip() for x in text.split(",")]
    if len(parts) != 4 or (parts[0] == "?") == (parts[2] == "?"):
        raise UsageError("query must look like 's,p,?,t' or '?,p,o,t'")

    def lookup(kind, label):
        vocab = vocabs[kind]
        if label not in vocab:
            raise UsageError(f"unknown {kind[:-1] if kind != 'entities' else 'entity'} label {label!r}")
        return vocab[label]

    p = lookup("predicates", parts[1])
    t = lookup("timestamps", parts[3])
    if parts[2] == "?":
        return lookup("entities", parts[0]), p, t
    return lookup("entities", parts[2]), int(reciprocal(p, num_raw_predicates)), t


def cmd_predict(args, cfg: RunConfig) -> int:
    ckpt = _checkpoint(args.checkpoint)
    if not ckpt.vocabs:
        raise UsageError("checkpoint has no vocabularies")
    known, p, t = parse_query(args.query, ckpt.vocabs, ckpt.num_raw_predicates)
    scores = score_all_objects(ckpt.params, np.array([known]), np.array([p]), np.array([t]), ckpt.config)[0]
    removed = np.zeros(scores.shape, dtype=bool)
    filter_mode = getattr(args, "filter_mode", None) or ("triple" if cfg.train else "raw")
    if filter_mode != "raw":
        if cfg.train is None:
            raise UsageError("filtering needs the dataset (--train/--valid/--test)")
        ds = _load(cfg, vocabs=ckpt.vocabs)
        removed[CandidateFilter(ds, filter_mode).known_objects(known, p, t)] = True
    order = [i for i in np.argsort(-scores, kind="stable") if not removed[i]][: args.topk]
    print("rank,entity,score")
    labels = ckpt.vocabs["entities"].labels
    for r, i in enumerate(order, start=1):
        print(f"{r},{labels[i]},{float(scores[i])!r}")
    return 0


def cmd_export(args, cfg: RunConfig) -> int:
    ckpt = _checkpoint(args.checkpoint)
    if args.kind not in EXPORT_KINDS:
        raise UsageError(f"unknown export kind {args.kind!r}; expected one of {EXPORT_KINDS}")
    ds = _load(cfg, vocabs=ckpt.vocabs or None)
    header, rows = export_table(args.kind, ckpt.params, ckpt.config, ds)
    path = _out_dir(cfg) / f"{args.kind}.csv"
    write_table(path, header, rows)
    print(path)
    return 0


def cmd_fd_check(args, cfg: RunConfig) -> int:
    if cfg.train is not None:
        ds = _load(cfg)
    else:
        rng = make_rng(cfg.seed, 0xFD)
        quads = np.column_stack([rng.integers(0, 12, 40), rng.integers(0, 3, 40),
                                 rng.integers(0, 12, 40), rng.integers(0, 5, 40)])
        ds = from_arrays(quads, [], [], 12, 3, 5)
    config = cfg.model_config(ds)
    params = random_params(ds.num_entities, 2 * ds.num_raw_predicates, config, make_rng(cfg.seed, 0xFD, 1))
    quads = ds.train[make_rng(cfg.seed, 0xFD, 2).permutation(len(ds.train))[: args.batch]]
    batch = Batch.from_quads(quads, args.fd_negatives, ds.num_entities, make_rng(cfg.seed, 0xFD, 3))
    report = fd_check(params, batch, config, h=args.h, tol=args.tol, max_coords=args.max_coords)
    print(report)
    print("PASS" if report.passed else "FAIL: " + ", ".join(report.failing))
    return 0 if report.passed else 3


def cmd_signature_search(args, cfg: RunConfig) -> int:
    ds = _load(cfg, need=("train", "valid"))
    if args.candidates:
        try:
            cands = [Signature.parse(c) for c in args.candidates.split(";") if c.strip()]
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        cands = enumerate_candidates(args.dim, args.curvature, args.max_components)
    if args.budget < 1:
        raise UsageError("--budget must be >= 1")
    results = signature_search(ds, cands, args.budget, cfg.model_config(ds), cfg.train_config())
    out = [{"signature": str(r.signature), "val_mrr": r.val_mrr, "epoch": r.epoch} for r in results]
    if cfg.out is not None:
        (_out_dir(cfg) / "search.json").write_text(json.dumps(out, indent=2) + "\n")
    _print_json(out)
    return 0


# -- parser ------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--config", help="JSON config file (flags take precedence)")
    p.add_argument("--train", help="training TSV")
    p.add_argument("--valid", help="validation TSV")
    p.add_argument("--test", help="test TSV")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, help="evaluation / estimation threads (default: cores)")
    p.add_argument("--deterministic", action="store_const", const=True,
                   help="single worker, no wall-clock fields in logs")
    return p


def _model_flags(p):
    p.add_argument("--signature", help="e.g. P10@-1 or P20@-0.17,S10@0.29,E10@0")
    p.add_argument("--variant", dest="repr_variant", choices=REPR_VARIANTS)
    p.add_argument("--score-variant", dest="score_variant", choices=SCORE_VARIANTS)
    p.add_argument("--time-scale", dest="time_scale", choices=("normalized", "raw"))


def _train_flags(p):
    for flag, typ in (("--lr", float), ("--negatives", int), ("--batch-size", int), ("--max-epochs", int),
                      ("--validate-every", int), ("--patience", int)):
        p.add_argument(flag, type=typ, dest=flag[2:].replace("-", "_"))


def _eval_flags(p):
    p.add_argument("--filter", dest="filter_mode", choices=FILTER_MODES)
    p.add_argument("--tie", dest="tie_mode", choices=TIE_MODES)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dyernie", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()
    kw = dict(parents=[common], argument_default=argparse.SUPPRESS)

    p = sub.add_parser("estimate-curvature", help="per-timestamp curvature histogram", **kw)
    p.add_argument("--n-iter", dest="n_iter", type=int, default=100)
    p.add_argument("--mode", choices=curv.AGGREGATIONS, default="mean")
    p.add_argument("--formula", choices=curv.FORMULAS, default="canonical")
    p.add_argument("--exhaustive", action="store_true", default=False)
    p.set_defaults(func=cmd_estimate_curvature)

    p = sub.add_parser("propose-signature", help="signature from a curvature histogram", **kw)
    p.add_argument("--histogram", default=None, help="CSV written by estimate-curvature")
    p.add_argument("--dim", type=int, default=10)
    p.add_argument("--max-components", dest="max_components", type=int, default=3)
    p.add_argument("--n-iter", dest="n_iter", type=int, default=100)
    p.set_defaults(func=cmd_propose_signature)

    p = sub.add_parser("train", help="train and write the best checkpoint", **kw)
    _model_flags(p)
    _train_flags(p)
    _eval_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="filtered MRR / Hits@k of a checkpoint", **kw)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--split", choices=("train", "valid", "test"), default="test")
    p.add_argument("--ranks-csv", dest="ranks_csv", default=None)
    _eval_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="top-k answers for one query", **kw)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--query", required=True, help="'s,p,?,t' or '?,p,o,t' (labels)")
    p.add_argument("--topk", type=int, default=10)
    _eval_flags(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("export", help="CSV tables for plotting", **kw)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--kind", required=True, help=" / ".join(EXPORT_KINDS))
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("fd-check", help="compare gradients with finite differences", **kw)
    _model_flags(p)
    p.add_argument("--h", type=float, default=1e-6)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--fd-negatives", dest="fd_negatives", type=int, default=4)
    p.add_argument("--max-coords", dest="max_coords", type=int, default=200)
    p.set_defaults(func=cmd_fd_check)

    p = sub.add_parser("signature-search", help="rank candidate signatures by validation MRR", **kw)
    _model_flags(p)
    _train_flags(p)
    _eval_flags(p)
    p.add_argument("--candidates", default=None, help="';'-separated signatures")
    p.add_argument("--budget", type=int, default=1)
    p.add_argument("--dim", type=int, default=10)
    p.add_argument("--curvature", type=float, default=1.0)
    p.add_argument("--max-components", dest="max_components", type=int, default=3)
    p.set_defaults(func=cmd_signature_search)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return args.func(args, cfg)
    except (UsageError, DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, NonFiniteGradient, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
