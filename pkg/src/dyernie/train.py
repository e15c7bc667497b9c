"""Riemannian SGD training, early stopping and signature search."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry
from .checkpoint import Checkpoint
from .data import Dataset, TimeScale, augment_reciprocal, make_rng
from .evaluate import CandidateFilter, evaluate_split
from .grad import Batch, backward, riemannian_rescale
from .model import MANIFOLD_BLOCKS, ModelConfig, Params, init_params
from .product import Component, Signature

logger = logging.getLogger(__name__)


class NumericalError(FloatingPointError):
    """A parameter update produced non-finite values."""


@dataclass
class TrainConfig:
    lr: float = 50.0
    negatives: int = 50
    batch_size: int = 256
    max_epochs: int = 500
    validate_every: int = 50
    patience: int = 3
    seed: int = 0
    filter_mode: str = "triple"
    tie_mode: str = "mean"
    workers: int = 1

    def __post_init__(self):
        for name in ("lr", "negatives", "batch_size", "validate_every", "patience"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")


def rsgd_step(params: Params, grads: dict, lr: float, config: ModelConfig) -> int:
    """Apply one RSGD update in place; returns the number of boundary clamps.

    Points of curved components move along ``exp_x(-lr * g / lambda_x^2)``;
    every other coordinate takes a plain SGD step.
    """
    clamps = 0
    for name in config.trainable_blocks():
        g = grads[name]
        arr = params.blocks[name]
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient for block {name!r}")
        if name not in MANIFOLD_BLOCKS:
            arr -= lr * g
            continue
        for sl, c in zip(config.signature.slices, config.signature):
            gs = g[:, sl]
            if c.K == 0:
                arr[:, sl] -= lr * gs
                continue
            rows = np.flatnonzero(np.any(gs != 0.0, axis=1))
            if rows.size == 0:
                continue
            x = arr[rows, sl]
            new = geometry.exp_map(x, -lr * riemannian_rescale(gs[rows], x, c.K), c.K)
            if c.K < 0:
                bound = (1.0 - geometry.EPS_BOUND) / np.sqrt(-c.K)
                clamps += int(np.sum(np.linalg.norm(new, axis=1) >= bound * (1 - 1e-9)))
            arr[rows, sl] = new
        if not np.all(np.isfinite(arr)):
            raise NumericalError(f"non-finite values in block {name!r} after update")
    return clamps


@dataclass
class EpochStats:
    epoch: int
    mean_loss: float
    clamp_count: int
    batches: int


def train_epoch(train_quads: np.ndarray, params: Params, config: ModelConfig,
                tc: TrainConfig, epoch: int, num_entities: int) -> EpochStats:
    """One pass over the (already augmented) training quadruples."""
    order = make_rng(tc.seed, epoch, 0).permutation(len(train_quads))
    losses, clamps = [], 0
    for start in range(0, len(order), tc.batch_size):
        quads = train_quads[order[start:start + tc.batch_size]]
        batch = Batch.from_quads(quads, tc.negatives, num_entities, make_rng(tc.seed, epoch, 1, start))
        value, grads = backward(batch, params, config)
        clamps += rsgd_step(params, grads, tc.lr, config)
        losses.append(value)
    return EpochStats(epoch, float(np.mean(losses)) if losses else 0.0, clamps, len(losses))


@dataclass
class FitResult:
    best: Checkpoint
    final_epoch: int
    history: list = field(default_factory=list)  # log records


def fit(dataset: Dataset, config: ModelConfig, tc: TrainConfig, log=None, params=None) -> FitResult:
    """Train with early stopping on filtered validation MRR.

    ``log`` receives one dict per epoch (``epoch, mean_loss, clamp_count``
    plus ``val_mrr`` on validation epochs).
    """
    train_quads = augment_reciprocal(dataset.train, dataset.num_raw_predicates)
    if params is None:
        params = init_params(dataset.num_entities, 2 * dataset.num_raw_predicates, config, tc.seed)
    cf = CandidateFilter(dataset, tc.filter_mode)
    history = []

    def emit(record):
        history.append(record)
        if log is not None:
            log(record)

    def validate():
        return evaluate_split(params, dataset, "valid", config, tie_mode=tc.tie_mode,
                              workers=tc.workers, candidate_filter=cf).mrr

    def snapshot(epoch, mrr):
        return Checkpoint(params.copy(), config, dataset.num_raw_predicates, dataset.num_timestamps,
                          seed=tc.seed, epoch=epoch, best_valid_mrr=mrr,
                          vocabs={"entities": dataset.entities, "predicates": dataset.predicates,
                                  "timestamps": dataset.timestamps})

    if tc.max_epochs == 0:
        mrr = validate()
        emit({"epoch": 0, "val_mrr": mrr})
        return FitResult(snapshot(0, mrr), 0, history)

    best, bad, epoch = None, 0, 0
    for epoch in range(1, tc.max_epochs + 1):
        stats = train_epoch(train_quads, params, config, tc, epoch, dataset.num_entities)
        record = {"epoch": epoch, "mean_loss": stats.mean_loss, "clamp_count": stats.clamp_count}
        if epoch % tc.validate_every == 0 or epoch == tc.max_epochs:
            mrr = validate()
            record["val_mrr"] = mrr
            if best is None or mrr > best.best_valid_mrr:
                best, bad = snapshot(epoch, mrr), 0
            else:
                bad += 1
        emit(record)
        if bad >= tc.patience:
            logger.info("early stop at epoch %d", epoch)
            break
    return FitResult(best, epoch, history)


def json_log_writer(fh):
    """``log`` callback writing line-delimited JSON records."""
    def write(record):
        fh.write(json.dumps(record, sort_keys=True) + "\n")
        fh.flush()
    return write


@dataclass
class SearchResult:
    signature: Signature
    val_mrr: float
    epoch: int


def jitter_signature(sig: Signature, rng, scale=0.25) -> Signature:
    """Multiply each non-zero curvature by a log-normal factor."""
    return Signature(tuple(
        Component(c.dim, c.K * float(np.exp(rng.normal(0.0, scale))) if c.K != 0 else 0.0) for c in sig
    ))


def signature_search(dataset: Dataset, candidates, budget: int, config: ModelConfig,
                     tc: TrainConfig, jitter=0.25) -> list[SearchResult]:
    """Train ``budget`` configurations and rank them by validation MRR.

    The candidates are tried first in the given order; remaining budget goes
    to curvature-jittered copies of randomly chosen candidates.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    candidates = list(candidates)
    rng = make_rng(tc.seed, 0x5EA6C)
    trials = candidates[:budget]
    while len(trials) < budget:
        base = candidates[int(rng.integers(len(candidates)))]
        trials.append(jitter_signature(base, rng, jitter))
    results = []
    for sig in trials:
        cfg = replace(config, signature=sig)
        res = fit(dataset, cfg, tc)
        results.append(SearchResult(sig, res.best.best_valid_mrr, res.best.epoch))
    order = sorted(range(len(results)), key=lambda i: (-results[i].val_mrr, i))
    return [results[i] for i in order]


def enumerate_candidates(total_dim: int, curvature: float = 1.0, max_components: int = 3) -> list[Signature]:
    """Manifold combinations with 1..3 components and equal dimension split.

    Mirrors the usual search grid: P, S, E alone; PS, PP, SS, PE, SE; and
    PPP, PSE, SSS, PPS, PSS, PPE, SSE.
    """
    grids = {
        1: ["P", "S", "E"],
        2: ["PS", "PP", "SS", "PE", "SE"],
        3: ["PPP", "PSE", "SSS", "PPS", "PSS", "PPE", "SSE"],
    }
    sign = {"P": -abs(curvature), "S": abs(curvature), "E": 0.0}
    out = []
    for k in range(1, max_components + 1):
        if total_dim < k:
            break
        dims = [total_dim // k + (1 if i < total_dim % k else 0) for i in range(k)]
        for kinds in grids[k]:
            out.append(Signature(tuple(Component(n, sign[ch]) for n, ch in zip(dims, kinds))))
    return out


def default_time_scale(dataset: Dataset, mode="normalized") -> TimeScale:
    return TimeScale.for_timestamps(dataset.num_timestamps, mode)
