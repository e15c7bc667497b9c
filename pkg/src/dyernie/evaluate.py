"""Link-prediction ranking and MRR / Hits@k.

Each test quadruple ``(s, p, o, t)`` yields two object-prediction queries:
``(s, p, ?, t)`` with gold ``o`` and ``(o, p^-1, ?, t)`` with gold ``s``.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .data import Dataset, augment_reciprocal
from .model import ModelConfig, Params, score_all_objects

FILTER_MODES = ("raw", "triple", "time-aware")
TIE_MODES = ("optimistic", "pessimistic", "mean")


@dataclass
class MetricsReport:
    mrr: float
    hits1: float
    hits3: float
    hits10: float
    n_queries: int
    filter: str
    tie: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


@dataclass
class Queries:
    """Object-prediction queries as parallel arrays."""

    known: np.ndarray
    predicate: np.ndarray
    t: np.ndarray
    gold: np.ndarray
    direction: np.ndarray  # 0: (s, p, ?, t), 1: (o, p^-1, ?, t)

    def __len__(self):
        return len(self.known)

    @classmethod
    def from_quads(cls, quads, num_raw_predicates) -> "Queries":
        quads = np.asarray(quads, dtype=np.int64).reshape(-1, 4)
        n = len(quads)
        aug = augment_reciprocal(quads, num_raw_predicates)
        # interleave so the two queries of a quadruple are adjacent
        order = np.stack([np.arange(n), np.arange(n) + n], axis=1).ravel()
        aug = aug[order]
        return cls(aug[:, 0], aug[:, 1], aug[:, 3], aug[:, 2], np.tile([0, 1], n))


class CandidateFilter:
    """Known true objects per query key, over every split (with reciprocals).

    ``triple`` ignores timestamps, ``time-aware`` keys on the timestamp too,
    ``raw`` filters nothing.
    """

    def __init__(self, dataset: Dataset, mode: str = "triple"):
        if mode not in FILTER_MODES:
            raise ValueError(f"filter mode must be one of {FILTER_MODES}")
        self.mode = mode
        self.num_entities = dataset.num_entities
        self.known = {}
        if mode == "raw":
            return
        quads = dataset.all_quads(reciprocal=True)
        key_cols = [0, 1] if mode == "triple" else [0, 1, 3]
        buckets = {}
        for row in quads:
            buckets.setdefault(tuple(int(row[c]) for c in key_cols), set()).add(int(row[2]))
        self.known = {k: np.fromiter(v, dtype=np.int64) for k, v in buckets.items()}

    def known_objects(self, known, predicate, t=None) -> np.ndarray:
        """Known true objects of ``(known, predicate, ?, t)``."""
        key = (int(known), int(predicate)) + ((int(t),) if self.mode == "time-aware" else ())
        return self.known.get(key, np.zeros(0, dtype=np.int64))

    def mask(self, queries: Queries, rows) -> np.ndarray:
        """Boolean ``(len(rows), |E|)``: True where a candidate is removed."""
        out = np.zeros((len(rows), self.num_entities), dtype=bool)
        if self.mode == "raw":
            return out
        for i, q in enumerate(rows):
            key = (int(queries.known[q]), int(queries.predicate[q]))
            if self.mode == "time-aware":
                key += (int(queries.t[q]),)
            objs = self.known.get(key)
            if objs is not None:
                out[i, objs] = True
            out[i, queries.gold[q]] = False
        return out


def ranks_from_scores(scores, gold, removed=None, tie_mode="mean") -> np.ndarray:
    """Rank of the gold column in each row of ``scores``.

    optimistic: ``1 + #{score > gold}``; pessimistic: ``1 + #{score >= gold}``
    among the other candidates; mean: their average.
    """
    if tie_mode not in TIE_MODES:
        raise ValueError(f"tie mode must be one of {TIE_MODES}")
    scores = np.asarray(scores, dtype=np.float64)
    rows = np.arange(scores.shape[0])
    gold = np.asarray(gold)
    gold_score = scores[rows, gold][:, None]
    keep = np.ones(scores.shape, dtype=bool) if removed is None else ~removed
    keep[rows, gold] = False
    higher = ((scores > gold_score) & keep).sum(axis=1)
    ties = ((scores == gold_score) & keep).sum(axis=1)
    if tie_mode == "optimistic":
        return 1.0 + higher
    if tie_mode == "pessimistic":
        return 1.0 + higher + ties
    return 1.0 + higher + ties / 2.0


def metrics_from_ranks(ranks, filter_mode="triple", tie_mode="mean") -> MetricsReport:
    ranks = np.asarray(ranks, dtype=np.float64)
    if ranks.size == 0:
        raise ValueError("no queries to evaluate")
    return MetricsReport(
        mrr=float(np.mean(1.0 / ranks)),
        hits1=float(np.mean(ranks <= 1)),
        hits3=float(np.mean(ranks <= 3)),
        hits10=float(np.mean(ranks <= 10)),
        n_queries=int(ranks.size),
        filter=filter_mode,
        tie=tie_mode,
    )


def model_scorer(params: Params, config: ModelConfig):
    """``score_fn(known, predicate, t) -> (Q, |E|)`` backed by the model."""
    return lambda s, p, t: score_all_objects(params, s, p, t, config)


def rank_queries(score_fn, queries: Queries, candidate_filter: CandidateFilter,
                 tie_mode="mean", chunk=256, workers=1) -> np.ndarray:
    """Ranks of every query; chunks may be scored on a thread pool."""
    starts = list(range(0, len(queries), chunk))

    def run(start):
        rows = np.arange(start, min(start + chunk, len(queries)))
        scores = score_fn(queries.known[rows], queries.predicate[rows], queries.t[rows])
        removed = candidate_filter.mask(queries, rows)
        return ranks_from_scores(scores, queries.gold[rows], removed, tie_mode)

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    return np.concatenate(parts) if parts else np.zeros(0)


def _chunk_size(params: Params) -> int:
    per_query = params.num_entities * max(params.blocks["initial"].shape[1], 1)
    return int(max(1, min(1024, 2_000_000 // per_query)))


def rank_query(known, predicate, t, gold, params, dataset, config,
               filter_mode="triple", tie_mode="mean") -> float:
    """Rank of ``gold`` for the single query ``(known, predicate, ?, t)``."""
    q = Queries(*(np.array([v], dtype=np.int64) for v in (known, predicate, t, gold, 0)))
    ranks = rank_queries(model_scorer(params, config), q, CandidateFilter(dataset, filter_mode), tie_mode)
    return float(ranks[0])


def evaluate_split(params: Params, dataset: Dataset, split: str, config: ModelConfig,
                   filter_mode="triple", tie_mode="mean", workers=1,
                   candidate_filter=None, return_ranks=False):
    """Filtered (or raw) MRR and Hits@1/3/10 over two queries per quadruple."""
    quads = dataset.split(split)
    if len(quads) == 0:
        raise ValueError(f"split {split!r} is empty")
    queries = Queries.from_quads(quads, dataset.num_raw_predicates)
    cf = candidate_filter or CandidateFilter(dataset, filter_mode)
    ranks = rank_queries(model_scorer(params, config), queries, cf, tie_mode,
                         chunk=_chunk_size(params), workers=workers)
    report = metrics_from_ranks(ranks, cf.mode, tie_mode)
    return (report, ranks) if return_ranks else report


def evaluate_scorer(score_fn, dataset: Dataset, split: str, filter_mode="triple", tie_mode="mean"):
    """Same protocol as :func:`evaluate_split` for an arbitrary scorer."""
    queries = Queries.from_quads(dataset.split(split), dataset.num_raw_predicates)
    ranks = rank_queries(score_fn, queries, CandidateFilter(dataset, filter_mode), tie_mode)
    return metrics_from_ranks(ranks, filter_mode, tie_mode)


def write_ranks_csv(path, ranks):
    """Per-query CSV: ``query_id,direction,rank`` (direction ``object``/``subject``)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["query_id", "direction", "rank"])
        for i, r in enumerate(ranks):
            w.writerow([i // 2, "object" if i % 2 == 0 else "subject", repr(float(r))])
