"""Sectional-curvature estimates of per-timestamp graph slices.

For a node ``m`` with two distinct neighbours ``b, c`` and a reference node
``a``, the parallelogram law in a flat space says

    d(a, m)^2 + d(b, c)^2 / 4 = (d(a, b)^2 + d(a, c)^2) / 2

and the normalised deviation from it is negative on trees, zero on paths
and grids and positive on cycles. Distances are BFS hop counts on the
undirected slice. Slice estimates are collected into a histogram that can
be turned into a product signature proposal.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .data import Dataset, make_rng
from .product import Component, Signature

FORMULAS = ("canonical", "paper-literal")
AGGREGATIONS = ("mean", "paper-sum")
FLAT_BAND = 0.1
RETRY_FACTOR = 50


@dataclass
class SliceGraph:
    """Undirected simple graph over the entities active at one timestamp."""

    nodes: np.ndarray  # sorted entity ids
    neighbors: dict  # entity id -> set of entity ids

    @classmethod
    def from_edges(cls, edges) -> "SliceGraph":
        nb = {}
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                continue
            nb.setdefault(u, set()).add(v)
            nb.setdefault(v, set()).add(u)
        return cls(np.array(sorted(nb), dtype=np.int64), nb)

    def __len__(self):
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return sum(len(v) for v in self.neighbors.values()) // 2

    def distances(self) -> np.ndarray:
        """All-pairs hop counts in local node order (``inf`` if unreachable)."""
        pos = {int(u): i for i, u in enumerate(self.nodes)}
        rows, cols = [], []
        for u, vs in self.neighbors.items():
            for v in vs:
                rows.append(pos[u])
                cols.append(pos[v])
        n = len(self.nodes)
        adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        return shortest_path(adj, method="D", directed=False, unweighted=True)


def build_slice_graph(dataset: Dataset, t: int) -> SliceGraph:
    """Edges ``{s, o}`` of the training facts at timestamp index ``t``."""
    if not 0 <= t < dataset.num_timestamps:
        raise ValueError(f"timestamp index {t} out of range")
    q = dataset.train[dataset.train[:, 3] == t]
    return SliceGraph.from_edges(q[:, [0, 2]])


def psi(d_am, d_bc, d_ab, d_ac, formula="canonical"):
    """Parallelogram deviation from the four hop distances (vectorised)."""
    d_am, d_bc, d_ab, d_ac = (np.asarray(x, dtype=np.float64) for x in (d_am, d_bc, d_ab, d_ac))
    if formula == "canonical":
        inner = d_am**2 + d_bc**2 / 4 - (d_ab**2 + d_ac**2) / 2
    elif formula == "paper-literal":
        inner = 2 * d_am**2 + d_bc**2 / 4 - d_ab**2 / 2 + d_ac**2 / 2
    else:
        raise ValueError(f"formula must be one of {FORMULAS}")
    return inner / (2 * d_am)


def sample_psi(G: SliceGraph, m, b, c, a, formula="canonical", dist=None) -> float:
    """ψ for one configuration; ``b, c`` must be distinct neighbours of ``m``."""
    if b == c or b not in G.neighbors.get(m, ()) or c not in G.neighbors.get(m, ()):
        raise ValueError("b and c must be distinct neighbours of m")
    if a == m:
        raise ValueError("a must differ from m")
    if dist is None:
        dist = G.distances()
    pos = {int(u): i for i, u in enumerate(G.nodes)}
    im, ib, ic, ia = (pos[int(x)] for x in (m, b, c, a))
    d = (dist[ia, im], dist[ib, ic], dist[ia, ib], dist[ia, ic])
    if not np.all(np.isfinite(d)):
        raise ValueError("configuration contains an unreachable node")
    return float(psi(*d, formula=formula))


@dataclass
class SliceEstimate:
    value: float | None
    samples_used: int
    nodes_used: int
    reason: str = ""  # why the slice was skipped, if it was


def _eligible(G: SliceGraph, dist):
    """Local indices of nodes with >= 2 neighbours and a valid reference node."""
    reach = np.isfinite(dist).sum(axis=1)  # component sizes (incl. self)
    out = []
    for i, u in enumerate(G.nodes):
        if len(G.neighbors[int(u)]) >= 2 and reach[i] >= 4:
            out.append(i)
    return out


def _aggregate(per_node, counts, aggregation):
    if aggregation == "mean":
        return float(np.mean([s / n for s, n in zip(per_node, counts)]))
    if aggregation == "paper-sum":
        return float(np.sum(per_node))
    raise ValueError(f"aggregation must be one of {AGGREGATIONS}")


def estimate_slice_curvature(G: SliceGraph, n_iter=100, seed=0, aggregation="mean",
                             formula="canonical", rng=None) -> SliceEstimate:
    """Monte-Carlo estimate for one slice.

    Per eligible node ``m``: ``b, c`` are uniform distinct neighbours and
    ``a`` is uniform over ``m``'s connected component minus ``{m, b, c}``,
    drawn by rejection from the whole slice. A node that cannot collect
    ``n_iter`` samples within ``50 * n_iter`` draws is dropped.
    ``mean`` averages over samples and then nodes; ``paper-sum`` adds
    everything up.
    """
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    if len(G) < 3:
        return SliceEstimate(None, 0, 0, "fewer than 3 nodes")
    rng = rng if rng is not None else make_rng(seed)
    dist = G.distances()
    pos = {int(u): i for i, u in enumerate(G.nodes)}
    n = len(G)
    sums, counts = [], []
    for im in _eligible(G, dist):
        nb = np.array(sorted(pos[v] for v in G.neighbors[int(G.nodes[im])]))
        vals, draws = [], 0
        need = n_iter
        while need > 0 and draws < RETRY_FACTOR * n_iter:
            k = min(max(2 * need, 16), RETRY_FACTOR * n_iter - draws)
            draws += k
            b = nb[rng.integers(len(nb), size=k)]
            c = nb[rng.integers(len(nb), size=k)]
            a = rng.integers(n - 1, size=k)
            a = a + (a >= im)  # uniform over the slice minus m
            ok = (b != c) & (a != b) & (a != c) & np.isfinite(dist[a, im])
            b, c, a = b[ok][:need], c[ok][:need], a[ok][:need]
            vals.append(psi(dist[a, im], dist[b, c], dist[a, b], dist[a, c], formula))
            need -= len(a)
        if need > 0:
            continue
        v = np.concatenate(vals)
        sums.append(float(v.sum()))
        counts.append(len(v))
    if not counts:
        return SliceEstimate(None, 0, 0, "no eligible node")
    return SliceEstimate(_aggregate(sums, counts, aggregation), int(sum(counts)), len(counts))


def exhaustive_slice_curvature(G: SliceGraph, aggregation="mean", formula="canonical") -> SliceEstimate:
    """Exact expectation of the sampler: every ordered ``(b, c)`` and valid ``a``."""
    dist = G.distances()
    pos = {int(u): i for i, u in enumerate(G.nodes)}
    sums, counts = [], []
    for im in _eligible(G, dist):
        nb = sorted(pos[v] for v in G.neighbors[int(G.nodes[im])])
        comp = np.flatnonzero(np.isfinite(dist[im]))
        vals = []
        for b in nb:
            for c in nb:
                if b == c:
                    continue
                a = comp[(comp != im) & (comp != b) & (comp != c)]
                vals.append(psi(dist[a, im], dist[b, c], dist[a, b], dist[a, c], formula))
        v = np.concatenate(vals)
        sums.append(float(v.sum()))
        counts.append(len(v))
    if not counts:
        return SliceEstimate(None, 0, 0, "no eligible node")
    return SliceEstimate(_aggregate(sums, counts, aggregation), int(sum(counts)), len(counts))


@dataclass
class CurvatureHistogram:
    timestamps: list  # timestamp indices of the estimated slices
    values: list
    samples_used: list
    skips: list = field(default_factory=list)  # (timestamp index, reason)
    n_iter: int = 0
    seed: int = 0
    aggregation: str = "mean"
    formula: str = "canonical"

    def __len__(self):
        return len(self.values)

    def fractions(self, band=FLAT_BAND):
        """Mass fractions (negative, flat, positive)."""
        v = np.asarray(self.values, dtype=np.float64)
        if v.size == 0:
            return 0.0, 0.0, 0.0
        neg = float(np.mean(v <= -band))
        pos = float(np.mean(v >= band))
        return neg, 1.0 - neg - pos, pos

    def summary(self) -> dict:
        v = np.asarray(self.values, dtype=np.float64)
        neg, flat, pos = self.fractions()
        return {
            "slices": int(v.size),
            "skipped": len(self.skips),
            "min": float(v.min()) if v.size else None,
            "median": float(np.median(v)) if v.size else None,
            "max": float(v.max()) if v.size else None,
            "negative": neg,
            "flat": flat,
            "positive": pos,
        }

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["timestamp_index", "curvature", "samples_used"])
            for t, k, n in zip(self.timestamps, self.values, self.samples_used):
                w.writerow([t, repr(float(k)), n])
            for t, reason in self.skips:
                fh.write(f"# skipped {t}: {reason}\n")

    @classmethod
    def read_csv(cls, path) -> "CurvatureHistogram":
        ts, vals, used, skips = [], [], [], []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    head, _, reason = line[1:].partition(":")
                    skips.append((int(head.split()[-1]), reason.strip()))
                    continue
                if line.startswith("timestamp_index"):
                    continue
                t, k, n = line.split(",")
                ts.append(int(t))
                vals.append(float(k))
                used.append(int(n))
        return cls(ts, vals, used, skips)


def estimate_all(dataset: Dataset, n_iter=100, seed=0, aggregation="mean", formula="canonical",
                 workers=1, exhaustive=False) -> CurvatureHistogram:
    """One estimate per timestamp; each slice has its own RNG stream ``(seed, t)``."""

    def run(t):
        G = build_slice_graph(dataset, t)
        if len(G) == 0:
            return SliceEstimate(None, 0, 0, "empty slice")
        if exhaustive:
            return exhaustive_slice_curvature(G, aggregation, formula)
        return estimate_slice_curvature(G, n_iter, aggregation=aggregation, formula=formula,
                                        rng=make_rng(seed, t))

    ts = range(dataset.num_timestamps)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, ts))
    else:
        results = [run(t) for t in ts]
    hist = CurvatureHistogram([], [], [], [], n_iter, seed, aggregation, formula)
    for t, r in zip(ts, results):
        if r.value is None:
            hist.skips.append((t, r.reason))
        else:
            hist.timestamps.append(t)
            hist.values.append(r.value)
            hist.samples_used.append(r.samples_used)
    return hist


def _largest_remainder(total, weights, minimum):
    """Integer split of ``total`` proportional to ``weights``, each >= ``minimum``."""
    weights = np.asarray(weights, dtype=np.float64)
    base = np.full(len(weights), minimum, dtype=np.int64)
    rest = total - base.sum()
    share = weights / weights.sum() * rest
    alloc = base + np.floor(share).astype(np.int64)
    left = total - alloc.sum()
    # remainder goes to the largest fraction first, then by fractional part
    order = sorted(range(len(weights)), key=lambda i: (-(share[i] - np.floor(share[i])), -weights[i], i))
    for i in order[:left]:
        alloc[i] += 1
    return alloc


def propose_signature(hist: CurvatureHistogram, total_dim: int, max_components: int = 3,
                      band=FLAT_BAND) -> Signature:
    """Heuristic signature from the sign mix of the slice curvatures.

    Components go to the hyperbolic / flat / spherical classes in proportion
    to their mass (each present class gets at least one, ``max_components``
    in total); dimensions follow the class mass with the remainder going to
    the largest class and are split evenly within a class. Curved components
    take the median curvature of their class, rounded to 4 significant digits.
    """
    if len(hist) == 0:
        raise ValueError("histogram is empty")
    if max_components < 1 or total_dim < max_components:
        raise ValueError("need total_dim >= max_components >= 1")
    v = np.asarray(hist.values, dtype=np.float64)
    classes = [("P", v <= -band), ("E", np.abs(v) < band), ("S", v >= band)]
    present = [(kind, mask) for kind, mask in classes if mask.any()]
    if len(present) > max_components:
        # keep the heaviest classes
        present = sorted(present, key=lambda km: -km[1].sum())[:max_components]
        present = [km for km in classes if any(km[0] == p[0] for p in present)]
    mass = np.array([mask.sum() for _, mask in present], dtype=np.float64)
    n_comp = _largest_remainder(max_components, mass, 1)
    # dimensions per class: proportional, remainder to the largest class
    dims = np.floor(mass / mass.sum() * total_dim).astype(np.int64)
    dims = np.maximum(dims, n_comp)
    dims[int(np.argmax(mass))] += total_dim - dims.sum()
    comps = []
    for (kind, mask), k, dim in zip(present, n_comp, dims):
        # 4 significant digits keeps the signature string readable
        K = 0.0 if kind == "E" else float(f"{np.median(v[mask]):.4g}")
        per = [dim // k + (1 if i < dim % k else 0) for i in range(k)]
        comps += [Component(int(d), K) for d in per]
    return Signature(tuple(comps))
