"""Per-entity tables for plotting: degree vs distance to origin, velocity norms."""

from __future__ import annotations

import csv

import numpy as np

from . import geometry
from .data import Dataset, time_value
from .model import ModelConfig, Params, entity_embedding

EXPORT_KINDS = ("degree-distance", "velocity-norms")


def train_degrees(dataset: Dataset) -> np.ndarray:
    """Number of training facts each entity takes part in, over all timestamps."""
    q = dataset.train
    return np.bincount(q[:, 0], minlength=dataset.num_entities) + np.bincount(q[:, 2], minlength=dataset.num_entities)


def origin_distances(params: Params, config: ModelConfig, num_timestamps: int) -> np.ndarray:
    """``(|E|, |T|)`` product-manifold distances of ``e_j(t)`` to the origin."""
    sig = config.signature
    ents = np.arange(params.num_entities)[:, None]
    tau = time_value(np.arange(num_timestamps)[None, :], config.time_scale)
    parts = entity_embedding(params.blocks, ents, tau, config)
    sq = 0.0
    for x, c in zip(parts, sig):
        d = geometry.distance(x, np.zeros_like(x), c.K)
        sq = sq + d * d
    return np.sqrt(sq)


def degree_distance_rows(params, config, dataset):
    deg = train_degrees(dataset)
    dist = origin_distances(params, config, dataset.num_timestamps)
    rows = []
    for j in np.flatnonzero(deg > 0):
        rows.append((dataset.entities.labels[j], int(deg[j]), float(dist[j].mean()), float(dist[j].var())))
    return ["entity", "degree", "mean_distance", "var_distance"], rows


def velocity_norm_rows(params, config, dataset):
    deg = train_degrees(dataset)
    norms = np.linalg.norm(params.blocks["velocity"], axis=1)
    rows = [(dataset.entities.labels[j], float(norms[j])) for j in np.flatnonzero(deg > 0)]
    return ["entity", "velocity_norm"], rows


def export_table(kind, params, config, dataset):
    """``(header, rows)`` for one of :data:`EXPORT_KINDS`; entities absent from train are left out."""
    if kind == "degree-distance":
        return degree_distance_rows(params, config, dataset)
    if kind == "velocity-norms":
        return velocity_norm_rows(params, config, dataset)
    raise ValueError(f"unknown export kind {kind!r}; expected one of {EXPORT_KINDS}")


def write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
