"""Loss, gradients and a finite-difference gradient check.

``backward`` runs the score pipeline on the reverse-mode tape and returns
Euclidean gradients for every parameter block. ``fd_check`` compares them
against central differences of the loss computed with plain numpy.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import geometry
from .autodiff import Var
from .data import corrupt_objects, time_value
from .model import MANIFOLD_BLOCKS, ModelConfig, Params, score

logger = logging.getLogger(__name__)

P_CLAMP = 1e-15


class NonFiniteGradient(FloatingPointError):
    def __init__(self, block):
        super().__init__(f"non-finite gradient in parameter block {block!r}")
        self.block = block


@dataclass
class Batch:
    """Gold quadruples with their corrupted objects.

    ``objects[:, 0]`` is the gold object; the remaining columns are
    negatives. ``labels`` has the same shape.
    """

    s: np.ndarray
    p: np.ndarray
    t: np.ndarray
    objects: np.ndarray
    labels: np.ndarray

    @classmethod
    def from_quads(cls, quads, n_neg, num_entities, rng) -> "Batch":
        quads = np.asarray(quads, dtype=np.int64).reshape(-1, 4)
        negs = corrupt_objects(quads[:, 2], n_neg, num_entities, rng)
        objects = np.concatenate([quads[:, 2:3], negs], axis=1)
        labels = np.zeros(objects.shape)
        labels[:, 0] = 1.0
        return cls(quads[:, 0], quads[:, 1], quads[:, 3], objects, labels)

    def __len__(self):
        return len(self.s)

    @property
    def num_samples(self) -> int:
        return self.labels.size


_LOG_LO = np.log(P_CLAMP)
_LOG_HI = np.log1p(-P_CLAMP)


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _log_sigmoid(x):
    # log(sigmoid(x)) = -softplus(-x), evaluated without cancellation
    return np.minimum(x, 0.0) - np.log1p(np.exp(-np.abs(x)))


def bce_loss(scores, labels):
    """Mean binary cross-entropy over all samples (golds and negatives).

    Probabilities are clamped to ``[1e-15, 1 - 1e-15]``; the clamp is
    applied in log space, which is the same function evaluated stably.
    """
    labels = np.asarray(labels, dtype=np.float64)
    log_p = np.clip(_log_sigmoid(scores), _LOG_LO, _LOG_HI)
    log_q = np.clip(_log_sigmoid(-scores), _LOG_LO, _LOG_HI)
    ll = labels * log_p + (1.0 - labels) * log_q
    return -ll.sum() / labels.size


def batch_scores(blocks, batch: Batch, config: ModelConfig):
    tau = time_value(batch.t, config.time_scale)[:, None]
    return score(blocks, batch.s[:, None], batch.p[:, None], batch.objects, tau, config)


def loss(params: Params, batch: Batch, config: ModelConfig) -> float:
    return float(bce_loss(batch_scores(params.blocks, batch, config), batch.labels))


def backward(batch: Batch, params: Params, config: ModelConfig):
    """Return ``(loss, grads)``; ``grads`` maps every block to its Euclidean gradient.

    Blocks that are not trainable under ``config`` (or not touched by the
    batch) get zeros.
    """
    trainable = set(config.trainable_blocks())
    leaves = {k: Var(v) for k, v in params.blocks.items() if k in trainable}
    blocks = {k: leaves.get(k, v) for k, v in params.blocks.items()}
    out = bce_loss(batch_scores(blocks, batch, config), batch.labels)
    out.backward()
    grads = {}
    for name, arr in params.blocks.items():
        leaf = leaves.get(name)
        g = np.zeros_like(arr) if leaf is None or leaf.grad is None else leaf.grad
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(name)
        grads[name] = g
    return float(out.value), grads


def riemannian_rescale(g, x, K):
    """Euclidean -> Riemannian gradient: divide by the squared conformal factor."""
    if K == 0:
        return np.asarray(g, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    factor = (1.0 + K * np.sum(x * x, axis=-1, keepdims=True)) / 2.0
    return g * factor * factor


@dataclass
class FDReport:
    errors: dict  # block -> max relative error
    tol: float
    h: float

    @property
    def passed(self) -> bool:
        return all(e <= self.tol for e in self.errors.values())

    @property
    def failing(self) -> list:
        return [k for k, e in self.errors.items() if e > self.tol]

    def __str__(self):
        lines = [f"{k:12s} {e:.3e} {'ok' if e <= self.tol else 'FAIL'}" for k, e in self.errors.items()]
        return "\n".join(lines)


def _near_boundary(params: Params, name: str, config: ModelConfig) -> np.ndarray:
    """Mask of coordinates belonging to ball points within 10 eps of the boundary."""
    arr = params.blocks[name]
    mask = np.zeros(arr.shape, dtype=bool)
    if name not in MANIFOLD_BLOCKS:
        return mask
    for sl, c in zip(config.signature.slices, config.signature):
        if c.K < 0:
            norm = np.linalg.norm(arr[:, sl], axis=1)
            near = norm >= (1.0 - 10 * geometry.EPS_BOUND) / np.sqrt(-c.K)
            mask[near, sl] = True
    return mask


def fd_check(params: Params, batch: Batch, config: ModelConfig, h=1e-6, tol=1e-4,
             grads=None, max_coords=None, rng=None) -> FDReport:
    """Compare gradients with central differences, block by block.

    The error of a block is ``max|g - g_fd| / max(max|g_fd|, max|g|, 1e-8)``
    over the checked coordinates. ``grads`` overrides the analytic
    gradients (used for negative controls); ``max_coords`` caps how many
    coordinates per block are perturbed.
    """
    if grads is None:
        _, grads = backward(batch, params, config)
    work = params.copy()
    errors = {}
    for name in config.trainable_blocks():
        arr = work.blocks[name]
        idx = np.flatnonzero(~_near_boundary(work, name, config).ravel())
        if max_coords is not None and idx.size > max_coords:
            rng = rng or np.random.default_rng(0)
            idx = np.sort(rng.choice(idx, max_coords, replace=False))
        flat = arr.reshape(-1)
        fd = np.empty(idx.size)
        for j, k in enumerate(idx):
            orig = flat[k]
            flat[k] = orig + h
            up = loss(work, batch, config)
            flat[k] = orig - h
            down = loss(work, batch, config)
            flat[k] = orig
            fd[j] = (up - down) / (2 * h)
        an = grads[name].reshape(-1)[idx]
        scale = max(np.max(np.abs(fd), initial=0.0), np.max(np.abs(an), initial=0.0), 1e-8)
        errors[name] = float(np.max(np.abs(an - fd), initial=0.0) / scale)
    return FDReport(errors, tol, h)
