"""Time-dependent entity embeddings on a product manifold and the
predicate-adjusted distance score.

Entity ``j`` at time ``tau`` lives, per component, at
``exp0(log0(initial_j) + velocity_j * tau)`` (other dynamics are available
through ``repr_variant``). A quadruple ``(s, p, o, t)`` is scored as

    sum_i -d_i(P_p (x) e_s(t), e_o(t) (+) p_p)^2 + b_s + b_o

where ``P_p`` is a diagonal map applied through the origin's tangent space
and ``p_p`` a translation point.

All forward functions accept parameter blocks as ndarrays or tape
:class:`~dyernie.autodiff.Var` objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .data import TimeScale, make_rng, time_value
from .product import Signature

REPR_VARIANTS = ("linear", "periodic", "linear_plus_periodic", "static")
SCORE_VARIANTS = (
    "default",  # d(P (x) e_s, e_o (+) p)
    "cosh",  # cosh(d(P (x) e_s, e_o (+) p))
    "shared_matrix",  # d(P (x) e_s, P (x) e_o)
    "shared_matrix_translate",  # d(P (x) e_s, (P (x) e_o) (+) p)
    "no_translation",  # d(P (x) e_s, e_o)
    "no_matrix",  # d(e_s, e_o (+) p)
)
BLOCK_ORDER = (
    "initial",
    "velocity",
    "bias_s",
    "bias_o",
    "diag",
    "translation",
    "amplitude",
    "frequency",
    "phase",
)
MANIFOLD_BLOCKS = ("initial", "translation")
PERIODIC_BLOCKS = ("amplitude", "frequency", "phase")


@dataclass(frozen=True)
class ModelConfig:
    signature: Signature
    repr_variant: str = "linear"
    score_variant: str = "default"
    time_scale: TimeScale = field(default_factory=TimeScale)

    def __post_init__(self):
        if self.repr_variant not in REPR_VARIANTS:
            raise ValueError(f"repr_variant must be one of {REPR_VARIANTS}")
        if self.score_variant not in SCORE_VARIANTS:
            raise ValueError(f"score_variant must be one of {SCORE_VARIANTS}")

    @property
    def periodic(self) -> bool:
        return self.repr_variant in ("periodic", "linear_plus_periodic")

    @property
    def uses_velocity(self) -> bool:
        return self.repr_variant in ("linear", "linear_plus_periodic")

    def trainable_blocks(self) -> tuple[str, ...]:
        names = ["initial"]
        if self.uses_velocity:
            names.append("velocity")
        names += ["bias_s", "bias_o", "diag", "translation"]
        if self.periodic:
            names += list(PERIODIC_BLOCKS)
        return tuple(names)


def param_count(num_entities: int, num_raw_predicates: int, dim: int) -> int:
    """Trainable scalars of the linear model: ``2(|E| + 2|P|) d + 2|E|``."""
    return 2 * (num_entities + 2 * num_raw_predicates) * dim + 2 * num_entities


@dataclass
class Params:
    """Parameter blocks keyed by name (see ``BLOCK_ORDER``).

    Entity blocks have one row per entity, predicate blocks one row per
    augmented predicate (raw predicates followed by their reciprocals).
    """

    blocks: dict

    def __getitem__(self, name):
        return self.blocks[name]

    @property
    def num_entities(self) -> int:
        return self.blocks["initial"].shape[0]

    @property
    def num_predicates(self) -> int:
        return self.blocks["diag"].shape[0]

    def copy(self) -> "Params":
        return Params({k: v.copy() for k, v in self.blocks.items()})

    def ordered(self):
        return [(k, self.blocks[k]) for k in BLOCK_ORDER if k in self.blocks]

    def num_trainable(self, config: ModelConfig) -> int:
        return sum(self.blocks[k].size for k in config.trainable_blocks())

    def equals(self, other: "Params") -> bool:
        return self.blocks.keys() == other.blocks.keys() and all(
            np.array_equal(v, other.blocks[k]) for k, v in self.blocks.items()
        )


def _exp0_rows(g, sig: Signature):
    return np.concatenate(
        [geometry.exp0(g[:, sl], c.K) for sl, c in zip(sig.slices, sig)], axis=1
    )


def init_params(num_entities: int, num_predicates: int, config: ModelConfig, seed: int) -> Params:
    """Small random parameters near the origin.

    ``num_predicates`` counts augmented predicates (twice the raw count).
    """
    rng = make_rng(seed, 0x1A17)
    sig = config.signature
    E, R, d = num_entities, num_predicates, sig.total_dim
    blocks = {
        "initial": _exp0_rows(rng.normal(0.0, 1e-3, (E, d)), sig),
        "velocity": rng.normal(0.0, 1e-4, (E, d)),
        "bias_s": np.zeros(E),
        "bias_o": np.zeros(E),
        "diag": 1.0 + rng.normal(0.0, 1e-3, (R, d)),
        "translation": _exp0_rows(rng.normal(0.0, 1e-3, (R, d)), sig),
    }
    if not config.uses_velocity:
        blocks["velocity"] = np.zeros((E, d))
    if config.periodic:
        blocks["amplitude"] = rng.normal(0.0, 1e-3, (E, d))
        blocks["frequency"] = rng.normal(0.0, 1.0, (E, d))
        blocks["phase"] = rng.uniform(0.0, 2 * np.pi, (E, d))
    return Params(blocks)


def random_params(num_entities: int, num_predicates: int, config: ModelConfig, rng, scale=0.3) -> Params:
    """Parameters spread well away from the origin (for gradient checks and tests)."""
    sig = config.signature
    p = init_params(num_entities, num_predicates, config, 0)
    for name, arr in p.blocks.items():
        if name in MANIFOLD_BLOCKS:
            p.blocks[name] = _exp0_rows(rng.normal(0.0, scale, arr.shape), sig)
        elif name != "velocity" or config.uses_velocity:
            p.blocks[name] = arr + rng.normal(0.0, scale, arr.shape)
    return p


def entity_embedding(blocks, entities, tau, config: ModelConfig) -> list:
    """Per-component embeddings of ``entities`` at real times ``tau``.

    ``entities`` and ``tau`` broadcast against each other; each returned
    part has that broadcast shape plus a trailing coordinate axis.
    """
    sig = config.signature
    tau = np.asarray(tau, dtype=np.float64)[..., None]
    initial = blocks["initial"][entities]
    if config.repr_variant == "static":
        return [geometry.clamp_to_domain(initial[..., sl], c.K) for sl, c in zip(sig.slices, sig)]
    velocity = blocks["velocity"][entities] if config.uses_velocity else None
    if config.periodic:
        amp = blocks["amplitude"][entities]
        freq = blocks["frequency"][entities]
        phase = blocks["phase"][entities]
    parts = []
    for sl, c in zip(sig.slices, sig):
        u = geometry.log0(initial[..., sl], c.K)
        if velocity is not None:
            u = u + velocity[..., sl] * tau
        if config.periodic:
            u = u + amp[..., sl] * np.sin(freq[..., sl] * tau + phase[..., sl])
        parts.append(geometry.exp0(u, c.K))
    return parts


def _adjusted_pair(variant, es, eo, diag, trans, K):
    if variant == "no_matrix":
        lhs = es
    else:
        lhs = geometry.mobius_matvec(diag, es, K)
    if variant in ("default", "cosh"):
        rhs = geometry.mobius_add(eo, trans, K)
    elif variant == "shared_matrix":
        rhs = geometry.mobius_matvec(diag, eo, K)
    elif variant == "shared_matrix_translate":
        rhs = geometry.mobius_add(geometry.mobius_matvec(diag, eo, K), trans, K)
    elif variant == "no_translation":
        rhs = eo
    else:  # no_matrix
        rhs = geometry.mobius_add(eo, trans, K)
    return lhs, rhs


def score(blocks, s, p, o, tau, config: ModelConfig):
    """Scores for index arrays ``s, p, o`` and times ``tau`` (broadcasting).

    Entity biases are added once, outside the component sum.
    """
    sig = config.signature
    es = entity_embedding(blocks, s, tau, config)
    eo = entity_embedding(blocks, o, tau, config)
    diag = blocks["diag"][p]
    trans = blocks["translation"][p]
    total = 0.0
    for i, (sl, c) in enumerate(zip(sig.slices, sig)):
        lhs, rhs = _adjusted_pair(config.score_variant, es[i], eo[i], diag[..., sl], trans[..., sl], c.K)
        d = geometry.distance(lhs, rhs, c.K)
        if config.score_variant == "cosh":
            d = np.cosh(d)
        total = total - d * d
    return total + blocks["bias_s"][s] + blocks["bias_o"][o]


def score_quads(params: Params, quads, config: ModelConfig) -> np.ndarray:
    """Convenience wrapper: scores of an ``(N, 4)`` quadruple array."""
    quads = np.asarray(quads, dtype=np.int64).reshape(-1, 4)
    tau = time_value(quads[:, 3], config.time_scale)
    return score(params.blocks, quads[:, 0], quads[:, 1], quads[:, 2], tau, config)


def score_all_objects(params: Params, s, p, t, config: ModelConfig) -> np.ndarray:
    """``(Q, |E|)`` scores of every entity as object for queries ``(s, p, ?, t)``."""
    s = np.asarray(s, dtype=np.int64)[:, None]
    p = np.asarray(p, dtype=np.int64)[:, None]
    tau = time_value(np.asarray(t)[:, None], config.time_scale)
    objs = np.arange(params.num_entities)[None, :]
    return score(params.blocks, s, p, objs, tau, config)
