"""Small generated temporal knowledge graphs with known structure."""

from __future__ import annotations

import numpy as np

from .data import Dataset, Vocab, from_arrays, make_rng


def _split(quads, rng, valid_frac, test_frac):
    quads = np.unique(quads, axis=0)
    quads = quads[rng.permutation(len(quads))]
    n_valid = int(round(valid_frac * len(quads)))
    n_test = int(round(test_frac * len(quads)))
    valid = quads[:n_valid]
    test = quads[n_valid:n_valid + n_test]
    train = quads[n_valid + n_test:]
    return train, valid, test


def tree_levels(branching=(7, 6)):
    """Node ids per level of a complete tree; returns ``(levels, parent)``."""
    levels = [[0]]
    parent = {0: None}
    nxt = 1
    for b in branching:
        layer = []
        for u in levels[-1]:
            for _ in range(b):
                parent[nxt] = u
                layer.append(nxt)
                nxt += 1
        levels.append(layer)
    return levels, parent


HIERARCHY_PREDICATES = ("parent_of", "child_of", "grandparent_of", "grandchild_of")


def _relation_triples(name, parent, children):
    out = []
    for c, p in parent.items():
        if p is None:
            continue
        gp = parent[p]
        if name == "parent_of":
            out.append((p, c))
        elif name == "child_of":
            out.append((c, p))
        elif name == "grandparent_of" and gp is not None:
            out.append((gp, c))
        elif name == "grandchild_of" and gp is not None:
            out.append((c, gp))
    if name == "sibling_of":
        for kids in children.values():
            out += [(a, b) for a in kids for b in kids if a != b]
    return out


def hierarchy_dataset(seed=0, branching=(7, 6), num_timestamps=20, num_facts=1500,
                      predicates=HIERARCHY_PREDICATES, balanced=True, valid_frac=0.1,
                      test_frac=0.1) -> Dataset:
    """Three-level tree (1 + 7 + 42 = 50 entities by default).

    Each predicate is a tree relation (``parent_of``, ``child_of``,
    ``grandparent_of``, ``grandchild_of`` or ``sibling_of``). Every true
    triple is active at one or more random timestamps; ``num_facts``
    distinct quadruples are drawn in total. With ``balanced`` the extra
    facts pick a predicate uniformly first, so large relations do not
    dominate.
    """
    rng = make_rng(seed, 0x7EE)
    levels, parent = tree_levels(branching)
    n = sum(len(level) for level in levels)
    children = {}
    for c, p in parent.items():
        if p is not None:
            children.setdefault(p, []).append(c)
    triples = np.array(
        [(s, r, o) for r, name in enumerate(predicates) for s, o in _relation_triples(name, parent, children)],
        dtype=np.int64,
    )
    sizes = np.bincount(triples[:, 1], minlength=len(predicates))
    weights = 1.0 / sizes[triples[:, 1]] if balanced else np.ones(len(triples))
    weights /= weights.sum()
    universe = len(triples) * num_timestamps
    if num_facts > universe:
        raise ValueError(f"at most {universe} distinct facts are possible")
    # every triple appears at least once, the rest are distinct random (triple, time) pairs
    first = np.column_stack([triples, rng.integers(0, num_timestamps, len(triples))])
    taken = set(map(tuple, first.tolist()))
    extra = []
    while len(taken) < num_facts:
        k = int(rng.choice(len(triples), p=weights))
        q = (*triples[k].tolist(), int(rng.integers(num_timestamps)))
        if q not in taken:
            taken.add(q)
            extra.append(q)
    quads = np.concatenate([first, np.array(extra, dtype=np.int64).reshape(-1, 4)])
    train, valid, test = _split(quads, rng, valid_frac, test_frac)
    ds = from_arrays(train, valid, test, n, len(predicates), num_timestamps)
    ds.predicates = Vocab(predicates)
    return ds


def drifting_dataset(seed=0, num_agents=40, num_hubs=8, num_timestamps=20, change_points=(10,),
                     density=0.8, valid_frac=0.1, test_frac=0.1) -> Dataset:
    """Agents whose interaction partner changes at known change-points.

    Entities ``0..num_agents-1`` are agents, the rest are hubs. Each agent
    is attached (predicate 0) to one hub, and moves to a different random
    hub at every change-point. An agent's fact is observed at a timestamp
    with probability ``density``. A time-blind model sees both of an
    agent's hubs as equally plausible at every timestamp.
    """
    rng = make_rng(seed, 0xD21F7)
    hub = np.empty((num_agents, len(change_points) + 1), dtype=np.int64)
    hub[:, 0] = rng.integers(num_hubs, size=num_agents)
    for k in range(1, hub.shape[1]):
        step = rng.integers(1, num_hubs, size=num_agents)  # never stay put
        hub[:, k] = (hub[:, k - 1] + step) % num_hubs
    quads = []
    for t in range(num_timestamps):
        phase = int(np.searchsorted(change_points, t, side="right"))
        for a in np.flatnonzero(rng.random(num_agents) < density):
            quads.append((a, 0, num_agents + hub[a, phase], t))
    train, valid, test = _split(np.array(quads, dtype=np.int64), rng, valid_frac, test_frac)
    return from_arrays(train, valid, test, num_agents + num_hubs, 1, num_timestamps)


def tree_slices_dataset(seed=0, num_timestamps=5, leaves=4) -> Dataset:
    """Every timestamp slice is a star (a tree with one hub)."""
    quads = []
    n = num_timestamps * (leaves + 1)
    for t in range(num_timestamps):
        hub = t * (leaves + 1)
        for k in range(1, leaves + 1):
            quads.append((hub, 0, hub + k, t))
    return from_arrays(quads, [], [], n, 1, num_timestamps)


def cycle_slices_dataset(seed=0, num_timestamps=5, length=6) -> Dataset:
    """Every timestamp slice is a single cycle."""
    quads = []
    for t in range(num_timestamps):
        for k in range(length):
            quads.append((k, 0, (k + 1) % length, t))
    return from_arrays(quads, [], [], length, 1, num_timestamps)
