"""Reusable property suites shared by the unit and acceptance tests."""

import numpy as np

from dyernie import geometry as g

CURVATURES = (-2.0, -1.0, -0.1, 0.0, 0.1, 1.0, 2.0)


def random_points(K, n, dim, rng, max_frac=0.9):
    """Points valid for curvature K; ball points stay within ``max_frac`` of the radius."""
    x = rng.normal(size=(n, dim))
    if K < 0:
        r = rng.uniform(0, max_frac, size=(n, 1)) / np.sqrt(-K)
        x = x / np.linalg.norm(x, axis=1, keepdims=True) * r
    return x


def random_tangents(x, K, rng, max_angle=np.pi / 2 - 0.1, max_length=2.0):
    """Tangent vectors at x.

    For K > 0 the scaled angle stays below ``max_angle``; for K < 0 the
    geodesic length stays below ``max_length / sqrt|K|`` so the image is
    not pushed onto the boundary clamp.
    """
    v = rng.normal(size=x.shape)
    if K != 0:
        lam = g.conformal_factor(x, K)
        limit = (max_angle * 2 if K > 0 else max_length) / (np.sqrt(abs(K)) * lam)
        norm = np.linalg.norm(v, axis=1, keepdims=True)
        v = v / norm * rng.uniform(0, 1, size=norm.shape) * limit
    return v


def geometry_suite(n=1000, dim=5, seed=0):
    """Worst-case error of every geometry invariant, per curvature.

    Returns ``{(name, K): (error, tolerance)}``.
    """
    rng = np.random.default_rng(seed)
    out = {}
    for K in CURVATURES:
        x = random_points(K, n, dim, rng)
        y = random_points(K, n, dim, rng)
        zero = np.zeros_like(x)
        out[("right identity", K)] = (np.abs(g.mobius_add(x, zero, K) - x).max(), 1e-12)
        out[("left identity", K)] = (np.abs(g.mobius_add(zero, x, K) - x).max(), 1e-12)
        out[("left inverse", K)] = (np.abs(g.mobius_add(-x, x, K)).max(), 1e-10)
        v = random_tangents(x, K, rng)
        back = g.log_map(x, g.exp_map(x, v, K), K)
        rel = np.linalg.norm(back - v, axis=1) / np.maximum(np.linalg.norm(v, axis=1), 1e-300)
        out[("exp/log inversion", K)] = (rel.max(), 1e-8)
        dxy, dyx = g.distance(x, y, K), g.distance(y, x, K)
        out[("distance symmetry", K)] = (np.abs(dxy - dyx).max(), 1e-10)
        out[("distance nonnegative", K)] = (max(0.0, -dxy.min()), 0.0)
        eye = np.ones_like(x)
        out[("matvec identity", K)] = (np.abs(g.mobius_matvec(eye, x, K) - x).max(), 1e-10)
    # curvature limit on |x|, |y| <= 1
    for K in (-1e-6, 1e-6):
        x = random_points(-1.0, n, dim, rng, max_frac=1.0)
        y = random_points(-1.0, n, dim, rng, max_frac=1.0)
        err = np.abs(g.distance(x, y, K) - 2 * np.linalg.norm(x - y, axis=1)).max()
        out[("small-K limit", K)] = (err, 1e-4)
    return out


SIGNATURES = ("P3@-1,S2@1,E2@0", "P2@-0.5,E3@0,S2@2", "S3@0.3,P2@-2,E2@0", "E2@0,S2@1,P3@-1")


def gradient_suite(n=100, seed=0, entities=6, raw_predicates=2, timestamps=5,
                   batch=4, negatives=3, max_coords=None, h=1e-6, tol=1e-4):
    """fd_check over ``n`` random configurations.

    Configurations cycle through every repr x score variant pair; each
    signature mixes a hyperbolic, a spherical and a flat component.
    Returns a list of ``(description, FDReport)``.
    """
    import itertools

    from dyernie.data import TimeScale, make_rng
    from dyernie.grad import Batch, fd_check
    from dyernie.model import REPR_VARIANTS, SCORE_VARIANTS, ModelConfig, random_params
    from dyernie.product import Signature

    combos = list(itertools.product(REPR_VARIANTS, SCORE_VARIANTS))
    out = []
    for i in range(n):
        rng = make_rng(seed, i)
        repr_variant, score_variant = combos[i % len(combos)]
        sig = Signature.parse(SIGNATURES[i % len(SIGNATURES)])
        cfg = ModelConfig(sig, repr_variant, score_variant, TimeScale.for_timestamps(timestamps))
        params = random_params(entities, 2 * raw_predicates, cfg, rng)
        quads = np.column_stack([
            rng.integers(0, entities, batch), rng.integers(0, 2 * raw_predicates, batch),
            rng.integers(0, entities, batch), rng.integers(0, timestamps, batch),
        ])
        b = Batch.from_quads(quads, negatives, entities, rng)
        report = fd_check(params, b, cfg, h=h, tol=tol, max_coords=max_coords, rng=rng)
        out.append((f"{sig} {repr_variant}/{score_variant}", report))
    return out


def metrics_oracle_instance(extra_train=()):
    """Three quadruples on a line whose test queries rank exactly 1 and 4.

    Entities sit at x = 0, 1, 2, 3, -5 in one flat coordinate (static, no
    bias), so the score is ``-(P x_s - x_o - p)^2``. Predicate 0 maps
    entity 0 onto entity 1 exactly; its reciprocal sends entity 1 to 2.6,
    where entities 3, 2 and 1 are all closer than the gold entity 0.
    Returns ``(dataset, params, config)``.
    """
    from dyernie.data import TimeScale, from_arrays
    from dyernie.model import ModelConfig, init_params
    from dyernie.product import Signature

    train = [[2, 0, 3, 0], [4, 0, 0, 0], *extra_train]
    ds = from_arrays(train, [], [[0, 0, 1, 0]], 5, 1, 1)
    cfg = ModelConfig(Signature.parse("E1@0"), "static", time_scale=TimeScale.for_timestamps(1))
    params = init_params(5, 2, cfg, 0)
    params.blocks["initial"][:, 0] = [0.0, 1.0, 2.0, 3.0, -5.0]
    params.blocks["diag"][...] = 1.0
    params.blocks["translation"][:, 0] = [-1.0, 1.0 - 2.6]
    return ds, params, cfg
