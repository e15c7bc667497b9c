import math

import numpy as np
import pytest

from dyernie import geometry
from dyernie.data import TimeScale
from dyernie.model import (
    REPR_VARIANTS,
    SCORE_VARIANTS,
    ModelConfig,
    entity_embedding,
    init_params,
    param_count,
    random_params,
    score,
    score_quads,
)
from dyernie.product import Signature, product_distance_sq


def config(sig="P2@-1", **kw):
    return ModelConfig(Signature.parse(sig), time_scale=TimeScale.for_timestamps(5), **kw)


def identity_params(cfg, E=3, R=2):
    p = init_params(E, R, cfg, 0)
    d = cfg.signature.total_dim
    for name in p.blocks:
        p.blocks[name][...] = 0.0
    p.blocks["diag"][...] = 1.0
    assert d > 0
    return p


def test_param_count_examples():
    assert param_count(7128, 230, 100) == 1_531_856
    assert param_count(7691, 240, 100) == 1_649_582
    assert param_count(1, 1, 1) == 8


@pytest.mark.parametrize("sig", ["P10@-1", "P3@-1,S4@0.5,E3@0"])
def test_allocated_params_match_formula(sig):
    cfg = config(sig)
    p = init_params(17, 2 * 5, cfg, 0)
    assert p.num_trainable(cfg) == param_count(17, 5, cfg.signature.total_dim)


def test_init_is_deterministic_and_in_domain():
    cfg = config("P3@-1,S2@1,E2@0")
    a, b = init_params(20, 6, cfg, 11), init_params(20, 6, cfg, 11)
    assert a.equals(b)
    assert not a.equals(init_params(20, 6, cfg, 12))
    assert np.all(np.linalg.norm(a["initial"][:, :3], axis=1) < 1.0)
    assert np.all(a["bias_s"] == 0) and np.all(a["bias_o"] == 0)


def test_static_variant_has_zero_velocity_and_is_time_invariant():
    cfg = config("P2@-1,E2@0", repr_variant="static")
    p = random_params(4, 4, cfg, np.random.default_rng(0))
    assert np.all(p["velocity"] == 0)
    s1 = score(p.blocks, np.array([0]), np.array([1]), np.array([2]), 0.0, cfg)
    s2 = score(p.blocks, np.array([0]), np.array([1]), np.array([2]), 1.0, cfg)
    assert s1[0] == s2[0]


def test_entity_embedding_examples():
    cfg = config("P2@-1")
    p = identity_params(cfg)
    p.blocks["initial"][0] = [0.2, -0.1]
    out = entity_embedding(p.blocks, np.array([0]), np.array([0.7]), cfg)[0][0]
    np.testing.assert_allclose(out, [0.2, -0.1], atol=1e-15)  # zero velocity
    p.blocks["velocity"][0] = [0.5, 0.5]
    out = entity_embedding(p.blocks, np.array([0]), np.array([0.0]), cfg)[0][0]
    np.testing.assert_allclose(out, [0.2, -0.1], atol=1e-15)  # tau = 0
    p.blocks["initial"][1] = 0.0
    p.blocks["velocity"][1] = [0.3, 0.0]
    out = entity_embedding(p.blocks, np.array([1]), np.array([1.0]), cfg)[0][0]
    assert out[0] == pytest.approx(math.tanh(0.3), abs=1e-12)
    assert out[0] == pytest.approx(0.291313, abs=1e-6)


def test_periodic_embedding_matches_formula():
    cfg = config("E2@0", repr_variant="linear_plus_periodic")
    p = random_params(3, 2, cfg, np.random.default_rng(4))
    tau = 0.4
    e = entity_embedding(p.blocks, np.array([1]), np.array([tau]), cfg)[0][0]
    b = p.blocks
    expected = b["initial"][1] + b["velocity"][1] * tau + b["amplitude"][1] * np.sin(b["frequency"][1] * tau + b["phase"][1])
    np.testing.assert_allclose(e, expected, atol=1e-14)


def test_score_examples():
    cfg = config("E2@0")
    p = identity_params(cfg)
    p.blocks["initial"][0] = [3.0, 4.0]
    s = score(p.blocks, np.array([0, 0]), np.array([0, 0]), np.array([0, 1]), 0.0, cfg)
    np.testing.assert_allclose(s, [0.0, -25.0], atol=1e-20)
    cfg = config("P2@-1", repr_variant="static")
    p = identity_params(cfg)
    p.blocks["initial"][0] = [0.5, 0.0]
    p.blocks["initial"][1] = [0.3, 0.0]
    p.blocks["bias_s"][0], p.blocks["bias_o"][1] = 1.0, 2.0
    s = score(p.blocks, np.array([0]), np.array([0]), np.array([1]), 0.0, cfg)[0]
    assert s == pytest.approx(-0.479573 ** 2 + 3, abs=1e-6)
    # 3 - d^2 with d from mpmath; the often-quoted 2.769990 has a digit slip
    assert s == pytest.approx(2.770010, abs=1e-6)


def test_identity_predicate_score_equals_product_distance():
    cfg = config("P3@-1,S2@1,E2@0")
    p = random_params(5, 4, cfg, np.random.default_rng(2))
    p.blocks["diag"][...] = 1.0
    p.blocks["translation"][...] = 0.0
    p.blocks["bias_s"][...] = 0.0
    p.blocks["bias_o"][...] = 0.0
    tau = np.array([0.25])
    es = entity_embedding(p.blocks, np.array([1]), tau, cfg)
    eo = entity_embedding(p.blocks, np.array([3]), tau, cfg)
    s = score(p.blocks, np.array([1]), np.array([0]), np.array([3]), tau, cfg)[0]
    expected = product_distance_sq([x[0] for x in es], [x[0] for x in eo], cfg.signature)
    assert s == pytest.approx(-expected, abs=1e-10)


def test_subject_bias_shifts_score_exactly():
    cfg = config("P2@-1,E2@0")
    p = random_params(5, 4, cfg, np.random.default_rng(3))
    quads = np.array([[0, 1, 2, 3], [0, 2, 4, 1], [1, 0, 0, 2]])
    before = score_quads(p, quads, cfg)
    p.blocks["bias_s"][0] += 0.5
    after = score_quads(p, quads, cfg)
    np.testing.assert_allclose(after[:2] - before[:2], 0.5, atol=1e-12)
    assert after[2] == before[2]


@pytest.mark.parametrize("variant", SCORE_VARIANTS)
def test_score_variants_are_finite_and_distinct(variant):
    cfg = config("P2@-1,S2@1,E2@0", score_variant=variant)
    p = random_params(5, 4, cfg, np.random.default_rng(5))
    s = score_quads(p, np.array([[0, 1, 2, 3], [3, 0, 1, 4]]), cfg)
    assert np.all(np.isfinite(s))
    if variant == "cosh":
        # cosh(d)^2 >= 1 per component
        b = p.blocks
        assert np.all(s <= -3 + b["bias_s"][[0, 3]] + b["bias_o"][[2, 1]] + 1e-12)


def test_no_matrix_variant_ignores_diag():
    cfg = config("P2@-1", score_variant="no_matrix")
    p = random_params(4, 2, cfg, np.random.default_rng(1))
    q = np.array([[0, 1, 2, 3]])
    a = score_quads(p, q, cfg)
    p.blocks["diag"][...] = 7.0
    assert score_quads(p, q, cfg)[0] == a[0]


def test_config_validation():
    with pytest.raises(ValueError):
        config(repr_variant="quadratic")
    with pytest.raises(ValueError):
        config(score_variant="l1")
    assert set(REPR_VARIANTS) == {"linear", "periodic", "linear_plus_periodic", "static"}
    assert "velocity" not in config(repr_variant="periodic").trainable_blocks()


def test_score_matches_manual_default_variant():
    cfg = config("P2@-1")
    p = random_params(4, 2, cfg, np.random.default_rng(9))
    b = p.blocks
    es = entity_embedding(b, np.array([0]), np.array([0.5]), cfg)[0]
    eo = entity_embedding(b, np.array([2]), np.array([0.5]), cfg)[0]
    lhs = geometry.mobius_matvec(b["diag"][1], es, -1.0)
    rhs = geometry.mobius_add(eo, b["translation"][1], -1.0)
    d = geometry.distance(lhs, rhs, -1.0)[0]
    expected = -d * d + b["bias_s"][0] + b["bias_o"][2]
    got = score(b, np.array([0]), np.array([1]), np.array([2]), np.array([0.5]), cfg)[0]
    assert got == pytest.approx(expected, abs=1e-12)
