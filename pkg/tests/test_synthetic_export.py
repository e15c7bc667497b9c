import numpy as np
import pytest

from dyernie.data import TimeScale, from_arrays, make_rng
from dyernie.export import EXPORT_KINDS, export_table, origin_distances, train_degrees, write_table
from dyernie.model import ModelConfig, init_params, random_params
from dyernie.product import Signature
from dyernie.synthetic import (
    HIERARCHY_PREDICATES,
    cycle_slices_dataset,
    drifting_dataset,
    hierarchy_dataset,
    tree_levels,
    tree_slices_dataset,
)


def as_set(quads):
    return {tuple(q) for q in quads.tolist()}


def test_hierarchy_dataset_shape():
    ds = hierarchy_dataset(seed=0)
    s = ds.summary()
    assert (s["entities"], s["predicates"], s["timestamps"]) == (50, 4, 20)
    assert s["facts"] == 1500
    assert s["valid"] == s["test"] == 150
    assert not (as_set(ds.train) & as_set(ds.valid)) and not (as_set(ds.valid) & as_set(ds.test))
    levels, parent = tree_levels()
    assert [len(lv) for lv in levels] == [1, 7, 42]
    # every parent_of fact is a real tree edge
    p = ds.predicates["parent_of"]
    for s_, _, o, _ in ds.train[ds.train[:, 1] == p].tolist():
        assert parent[o] == s_
    assert ds.predicates.labels == list(HIERARCHY_PREDICATES)


def test_hierarchy_dataset_is_seeded():
    a, b = hierarchy_dataset(seed=3), hierarchy_dataset(seed=3)
    assert np.array_equal(a.train, b.train)
    assert not np.array_equal(a.train, hierarchy_dataset(seed=4).train)


def test_drifting_dataset_changes_partners():
    ds = drifting_dataset(seed=0)
    quads = np.concatenate([ds.train, ds.valid, ds.test])
    agents = 40
    before = {(s, o) for s, _, o, t in quads.tolist() if t < 10}
    after = {(s, o) for s, _, o, t in quads.tolist() if t >= 10}
    hubs_before = {s: o for s, o in before}
    hubs_after = {s: o for s, o in after}
    assert all(o >= agents for _, o in before | after)
    moved = [a for a in hubs_before if a in hubs_after and hubs_before[a] != hubs_after[a]]
    assert len(moved) == len(set(hubs_before) & set(hubs_after))
    # one hub per agent per phase
    assert len(before) == len(hubs_before) and len(after) == len(hubs_after)


def test_slice_toy_datasets():
    trees = tree_slices_dataset(num_timestamps=3, leaves=4)
    assert trees.num_timestamps == 3 and len(trees.train) == 12
    cycles = cycle_slices_dataset(num_timestamps=2, length=6)
    assert len(cycles.train) == 12


def test_train_degrees():
    ds = from_arrays([[0, 0, 1, 0], [0, 0, 2, 1], [1, 0, 1, 0]], [[3, 0, 0, 0]], [], 5, 1, 2)
    assert train_degrees(ds).tolist() == [2, 3, 1, 0, 0]


def test_origin_distances_static_zero_velocity():
    cfg = ModelConfig(Signature.parse("P2@-1,E1@0"), time_scale=TimeScale.for_timestamps(3))
    params = init_params(3, 2, cfg, 0)
    params.blocks["velocity"][0] = 0.0
    params.blocks["initial"][0] = [0.5, 0.0, 4.0]
    d = origin_distances(params, cfg, 3)
    expected = np.sqrt((2 * np.arctanh(0.5)) ** 2 + 16.0)
    np.testing.assert_allclose(d[0], expected, rtol=1e-12)
    assert d.shape == (3, 3) and np.var(d[0]) == 0.0


def test_export_tables(tmp_path):
    ds = from_arrays([[0, 0, 1, 0], [0, 0, 2, 1], [1, 0, 2, 2]], [], [], 4, 1, 3)
    cfg = ModelConfig(Signature.parse("P3@-1"), time_scale=TimeScale.for_timestamps(3))
    params = random_params(4, 2, cfg, make_rng(0))
    header, rows = export_table("degree-distance", params, cfg, ds)
    assert header == ["entity", "degree", "mean_distance", "var_distance"]
    assert len(rows) == 3 and [r[0] for r in rows] == ["e0", "e1", "e2"]
    header, rows = export_table("velocity-norms", params, cfg, ds)
    assert rows[1][1] == pytest.approx(np.linalg.norm(params["velocity"][1]))
    write_table(tmp_path / "v.csv", header, rows)
    lines = (tmp_path / "v.csv").read_text().splitlines()
    assert lines[0] == "entity,velocity_norm" and len(lines) == 4
    with pytest.raises(ValueError):
        export_table("histogram", params, cfg, ds)
    assert EXPORT_KINDS == ("degree-distance", "velocity-norms")
