"""Dataset generation: layouts, solvability, determinism, serialization."""
from __future__ import annotations

import io
import itertools

import pytest

from boxplan import datagen, env as E
from boxplan.datagen import (
    cell_lattice,
    gen_newcoord,
    gen_randrob,
    gen_standard,
    load_dataset,
    read_records,
    record_from_dict,
    record_to_dict,
    standard_robot_layout,
    summarize,
    write_records,
)
from boxplan.errors import EmptyDataset
from boxplan.geometry import POS_EPS, in_reach_band
from boxplan.plans import plan_length


def small_batch(**kw):
    defaults = dict(sizes=[2, 3], objects=[1, 2], count_per_config=2, seed=0)
    defaults.update(kw)
    return list(gen_standard(**defaults))


# --------------------------------------------------------------- lattices

def test_cell_lattice_size_and_order():
    pts = cell_lattice(2, 3)
    assert len(pts) == 2 * 3 * 4
    assert len(set(pts)) == len(pts)
    assert pts[0] == (0.25, 0.25)
    assert pts[1] == (0.25, 0.75)
    assert pts[-1] == (1.75, 2.75)


def test_standard_layout_checkerboard():
    robots = standard_robot_layout(4, 4)
    for r in robots:
        assert r.base.x == int(r.base.x) and r.base.y == int(r.base.y)
        assert (int(r.base.x) + int(r.base.y)) % 2 == 0
    names = [r.name for r in robots]
    assert len(set(names)) == len(names)


@pytest.mark.parametrize("size", [2, 3, 4, 5, 6])
def test_standard_layout_covers_every_lattice_point(size):
    robots = standard_robot_layout(size, size)
    for p in cell_lattice(size, size):
        assert any(in_reach_band(r.base, p) for r in robots)


# ------------------------------------------------------------- generation

def test_standard_batch_is_solvable_and_replayable():
    for rec in small_batch():
        assert rec.golden_len == plan_length(rec.golden_plan)
        assert rec.golden_para == datagen.para_of_plan(rec.golden_plan)
        state = E.init_state(rec.cfg)
        for step in rec.golden_plan.steps:
            state, violations = E.apply_step(rec.cfg, state, step)
            assert not violations
        assert E.is_goal(rec.cfg, state)


def test_standard_ids_and_counts():
    recs = small_batch()
    assert len(recs) == 2 * 2 * 2
    assert recs[0].id == "standard-2x2-o1-000"
    assert recs[-1].id == "standard-3x3-o2-001"
    assert len({r.id for r in recs}) == len(recs)


def test_objects_on_lattice_with_distinct_positions():
    for rec in small_batch():
        pts = set(rec.cfg.points)
        starts = [o.start for o in rec.cfg.objects]
        targets = [o.target for o in rec.cfg.objects]
        assert all(s in pts for s in starts)
        assert all(t in pts for t in targets)
        assert len(set(starts)) == len(starts)
        assert len(set(targets)) == len(targets)
        assert all(s != t for s, t in zip(starts, targets))


def test_randrob_bases_are_joints():
    recs = list(gen_randrob(sizes=[3], objects=[1, 2],
                            count_per_config=2, seed=1))
    assert len(recs) == 4
    for rec in recs:
        assert rec.cfg.variant == "randrob"
        for r in rec.cfg.robots:
            assert r.base.x == int(r.base.x) and r.base.y == int(r.base.y)
            assert 0 <= r.base.x <= 3 and 0 <= r.base.y <= 3
        bases = [r.base for r in rec.cfg.robots]
        assert len(set(bases)) == len(bases)


def test_newcoord_offsets_on_grid_and_inside_map():
    base = small_batch()
    recs = list(gen_newcoord(base, seed=0))
    assert len(recs) == len(base)
    for src, rec in zip(base, recs):
        assert rec.id.startswith("newcoord-")
        assert rec.cfg.variant == "newcoord"
        for o_src, o in zip(src.cfg.objects, rec.cfg.objects):
            for p_src, p in ((o_src.start, o.start), (o_src.target, o.target)):
                dx = round(p.x - p_src.x, 6)
                dy = round(p.y - p_src.y, 6)
                assert abs(dx) <= datagen.NEWCOORD_MAX + POS_EPS
                assert abs(dy) <= datagen.NEWCOORD_MAX + POS_EPS
                assert round(dx / datagen.NEWCOORD_STEP, 6) == int(
                    round(dx / datagen.NEWCOORD_STEP))
                assert 0.0 < p.x < rec.cfg.width
                assert 0.0 < p.y < rec.cfg.height


# ------------------------------------------------------------ determinism

def test_generation_is_deterministic():
    a = small_batch()
    b = small_batch()
    assert [record_to_dict(r) for r in a] == [record_to_dict(r) for r in b]


def test_generation_bytes_identical():
    buf_a, buf_b = io.StringIO(), io.StringIO()
    write_records(small_batch(), buf_a)
    write_records(small_batch(), buf_b)
    assert buf_a.getvalue() == buf_b.getvalue()


def test_different_seeds_differ():
    a = small_batch(seed=0)
    b = small_batch(seed=1)
    assert [record_to_dict(r) for r in a] != [record_to_dict(r) for r in b]


# ---------------------------------------------------------- serialization

def test_record_roundtrip(tmp_path):
    recs = small_batch()
    path = tmp_path / "ds.jsonl"
    with open(path, "w") as fp:
        n = write_records(recs, fp)
    assert n == len(recs)
    loaded = load_dataset(str(path))
    assert [record_to_dict(r) for r in loaded] == [
        record_to_dict(r) for r in recs]


def test_record_dict_field_order():
    rec = small_batch(sizes=[2], objects=[1], count_per_config=1)[0]
    keys = list(record_to_dict(rec).keys())
    assert keys == ["id", "variant", "width", "height", "points", "robots",
                    "objects", "golden_plan", "golden_len", "golden_para",
                    "seed"]


def test_read_records_skips_blank_lines():
    recs = small_batch(sizes=[2], objects=[1], count_per_config=1)
    buf = io.StringIO()
    write_records(recs, buf)
    text = "\n" + buf.getvalue() + "\n\n"
    loaded = read_records(io.StringIO(text))
    assert len(loaded) == 1


# --------------------------------------------------------------- summary

def test_summarize():
    recs = small_batch()
    s = summarize(recs)
    assert s.count == 8
    assert s.size_histogram == {"2x2": 4, "3x3": 4}
    assert s.object_histogram == {"1": 4, "2": 4}
    assert s.avg_optimal_steps == pytest.approx(
        sum(r.golden_len for r in recs) / 8)
    assert s.avg_para == pytest.approx(
        sum(r.golden_para for r in recs) / 8)


def test_summarize_empty_raises():
    with pytest.raises(EmptyDataset):
        summarize([])


def test_whole_coords_serialized_as_ints():
    rec = small_batch(sizes=[2], objects=[1], count_per_config=1)[0]
    d = record_to_dict(rec)
    for robot in d["robots"]:
        for v in robot["base"]:
            assert isinstance(v, int)
    back = record_from_dict(d)
    assert back.cfg.robots == rec.cfg.robots
