"""World rules: reachability, the three collision checks, step semantics."""
from __future__ import annotations

import itertools
import random

import pytest

from boxplan import env as E
from boxplan.datagen import cell_lattice
from boxplan.env import (
    Action,
    EnvConfig,
    EnvState,
    ObjectSpec,
    RobotSpec,
    Step,
    ViolationKind,
)
from boxplan.errors import ConfigInvalid
from boxplan.geometry import Point


def make_cfg(width=3, height=3, robots=(), objects=(), variant="standard",
             init_arms=None, extra_points=()):
    points = tuple(cell_lattice(width, height)) + tuple(extra_points)
    return EnvConfig(width=width, height=height, points=points,
                     robots=tuple(robots), objects=tuple(objects),
                     variant=variant, init_arms=init_arms)


def kinds(violations):
    return {v.kind for v in violations}


# ------------------------------------------------- labeled rule examples
# The three robot-robot collision cases and four reachability cases that
# the task prompt spells out verbatim.

def test_collision_same_endpoint():
    # Robot 1 [0.75,0.75]->[0.75,1.25], Robot 2 [2.25,1.75]->[0.75,1.25]:
    # both trajectories end on the same point.
    cfg = make_cfg(
        robots=[RobotSpec("Robot 1", Point(1.0, 1.0)),
                RobotSpec("Robot 2", Point(1.5, 2.0))],
        variant="randrob",
        init_arms={"Robot 1": Point(0.75, 0.75),
                   "Robot 2": Point(2.25, 1.75)},
    )
    st = E.init_state(cfg)
    step = Step((
        Action("Robot 1", Point(0.75, 0.75), Point(0.75, 1.25), False),
        Action("Robot 2", Point(2.25, 1.75), Point(0.75, 1.25), False),
    ))
    vs = E.validate_step(cfg, st, step)
    assert ViolationKind.ROBOT_ROBOT_COLLISION in kinds(vs)


def test_collision_end_on_other_arm_link():
    # Robot 1 [0.25,0.25]->[0.75,0.25], Robot 2 [1.25,0.25]->[0.25,0.75]:
    # Robot 2's post-step arm passes through Robot 1's end position.
    cfg = make_cfg(
        robots=[RobotSpec("Robot 1", Point(0.0, 0.0)),
                RobotSpec("Robot 2", Point(1.0, 0.0))],
        init_arms={"Robot 1": Point(0.25, 0.25),
                   "Robot 2": Point(1.25, 0.25)},
    )
    st = E.init_state(cfg)
    step = Step((
        Action("Robot 1", Point(0.25, 0.25), Point(0.75, 0.25), False),
        Action("Robot 2", Point(1.25, 0.25), Point(0.25, 0.75), False),
    ))
    vs = E.validate_step(cfg, st, step)
    assert ViolationKind.ROBOT_ROBOT_COLLISION in kinds(vs)


def test_collision_crossing_trajectories():
    # Robot 1 [0.25,0.25]->[0.75,0.75], Robot 2 [0.25,0.75]->[0.75,0.25]:
    # both movements cross [0.5, 0.5].
    cfg = make_cfg(
        robots=[RobotSpec("Robot 1", Point(0.0, 0.0)),
                RobotSpec("Robot 2", Point(0.0, 1.0))],
        init_arms={"Robot 1": Point(0.25, 0.25),
                   "Robot 2": Point(0.25, 0.75)},
    )
    st = E.init_state(cfg)
    step = Step((
        Action("Robot 1", Point(0.25, 0.25), Point(0.75, 0.75), False),
        Action("Robot 2", Point(0.25, 0.75), Point(0.75, 0.25), False),
    ))
    vs = E.validate_step(cfg, st, step)
    assert ViolationKind.ROBOT_ROBOT_COLLISION in kinds(vs)


def test_reachability_examples():
    # Base [1.0,1.0] reaches [0.25,0.75] and [1.25,1.75]; not [0,0.25]
    # or [2.0,0.75].
    cfg = make_cfg(robots=[RobotSpec("Robot 0", Point(1.0, 1.0))])
    st = E.init_state(cfg)
    arm = st.arm_pos["Robot 0"]

    def reachable(end):
        vs = E.validate_step(cfg, st, Step((
            Action("Robot 0", arm, Point(*end), False),)))
        return ViolationKind.UNREACHABLE not in kinds(vs)

    assert reachable((0.25, 0.75))
    assert reachable((1.25, 1.75))
    assert not reachable((0.0, 0.25))
    assert not reachable((2.0, 0.75))


# ----------------------------------------------------- per-action checks

def one_robot_cfg(objects=()):
    return make_cfg(width=2, height=2,
                    robots=[RobotSpec("Robot 0", Point(1.0, 1.0))],
                    objects=objects)


def test_unknown_robot():
    cfg = one_robot_cfg()
    st = E.init_state(cfg)
    step = Step((Action("Robot 9", st.arm_pos["Robot 0"],
                        Point(0.75, 0.75), False),))
    assert kinds(E.validate_step(cfg, st, step)) == {
        ViolationKind.UNKNOWN_ROBOT}


def test_duplicate_robot():
    cfg = one_robot_cfg()
    st = E.init_state(cfg)
    arm = st.arm_pos["Robot 0"]
    step = Step((
        Action("Robot 0", arm, Point(0.75, 0.75), False),
        Action("robot_0", arm, Point(0.25, 0.25), False),
    ))
    assert ViolationKind.DUPLICATE_ROBOT in kinds(E.validate_step(cfg, st, step))


def test_robot_name_matching_is_lenient():
    cfg = one_robot_cfg()
    st = E.init_state(cfg)
    step = Step((Action("ROBOT_0", st.arm_pos["Robot 0"],
                        Point(0.75, 0.75), False),))
    assert E.validate_step(cfg, st, step) == []


def test_start_mismatch():
    cfg = one_robot_cfg()
    st = E.init_state(cfg)
    step = Step((Action("Robot 0", Point(0.75, 0.75),
                        Point(0.25, 0.25), False),))
    assert ViolationKind.START_MISMATCH in kinds(E.validate_step(cfg, st, step))


def test_carry_without_object():
    cfg = one_robot_cfg()
    st = E.init_state(cfg)
    step = Step((Action("Robot 0", st.arm_pos["Robot 0"],
                        Point(0.75, 0.75), True),))
    assert ViolationKind.ARM_NOT_ALIGNED in kinds(E.validate_step(cfg, st, step))


def test_carry_with_object_moves_it():
    obj = ObjectSpec("Object 0", Point(1.25, 1.25), Point(0.25, 0.25))
    cfg = one_robot_cfg(objects=[obj])
    st = E.init_state(cfg)
    arm = st.arm_pos["Robot 0"]
    st, vs = E.apply_step(cfg, st, Step((
        Action("Robot 0", arm, Point(1.25, 1.25), False),)))
    assert vs == []
    st, vs = E.apply_step(cfg, st, Step((
        Action("Robot 0", Point(1.25, 1.25), Point(0.25, 0.25), True),)))
    assert vs == []
    assert st.obj_pos["Object 0"] == Point(0.25, 0.25)
    assert E.is_goal(cfg, st)


def test_object_object_collision():
    objs = [ObjectSpec("Object 0", Point(1.25, 1.25), Point(0.25, 0.25)),
            ObjectSpec("Object 1", Point(0.75, 0.75), Point(1.75, 1.75))]
    cfg = one_robot_cfg(objects=objs)
    st = E.init_state(cfg)
    arm = st.arm_pos["Robot 0"]
    st, vs = E.apply_step(cfg, st, Step((
        Action("Robot 0", arm, Point(1.25, 1.25), False),)))
    assert vs == []
    # Drop Object 0 onto Object 1's position.
    _, vs = E.apply_step(cfg, st, Step((
        Action("Robot 0", Point(1.25, 1.25), Point(0.75, 0.75), True),)))
    assert ViolationKind.OBJECT_OBJECT_COLLISION in kinds(vs)


def test_failed_step_does_not_mutate_state():
    cfg = one_robot_cfg()
    st = E.init_state(cfg)
    bad = Step((Action("Robot 0", st.arm_pos["Robot 0"],
                       Point(3.0, 3.0), False),))
    st2, vs = E.apply_step(cfg, st, bad)
    assert vs
    assert st2 is st


def test_all_violations_reported():
    cfg = one_robot_cfg()
    st = E.init_state(cfg)
    step = Step((Action("Robot 0", Point(0.75, 0.75),   # wrong start
                        Point(3.0, 3.0), True),))       # out of reach, carry
    got = kinds(E.validate_step(cfg, st, step))
    assert {ViolationKind.START_MISMATCH, ViolationKind.UNREACHABLE,
            ViolationKind.ARM_NOT_ALIGNED} <= got


def test_static_arm_links_checked_even_without_actions():
    # Two explicit initial arms whose links cross; any step (even empty
    # action by a third robot) must flag the pair.
    cfg = make_cfg(
        robots=[RobotSpec("Robot 1", Point(0.0, 0.0)),
                RobotSpec("Robot 2", Point(1.0, 0.0)),
                RobotSpec("Robot 3", Point(2.0, 2.0))],
        init_arms={"Robot 1": Point(0.75, 0.25),
                   "Robot 2": Point(0.25, 0.25),
                   "Robot 3": Point(2.25, 2.25)},
    )
    st = E.init_state(cfg)
    step = Step((Action("Robot 3", Point(2.25, 2.25),
                        Point(2.75, 2.75), False),))
    vs = E.validate_step(cfg, st, step)
    assert ViolationKind.ROBOT_ROBOT_COLLISION in kinds(vs)


def test_validate_permutation_invariant():
    cfg = make_cfg(
        robots=[RobotSpec("Robot 0", Point(1.0, 1.0)),
                RobotSpec("Robot 1", Point(1.0, 3.0)),
                RobotSpec("Robot 2", Point(3.0, 1.0))])
    st = E.init_state(cfg)
    actions = [
        Action("Robot 0", st.arm_pos["Robot 0"], Point(0.75, 0.75), False),
        Action("Robot 1", st.arm_pos["Robot 1"], Point(0.75, 2.75), False),
        Action("Robot 2", st.arm_pos["Robot 2"], Point(2.75, 0.75), False),
    ]
    expected = None
    for perm in itertools.permutations(actions):
        vs = E.validate_step(cfg, st, Step(tuple(perm)))
        key = sorted((v.kind, v.actors) for v in vs)
        if expected is None:
            expected = key
        assert key == expected


def test_reverse_move_restores_state():
    cfg = one_robot_cfg()
    st0 = E.init_state(cfg)
    arm = st0.arm_pos["Robot 0"]
    st1, vs = E.apply_step(cfg, st0, Step((
        Action("Robot 0", arm, Point(0.75, 0.75), False),)))
    assert vs == []
    st2, vs = E.apply_step(cfg, st1, Step((
        Action("Robot 0", Point(0.75, 0.75), arm, False),)))
    assert vs == []
    assert st2 == st0


# -------------------------------------------------------- config checking

def test_config_rejects_duplicate_targets():
    objs = [ObjectSpec("Object 0", Point(0.25, 0.25), Point(1.25, 1.25)),
            ObjectSpec("Object 1", Point(0.75, 0.75), Point(1.25, 1.25))]
    with pytest.raises(ConfigInvalid):
        one_robot_cfg(objects=objs).validate()


def test_config_rejects_start_equals_target():
    objs = [ObjectSpec("Object 0", Point(0.25, 0.25), Point(0.25, 0.25))]
    with pytest.raises(ConfigInvalid):
        one_robot_cfg(objects=objs).validate()


def test_config_rejects_off_joint_base_on_standard():
    cfg = make_cfg(robots=[RobotSpec("Robot 0", Point(1.5, 1.0))])
    with pytest.raises(ConfigInvalid):
        cfg.validate()


def test_config_rejects_off_lattice_object():
    objs = [ObjectSpec("Object 0", Point(0.3, 0.3), Point(1.25, 1.25))]
    with pytest.raises(ConfigInvalid):
        one_robot_cfg(objects=objs).validate()


def test_config_roundtrip():
    obj = ObjectSpec("Object 0", Point(1.25, 1.25), Point(0.25, 0.25))
    cfg = one_robot_cfg(objects=[obj])
    back = E.config_from_dict(E.config_to_dict(cfg))
    assert back.points == cfg.points
    assert back.robots == cfg.robots
    assert back.objects == cfg.objects


# ------------------------------------------------------- goal / heuristic

def test_heuristic_zero_iff_goal():
    obj = ObjectSpec("Object 0", Point(1.25, 1.25), Point(0.25, 0.25))
    cfg = one_robot_cfg(objects=[obj])
    st = E.init_state(cfg)
    assert E.heuristic(cfg, st) > 0
    assert not E.is_goal(cfg, st)
    placed = EnvState(arm_pos=dict(st.arm_pos),
                      obj_pos={"Object 0": Point(0.25, 0.25)})
    assert E.heuristic(cfg, placed) == 0.0
    assert E.is_goal(cfg, placed)


def test_placement_quality():
    assert E.placement_quality(Point(0.25, 0.25), Point(0.25, 0.25)) == 0.0
    assert E.placement_quality(Point(0.25, 0.25), Point(1.25, 0.25)) == 1.0
    assert E.placement_quality(Point(0.0, 0.0), Point(3.0, 4.0)) == 25.0


# ----------------------------------------------------------- state digest

def test_state_key_stable_and_quantized():
    obj = ObjectSpec("Object 0", Point(1.25, 1.25), Point(0.25, 0.25))
    cfg = one_robot_cfg(objects=[obj])
    st = E.init_state(cfg)
    assert E.state_key(st) == E.state_key(st)
    jitter = EnvState(
        arm_pos={"Robot 0": Point(st.arm_pos["Robot 0"].x + 1e-10,
                                  st.arm_pos["Robot 0"].y)},
        obj_pos=dict(st.obj_pos))
    assert E.state_key(jitter) == E.state_key(st)
    moved = EnvState(
        arm_pos={"Robot 0": Point(0.75, 0.75)},
        obj_pos=dict(st.obj_pos))
    assert E.state_key(moved) != E.state_key(st)


def test_state_key_no_collisions_small_space():
    cfg = one_robot_cfg()
    seen = {}
    for p in cfg.points:
        st = EnvState(arm_pos={"Robot 0": p}, obj_pos={})
        k = E.state_key(st)
        assert k not in seen
        seen[k] = p


# ------------------------------------------------------------ observation

def test_observation_format():
    obj = ObjectSpec("Object 0", Point(0.75, 0.75), Point(1.25, 1.25))
    cfg = one_robot_cfg(objects=[obj])
    st = E.init_state(cfg)
    text = E.render_observation(cfg, st)
    assert text.startswith("Object positions:\n    Object 0: [0.75, 0.75]")
    assert "Target positions:\n    Object 0 target: [1.25, 1.25]" in text
    assert "Robot positions:\n    Robot 0: base [1.0, 1.0], arm [1.25, 1.25]" in text
    assert E.render_observation(cfg, st) == text  # deterministic


def test_coordinate_formatting():
    assert E.fmt_coord(1.0) == "1.0"
    assert E.fmt_coord(0.75) == "0.75"
    assert E.fmt_coord(2.5) == "2.5"
    assert E.fmt_point(Point(0.25, 1.0)) == "[0.25, 1.0]"
