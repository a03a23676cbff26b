"""Grid world for cooperative arm planning.

An environment is a grid of unit cells with a lattice of placement points,
fixed robot bases, and objects that must be carried to target points. Steps
move several arms at once and are validated against reachability and
collision rules before they commit.
"""
from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional

from .errors import ConfigInvalid
from .geometry import (
    POS_EPS,
    Point,
    Segment,
    in_reach_band,
    is_finite_point,
    points_equal,
    segments_intersect,
)

VARIANTS = ("standard", "randrob", "newcoord")


def canon_name(name: str) -> str:
    """Normalize a robot/object identifier for matching.

    Case-insensitive; underscores count as spaces; runs of whitespace
    collapse. "Robot_1" and "robot  1" both map to "robot 1".
    """
    return " ".join(name.replace("_", " ").lower().split())


def fmt_coord(v: float) -> str:
    """Render a coordinate with two decimals, trailing zeros trimmed.

    Keeps at least one decimal digit: 1.0 -> "1.0", 0.75 -> "0.75".
    """
    s = f"{v:.2f}".rstrip("0")
    if s.endswith("."):
        s += "0"
    return s


def fmt_point(p: Point) -> str:
    return f"[{fmt_coord(p.x)}, {fmt_coord(p.y)}]"


@dataclass(frozen=True)
class RobotSpec:
    name: str
    base: Point


@dataclass(frozen=True)
class ObjectSpec:
    name: str
    start: Point
    target: Point


@dataclass(frozen=True)
class EnvConfig:
    width: int
    height: int
    points: tuple[Point, ...]
    robots: tuple[RobotSpec, ...]
    objects: tuple[ObjectSpec, ...]
    variant: str = "standard"
    seed: int = 0
    # Optional explicit initial arm placement (robot name -> point).
    init_arms: Optional[Mapping[str, Point]] = None

    def robot_by_name(self, name: str) -> Optional[RobotSpec]:
        key = canon_name(name)
        for r in self.robots:
            if canon_name(r.name) == key:
                return r
        return None

    def validate(self, eps: float = POS_EPS) -> None:
        """Raise ConfigInvalid on any broken invariant."""
        if not isinstance(self.width, int) or not isinstance(self.height, int):
            raise ConfigInvalid("width/height must be integers")
        if self.width < 2 or self.height < 2:
            raise ConfigInvalid("grid must be at least 2x2")
        if self.variant not in VARIANTS:
            raise ConfigInvalid(f"unknown variant {self.variant!r}")

        def inside(p: Point) -> bool:
            return 0.0 <= p.x <= self.width and 0.0 <= p.y <= self.height

        for p in self.points:
            if not is_finite_point(p) or not inside(p):
                raise ConfigInvalid(f"lattice point {p} outside map")

        names = [canon_name(r.name) for r in self.robots]
        if len(set(names)) != len(names):
            raise ConfigInvalid("robot names not unique")
        for r in self.robots:
            if not is_finite_point(r.base) or not inside(r.base):
                raise ConfigInvalid(f"{r.name} base {r.base} outside map")
            if self.variant in ("standard", "newcoord"):
                if r.base.x != int(r.base.x) or r.base.y != int(r.base.y):
                    raise ConfigInvalid(
                        f"{r.name} base {r.base} not on a grid joint"
                    )

        onames = [canon_name(o.name) for o in self.objects]
        if len(set(onames)) != len(onames):
            raise ConfigInvalid("object names not unique")

        def on_lattice(p: Point) -> bool:
            return any(points_equal(p, q, eps) for q in self.points)

        for o in self.objects:
            if not is_finite_point(o.start) or not is_finite_point(o.target):
                raise ConfigInvalid(f"{o.name} has non-finite coordinates")
            if points_equal(o.start, o.target, eps):
                raise ConfigInvalid(f"{o.name} start equals target")
            if not on_lattice(o.start) or not on_lattice(o.target):
                raise ConfigInvalid(f"{o.name} start/target off the lattice")
        for i, a in enumerate(self.objects):
            for b in self.objects[i + 1:]:
                if points_equal(a.start, b.start, eps):
                    raise ConfigInvalid(
                        f"{a.name} and {b.name} share a start position"
                    )
                if points_equal(a.target, b.target, eps):
                    raise ConfigInvalid(
                        f"{a.name} and {b.name} share a target position"
                    )


@dataclass(frozen=True)
class EnvState:
    arm_pos: dict[str, Point]
    obj_pos: dict[str, Point]


@dataclass(frozen=True)
class Action:
    robot: str
    start: Point
    end: Point
    move_object: bool


@dataclass(frozen=True)
class Step:
    actions: tuple[Action, ...] = ()


class ViolationKind(str, Enum):
    UNREACHABLE = "Unreachable"
    START_MISMATCH = "StartMismatch"
    ARM_NOT_ALIGNED = "ArmNotAligned"
    ROBOT_ROBOT_COLLISION = "RobotRobotCollision"
    OBJECT_OBJECT_COLLISION = "ObjectObjectCollision"
    UNKNOWN_ROBOT = "UnknownRobot"
    DUPLICATE_ROBOT = "DuplicateRobot"
    MALFORMED_ACTION = "MalformedAction"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    detail: str
    actors: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "detail": self.detail,
            "actors": list(self.actors),
        }


def default_arm(cfg: EnvConfig, base: Point) -> Point:
    """Initial arm placement: base offset by (0.25, 0.25), clipped inward."""
    return Point(min(base.x + 0.25, float(cfg.width)),
                 min(base.y + 0.25, float(cfg.height)))


def init_state(cfg: EnvConfig) -> EnvState:
    cfg.validate()
    arms: dict[str, Point] = {}
    for r in cfg.robots:
        if cfg.init_arms is not None and r.name in cfg.init_arms:
            p = Point(*cfg.init_arms[r.name])
            if not in_reach_band(r.base, p):
                raise ConfigInvalid(f"initial arm for {r.name} out of reach")
            arms[r.name] = p
        else:
            arms[r.name] = default_arm(cfg, r.base)
    objs = {o.name: Point(*o.start) for o in cfg.objects}
    return EnvState(arm_pos=arms, obj_pos=objs)


def _resolve_actions(
    cfg: EnvConfig, step: Step
) -> tuple[list[tuple[RobotSpec, Action]], list[Violation]]:
    """Match actions to config robots in config order; flag unknown/dupes."""
    violations: list[Violation] = []
    index = {canon_name(r.name): i for i, r in enumerate(cfg.robots)}
    seen: dict[int, Action] = {}
    keyed: list[tuple[int, Action]] = []
    for act in step.actions:
        idx = index.get(canon_name(act.robot))
        if idx is None:
            violations.append(Violation(
                ViolationKind.UNKNOWN_ROBOT,
                f"no robot named {act.robot!r}", (act.robot,)))
            continue
        if idx in seen:
            violations.append(Violation(
                ViolationKind.DUPLICATE_ROBOT,
                f"{cfg.robots[idx].name} acts more than once in this step",
                (cfg.robots[idx].name,)))
            continue
        seen[idx] = act
        keyed.append((idx, act))
    keyed.sort(key=lambda t: t[0])
    return [(cfg.robots[i], a) for i, a in keyed], violations


def validate_step(
    cfg: EnvConfig, st: EnvState, step: Step, eps: float = POS_EPS
) -> list[Violation]:
    """Check a simultaneous step against the pre-step state.

    Returns every violation found, not just the first. The rules, per
    action and then pairwise:
      1. the robot exists and acts at most once;
      2. the commanded start matches the current arm position;
      3. the end lies inside the robot's open reach band;
      4. a carrying action requires an object at the start position;
      5. acting trajectories must not intersect each other;
      6. acting trajectories must not intersect a static robot's arm link;
      7. post-step arm links must not intersect pairwise;
      8. post-step object positions must stay pairwise distinct.
    """
    acting, violations = _resolve_actions(cfg, step)

    for spec, act in acting:
        if not is_finite_point(act.start) or not is_finite_point(act.end):
            violations.append(Violation(
                ViolationKind.MALFORMED_ACTION,
                f"{spec.name} action has non-finite coordinates",
                (spec.name,)))
            continue
        if not points_equal(act.start, st.arm_pos[spec.name], eps):
            violations.append(Violation(
                ViolationKind.START_MISMATCH,
                f"{spec.name} start {fmt_point(act.start)} does not match "
                f"arm at {fmt_point(st.arm_pos[spec.name])}",
                (spec.name,)))
        if not in_reach_band(spec.base, act.end):
            violations.append(Violation(
                ViolationKind.UNREACHABLE,
                f"{spec.name} cannot reach {fmt_point(act.end)} from base "
                f"{fmt_point(spec.base)}",
                (spec.name,)))
        if act.move_object:
            if not any(points_equal(p, act.start, eps)
                       for p in st.obj_pos.values()):
                violations.append(Violation(
                    ViolationKind.ARM_NOT_ALIGNED,
                    f"{spec.name} carries from {fmt_point(act.start)} but no "
                    f"object is there",
                    (spec.name,)))

    usable = [(spec, act) for spec, act in acting
              if is_finite_point(act.start) and is_finite_point(act.end)]
    acting_names = {spec.name for spec, _ in usable}

    # 5. trajectory vs trajectory among acting robots
    for i, (s1, a1) in enumerate(usable):
        t1 = Segment(a1.start, a1.end)
        for s2, a2 in usable[i + 1:]:
            if segments_intersect(t1, Segment(a2.start, a2.end)):
                violations.append(Violation(
                    ViolationKind.ROBOT_ROBOT_COLLISION,
                    f"trajectories of {s1.name} and {s2.name} intersect",
                    (s1.name, s2.name)))

    # 6. trajectory vs static arm links
    for s1, a1 in usable:
        t1 = Segment(a1.start, a1.end)
        for spec in cfg.robots:
            if spec.name in acting_names:
                continue
            link = Segment(spec.base, st.arm_pos[spec.name])
            if segments_intersect(t1, link):
                violations.append(Violation(
                    ViolationKind.ROBOT_ROBOT_COLLISION,
                    f"trajectory of {s1.name} crosses the arm of {spec.name}",
                    (s1.name, spec.name)))

    # 7. post-step arm links pairwise
    final_arm = dict(st.arm_pos)
    for spec, act in usable:
        final_arm[spec.name] = act.end
    for i, r1 in enumerate(cfg.robots):
        l1 = Segment(r1.base, final_arm[r1.name])
        for r2 in cfg.robots[i + 1:]:
            if segments_intersect(l1, Segment(r2.base, final_arm[r2.name])):
                violations.append(Violation(
                    ViolationKind.ROBOT_ROBOT_COLLISION,
                    f"arm links of {r1.name} and {r2.name} intersect after "
                    f"the step",
                    (r1.name, r2.name)))

    # 8. post-step object occupancy
    final_obj = _post_object_positions(st, usable, eps)
    names = list(final_obj)
    for i, n1 in enumerate(names):
        for n2 in names[i + 1:]:
            if points_equal(final_obj[n1], final_obj[n2], eps):
                violations.append(Violation(
                    ViolationKind.OBJECT_OBJECT_COLLISION,
                    f"{n1} and {n2} would occupy {fmt_point(final_obj[n1])}",
                    (n1, n2)))
    return violations


def _post_object_positions(
    st: EnvState, usable: list[tuple[RobotSpec, Action]], eps: float
) -> dict[str, Point]:
    final = dict(st.obj_pos)
    for spec, act in usable:
        if not act.move_object:
            continue
        for name, pos in st.obj_pos.items():
            if points_equal(pos, act.start, eps):
                final[name] = act.end
                break
    return final


def apply_step(
    cfg: EnvConfig, st: EnvState, step: Step, eps: float = POS_EPS
) -> tuple[EnvState, list[Violation]]:
    """Simulate one simultaneous step; failed steps leave the state as-is."""
    violations = validate_step(cfg, st, step, eps)
    if violations:
        return st, violations
    acting, _ = _resolve_actions(cfg, step)
    arms = dict(st.arm_pos)
    for spec, act in acting:
        arms[spec.name] = act.end
    objs = _post_object_positions(st, acting, eps)
    return EnvState(arm_pos=arms, obj_pos=objs), []


def placement_quality(obj: Point, target: Point) -> float:
    """Squared Euclidean distance; 0 when placed."""
    dx = obj.x - target.x
    dy = obj.y - target.y
    return dx * dx + dy * dy


def is_goal(cfg: EnvConfig, st: EnvState, eps: float = POS_EPS) -> bool:
    return all(points_equal(st.obj_pos[o.name], o.target, eps)
               for o in cfg.objects)


def heuristic(cfg: EnvConfig, st: EnvState) -> float:
    h = 0.0
    for o in cfg.objects:
        h += placement_quality(st.obj_pos[o.name], o.target)
    return math.sqrt(h) if h > 0 else 0.0


_QUANT = 1_000_000


def state_key(st: EnvState) -> int:
    """64-bit digest of the state, coordinates quantized to 1e-6."""
    parts = []
    for p in st.arm_pos.values():
        parts.append(round(p.x * _QUANT))
        parts.append(round(p.y * _QUANT))
    for p in st.obj_pos.values():
        parts.append(round(p.x * _QUANT))
        parts.append(round(p.y * _QUANT))
    raw = struct.pack(f"<{len(parts)}q", *parts)
    return int.from_bytes(hashlib.blake2b(raw, digest_size=8).digest(), "big")


def render_observation(cfg: EnvConfig, st: EnvState) -> str:
    """Textual snapshot of object, target and robot positions."""
    lines = ["Object positions:"]
    for o in cfg.objects:
        lines.append(f"    {o.name}: {fmt_point(st.obj_pos[o.name])}")
    lines.append("Target positions:")
    for o in cfg.objects:
        lines.append(f"    {o.name} target: {fmt_point(o.target)}")
    lines.append("Robot positions:")
    for r in cfg.robots:
        lines.append(
            f"    {r.name}: base {fmt_point(r.base)}, "
            f"arm {fmt_point(st.arm_pos[r.name])}")
    return "\n".join(lines)


def config_to_dict(cfg: EnvConfig) -> dict:
    return {
        "variant": cfg.variant,
        "width": cfg.width,
        "height": cfg.height,
        "points": [[p.x, p.y] for p in cfg.points],
        "robots": [{"name": r.name, "base": [r.base.x, r.base.y]}
                   for r in cfg.robots],
        "objects": [{"name": o.name,
                     "start": [o.start.x, o.start.y],
                     "target": [o.target.x, o.target.y]}
                    for o in cfg.objects],
        "seed": cfg.seed,
    }


def config_from_dict(d: Mapping) -> EnvConfig:
    try:
        return EnvConfig(
            width=int(d["width"]),
            height=int(d["height"]),
            points=tuple(Point(float(x), float(y)) for x, y in d["points"]),
            robots=tuple(RobotSpec(r["name"], Point(*map(float, r["base"])))
                         for r in d["robots"]),
            objects=tuple(ObjectSpec(o["name"],
                                     Point(*map(float, o["start"])),
                                     Point(*map(float, o["target"])))
                          for o in d["objects"]),
            variant=d.get("variant", "standard"),
            seed=int(d.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"bad environment document: {exc}") from exc
