"""Best-first multi-arm planner.

Expansion generates productive single-robot actions (align with an object,
carry it to a strictly better lattice point, or reposition out of the way),
composes them into simultaneous steps over robot groups, keeps only
collision-free combinations, and prunes to the 20 most promising successors
per node. Used both as the golden-plan oracle for rewards and as a baseline
planner.
"""
from __future__ import annotations

import heapq
import itertools
import math
import weakref
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional

from . import env as E
from .env import Action, EnvConfig, EnvState, Step
from .geometry import POS_EPS, Point, Segment, in_reach_band, points_equal, segments_intersect
from .plans import Plan

MAX_SUCCESSORS = 20
# Cap on simultaneous actions per step. Wide steps explode the branching
# factor without shortening plans much; two arms at a time keeps search
# fast and plans readable.
MAX_GROUP = 2
# Partial combinations kept per group size while composing parallel steps.
BEAM_WIDTH = 96
# Heuristic inflation for the best-first search. The distance heuristic is
# far weaker than the unit step cost, so plain A* degenerates into a
# breadth-first sweep on multi-object maps; inflating it keeps the search
# goal-directed at the cost of bounded suboptimality.
HEURISTIC_WEIGHT = 3.5


class SolveStatus(str, Enum):
    SOLVED = "solved"
    EXHAUSTED = "exhausted"
    ITERATION_CAP = "iteration_cap"


@dataclass
class SolveResult:
    plan: Optional[Plan]
    expanded: int
    iterations: int
    status: SolveStatus


@lru_cache(maxsize=4096)
def _reach_points(points: tuple[Point, ...], base: Point) -> tuple[Point, ...]:
    """Lattice points inside one base's reach band, in lattice order.

    Reach depends only on the lattice and the base, so it is cached for
    the lifetime of a config instead of recomputed per expansion.
    """
    return tuple(p for p in points if in_reach_band(base, p))


# Two arms can only interact when their bases are closer than twice the
# reach radius; the extra tolerance keeps the cutoff conservative against
# the positional epsilon used by the collision checks.
_NEAR_BOUND = 2.0 + 2 * POS_EPS


@lru_cache(maxsize=4096)
def _near_robots(
    robots: tuple[E.RobotSpec, ...]
) -> dict[str, frozenset[str]]:
    """For each robot, the other robots close enough to ever collide.

    Every arm stays in the open unit band around its own base, so two
    robots whose bases are Chebyshev-separated by 2 or more can never
    touch trajectories, links, or endpoints.
    """
    out = {}
    for r1 in robots:
        out[r1.name] = frozenset(
            r2.name for r2 in robots
            if r2.name != r1.name
            and abs(r2.base.x - r1.base.x) < _NEAR_BOUND
            and abs(r2.base.y - r1.base.y) < _NEAR_BOUND)
    return out


@lru_cache(maxsize=4096)
def _robot_lookup(robots: tuple[E.RobotSpec, ...]) -> dict[str, E.RobotSpec]:
    """Canonical-name index over a robot tuple (first spec wins on ties)."""
    out: dict[str, E.RobotSpec] = {}
    for r in robots:
        out.setdefault(E.canon_name(r.name), r)
    return out


def _robot_spec(cfg: EnvConfig, name: str) -> Optional[E.RobotSpec]:
    return _robot_lookup(cfg.robots).get(E.canon_name(name))


# Per-config memo for single_robot_actions, keyed by the robot's exact
# local state. Entries are validated against a weak reference so a
# recycled id() can never serve stale results for a different config.
_ACTIONS_CACHES: dict[int, tuple[weakref.ref, dict]] = {}


def _actions_cache(cfg: EnvConfig) -> dict:
    ent = _ACTIONS_CACHES.get(id(cfg))
    if ent is not None:
        ref, cache = ent
        if ref() is cfg:
            return cache
    cache: dict = {}
    _ACTIONS_CACHES[id(cfg)] = (weakref.ref(cfg), cache)
    if len(_ACTIONS_CACHES) > 8:
        for k in [k for k, (r, _) in _ACTIONS_CACHES.items() if r() is None]:
            del _ACTIONS_CACHES[k]
    return cache


def candidate_drop_points(
    cfg: EnvConfig, st: EnvState, robot: str, obj: str
) -> list[Point]:
    """Lattice points where `robot` could set `obj` down.

    In the robot's reach band, unoccupied by other objects, different
    from the object's current position, and not under any other robot's
    arm tip (dropping there always collides: a static arm blocks the end
    point and a moving arm's trajectory starts on it); lattice order.
    """
    spec = _robot_spec(cfg, robot)
    if spec is None:
        return []
    cur = st.obj_pos[obj]
    # Only positions near the reach band can coincide with a drop point.
    bound = 1.0 + POS_EPS
    bx, by = spec.base
    others = [p for name, p in st.obj_pos.items() if name != obj
              and abs(p.x - bx) < bound and abs(p.y - by) < bound]
    arms = [p for name, p in st.arm_pos.items() if name != robot
            and abs(p.x - bx) < bound and abs(p.y - by) < bound]
    out = []
    for p in _reach_points(cfg.points, spec.base):
        if points_equal(p, cur):
            continue
        if any(points_equal(p, q) for q in others):
            continue
        if any(points_equal(p, q) for q in arms):
            continue
        out.append(p)
    return out


def _alternative_arm_destinations(
    cfg: EnvConfig, st: EnvState, spec: E.RobotSpec
) -> list[Point]:
    """In-band lattice points free of objects and of other arms' tips."""
    arm = st.arm_pos[spec.name]
    bound = 1.0 + POS_EPS
    bx, by = spec.base
    other_arms = [p for name, p in st.arm_pos.items() if name != spec.name
                  and abs(p.x - bx) < bound and abs(p.y - by) < bound]
    objs = [p for p in st.obj_pos.values()
            if abs(p.x - bx) < bound and abs(p.y - by) < bound]
    out = []
    for p in _reach_points(cfg.points, spec.base):
        if points_equal(p, arm):
            continue
        if any(points_equal(p, q) for q in objs):
            continue
        if any(points_equal(p, q) for q in other_arms):
            continue
        out.append(p)
    return out


def single_robot_actions(
    cfg: EnvConfig, st: EnvState, robot: str
) -> list[Action]:
    """Candidate actions for one robot against the current state.

    For every reachable object not yet placed: an align move onto the
    object (when the arm is elsewhere) plus one carry move per strictly
    improving drop point; when no improving drop exists for that object,
    one repositioning move to the first free lattice point instead.
    Robots with no unplaced object in reach stay inactive.
    """
    spec = _robot_spec(cfg, robot)
    if spec is None:
        return []
    arm = st.arm_pos[spec.name]
    # The result depends only on this robot's arm and the objects and
    # other arm tips near its reach band (anything further can neither be
    # reached nor conflict with a drop point), so it is memoized per
    # config on that local state. Neighbourhoods rarely change between
    # expansions, making this the main cache of the search.
    bound = 1.0 + POS_EPS
    local_objs = tuple(
        (o.name, st.obj_pos[o.name]) for o in cfg.objects
        if abs(st.obj_pos[o.name].x - spec.base.x) < bound
        and abs(st.obj_pos[o.name].y - spec.base.y) < bound)
    local_arms = tuple(
        p for name, p in st.arm_pos.items()
        if name != spec.name
        and abs(p.x - spec.base.x) < bound
        and abs(p.y - spec.base.y) < bound)
    cache = _actions_cache(cfg)
    key = (spec.name, arm, local_objs, local_arms)
    got = cache.get(key)
    if got is None:
        got = _compute_robot_actions(cfg, st, spec, arm)
        cache[key] = got
    return got


def _compute_robot_actions(
    cfg: EnvConfig, st: EnvState, spec: E.RobotSpec, arm: Point
) -> list[Action]:
    actions: list[Action] = []
    for obj in cfg.objects:
        pos = st.obj_pos[obj.name]
        if not in_reach_band(spec.base, pos):
            continue
        if points_equal(pos, obj.target):
            continue
        cur_quality = E.placement_quality(pos, obj.target)
        improving = [
            p for p in candidate_drop_points(cfg, st, spec.name, obj.name)
            if E.placement_quality(p, obj.target) < cur_quality
        ]
        if improving:
            if not points_equal(arm, pos):
                align = Action(spec.name, arm, pos, False)
                if align not in actions:
                    actions.append(align)
            for p in improving:
                carry = Action(spec.name, pos, p, True)
                if carry not in actions:
                    actions.append(carry)
        else:
            # Object in reach but stuck: get the arm out of the way.
            alts = _alternative_arm_destinations(cfg, st, spec)
            if alts:
                move = Action(spec.name, arm, alts[0], False)
                if move not in actions:
                    actions.append(move)
    return actions


class _Expander:
    """Precomputed pairwise-compatibility data for one state's expansion.

    A combined step is valid iff each member action is individually valid,
    every pair of member trajectories is clear, every static robot's arm
    link avoids every member trajectory, the post-step arm links avoid
    each other, and post-step object occupancy stays distinct. All of
    those reduce to per-action and per-pair facts computed once here;
    the outcome matches validate_step on reachable states.
    """

    def __init__(self, cfg: EnvConfig, st: EnvState):
        self.cfg = cfg
        self.st = st
        self.per_robot = {
            r.name: single_robot_actions(cfg, st, r.name) for r in cfg.robots
        }
        self.quality = {
            o.name: E.placement_quality(st.obj_pos[o.name], o.target)
            for o in cfg.objects
        }
        self.h_sq = sum(self.quality.values())
        self._obj_at = {}
        for name, pos in st.obj_pos.items():
            self._obj_at[(round(pos.x * 1e6), round(pos.y * 1e6))] = name
        self._target = {o.name: o.target for o in cfg.objects}
        self._spec = {r.name: r for r in cfg.robots}
        self._near = _near_robots(cfg.robots)
        self._pair_memo: dict[tuple[int, int], bool] = {}
        self._static_memo: dict[tuple[int, str], bool] = {}
        self._blocked_memo: dict[int, frozenset[str]] = {}
        self._carried_memo: dict[int, Optional[str]] = {}
        self._delta_memo: dict[int, float] = {}

    def action_delta(self, act: Action) -> float:
        """Change in h_sq if this action executes (0 unless carrying)."""
        key = id(act)
        got = self._delta_memo.get(key)
        if got is None:
            obj = self._carried_object(act)
            if obj is None:
                got = 0.0
            else:
                got = (E.placement_quality(act.end, self._target[obj])
                       - self.quality[obj])
            self._delta_memo[key] = got
        return got

    def pair_ok(self, a1: Action, a2: Action) -> bool:
        key = (id(a1), id(a2)) if id(a1) < id(a2) else (id(a2), id(a1))
        got = self._pair_memo.get(key)
        if got is None:
            got = self._pair_clear(a1, a2)
            self._pair_memo[key] = got
        return got

    def static_ok(self, act: Action, other: str) -> bool:
        key = (id(act), other)
        got = self._static_memo.get(key)
        if got is None:
            got = self._static_clear(act, other)
            self._static_memo[key] = got
        return got

    def blocked_static(self, act: Action) -> frozenset[str]:
        """Robots whose current arm link conflicts with this action.

        The action is only usable in a combo where every such robot is
        itself moving; computed once per action and reused across the
        many combos that share it.
        """
        key = id(act)
        got = self._blocked_memo.get(key)
        if got is None:
            got = frozenset(
                name for name in self._near[act.robot]
                if not self.static_ok(act, name))
            self._blocked_memo[key] = got
        return got

    def _carried_object(self, act: Action) -> Optional[str]:
        if not act.move_object:
            return None
        key = id(act)
        if key not in self._carried_memo:
            self._carried_memo[key] = self._obj_at.get(
                (round(act.start.x * 1e6), round(act.start.y * 1e6)))
        return self._carried_memo[key]

    def _action_valid(self, act: Action) -> bool:
        spec = self._spec[act.robot]
        if not points_equal(act.start, self.st.arm_pos[act.robot]):
            return False
        if not in_reach_band(spec.base, act.end):
            return False
        if act.move_object and self._carried_object(act) is None:
            return False
        return True

    def _pair_clear(self, a1: Action, a2: Action) -> bool:
        if a2.robot not in self._near[a1.robot]:
            return True
        t1 = Segment(a1.start, a1.end)
        t2 = Segment(a2.start, a2.end)
        if segments_intersect(t1, t2):
            return False
        l1 = Segment(self._spec[a1.robot].base, a1.end)
        l2 = Segment(self._spec[a2.robot].base, a2.end)
        if segments_intersect(l1, l2):
            return False
        o1, o2 = self._carried_object(a1), self._carried_object(a2)
        if o1 is not None and o2 is not None and o1 != o2:
            if points_equal(a1.end, a2.end):
                return False
        return True

    def _static_clear(self, act: Action, other: str) -> bool:
        spec = self._spec[other]
        link = Segment(spec.base, self.st.arm_pos[other])
        if segments_intersect(Segment(act.start, act.end), link):
            return False
        post = Segment(self._spec[act.robot].base, act.end)
        return not segments_intersect(post, link)

    def combo_result(self, combo: tuple[Action, ...]):
        """Heuristic of the successor state, or None if the combo is invalid."""
        carried: dict[str, Point] = {}
        for act in combo:
            obj = self._carried_object(act)
            if obj is not None:
                carried[obj] = act.end
        # carried objects must not land on an object that is not moving away
        for obj, dest in carried.items():
            blocker = self._obj_at.get(
                (round(dest.x * 1e6), round(dest.y * 1e6)))
            if blocker is not None and blocker != obj and blocker not in carried:
                return None
        moving = {act.robot for act in combo}
        for i, a1 in enumerate(combo):
            for a2 in combo[i + 1:]:
                if not self.pair_ok(a1, a2):
                    return None
            if not self.blocked_static(a1) <= moving:
                return None
        h_sq = self.h_sq
        for obj, dest in carried.items():
            h_sq += E.placement_quality(dest, self._target[obj]) - self.quality[obj]
        if h_sq < 0:
            h_sq = 0.0
        return math.sqrt(h_sq) if h_sq > 0 else 0.0

    def successor_state(self, combo: tuple[Action, ...]) -> EnvState:
        arms = dict(self.st.arm_pos)
        objs = dict(self.st.obj_pos)
        for act in combo:
            arms[act.robot] = act.end
            obj = self._carried_object(act)
            if obj is not None:
                objs[obj] = act.end
        return EnvState(arm_pos=arms, obj_pos=objs)


def expand(cfg: EnvConfig, st: EnvState) -> list[tuple[Step, EnvState]]:
    """Collision-free successor steps, pruned to the best 20.

    Candidates are every single-robot action plus multi-robot combinations
    over groups of size 2..min(4, #objects, #active). Group composition
    runs size by size, keeping the BEAM_WIDTH most heuristic-improving
    pairwise-compatible partial combinations per size, so dense maps stay
    tractable. Survivors are sorted by (successor heuristic, carries desc,
    actions asc) and truncated, so a step never includes moves that do not
    help its own score.
    """
    ex = _Expander(cfg, st)
    per_robot = {
        name: [a for a in acts if ex._action_valid(a)]
        for name, acts in ex.per_robot.items()
    }
    active = [r.name for r in cfg.robots if per_robot[r.name]]
    robot_index = {name: i for i, name in enumerate(active)}

    combos: list[tuple[Action, ...]] = [
        (a,) for name in active for a in per_robot[name]]

    # (delta_sum, carries, combo) partials, grown one robot at a time in
    # config order so every group is produced exactly once.
    level = [(ex.action_delta(a), 1 if a.move_object else 0, (a,))
             for name in active for a in per_robot[name]]
    cap = min(MAX_GROUP, len(cfg.objects), len(active))
    for _size in range(2, cap + 1):
        nxt = []
        for dsum, carries, combo in level:
            start = robot_index[combo[-1].robot] + 1
            for name in active[start:]:
                for act in per_robot[name]:
                    if all(ex.pair_ok(m, act) for m in combo):
                        nxt.append((
                            dsum + ex.action_delta(act),
                            carries + (1 if act.move_object else 0),
                            combo + (act,),
                        ))
        nxt.sort(key=lambda t: (t[0], -t[1]))
        level = nxt[:BEAM_WIDTH]
        combos.extend(c for _, _, c in level)

    scored = []
    for combo in combos:
        h = ex.combo_result(combo)
        if h is None:
            continue
        carries = sum(1 for a in combo if a.move_object)
        scored.append((h, -carries, len(combo), combo))
    scored.sort(key=lambda t: t[:3])
    out = []
    for h, _, _, combo in scored[:MAX_SUCCESSORS]:
        out.append((Step(tuple(combo)), ex.successor_state(combo)))
    return out


def _search_key(st: EnvState) -> tuple:
    """Exact quantized state identity for the search's closed/open sets.

    Same 1e-6 quantization as env.state_key but kept as a tuple: cheaper
    than a digest and equal keys always mean equal quantized states.
    """
    return (
        tuple(round(c * 1e6) for p in st.arm_pos.values() for c in p),
        tuple(round(c * 1e6) for p in st.obj_pos.values() for c in p),
    )


def solve(
    cfg: EnvConfig,
    max_iterations: int = 1000,
    weight: float = HEURISTIC_WEIGHT,
) -> SolveResult:
    """Weighted best-first search over quantized state keys, deterministic."""
    start = E.init_state(cfg)
    start_key = _search_key(start)

    open_set: list[tuple[float, int, tuple]] = []
    closed: set[tuple] = set()
    g_scores: dict[tuple, float] = {start_key: 0.0}
    came_from: dict[tuple, tuple[Optional[tuple], Optional[Step]]] = {
        start_key: (None, None)}
    states: dict[tuple, EnvState] = {start_key: start}

    counter = itertools.count()
    heapq.heappush(
        open_set, (weight * E.heuristic(cfg, start), next(counter), start_key))

    iterations = 0
    expanded = 0
    while open_set and iterations < max_iterations:
        iterations += 1
        _, _, cur_key = heapq.heappop(open_set)
        if cur_key in closed:
            continue
        closed.add(cur_key)
        cur = states[cur_key]

        if E.is_goal(cfg, cur):
            return SolveResult(
                plan=compress_plan(cfg, _reconstruct(came_from, cur_key)),
                expanded=expanded,
                iterations=iterations,
                status=SolveStatus.SOLVED,
            )

        expanded += 1
        for step, nxt in expand(cfg, cur):
            nxt_key = _search_key(nxt)
            if nxt_key in closed:
                continue
            tentative = g_scores[cur_key] + 1.0
            if tentative < g_scores.get(nxt_key, math.inf):
                came_from[nxt_key] = (cur_key, step)
                g_scores[nxt_key] = tentative
                states[nxt_key] = nxt
                f = tentative + weight * E.heuristic(cfg, nxt)
                heapq.heappush(open_set, (f, next(counter), nxt_key))

    status = (SolveStatus.EXHAUSTED if not open_set
              else SolveStatus.ITERATION_CAP)
    return SolveResult(plan=None, expanded=expanded,
                       iterations=iterations, status=status)


def compress_plan(cfg: EnvConfig, plan: Plan) -> Plan:
    """Merge adjacent steps that can safely run simultaneously.

    A left-to-right sweep: the next step folds into the current one when
    the robot sets are disjoint, the combined width stays within the
    group cap, the combined step validates from the earlier state, and
    executing it lands in exactly the state the two separate steps
    produced (so the rest of the plan is untouched). The weighted search
    trades optimality for speed; this recovers some of the lost steps
    deterministically.
    """
    if not plan.steps:
        return plan
    cap = min(MAX_GROUP, len(cfg.objects), len(cfg.robots))
    out: list[Step] = []
    base = E.init_state(cfg)  # state before the step being accumulated
    cur = plan.steps[0]
    after, violations = E.apply_step(cfg, base, cur)
    if violations:
        return plan
    for step in plan.steps[1:]:
        target, violations = E.apply_step(cfg, after, step)
        if violations:
            return plan
        merged = Step(cur.actions + step.actions)
        cur_robots = {a.robot for a in cur.actions}
        mergeable = (
            len(merged.actions) <= cap
            and all(a.robot not in cur_robots for a in step.actions)
            and not E.validate_step(cfg, base, merged)
        )
        if mergeable:
            combined, violations = E.apply_step(cfg, base, merged)
            mergeable = (not violations
                         and combined.arm_pos == target.arm_pos
                         and combined.obj_pos == target.obj_pos)
        if mergeable:
            cur = merged
        else:
            out.append(cur)
            base = after
            cur = step
        after = target
    out.append(cur)
    return Plan(tuple(out))


def _reconstruct(
    came_from: dict[tuple, tuple[Optional[tuple], Optional[Step]]], key: tuple
) -> Plan:
    steps: list[Step] = []
    while True:
        parent, step = came_from[key]
        if step is not None:
            steps.append(step)
        if parent is None:
            break
        key = parent
    steps.reverse()
    return Plan(tuple(steps))


def bfs_optimal_length(cfg: EnvConfig, max_depth: int = 64) -> Optional[int]:
    """Exhaustive breadth-first optimum over the same expand operator."""
    start = E.init_state(cfg)
    if E.is_goal(cfg, start):
        return 0
    seen = {_search_key(start)}
    frontier = [start]
    for depth in range(1, max_depth + 1):
        nxt_frontier = []
        for st in frontier:
            for _, nxt in expand(cfg, st):
                key = _search_key(nxt)
                if key in seen:
                    continue
                seen.add(key)
                if E.is_goal(cfg, nxt):
                    return depth
                nxt_frontier.append(nxt)
        if not nxt_frontier:
            return None
        frontier = nxt_frontier
    return None
