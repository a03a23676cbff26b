"""Verifiable plan rewards and group-relative advantages.

total = r_format + r_execute - r_efficiency, with a floor of 2 * r_format
for plans that actually solve the task so that a correct plan always beats
an incorrect one.
"""
from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import astar, env as E, plans
from .env import EnvConfig, EnvState, Violation
from .errors import EmptyGroup, GoldenPlanUnavailable
from .plans import MODE_FULLPLAN, MODE_REPLAN, parse_response

R_FORMAT = 0.1
R_EXECUTE = 1.0
EFFICIENCY_RATE = 0.1
STD_EPS = 1e-8


@dataclass
class ScoreBreakdown:
    r_format: float
    r_execute: float
    r_efficiency: float
    total: float
    floored: bool
    violations: list[Violation] = field(default_factory=list)
    steps_executed: int = 0
    golden_len: int = 0

    def to_dict(self) -> dict:
        return {
            "r_format": self.r_format,
            "r_execute": self.r_execute,
            "r_efficiency": self.r_efficiency,
            "total": self.total,
            "floored": self.floored,
            "violations": [v.to_dict() for v in self.violations],
            "steps_executed": self.steps_executed,
            "golden_len": self.golden_len,
        }


@dataclass
class GroupAdvantages:
    rewards: list[float]
    advantages: list[float]
    mean: float
    std: float


class GoldenLenCache:
    """Single-flight cache of golden plan lengths keyed by config digest."""

    def __init__(self, max_iterations: int = 1000):
        self.max_iterations = max_iterations
        self._values: dict[str, int] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def _key(self, cfg: EnvConfig) -> str:
        return json.dumps(E.config_to_dict(cfg), sort_keys=True)

    def get(self, cfg: EnvConfig) -> int:
        key = self._key(cfg)
        with self._guard:
            if key in self._values:
                return self._values[key]
            lock = self._locks.setdefault(key, threading.Lock())
        with lock:
            with self._guard:
                if key in self._values:
                    return self._values[key]
            value = golden_length(cfg, self.max_iterations)
            with self._guard:
                self._values[key] = value
            return value


def golden_length(cfg: EnvConfig, max_iterations: int = 1000) -> int:
    result = astar.solve(cfg, max_iterations=max_iterations)
    if result.status is not astar.SolveStatus.SOLVED or result.plan is None:
        raise GoldenPlanUnavailable(
            f"search {result.status.value} after {result.iterations} iterations")
    return plans.plan_length(result.plan)


def _efficiency(steps: int, golden_len: int) -> float:
    return max(0.0, EFFICIENCY_RATE * (steps - golden_len))


def _finalize(
    r_format: float,
    r_execute: float,
    r_efficiency: float,
    violations: list[Violation],
    steps_executed: int,
    golden_len: int,
    clamp_negative: bool,
) -> ScoreBreakdown:
    raw = r_format + r_execute - r_efficiency
    floored = False
    if r_execute == R_EXECUTE:
        floor = 2.0 * r_format
        if raw < floor:
            raw = floor
            floored = True
    if clamp_negative and raw < 0.0:
        raw = 0.0
    return ScoreBreakdown(
        r_format=r_format,
        r_execute=r_execute,
        r_efficiency=r_efficiency,
        total=raw,
        floored=floored,
        violations=violations,
        steps_executed=steps_executed,
        golden_len=golden_len,
    )


def score_fullplan(
    cfg: EnvConfig,
    response: str,
    golden_len: Optional[int] = None,
    clamp_negative: bool = False,
) -> ScoreBreakdown:
    """Score a one-shot plan response against an environment."""
    if golden_len is None:
        golden_len = golden_length(cfg)
    parsed = parse_response(response, MODE_FULLPLAN)
    r_format = R_FORMAT if parsed.format_ok else 0.0

    if not parsed.format_ok or parsed.plan is None:
        return _finalize(r_format, 0.0, 0.0, [], 0, golden_len, clamp_negative)

    state = E.init_state(cfg)
    violations: list[Violation] = []
    steps_executed = 0
    for step in parsed.plan.steps:
        state, step_violations = E.apply_step(cfg, state, step)
        if step_violations:
            violations = step_violations
            break
        steps_executed += 1
    success = not violations and E.is_goal(cfg, state)
    r_execute = R_EXECUTE if success else 0.0
    r_eff = _efficiency(plans.plan_length(parsed.plan), golden_len)
    return _finalize(r_format, r_execute, r_eff, violations,
                     steps_executed, golden_len, clamp_negative)


def score_replan_episode(
    cfg: EnvConfig,
    transcript: Sequence[tuple[str, str]],
    golden_len: Optional[int] = None,
    clamp_negative: bool = False,
) -> ScoreBreakdown:
    """Score an interactive episode of (observation, response) turns.

    Steps apply in order; a malformed response or a violating step ends
    the episode. The format reward requires every response in the
    transcript to be well-formatted.
    """
    if golden_len is None:
        golden_len = golden_length(cfg)

    state = E.init_state(cfg)
    all_formatted = True
    violations: list[Violation] = []
    steps_executed = 0
    for _, response in transcript:
        parsed = parse_response(response, MODE_REPLAN)
        if not parsed.format_ok:
            all_formatted = False
        if parsed.step is None:
            # No step could be extracted at all: the episode ends here.
            break
        state, step_violations = E.apply_step(cfg, state, parsed.step)
        if step_violations:
            violations = step_violations
            break
        steps_executed += 1
        if E.is_goal(cfg, state):
            break

    r_format = R_FORMAT if (all_formatted and transcript) else 0.0
    success = not violations and E.is_goal(cfg, state)
    r_execute = R_EXECUTE if success else 0.0
    r_eff = _efficiency(steps_executed, golden_len)
    return _finalize(r_format, r_execute, r_eff, violations,
                     steps_executed, golden_len, clamp_negative)


def group_advantages(rewards: Sequence[float]) -> GroupAdvantages:
    """Reward minus group mean, over the population standard deviation."""
    if len(rewards) == 0:
        raise EmptyGroup("cannot normalize an empty reward group")
    values = [float(r) for r in rewards]
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / len(values)
    std = math.sqrt(var)
    if std <= STD_EPS:
        advantages = [0.0 for _ in values]
    else:
        advantages = [(v - mean) / std for v in values]
    return GroupAdvantages(rewards=values, advantages=advantages,
                           mean=mean, std=std)
