"""Parsing and serialization of planner responses.

The movement grammar is documented in GRAMMAR.md. A full response carries a
<think>...</think> block followed by a fenced code block whose JSON body is
either a list of steps (full-plan mode) or a single step (replan mode).
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

from .env import Action, Step, fmt_coord
from .errors import MalformedAction
from .geometry import Point

MODE_FULLPLAN = "fullplan"
MODE_REPLAN = "replan"

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_PT = rf"[\[\(]\s*({_NUM})\s*,\s*({_NUM})\s*[\]\)]"
_ACTION_RE = re.compile(
    rf"^\s*(?:move\s+)?{_PT}\s*(?:->|-->|→)\s*{_PT}\s*,\s*(true|false)\s*$",
    re.IGNORECASE,
)
_THINK_RE = re.compile(r"<think>(.*?)</think>", re.DOTALL)
_FENCE_RE = re.compile(r"```[a-zA-Z0-9_]*[ \t]*\n(.*?)```", re.DOTALL)


@dataclass(frozen=True)
class Plan:
    steps: tuple[Step, ...] = ()


@dataclass
class ParsedResponse:
    think: str = ""
    plan: Optional[Plan] = None
    step: Optional[Step] = None
    format_ok: bool = False
    parse_errors: list[str] = field(default_factory=list)


def parse_action(robot: str, value: str) -> Action:
    """Parse one '[x, y] -> [x, y], True|False' movement string."""
    if not isinstance(value, str):
        raise MalformedAction(f"{robot}: action must be a string")
    m = _ACTION_RE.match(value)
    if m is None:
        raise MalformedAction(f"{robot}: cannot parse action {value!r}")
    sx, sy, ex, ey, flag = m.groups()
    return Action(
        robot=robot,
        start=Point(float(sx), float(sy)),
        end=Point(float(ex), float(ey)),
        move_object=flag.lower() == "true",
    )


def _pairs_hook(pairs: list) -> list:
    # Keep duplicate keys so the validator can flag repeated robots.
    return list(pairs)


def _step_from_pairs(pairs: object, errors: list[str]) -> Optional[Step]:
    if not isinstance(pairs, list) or not all(
        isinstance(p, tuple) and len(p) == 2 and isinstance(p[0], str)
        for p in pairs
    ):
        errors.append("step is not a JSON object of robot -> action")
        return None
    actions = []
    ok = True
    for robot, value in pairs:
        try:
            actions.append(parse_action(robot, value))
        except MalformedAction as exc:
            errors.append(str(exc))
            ok = False
    return Step(tuple(actions)) if ok else None


def _try_parse_block(body: str, mode: str, errors: list[str]):
    try:
        doc = json.loads(body, object_pairs_hook=_pairs_hook)
    except json.JSONDecodeError as exc:
        errors.append(f"not valid JSON: {exc.msg} (line {exc.lineno})")
        return None
    if mode == MODE_REPLAN:
        return _step_from_pairs(doc, errors)
    if not isinstance(doc, list):
        errors.append("full plan must be a JSON array of steps")
        return None
    steps = []
    for i, entry in enumerate(doc):
        step = _step_from_pairs(entry, errors)
        if step is None:
            errors.append(f"step {i} malformed")
            return None
        steps.append(step)
    return Plan(tuple(steps))


def parse_response(text: str, mode: str = MODE_FULLPLAN) -> ParsedResponse:
    """Extract the thinking block and the plan from raw model output.

    Never raises: malformed input is reported through format_ok and
    parse_errors. Prose outside the tagged blocks is ignored.
    """
    if mode not in (MODE_FULLPLAN, MODE_REPLAN):
        raise ValueError(f"unknown mode {mode!r}")
    result = ParsedResponse()
    if not isinstance(text, str):
        result.parse_errors.append("response is not text")
        return result

    thinks = _THINK_RE.findall(text)
    think_ok = len(thinks) == 1
    if thinks:
        result.think = thinks[0]
    if len(thinks) == 0:
        result.parse_errors.append("missing <think>...</think> block")
    elif len(thinks) > 1:
        result.parse_errors.append("more than one <think> block")

    region = text
    if thinks:
        region = text[text.rindex("</think>") + len("</think>"):]

    parsed = None
    errors: list[str] = []
    blocks = _FENCE_RE.findall(region)
    if not blocks:
        errors.append("no fenced code block found")
    for body in blocks:
        attempt_errors: list[str] = []
        parsed = _try_parse_block(body, mode, attempt_errors)
        if parsed is not None:
            break
        errors.extend(attempt_errors)

    if parsed is None:
        result.parse_errors.extend(errors)
        return result
    if mode == MODE_FULLPLAN:
        result.plan = parsed
    else:
        result.step = parsed
    result.format_ok = think_ok and not result.parse_errors
    return result


def _coord_str(v: float) -> str:
    # Two-decimal style when exact, full precision otherwise (round-trip).
    return fmt_coord(v) if round(v, 2) == v else repr(v)


def action_to_str(act: Action) -> str:
    return (
        f"[{_coord_str(act.start.x)}, {_coord_str(act.start.y)}] -> "
        f"[{_coord_str(act.end.x)}, {_coord_str(act.end.y)}], "
        f"{'True' if act.move_object else 'False'}"
    )


def step_to_dict(step: Step) -> dict:
    return {act.robot: action_to_str(act) for act in step.actions}


def plan_to_jsonable(plan: Plan) -> list[dict]:
    return [step_to_dict(s) for s in plan.steps]


def plan_from_jsonable(doc: list) -> Plan:
    """Inverse of plan_to_jsonable; raises MalformedAction on bad entries."""
    steps = []
    for entry in doc:
        if not isinstance(entry, dict):
            raise MalformedAction("plan step is not an object")
        steps.append(Step(tuple(
            parse_action(robot, value) for robot, value in entry.items())))
    return Plan(tuple(steps))


def serialize_plan(plan: Plan) -> str:
    """Canonical fenced JSON block for a plan."""
    body = json.dumps(plan_to_jsonable(plan), indent=2)
    return f"```json\n{body}\n```"


def serialize_step(step: Step) -> str:
    body = json.dumps(step_to_dict(step), indent=2)
    return f"```json\n{body}\n```"


def plan_length(plan: Plan) -> int:
    """Length in steps, the unit shared with the efficiency penalty."""
    return len(plan.steps)
