"""Success / StepDiff / Para metrics over plan attempts.

Success is pass@1: the mean per-trial success probability, averaged over
environments. StepDiff and Para are averaged over successful attempts only.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from . import reward
from .datagen import DatasetRecord, para_of_plan
from .errors import MissingEnv, TrialCountMismatch
from .plans import MODE_FULLPLAN, MODE_REPLAN, Plan, Step, parse_response

Transcript = list[tuple[str, str]]


@dataclass
class Attempt:
    env_id: str
    trial: int
    response: Union[str, Transcript]
    breakdown: Optional[reward.ScoreBreakdown] = None


@dataclass
class EnvRow:
    env_id: str
    trials: int
    successes: int
    success_rate: float


@dataclass
class EvalReport:
    success: float
    step_diff: float
    para: float
    trials: int
    per_env: list[EnvRow] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "step_diff": self.step_diff,
            "para": self.para,
            "trials": self.trials,
            "per_env": [
                {
                    "env_id": r.env_id,
                    "trials": r.trials,
                    "successes": r.successes,
                    "success_rate": r.success_rate,
                }
                for r in self.per_env
            ],
        }


def para_of(plan: Plan) -> int:
    """Widest step of the plan: max simultaneous actions, 0 when empty."""
    return para_of_plan(plan)


def _attempt_plan(attempt: Attempt, mode: str) -> Optional[Plan]:
    if mode == MODE_FULLPLAN:
        parsed = parse_response(attempt.response, MODE_FULLPLAN)
        return parsed.plan
    steps: list[Step] = []
    for _, response in attempt.response:
        parsed = parse_response(response, MODE_REPLAN)
        if parsed.step is None:
            break
        steps.append(parsed.step)
    return Plan(tuple(steps))


def evaluate(
    dataset: Sequence[DatasetRecord],
    attempts: Iterable[Attempt],
    mode: str = MODE_FULLPLAN,
    trials: int = 4,
) -> EvalReport:
    by_id = {rec.id: rec for rec in dataset}
    grouped: dict[str, list[Attempt]] = {}
    for attempt in attempts:
        if attempt.env_id not in by_id:
            raise MissingEnv(f"unknown environment {attempt.env_id!r}")
        grouped.setdefault(attempt.env_id, []).append(attempt)

    for env_id, group in grouped.items():
        if len(group) != trials:
            raise TrialCountMismatch(
                f"{env_id} has {len(group)} attempts, expected {trials}")
        if len({a.trial for a in group}) != len(group):
            raise TrialCountMismatch(f"{env_id} has duplicate trial indices")

    rows: list[EnvRow] = []
    step_diffs: list[float] = []
    paras: list[float] = []
    for env_id in sorted(grouped):
        rec = by_id[env_id]
        successes = 0
        for attempt in sorted(grouped[env_id], key=lambda a: a.trial):
            if mode == MODE_FULLPLAN:
                breakdown = reward.score_fullplan(
                    rec.cfg, attempt.response, golden_len=rec.golden_len)
            else:
                breakdown = reward.score_replan_episode(
                    rec.cfg, attempt.response, golden_len=rec.golden_len)
            attempt.breakdown = breakdown
            if breakdown.r_execute == reward.R_EXECUTE:
                successes += 1
                plan = _attempt_plan(attempt, mode)
                if mode == MODE_REPLAN and plan is not None:
                    plan = Plan(plan.steps[: breakdown.steps_executed])
                if plan is not None:
                    step_diffs.append(
                        float(len(plan.steps) - rec.golden_len))
                    paras.append(float(para_of(plan)))
        rows.append(EnvRow(
            env_id=env_id, trials=trials, successes=successes,
            success_rate=successes / trials))

    success = (sum(r.success_rate for r in rows) / len(rows)) if rows else 0.0
    step_diff = sum(step_diffs) / len(step_diffs) if step_diffs else 0.0
    para = sum(paras) / len(paras) if paras else 0.0
    return EvalReport(success=success, step_diff=step_diff, para=para,
                      trials=trials, per_env=rows)


def attempt_from_dict(d: dict) -> Attempt:
    if "transcript" in d:
        transcript = [(t["observation"], t["response"])
                      for t in d["transcript"]]
        return Attempt(env_id=d["env_id"], trial=int(d["trial"]),
                       response=transcript)
    return Attempt(env_id=d["env_id"], trial=int(d["trial"]),
                   response=d["response"])


def load_attempts(path: str) -> list[Attempt]:
    out = []
    with open(path, "r", encoding="utf-8") as fp:
        for line in fp:
            line = line.strip()
            if line:
                out.append(attempt_from_dict(json.loads(line)))
    return out


def report_csv(report: EvalReport) -> str:
    lines = ["env_id,trials,successes,success_rate"]
    for r in report.per_env:
        lines.append(f"{r.env_id},{r.trials},{r.successes},{r.success_rate}")
    return "\n".join(lines) + "\n"
