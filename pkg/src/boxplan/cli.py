"""Command-line entry points.

Subcommands: gen, solve, validate, score, eval, serve, render.

Exit codes: 0 success; 2 the requested check or search failed (invalid
plan, unreached goal, unsolvable environment, evaluation precondition);
3 I/O or configuration error (missing file, bad JSON, bad flags).
Errors print a single machine-parsable line `error: <code>: <message>`
to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from . import astar, datagen, env as E, evalharness, reward
from .errors import BoxPlanError
from .plans import (
    MODE_FULLPLAN,
    MODE_REPLAN,
    plan_from_jsonable,
    plan_to_jsonable,
)
from .render_svg import render_svg

EXIT_OK = 0
EXIT_FAILURE = 2
EXIT_ERROR = 3


class CliError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        self.message = message


def _fail(code: int, message: str) -> CliError:
    return CliError(code, message)


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fp:
            return json.load(fp)
    except FileNotFoundError:
        raise _fail(EXIT_ERROR, f"no such file: {path}")
    except json.JSONDecodeError as exc:
        raise _fail(EXIT_ERROR, f"{path} is not valid JSON: {exc.msg}")


def _load_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fp:
            return fp.read()
    except FileNotFoundError:
        raise _fail(EXIT_ERROR, f"no such file: {path}")


def _load_env(path: str) -> E.EnvConfig:
    doc = _load_json(path)
    try:
        cfg = E.config_from_dict(doc)
        cfg.validate()
    except BoxPlanError as exc:
        raise _fail(EXIT_ERROR, f"invalid environment {path}: {exc}")
    return cfg


def _resolve_env(args) -> tuple[E.EnvConfig, Optional[int]]:
    """Environment from --env file or --dataset/--env-id pair."""
    if getattr(args, "env", None):
        return _load_env(args.env), None
    if getattr(args, "dataset", None) and getattr(args, "env_id", None):
        try:
            records = datagen.load_dataset(args.dataset)
        except (OSError, BoxPlanError, json.JSONDecodeError, KeyError) as exc:
            raise _fail(EXIT_ERROR, f"cannot read dataset: {exc}")
        for rec in records:
            if rec.id == args.env_id:
                return rec.cfg, rec.golden_len
        raise _fail(EXIT_ERROR, f"no record {args.env_id!r} in {args.dataset}")
    raise _fail(EXIT_ERROR, "provide --env FILE or --dataset FILE --env-id ID")


def _write_out(text: str, out: Optional[str]) -> None:
    if out and out != "-":
        with open(out, "w", encoding="utf-8") as fp:
            fp.write(text)
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> int:
    sizes = range(args.min_size, args.max_size + 1)
    objects = range(1, args.objects + 1)
    if args.variant == "standard":
        records = datagen.gen_standard(sizes, objects, args.count, args.seed)
    elif args.variant == "randrob":
        records = datagen.gen_randrob(sizes, objects, args.count, args.seed)
    elif args.variant == "newcoord":
        base = datagen.gen_standard(sizes, objects, args.count, args.seed)
        records = datagen.gen_newcoord(base, args.seed)
    else:
        raise _fail(EXIT_ERROR, f"unknown variant {args.variant!r}")

    try:
        materialized = list(records)
    except BoxPlanError as exc:
        raise _fail(EXIT_FAILURE, f"generation failed: {exc}")

    lines = [json.dumps(datagen.record_to_dict(r)) + "\n"
             for r in materialized]
    _write_out("".join(lines), args.out)
    summary = datagen.summarize(materialized)
    print(json.dumps(summary.to_dict()), file=sys.stderr)
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg, _ = _resolve_env(args)
    result = astar.solve(cfg, max_iterations=args.max_iters)
    if result.status is not astar.SolveStatus.SOLVED or result.plan is None:
        raise _fail(EXIT_FAILURE,
                    f"search {result.status.value} after "
                    f"{result.iterations} iterations")
    doc = {
        "plan": plan_to_jsonable(result.plan),
        "steps": len(result.plan.steps),
        "expanded": result.expanded,
        "iterations": result.iterations,
    }
    _write_out(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg, _ = _resolve_env(args)
    try:
        plan = plan_from_jsonable(_load_json(args.plan))
    except BoxPlanError as exc:
        raise _fail(EXIT_ERROR, f"invalid plan {args.plan}: {exc}")
    state = E.init_state(cfg)
    all_violations = []
    for i, step in enumerate(plan.steps):
        state, violations = E.apply_step(cfg, state, step)
        if violations:
            all_violations = [{"step": i, **v.to_dict()} for v in violations]
            break
    goal = E.is_goal(cfg, state)
    doc = {"valid": not all_violations, "goal_reached": goal,
           "violations": all_violations}
    _write_out(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK if not all_violations and goal else EXIT_FAILURE


def cmd_score(args) -> int:
    cfg, golden = _resolve_env(args)
    if args.golden_len is not None:
        golden = args.golden_len
    try:
        if args.mode == MODE_FULLPLAN:
            response = _load_text(args.response)
            breakdown = reward.score_fullplan(cfg, response,
                                              golden_len=golden)
        else:
            doc = _load_json(args.response)
            transcript = [(t.get("observation", ""), t["response"])
                          for t in doc]
            breakdown = reward.score_replan_episode(cfg, transcript,
                                                    golden_len=golden)
    except BoxPlanError as exc:
        raise _fail(EXIT_FAILURE, str(exc))
    except (KeyError, TypeError) as exc:
        raise _fail(EXIT_ERROR, f"bad transcript document: {exc}")
    _write_out(json.dumps(breakdown.to_dict(), indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        dataset = datagen.load_dataset(args.dataset)
        attempts = evalharness.load_attempts(args.attempts)
        report = evalharness.evaluate(dataset, attempts, mode=args.mode,
                                      trials=args.trials)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise _fail(EXIT_ERROR, f"cannot read inputs: {exc}")
    except BoxPlanError as exc:
        raise _fail(EXIT_FAILURE, str(exc))
    _write_out(json.dumps(report.to_dict(), indent=2) + "\n", args.out)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fp:
            fp.write(evalharness.report_csv(report))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        dataset_path=args.dataset,
        session_cap=args.session_cap,
        ttl_seconds=args.ttl,
        step_cap=args.step_cap,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_render(args) -> int:
    cfg, _ = _resolve_env(args)
    plan = None
    if args.plan:
        try:
            plan = plan_from_jsonable(_load_json(args.plan))
        except BoxPlanError as exc:
            raise _fail(EXIT_ERROR, f"invalid plan {args.plan}: {exc}")
    _write_out(render_svg(cfg, plan), args.out)
    return EXIT_OK


def _add_env_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--env", help="path to an environment JSON file")
    p.add_argument("--dataset", help="JSONL dataset to pull the env from")
    p.add_argument("--env-id", help="record id inside --dataset")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boxplan",
        description="multi-robot grid planning: generate, solve, score")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a solvable dataset")
    p.add_argument("--variant", default="standard",
                   choices=["standard", "randrob", "newcoord"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-size", type=int, default=2)
    p.add_argument("--max-size", type=int, default=6)
    p.add_argument("--objects", type=int, default=5,
                   help="max objects per environment (counts run 1..N)")
    p.add_argument("--count", type=int, default=10,
                   help="records per (size, object-count) pair")
    p.add_argument("--out", help="output JSONL path (default stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="plan for one environment")
    _add_env_args(p)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate", help="replay a plan against an env")
    _add_env_args(p)
    p.add_argument("--plan", required=True,
                   help="JSON file: list of {robot: action} steps")
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("score", help="score a raw model response")
    _add_env_args(p)
    p.add_argument("--response", required=True,
                   help="raw response text, or a transcript JSON in replan mode")
    p.add_argument("--mode", default=MODE_FULLPLAN,
                   choices=[MODE_FULLPLAN, MODE_REPLAN])
    p.add_argument("--golden-len", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="aggregate metrics over attempts")
    p.add_argument("--dataset", required=True)
    p.add_argument("--attempts", required=True,
                   help="JSONL of {env_id, trial, response|transcript}")
    p.add_argument("--mode", default=MODE_FULLPLAN,
                   choices=[MODE_FULLPLAN, MODE_REPLAN])
    p.add_argument("--trials", type=int, default=4)
    p.add_argument("--csv", help="also write a per-env CSV here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP scoring service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--dataset", help="JSONL dataset served by id")
    p.add_argument("--session-cap", type=int, default=1024)
    p.add_argument("--ttl", type=float, default=600.0,
                   help="rollout session lifetime in seconds")
    p.add_argument("--step-cap", type=int,
                   help="override the per-session step limit")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("render", help="draw an environment (and plan) as SVG")
    _add_env_args(p)
    p.add_argument("--plan")
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
