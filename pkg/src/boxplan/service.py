"""JSON-over-HTTP reward service for external RL trainers.

Endpoints:
  POST /v1/score         one response -> ScoreBreakdown
  POST /v1/score_group   a group of responses -> breakdowns + advantages
  POST /v1/rollout/start open an interactive replan session
  POST /v1/rollout/step  apply one response to a session

Environments are referenced either by dataset id or passed inline.
"""
from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Optional, Union

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import datagen, env as E, reward
from .env import EnvConfig
from .errors import ConfigInvalid, GoldenPlanUnavailable
from .plans import MODE_REPLAN, parse_response

DEFAULT_SESSION_CAP = 1024
DEFAULT_TTL_SECONDS = 600.0
HARD_STEP_CAP = 30
STEP_CAP_FACTOR = 3


class ScoreRequest(BaseModel):
    env: Union[str, dict]
    response: str
    mode: str = "fullplan"
    golden_len: Optional[int] = None


class ScoreGroupRequest(BaseModel):
    env: Union[str, dict]
    responses: list[str]
    golden_len: Optional[int] = None


class RolloutStartRequest(BaseModel):
    env: Union[str, dict]
    max_steps: Optional[int] = None


class RolloutStepRequest(BaseModel):
    session_id: str
    response: str


@dataclass
class Session:
    id: str
    cfg: EnvConfig
    state: E.EnvState
    golden_len: int
    max_steps: int
    deadline: float
    steps_taken: int = 0
    transcript: list[tuple[str, str]] = field(default_factory=list)
    status: str = "open"
    lock: threading.Lock = field(default_factory=threading.Lock)


class ApiError(Exception):
    def __init__(self, status_code: int, detail: str):
        self.status_code = status_code
        self.detail = detail


def wrap_observation(text: str) -> str:
    return f"<observation>\n{text}\n</observation>"


def create_app(
    dataset_path: Optional[str] = None,
    session_cap: int = DEFAULT_SESSION_CAP,
    ttl_seconds: float = DEFAULT_TTL_SECONDS,
    step_cap: Optional[int] = None,
) -> FastAPI:
    app = FastAPI(title="plan reward service")

    records = {}
    if dataset_path:
        records = {rec.id: rec for rec in datagen.load_dataset(dataset_path)}
    golden_cache = reward.GoldenLenCache()
    sessions: dict[str, Session] = {}
    sessions_lock = threading.Lock()

    @app.exception_handler(RequestValidationError)
    async def _bad_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"detail": "malformed request body"})

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status_code,
                            content={"detail": exc.detail})

    def resolve_env(env: Union[str, dict]) -> tuple[EnvConfig, Optional[int]]:
        """Return the config and, when known, its golden plan length."""
        if isinstance(env, str):
            rec = records.get(env)
            if rec is None:
                raise ApiError(404, f"unknown environment id {env!r}")
            return rec.cfg, rec.golden_len
        try:
            cfg = E.config_from_dict(env)
            cfg.validate()
        except ConfigInvalid as exc:
            raise ApiError(400, f"invalid environment: {exc}")
        return cfg, None

    def resolve_golden(cfg: EnvConfig, from_dataset: Optional[int],
                       from_request: Optional[int]) -> int:
        if from_request is not None:
            return from_request
        if from_dataset is not None:
            return from_dataset
        try:
            return golden_cache.get(cfg)
        except GoldenPlanUnavailable as exc:
            raise ApiError(422, f"unscorable environment: {exc}")

    def score_one(cfg: EnvConfig, response: str, mode: str,
                  golden_len: int) -> reward.ScoreBreakdown:
        if mode != "fullplan":
            raise ApiError(400, f"unsupported scoring mode {mode!r}")
        return reward.score_fullplan(cfg, response, golden_len=golden_len)

    @app.post("/v1/score")
    def score(req: ScoreRequest):
        cfg, ds_golden = resolve_env(req.env)
        golden = resolve_golden(cfg, ds_golden, req.golden_len)
        return score_one(cfg, req.response, req.mode, golden).to_dict()

    @app.post("/v1/score_group")
    def score_group(req: ScoreGroupRequest):
        if not req.responses:
            raise ApiError(400, "empty response group")
        cfg, ds_golden = resolve_env(req.env)
        golden = resolve_golden(cfg, ds_golden, req.golden_len)
        breakdowns = [
            score_one(cfg, r, "fullplan", golden) for r in req.responses]
        adv = reward.group_advantages([b.total for b in breakdowns])
        return {
            "breakdowns": [b.to_dict() for b in breakdowns],
            "advantages": adv.advantages,
            "mean": adv.mean,
            "std": adv.std,
        }

    def expire_sessions(now: float) -> None:
        for s in sessions.values():
            if s.status == "open" and now > s.deadline:
                s.status = "expired"

    @app.post("/v1/rollout/start")
    def rollout_start(req: RolloutStartRequest):
        cfg, ds_golden = resolve_env(req.env)
        golden = resolve_golden(cfg, ds_golden, None)
        now = time.monotonic()
        with sessions_lock:
            expire_sessions(now)
            open_count = sum(1 for s in sessions.values()
                             if s.status == "open")
            if open_count >= session_cap:
                raise ApiError(429, "session capacity exceeded")
            if req.max_steps is not None:
                max_steps = req.max_steps
            elif step_cap is not None:
                max_steps = step_cap
            else:
                max_steps = min(STEP_CAP_FACTOR * golden, HARD_STEP_CAP)
            session = Session(
                id=uuid.uuid4().hex,
                cfg=cfg,
                state=E.init_state(cfg),
                golden_len=golden,
                max_steps=max(1, max_steps),
                deadline=now + ttl_seconds,
            )
            sessions[session.id] = session
        observation = wrap_observation(
            E.render_observation(session.cfg, session.state))
        return {"session_id": session.id, "observation": observation}

    @app.post("/v1/rollout/step")
    def rollout_step(req: RolloutStepRequest):
        with sessions_lock:
            expire_sessions(time.monotonic())
            session = sessions.get(req.session_id)
        if session is None:
            raise ApiError(404, "unknown session")
        if session.status == "expired":
            raise ApiError(404, "session expired")
        if not session.lock.acquire(blocking=False):
            raise ApiError(409, "a step for this session is in flight")
        try:
            if session.status != "open":
                raise ApiError(409, f"session already {session.status}")
            return _apply_rollout_step(session, req.response)
        finally:
            session.lock.release()

    def _apply_rollout_step(session: Session, response: str) -> dict:
        observation = wrap_observation(
            E.render_observation(session.cfg, session.state))
        session.transcript.append((observation, response))

        parsed = parse_response(response, MODE_REPLAN)
        terminal = None
        if parsed.step is None:
            terminal = "done_failure"
        else:
            new_state, violations = E.apply_step(
                session.cfg, session.state, parsed.step)
            if violations:
                terminal = "done_failure"
            else:
                session.state = new_state
                session.steps_taken += 1
                if E.is_goal(session.cfg, session.state):
                    terminal = "done_success"
                elif session.steps_taken >= session.max_steps:
                    terminal = "done_failure"

        if terminal is not None:
            session.status = terminal
            breakdown = reward.score_replan_episode(
                session.cfg, session.transcript,
                golden_len=session.golden_len)
            return {"status": session.status,
                    "breakdown": breakdown.to_dict()}
        return {
            "status": "open",
            "observation": wrap_observation(
                E.render_observation(session.cfg, session.state)),
        }

    return app
