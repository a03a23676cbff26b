import {
  BadRequest,
  CapacityExceeded,
  ConnectionFailed,
  ServiceError,
  SessionExpired,
  SessionTerminal,
  UnknownEnv,
  Unscorable,
} from "./errors.js";
import type {
  EnvRef,
  RolloutStart,
  RolloutStepResult,
  ScoreBreakdown,
  ScoreGroupResult,
} from "./types.js";

export interface ClientOptions {
  baseUrl?: string;
  /** Per-request timeout; a scoring call must never hang a trainer. */
  timeoutMs?: number;
  /** Retries on connection errors only — never on HTTP errors, so a
   * score is never silently computed twice. */
  connectRetries?: number;
}

const DEFAULT_BASE_URL = "http://127.0.0.1:8000";
const DEFAULT_TIMEOUT_MS = 30_000;
const DEFAULT_CONNECT_RETRIES = 2;

function mapScoreError(status: number, detail: string): ServiceError {
  if (status === 404) return new UnknownEnv(status, detail);
  if (status === 422) return new Unscorable(status, detail);
  if (status === 429) return new CapacityExceeded(status, detail);
  return new BadRequest(status, detail);
}

function mapRolloutError(status: number, detail: string): ServiceError {
  if (status === 404) return new SessionExpired(status, detail);
  if (status === 409) return new SessionTerminal(status, detail);
  return mapScoreError(status, detail);
}

export class BoxplanClient {
  readonly baseUrl: string;
  readonly timeoutMs: number;
  readonly connectRetries: number;

  constructor(options: ClientOptions = {}) {
    this.baseUrl = (options.baseUrl ?? DEFAULT_BASE_URL).replace(/\/+$/, "");
    this.timeoutMs = options.timeoutMs ?? DEFAULT_TIMEOUT_MS;
    this.connectRetries = options.connectRetries ?? DEFAULT_CONNECT_RETRIES;
  }

  async score(
    env: EnvRef,
    response: string,
    goldenLen?: number
  ): Promise<ScoreBreakdown> {
    return (await this.post(
      "/v1/score",
      { env, response, golden_len: goldenLen ?? null },
      mapScoreError
    )) as ScoreBreakdown;
  }

  async scoreGroup(
    env: EnvRef,
    responses: string[],
    goldenLen?: number
  ): Promise<ScoreGroupResult> {
    return (await this.post(
      "/v1/score_group",
      { env, responses, golden_len: goldenLen ?? null },
      mapScoreError
    )) as ScoreGroupResult;
  }

  async startRollout(env: EnvRef, maxSteps?: number): Promise<RolloutSession> {
    const started = (await this.post(
      "/v1/rollout/start",
      { env, max_steps: maxSteps ?? null },
      mapScoreError
    )) as RolloutStart;
    return new RolloutSession(this, started.session_id, started.observation);
  }

  /** @internal */
  async post(
    path: string,
    body: unknown,
    mapError: (status: number, detail: string) => ServiceError
  ): Promise<unknown> {
    let lastFailure: unknown;
    for (let attempt = 0; attempt <= this.connectRetries; attempt++) {
      let res: Response;
      try {
        res = await fetch(this.baseUrl + path, {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify(body),
          signal: AbortSignal.timeout(this.timeoutMs),
        });
      } catch (err) {
        lastFailure = err;
        continue; // connection-level failure: safe to retry
      }
      if (!res.ok) {
        let detail = res.statusText;
        try {
          const doc = (await res.json()) as { detail?: string };
          if (doc.detail) detail = doc.detail;
        } catch {
          // keep the status text
        }
        throw mapError(res.status, detail);
      }
      return res.json();
    }
    throw new ConnectionFailed(lastFailure);
  }
}

/** Stateful wrapper over /v1/rollout/*; one instance per episode. */
export class RolloutSession {
  readonly sessionId: string;
  /** Raw `<observation>` text for prompt assembly; updated per step. */
  observation: string;
  breakdown: ScoreBreakdown | null = null;
  status: "open" | "done_success" | "done_failure" = "open";

  private readonly client: BoxplanClient;

  constructor(client: BoxplanClient, sessionId: string, observation: string) {
    this.client = client;
    this.sessionId = sessionId;
    this.observation = observation;
  }

  get done(): boolean {
    return this.status !== "open";
  }

  async step(response: string): Promise<RolloutStepResult> {
    if (this.done) {
      throw new SessionTerminal(409, `session already ${this.status}`);
    }
    const result = (await this.client.post(
      "/v1/rollout/step",
      { session_id: this.sessionId, response },
      mapRolloutError
    )) as RolloutStepResult;
    this.status = result.status;
    if (result.status === "open") {
      this.observation = result.observation;
    } else {
      this.breakdown = result.breakdown;
    }
    return result;
  }
}
