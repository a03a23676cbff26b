/** Typed errors mapping the service's 4xx statuses. */

export class ServiceError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.name = new.target.name;
    this.status = status;
    this.detail = detail;
  }
}

/** 400: malformed request body or invalid inline environment. */
export class BadRequest extends ServiceError {}

/** 404 on scoring: the dataset id is not served. */
export class UnknownEnv extends ServiceError {}

/** 404 on a rollout step: the session is gone or timed out. */
export class SessionExpired extends ServiceError {}

/** 409: the session already finished, or a step is still in flight. */
export class SessionTerminal extends ServiceError {}

/** 422: the environment has no golden plan, so it cannot be scored. */
export class Unscorable extends ServiceError {}

/** 429: the service is at its open-session capacity. */
export class CapacityExceeded extends ServiceError {}

/** Network failure after retries; scoring never silently retries on 4xx. */
export class ConnectionFailed extends Error {
  constructor(cause: unknown) {
    super(`could not reach the reward service: ${String(cause)}`);
    this.name = "ConnectionFailed";
  }
}
