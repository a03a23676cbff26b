export { BoxplanClient, RolloutSession } from "./client.js";
export type { ClientOptions } from "./client.js";
export {
  BadRequest,
  CapacityExceeded,
  ConnectionFailed,
  ServiceError,
  SessionExpired,
  SessionTerminal,
  UnknownEnv,
  Unscorable,
} from "./errors.js";
export type {
  EnvRef,
  RolloutStart,
  RolloutStepResult,
  ScoreBreakdown,
  ScoreGroupResult,
  Violation,
} from "./types.js";
