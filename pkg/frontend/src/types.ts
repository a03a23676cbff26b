/** Wire types mirroring the reward service's JSON schema. */

export interface Violation {
  kind: string;
  detail: string;
  actors: string[];
}

export interface ScoreBreakdown {
  r_format: number;
  r_execute: number;
  r_efficiency: number;
  total: number;
  floored: boolean;
  violations: Violation[];
  steps_executed: number;
  golden_len: number;
}

export interface ScoreGroupResult {
  breakdowns: ScoreBreakdown[];
  advantages: number[];
  mean: number;
  std: number;
}

/** Environment reference: a dataset record id, or an inline config object. */
export type EnvRef = string | Record<string, unknown>;

export interface RolloutStart {
  session_id: string;
  observation: string;
}

export type RolloutStepResult =
  | { status: "open"; observation: string }
  | { status: "done_success" | "done_failure"; breakdown: ScoreBreakdown };
