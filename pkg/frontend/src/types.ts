/** Payload shapes of the seqaudit HTTP service. The console renders these
 * verbatim; it never derives a decision or probability on its own. */

export type SessionStatus = 'continue' | 'accepted_H' | 'accepted_K';

export type DecisionSource =
  | 'early_stop'
  | 'terminal_full_inspection'
  | 'terminal_truncation'
  | null;

export interface StageRow {
  /** stage number, 1-based */
  t: number;
  /** running deviation count S_t */
  s: number;
  /** count-space band at this stage; null at the terminal stage */
  lower: number | null;
  upper: number | null;
}

export interface DesignSummary {
  n: number;
  r: number;
  theta_h: number;
  theta_k: number;
  alpha: number;
  beta: number;
  variant: string;
  min_stage: number;
  horizon: number;
}

/** GET /sessions/{id} */
export interface SessionView {
  session_id: string;
  design_id: string;
  /** optimistic-concurrency sequence number to echo back on observe/undo */
  seq: number;
  t: number;
  count: number;
  p_hat: number;
  status: SessionStatus;
  decided_at: number | null;
  decision_source: DecisionSource;
  stages: StageRow[];
  design: DesignSummary;
}

export interface ScheduleStage {
  t: number;
  lower: number;
  upper: number;
  /** decimal strings with 17 significant digits */
  cum_alpha: string;
  cum_beta: string;
}

/** GET /designs/{id} once calibration has finished */
export interface DesignDetail {
  design_id: string;
  config: Record<string, unknown> & { n: number; variant: string };
  config_hash: string;
  derived: {
    m_h_star: number;
    m_k_star: number;
    min_stage: number;
    horizon: number;
    collapse_stage: number | null;
  };
  truncation: { T: number; c_t: number } | null;
  stages: ScheduleStage[];
}

/** GET /designs/{id}/status */
export interface DesignStatus {
  design_id: string;
  state: 'pending' | 'running' | 'ready' | 'failed';
  progress: number;
  error: string | null;
}

export interface OcPointPayload {
  m: number;
  p: number;
  accept_k_prob: number;
  error_prob: number;
  expected_tau: number;
  se_accept_k: number;
  se_error: number;
  se_tau: number;
  region: 'H' | 'K' | 'indifference';
}

/** GET /designs/{id}/oc */
export interface OcResponse {
  design_id: string;
  reps: number;
  seed: number;
  points: OcPointPayload[];
}

/** FastAPI error bodies: plain message or pydantic field errors. */
export type ErrorDetail = string | Array<{ loc: Array<string | number>; msg: string }>;

export interface ApiError {
  detail: ErrorDetail;
}
