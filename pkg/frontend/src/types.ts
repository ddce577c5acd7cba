/** Row-major matrix of finite numbers. */
export type Matrix = number[][];

export type IndexKind = "mai" | "mpz" | "mai_mvp" | "mpz_mvp";
export type FilterKind = "lcmv_r" | "lcmv_n" | "mvp_r" | "mvp_n";
export type RankRule = "excess" | "absolute";

export interface SuggestRequest {
  R: Matrix;
  N: Matrix;
  l0_threshold?: number;
  rank_threshold?: number;
  rank_rule?: RankRule;
}

export interface SuggestResult {
  lambdas: number[];
  l0_est: number;
  r_opt: number;
  thresholds: { l0_threshold: number; rank_threshold: number };
}

export interface LocalizeRequest {
  leadfield: Matrix;
  R: Matrix;
  N: Matrix;
  n_sources: number;
  rank: number;
  index_kind?: IndexKind;
  parallel_width?: number;
  record_candidates?: boolean;
  reg_data?: number;
  reg_noise?: number;
}

export interface TraceStep {
  step: number;
  value: number;
  chosen: number | null;
  candidates: [number, number][] | null;
}

export interface SkipEvent {
  step: number;
  candidate: number;
  reason: string;
}

export interface LocalizeResult {
  sources: number[];
  index_trace: TraceStep[];
  rank_used: number;
  index_kind: IndexKind;
  skipped: SkipEvent[];
}

export interface MakeFilterRequest {
  leadfield: Matrix;
  sources: number[];
  R: Matrix;
  N: Matrix;
  kind: FilterKind;
  rank?: number | null;
  reg_data?: number;
  reg_noise?: number;
}

export interface FilterResult {
  weights: Matrix;
  kind: FilterKind;
  rank: number;
  gain_check: number;
  sources: number[];
}

export interface HealthResult {
  status: string;
  version: string;
}
