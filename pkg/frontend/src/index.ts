export { MvpureClient, MvpureServiceError } from "./client.js";
export type {
  FilterKind,
  FilterResult,
  HealthResult,
  IndexKind,
  LocalizeRequest,
  LocalizeResult,
  MakeFilterRequest,
  Matrix,
  RankRule,
  SkipEvent,
  SuggestRequest,
  SuggestResult,
  TraceStep,
} from "./types.js";
