import type {
  FilterResult,
  HealthResult,
  LocalizeRequest,
  LocalizeResult,
  MakeFilterRequest,
  Matrix,
  SuggestRequest,
  SuggestResult,
} from "./types.js";

/** Error raised when the service rejects a request.
 *
 * `name` carries the core error class (e.g. "NotPositiveDefinite",
 * "InfeasibleDimensions") so callers can branch on the failure kind.
 */
export class MvpureServiceError extends Error {
  readonly status: number;

  constructor(name: string, message: string, status: number) {
    super(message);
    this.name = name;
    this.status = status;
  }
}

/** Stateless HTTP client for the mvpure service.
 *
 * All numerical work happens server-side; this class only marshals plain
 * arrays to JSON and back, so results are bit-identical to what the core
 * produces.
 */
export class MvpureClient {
  readonly baseUrl: string;
  private readonly fetchImpl: typeof fetch;

  constructor(baseUrl: string, fetchImpl: typeof fetch = fetch) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl;
  }

  private async post<T>(path: string, payload: unknown): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    const body: unknown = await resp.json();
    if (!resp.ok) {
      const record = (body ?? {}) as Record<string, unknown>;
      const name = typeof record.error === "string" ? record.error : "ServiceError";
      const message =
        typeof record.message === "string" ? record.message : JSON.stringify(body);
      throw new MvpureServiceError(name, message, resp.status);
    }
    return body as T;
  }

  async health(): Promise<HealthResult> {
    const resp = await this.fetchImpl(this.baseUrl + "/api/health");
    if (!resp.ok) {
      throw new MvpureServiceError("ServiceError", `health check failed (${resp.status})`, resp.status);
    }
    return (await resp.json()) as HealthResult;
  }

  /** Eigen-spectrum of R N^-1 with the suggested source count and rank. */
  suggest(request: SuggestRequest): Promise<SuggestResult> {
    return this.post<SuggestResult>("/api/spectrum", request);
  }

  /** Greedy multi-source localization. */
  localize(request: LocalizeRequest): Promise<LocalizeResult> {
    return this.post<LocalizeResult>("/api/localize", request);
  }

  /** Build a spatial filter (unit-gain or reduced-rank) for a source set. */
  makeFilter(request: MakeFilterRequest): Promise<FilterResult> {
    return this.post<FilterResult>("/api/make-filter", request);
  }

  /** Apply filter weights to an m x n_times data matrix. */
  async applyFilter(weights: Matrix, data: Matrix): Promise<Matrix> {
    const out = await this.post<{ reconstructed: Matrix }>("/api/apply-filter", {
      weights,
      data,
    });
    return out.reconstructed;
  }
}
