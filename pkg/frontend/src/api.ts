import type {
  AdjudicationInput,
  AdjudicationRecord,
  AdjudicationsPayload,
  CandidatesPayload,
  ReportPayload,
  Standard,
} from "./types";

/** Error carrying the HTTP status so callers can tell 422 from outages. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = typeof fetch;

/** Thin typed client over the review API; fetch is injectable for tests. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = await resp.json();
        detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
      } catch {
        /* non-JSON error body; keep statusText */
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  getStandards(): Promise<Standard[]> {
    return this.request("/api/standards");
  }

  getCandidates(ref: number): Promise<CandidatesPayload> {
    return this.request(`/api/standards/${ref}/candidates`);
  }

  getReport(): Promise<ReportPayload> {
    return this.request("/api/report");
  }

  getAdjudications(): Promise<AdjudicationsPayload> {
    return this.request("/api/adjudications");
  }

  postAdjudication(record: AdjudicationInput): Promise<AdjudicationRecord> {
    return this.request("/api/adjudications", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(record),
    });
  }

  getExport(): Promise<unknown> {
    return this.request("/api/export");
  }
}
