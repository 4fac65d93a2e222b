import type {
  Log,
  Metrics,
  NextQuery,
  SessionCreateRequest,
  SessionHandle,
} from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the annotation-service HTTP API. */
export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => globalThis.fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    const body = await response.text();
    if (!response.ok) {
      let detail = body;
      try {
        const parsed = JSON.parse(body);
        detail = parsed.detail ?? parsed.message ?? body;
      } catch {
        // raw body is fine
      }
      throw new ApiError(response.status, detail);
    }
    return JSON.parse(body) as T;
  }

  createSession(request: SessionCreateRequest): Promise<SessionHandle> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
  }

  getSession(id: string): Promise<SessionHandle> {
    return this.request(`/sessions/${id}`);
  }

  getNext(id: string): Promise<NextQuery> {
    return this.request(`/sessions/${id}/next`);
  }

  /**
   * Submit one label. The (session, step, label) triple is idempotent on the
   * service side, so transient network failures are retried with the same
   * body without risking a double advance.
   */
  async submitLabel(
    id: string,
    trajectoryId: number,
    label: string,
    step: number,
    retries = 2,
  ): Promise<SessionHandle> {
    const init: RequestInit = {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ trajectory_id: trajectoryId, label, step }),
    };
    let lastError: unknown;
    for (let attempt = 0; attempt <= retries; attempt++) {
      try {
        return await this.request<SessionHandle>(`/sessions/${id}/labels`, init);
      } catch (error) {
        if (error instanceof ApiError) throw error; // service answered: no retry
        lastError = error;
      }
    }
    throw lastError;
  }

  getMetrics(id: string): Promise<Metrics> {
    return this.request(`/sessions/${id}/metrics`);
  }

  getLog(id: string): Promise<Log> {
    return this.request(`/sessions/${id}/log`);
  }
}
