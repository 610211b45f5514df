/**
 * Typed client for the session service. Every session transition goes
 * through these endpoints; the UI holds no state machine of its own.
 */
import type {
  FeedbackRequest,
  SessionSummary,
  SessionView,
  SimRequest,
  SweepResponse,
  TraceEventView,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(base + path, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ServiceClient {
  constructor(public baseUrl: string = "") {}

  async health(): Promise<boolean> {
    try {
      await request<{ status: string }>(this.baseUrl, "/healthz");
      return true;
    } catch {
      return false;
    }
  }

  listSessions(): Promise<{ sessions: SessionSummary[] }> {
    return request(this.baseUrl, "/sessions");
  }

  getSession(id: string): Promise<SessionView> {
    return request(this.baseUrl, `/sessions/${id}`);
  }

  getTrace(id: string): Promise<{ events: TraceEventView[] }> {
    return request(this.baseUrl, `/sessions/${id}/trace`);
  }

  createSession(body: {
    query?: string;
    domain?: string;
    scenario?: string;
    config?: Record<string, unknown>;
  }): Promise<{ id: string; status: SessionView }> {
    return request(this.baseUrl, "/sessions", {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  postFeedback(id: string, feedback: FeedbackRequest): Promise<SessionView> {
    return request(this.baseUrl, `/sessions/${id}/feedback`, {
      method: "POST",
      body: JSON.stringify(feedback),
    });
  }

  simulate(body: SimRequest): Promise<SweepResponse> {
    return request(this.baseUrl, "/simulate", {
      method: "POST",
      body: JSON.stringify(body),
    });
  }
}
