/** Thin typed client over the platform API.
 *
 * Every mutation carries a fresh idempotency key so a retried request
 * cannot double-apply. Errors always surface as ApiError with the
 * server's {code, message, details} body attached.
 */

import type {
  ApiErrorBody,
  BirdsEye,
  EvidenceCard,
  EventDoc,
  FeedResponse,
  FlagCard,
  FlagKind,
  GateStatus,
  JudgeQueueItem,
  LeaderboardRow,
  LoginResponse,
  RubricResponse,
  TaskDoc,
  TeamDoc,
  ThreadDoc,
  ToolDoc,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: ApiErrorBody,
  ) {
    super(body.message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export function newIdempotencyKey(): string {
  const rand =
    typeof crypto !== "undefined" && "randomUUID" in crypto
      ? crypto.randomUUID()
      : Math.random().toString(36).slice(2);
  return `ui-${Date.now()}-${rand}`;
}

export interface FlagFilters {
  thread_id?: string;
  status?: string;
  team_id?: string;
  kind?: string;
}

/** Build the query string for the list endpoints; blank filters are dropped. */
export function filterQuery(filters: FlagFilters): string {
  const params = new URLSearchParams();
  for (const [key, value] of Object.entries(filters)) {
    if (value) params.set(key, value);
  }
  const qs = params.toString();
  return qs ? `?${qs}` : "";
}

export class ApiClient {
  private token: string | null = null;

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  setToken(token: string | null): void {
    this.token = token;
  }

  hasSession(): boolean {
    return this.token !== null;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    idempotent = false,
  ): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    if (idempotent) headers["Idempotency-Key"] = newIdempotencyKey();
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let parsed: ApiErrorBody;
      try {
        parsed = (await response.json()) as ApiErrorBody;
      } catch {
        parsed = { code: "UNKNOWN", message: response.statusText, details: {} };
      }
      throw new ApiError(response.status, parsed);
    }
    return (await response.json()) as T;
  }

  private get<T>(path: string): Promise<T> {
    return this.request<T>("GET", path);
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>("POST", path, body, true);
  }

  // -- session ------------------------------------------------------

  async login(username: string, password: string): Promise<LoginResponse> {
    const result = await this.request<LoginResponse>("POST", "/auth/login", {
      username,
      password,
    });
    this.token = result.token;
    return result;
  }

  me(): Promise<{ user_id: string; roles: string[]; teams?: Record<string, string> }> {
    return this.get("/me");
  }

  // -- event context ------------------------------------------------

  events(): Promise<EventDoc[]> {
    return this.get("/events");
  }

  threads(eventId: string): Promise<ThreadDoc[]> {
    return this.get(`/events/${eventId}/threads`);
  }

  teams(eventId: string): Promise<TeamDoc[]> {
    return this.get(`/events/${eventId}/teams`);
  }

  rubric(eventId: string): Promise<RubricResponse> {
    return this.get(`/events/${eventId}/rubric`);
  }

  // -- evidence and flags -------------------------------------------

  evidence(eventId: string, filters: FlagFilters = {}): Promise<EvidenceCard[]> {
    return this.get(`/events/${eventId}/evidence${filterQuery(filters)}`);
  }

  flags(eventId: string, filters: FlagFilters = {}): Promise<FlagCard[]> {
    return this.get(`/events/${eventId}/flags${filterQuery(filters)}`);
  }

  gate(evidenceId: string): Promise<GateStatus> {
    return this.get(`/evidence/${evidenceId}/gate`);
  }

  submitEvidence(
    eventId: string,
    payload: {
      thread_id: string;
      name: string;
      source_url: string;
      discovery_body: Record<string, unknown>;
      self_assessment: Record<string, string>;
    },
  ): Promise<{ evidence: EvidenceCard; discovery_flag: FlagCard }> {
    return this.post(`/events/${eventId}/evidence`, payload);
  }

  submitFlag(
    evidenceId: string,
    payload: {
      kind: FlagKind;
      body: Record<string, unknown>;
      self_assessment: Record<string, string>;
    },
  ): Promise<FlagCard> {
    return this.post(`/evidence/${evidenceId}/flags`, payload);
  }

  // -- judging ------------------------------------------------------

  judgeQueue(eventId: string, filters: FlagFilters = {}): Promise<JudgeQueueItem[]> {
    return this.get(`/events/${eventId}/judge-queue${filterQuery(filters)}`);
  }

  judge(
    flagId: string,
    decision: "approve" | "reject",
    awardedPoints: number,
    comment: string,
  ): Promise<unknown> {
    return this.post(`/flags/${flagId}/judgment`, {
      decision,
      awarded_points: awardedPoints,
      comment,
    });
  }

  // -- leaderboard, feed, taskboard ---------------------------------

  leaderboard(eventId: string): Promise<LeaderboardRow[]> {
    return this.get(`/events/${eventId}/leaderboard`);
  }

  feed(eventId: string, cursor: number): Promise<FeedResponse> {
    return this.get(`/events/${eventId}/feed?cursor=${cursor}`);
  }

  tasks(eventId: string): Promise<TaskDoc[]> {
    return this.get(`/events/${eventId}/tasks`);
  }

  tools(): Promise<ToolDoc[]> {
    return this.get("/tools");
  }

  birdsEye(eventId: string): Promise<BirdsEye> {
    return this.get(`/events/${eventId}/birds-eye`);
  }

  config(): Promise<{ poll_seconds: number }> {
    return this.get("/config");
  }
}
