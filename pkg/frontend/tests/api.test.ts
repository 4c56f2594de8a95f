import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, filterQuery, newIdempotencyKey } from "../src/api.js";

interface Recorded {
  url: string;
  method: string;
  headers: Record<string, string>;
  body: unknown;
}

/** Mock transport: records every request and serves canned JSON responses. */
function mockFetch(respond: (url: string, method: string) => { status: number; body: unknown }) {
  const calls: Recorded[] = [];
  const fetchImpl = async (input: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    calls.push({
      url: input,
      method,
      headers: (init?.headers ?? {}) as Record<string, string>,
      body: typeof init?.body === "string" ? JSON.parse(init.body) : undefined,
    });
    const { status, body } = respond(input, method);
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { calls, fetchImpl };
}

describe("filterQuery", () => {
  it("serializes only the non-blank filters", () => {
    expect(filterQuery({})).toBe("");
    expect(filterQuery({ thread_id: "th1", status: "" })).toBe("?thread_id=th1");
    expect(filterQuery({ status: "pending", kind: "reporting" })).toBe(
      "?status=pending&kind=reporting",
    );
  });
});

describe("newIdempotencyKey", () => {
  it("is unique per call", () => {
    const keys = new Set(Array.from({ length: 50 }, () => newIdempotencyKey()));
    expect(keys.size).toBe(50);
  });
});

describe("ApiClient", () => {
  it("login stores the bearer token and later requests carry it", async () => {
    const { calls, fetchImpl } = mockFetch((url) => {
      if (url.endsWith("/auth/login")) {
        return {
          status: 200,
          body: { token: "tk-secret", user_id: "u1", roles: ["judge"], display_name: "J" },
        };
      }
      return { status: 200, body: [] };
    });
    const client = new ApiClient("http://api", fetchImpl);
    expect(client.hasSession()).toBe(false);

    const session = await client.login("judy", "pw");
    expect(session.roles).toEqual(["judge"]);
    expect(client.hasSession()).toBe(true);
    expect(calls[0]?.headers["Authorization"]).toBeUndefined();
    expect(calls[0]?.body).toEqual({ username: "judy", password: "pw" });

    await client.events();
    expect(calls[1]?.url).toBe("http://api/events");
    expect(calls[1]?.headers["Authorization"]).toBe("Bearer tk-secret");
  });

  it("mutations carry a fresh Idempotency-Key; reads do not", async () => {
    const { calls, fetchImpl } = mockFetch(() => ({ status: 200, body: {} }));
    const client = new ApiClient("", fetchImpl);
    client.setToken("tk1");

    await client.judge("fl1", "approve", 600, "nice work");
    await client.judge("fl2", "reject", 0, "");
    await client.judgeQueue("ev1");

    const [first, second, read] = calls;
    expect(first?.method).toBe("POST");
    expect(first?.body).toEqual({ decision: "approve", awarded_points: 600, comment: "nice work" });
    expect(first?.headers["Idempotency-Key"]).toMatch(/^ui-/);
    expect(second?.headers["Idempotency-Key"]).toMatch(/^ui-/);
    expect(first?.headers["Idempotency-Key"]).not.toBe(second?.headers["Idempotency-Key"]);
    expect(read?.method).toBe("GET");
    expect(read?.headers["Idempotency-Key"]).toBeUndefined();
  });

  it("builds filtered list URLs", async () => {
    const { calls, fetchImpl } = mockFetch(() => ({ status: 200, body: [] }));
    const client = new ApiClient("", fetchImpl);
    client.setToken("tk1");
    await client.flags("ev1", { status: "pending", thread_id: "th2" });
    expect(calls[0]?.url).toBe("/events/ev1/flags?status=pending&thread_id=th2");
  });

  it("surfaces server errors as ApiError with the {code, message, details} body", async () => {
    const { fetchImpl } = mockFetch(() => ({
      status: 409,
      body: {
        code: "DUPLICATE_EVIDENCE",
        message: "already submitted",
        details: { existing_evidence_id: "ev7" },
      },
    }));
    const client = new ApiClient("", fetchImpl);
    client.setToken("tk1");

    const failure = await client
      .submitFlag("ev7", { kind: "archival", body: {}, self_assessment: {} })
      .then(
        () => null,
        (err: unknown) => err,
      );
    expect(failure).toBeInstanceOf(ApiError);
    const apiError = failure as ApiError;
    expect(apiError.status).toBe(409);
    expect(apiError.body.code).toBe("DUPLICATE_EVIDENCE");
    expect(apiError.body.details["existing_evidence_id"]).toBe("ev7");
    expect(apiError.message).toBe("already submitted");
  });

  it("tolerates a non-JSON error body", async () => {
    const fetchImpl = async (): Promise<Response> =>
      new Response("<html>bad gateway</html>", { status: 502, statusText: "Bad Gateway" });
    const client = new ApiClient("", fetchImpl);
    const failure = await client.events().then(
      () => null,
      (err: unknown) => err,
    );
    expect(failure).toBeInstanceOf(ApiError);
    expect((failure as ApiError).body.code).toBe("UNKNOWN");
  });
});
