import { describe, expect, it } from "vitest";
import { ApiClient, ApiError } from "../src/api";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("ApiClient", () => {
  it("maps service errors to ApiError with detail", async () => {
    const client = new ApiClient("", async () =>
      jsonResponse({ detail: "session is Complete" }, 409),
    );
    await expect(client.getNext("x")).rejects.toMatchObject({
      status: 409,
      message: "session is Complete",
    });
  });

  it("retries submitLabel on network failure with the identical body", async () => {
    const bodies: string[] = [];
    let calls = 0;
    const client = new ApiClient("", async (_url, init) => {
      calls += 1;
      bodies.push(String(init?.body));
      if (calls === 1) throw new TypeError("network down");
      return jsonResponse({ session_id: "s", status: "AwaitingLabel", step: 1 });
    });
    const handle = await client.submitLabel("s", 42, "cut_in", 3);
    expect(handle.step).toBe(1);
    expect(calls).toBe(2);
    expect(bodies[0]).toBe(bodies[1]); // idempotent resubmission
    expect(JSON.parse(bodies[0])).toEqual({ trajectory_id: 42, label: "cut_in", step: 3 });
  });

  it("does not retry when the service answered with an error", async () => {
    let calls = 0;
    const client = new ApiClient("", async () => {
      calls += 1;
      return jsonResponse({ detail: "conflict" }, 409);
    });
    await expect(client.submitLabel("s", 1, "cut_in", 1)).rejects.toBeInstanceOf(ApiError);
    expect(calls).toBe(1);
  });

  it("gives up after exhausting retries", async () => {
    let calls = 0;
    const client = new ApiClient("", async () => {
      calls += 1;
      throw new TypeError("still down");
    });
    await expect(client.submitLabel("s", 1, "cut_in", 1, 2)).rejects.toBeInstanceOf(TypeError);
    expect(calls).toBe(3);
  });
});
