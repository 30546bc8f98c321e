import { describe, expect, it } from "vitest";
import { ApiClient, ApiError } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/** fetch stub whose responses resolve only when the test releases them. */
function gatedFetch() {
  const calls: { url: string; init?: RequestInit; release: (r: Response) => void }[] = [];
  const fetchFn = (url: string, init?: RequestInit) =>
    new Promise<Response>((resolve, reject) => {
      const call = { url, init, release: resolve };
      calls.push(call);
      init?.signal?.addEventListener("abort", () => {
        const err = new Error("aborted");
        err.name = "AbortError";
        reject(err);
      });
    });
  return { calls, fetchFn };
}

describe("ApiClient latest-wins channels", () => {
  it("aborts the in-flight request and resolves it null", async () => {
    const { calls, fetchFn } = gatedFetch();
    const client = new ApiClient("http://x", fetchFn);
    const first = client.zscores("s", { nodes: ["a"] });
    const second = client.zscores("s", { nodes: ["b"] });
    expect(calls).toHaveLength(2);
    expect(calls[0].init?.signal?.aborted).toBe(true);
    calls[1].release(jsonResponse({ ok: true }));
    expect(await first).toBeNull();
    expect(await second).toEqual({ ok: true });
  });

  it("discards a stale response that raced past the abort", async () => {
    const { calls, fetchFn } = gatedFetch();
    const client = new ApiClient("http://x", fetchFn);
    const first = client.analysis("s", {});
    const second = client.analysis("s", { params: { k: 5 } });
    // The old response lands anyway; the sequence check must drop it.
    calls[0].release(jsonResponse({ stale: true }));
    calls[1].release(jsonResponse({ fresh: true }));
    expect(await first).toBeNull();
    expect(await second).toEqual({ fresh: true });
  });

  it("keeps separate channels independent", async () => {
    const { calls, fetchFn } = gatedFetch();
    const client = new ApiClient("http://x", fetchFn);
    const a = client.series("s", "cpu_load", 0);
    const b = client.series("s", "mem_used", 0);
    expect(calls[0].init?.signal?.aborted).toBe(false);
    calls[0].release(jsonResponse({ metric: "cpu_load" }));
    calls[1].release(jsonResponse({ metric: "mem_used" }));
    expect(await a).toEqual({ metric: "cpu_load" });
    expect(await b).toEqual({ metric: "mem_used" });
  });

  it("leaves unchanneled calls alone", async () => {
    const { calls, fetchFn } = gatedFetch();
    const client = new ApiClient("http://x", fetchFn);
    const a = client.getBaseline("s", "cpu_load");
    const b = client.getBaseline("s", "cpu_load");
    expect(calls[0].init?.signal).toBeUndefined();
    calls[0].release(jsonResponse({ t_start: 0 }));
    calls[1].release(jsonResponse({ t_start: 1 }));
    expect(await a).toEqual({ t_start: 0 });
    expect(await b).toEqual({ t_start: 1 });
  });
});

describe("ApiClient error mapping", () => {
  it("surfaces the service's detail string", async () => {
    const client = new ApiClient("http://x", async () =>
      jsonResponse({ detail: "metric not in tensor" }, 422),
    );
    const err = await client.getBaseline("s", "nope").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(422);
    expect(err.message).toContain("metric not in tensor");
  });

  it("falls back to status text on a non-JSON body", async () => {
    const client = new ApiClient("http://x", async () =>
      new Response("boom", { status: 500, statusText: "Internal Server Error" }),
    );
    const err = await client.getBaseline("s", "m").catch((e) => e);
    expect(err.status).toBe(500);
    expect(err.message).toContain("Internal Server Error");
  });

  it("builds request paths off the trimmed base url", async () => {
    let seen = "";
    const client = new ApiClient("http://x/", async (url) => {
      seen = url;
      return jsonResponse({});
    });
    await client.raw("s7", "cpu_load", ["a", "b"]);
    expect(seen).toBe("http://x/sessions/s7/raw?metric=cpu_load&nodes=a%2Cb");
  });
});
