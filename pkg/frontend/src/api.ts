/**
 * Thin fetch client for the fleetscope JSON service.
 *
 * Interactions that can fire faster than the server answers (lasso spam,
 * slider drags) pass a channel name; the client aborts the channel's
 * in-flight request and resolves superseded calls with null, so callers
 * only ever apply the latest response.
 */

import type {
  AnalysisPayload,
  AnalysisRequestBody,
  BaselinePayload,
  DatasetUploadPayload,
  RawPayload,
  SeriesPayload,
  ZScoresPayload,
  ZScoresRequestBody,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** The surface the dashboard consumes; ApiClient is the HTTP implementation. */
export interface FleetApi {
  uploadCsv(csv: string): Promise<DatasetUploadPayload | null>;
  uploadSynth(spec: Record<string, unknown>): Promise<DatasetUploadPayload | null>;
  analysis(sessionId: string, body: AnalysisRequestBody): Promise<AnalysisPayload | null>;
  series(
    sessionId: string,
    metric: string,
    cluster: number,
    smooth?: number,
  ): Promise<SeriesPayload | null>;
  raw(sessionId: string, metric: string, nodes?: string[]): Promise<RawPayload | null>;
  getBaseline(sessionId: string, metric: string): Promise<BaselinePayload | null>;
  putBaseline(
    sessionId: string,
    metric: string,
    tStart: number,
    tEnd: number,
  ): Promise<BaselinePayload | null>;
  zscores(sessionId: string, body: ZScoresRequestBody): Promise<ZScoresPayload | null>;
}

export class ApiClient implements FleetApi {
  private controllers = new Map<string, AbortController>();
  private sequence = new Map<string, number>();

  // default wraps fetch so browsers keep their expected this binding
  constructor(
    private base: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {
    this.base = base.replace(/\/$/, "");
  }

  /** Latest-wins request; null means a newer call on the channel won. */
  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    channel?: string,
  ): Promise<T | null> {
    let signal: AbortSignal | undefined;
    let seq = 0;
    if (channel) {
      this.controllers.get(channel)?.abort();
      const controller = new AbortController();
      this.controllers.set(channel, controller);
      signal = controller.signal;
      seq = (this.sequence.get(channel) ?? 0) + 1;
      this.sequence.set(channel, seq);
    }
    let response: Response;
    try {
      response = await this.fetchFn(this.base + path, {
        method,
        signal,
        headers: body === undefined ? undefined : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      if (channel && (err as Error).name === "AbortError") return null;
      throw err;
    }
    if (channel && this.sequence.get(channel) !== seq) return null;
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const parsed = await response.json();
        if (parsed && typeof parsed.detail === "string") detail = parsed.detail;
        else if (parsed) detail = JSON.stringify(parsed.detail ?? parsed);
      } catch {
        // non-JSON error body, keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  uploadCsv(csv: string): Promise<DatasetUploadPayload | null> {
    return this.request("POST", "/datasets", { csv });
  }

  uploadSynth(spec: Record<string, unknown>): Promise<DatasetUploadPayload | null> {
    return this.request("POST", "/datasets", { synth: spec });
  }

  analysis(sessionId: string, body: AnalysisRequestBody): Promise<AnalysisPayload | null> {
    return this.request("POST", `/sessions/${sessionId}/analysis`, body, "analysis");
  }

  series(
    sessionId: string,
    metric: string,
    cluster: number,
    smooth?: number,
  ): Promise<SeriesPayload | null> {
    const query = new URLSearchParams({ metric, cluster: String(cluster) });
    if (smooth !== undefined) query.set("smooth", String(smooth));
    return this.request(
      "GET",
      `/sessions/${sessionId}/series?${query}`,
      undefined,
      `series:${metric}:${cluster}`,
    );
  }

  raw(sessionId: string, metric: string, nodes?: string[]): Promise<RawPayload | null> {
    const query = new URLSearchParams({ metric });
    if (nodes && nodes.length) query.set("nodes", nodes.join(","));
    return this.request("GET", `/sessions/${sessionId}/raw?${query}`, undefined, `raw:${metric}`);
  }

  getBaseline(sessionId: string, metric: string): Promise<BaselinePayload | null> {
    const query = new URLSearchParams({ metric });
    return this.request("GET", `/sessions/${sessionId}/baseline?${query}`);
  }

  putBaseline(
    sessionId: string,
    metric: string,
    tStart: number,
    tEnd: number,
  ): Promise<BaselinePayload | null> {
    return this.request("PUT", `/sessions/${sessionId}/baseline`, {
      metric,
      t_start: tStart,
      t_end: tEnd,
    });
  }

  zscores(sessionId: string, body: ZScoresRequestBody): Promise<ZScoresPayload | null> {
    return this.request("POST", `/sessions/${sessionId}/zscores`, body, "zscores");
  }
}
