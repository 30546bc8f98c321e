/** Canned payloads shaped like the service's JSON, small enough to eyeball. */

import type {
  AnalysisPayload,
  BaselinePayload,
  RawPayload,
  SeriesPayload,
  ZScoresPayload,
} from "../src/types.js";

export const METRICS = ["cpu_load", "mem_used", "net_rx"];
export const NODES = ["n000", "n001", "n002", "n003", "n004", "n005", "n006", "n007"];

export function analysisFixture(overrides: Partial<AnalysisPayload> = {}): AnalysisPayload {
  const labels = NODES.map((_, i) => i % 4);
  return {
    embedding: {
      coords: NODES.map((_, i) => [i * 1.5, (i % 4) * 2.0] as [number, number]),
      params: { n_neighbors: 15, min_dist: 0.1, seed: 42 },
      labels,
      centroids: [
        [0, 0],
        [1, 2],
        [2, 4],
        [3, 6],
      ],
    },
    contributions: {
      metrics: [...METRICS],
      clusters: [
        { id: 0, alpha: 0.8, weights: [0.9, -0.2, 0.1] },
        { id: 1, alpha: 1.2, weights: [-0.5, 0.7, 0.3] },
        { id: 2, alpha: 0.4, weights: [0.1, 0.1, -0.8] },
        { id: 3, alpha: 0.9, weights: [-0.3, -0.4, 0.6] },
      ],
      ranking: ["cpu_load", "net_rx", "mem_used"],
      size_one_clusters: [],
    },
    null_activity: [
      { t: 0, nodes: [{ node: "n000", cluster: 0 }] },
      { t: 150, nodes: [{ node: "n001", cluster: 1 }, { node: "n002", cluster: 2 }] },
      { t: 300, nodes: [] },
    ],
    provenance: { digests: { tensor: "abc" }, cache: { embedding: "miss" } },
    dataset: "ds-fixture",
    nodes: [...NODES],
    ...overrides,
  };
}

export function seriesFixture(metric: string, cluster: number): SeriesPayload {
  const t = Array.from({ length: 20 }, (_, i) => i * 15);
  return {
    cluster,
    metric,
    t,
    v: t.map((x) => Math.sin(x / 40) + cluster),
    carried: false,
    degenerate: false,
  };
}

export function rawFixture(metric: string, nodes: string[] = NODES): RawPayload {
  const t = Array.from({ length: 20 }, (_, i) => i * 15);
  const series: Record<string, (number | null)[]> = {};
  for (const [j, node] of nodes.entries()) {
    series[node] = t.map((x, i) => (i === 7 && j === 0 ? null : Math.cos(x / 30) + j * 0.1));
  }
  return { metric, t, series };
}

export function baselineFixture(metric: string): BaselinePayload {
  return { metric, t_start: 0, t_end: 120, source: "auto" };
}

export function zscoresFixture(nodes: string[], metrics: string[]): ZScoresPayload {
  const baselines: Record<string, BaselinePayload> = {};
  for (const m of metrics) baselines[m] = baselineFixture(m);
  return {
    zscores: {
      metrics: [...metrics],
      nodes: [...nodes],
      z: metrics.map((_, i) => nodes.map((_, j) => (i + j) % 2 ? 2.5 : -1.5)),
      flags: {},
    },
    baselines,
    provenance: { digests: {}, cache: {} },
  };
}
