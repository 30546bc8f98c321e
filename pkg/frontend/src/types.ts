/**
 * Shapes of the JSON payloads served by the fleetscope HTTP service.
 *
 * These mirror the wire format exactly; the views render from them without
 * any intermediate model layer.
 */

export interface EmbeddingPayload {
  coords: [number, number][];
  params: Record<string, unknown>;
  labels: number[] | null;
  centroids: [number, number][] | null;
}

export interface ClusterContributionPayload {
  id: number;
  alpha: number;
  weights: number[];
}

export interface ContributionsPayload {
  metrics: string[];
  clusters: ClusterContributionPayload[];
  ranking: string[];
  size_one_clusters: number[];
}

/** One timestamp's worth of nodes whose every metric read null. */
export interface NullActivityEntry {
  t: number;
  nodes: { node: string; cluster: number | null }[];
}

export interface ProvenancePayload {
  digests: Record<string, string>;
  cache: Record<string, string>;
}

export interface AnalysisPayload {
  embedding: EmbeddingPayload;
  contributions: ContributionsPayload;
  null_activity: NullActivityEntry[];
  provenance: ProvenancePayload;
  dataset: string;
  nodes: string[];
}

export interface SeriesPayload {
  cluster: number;
  metric: string;
  t: number[];
  v: number[];
  carried: boolean;
  degenerate: boolean;
}

export interface RawPayload {
  metric: string;
  t: number[];
  series: Record<string, (number | null)[]>;
}

export interface BaselinePayload {
  metric: string;
  t_start: number;
  t_end: number;
  source: string;
}

export interface ZScoreMatrixPayload {
  metrics: string[];
  nodes: string[];
  z: number[][];
  flags: Record<string, unknown>;
}

export interface ZScoresPayload {
  zscores: ZScoreMatrixPayload;
  baselines: Record<string, BaselinePayload>;
  provenance: ProvenancePayload;
}

export interface DatasetUploadPayload {
  dataset: string;
  report: Record<string, unknown>;
}

export interface AnalysisParamsBody {
  k?: number;
  seed?: number;
  n_neighbors?: number;
  min_dist?: number;
  impute_policy?: string;
  normalize_dr1?: boolean;
  standardize_ccpca?: boolean;
}

export interface BandBody {
  f_lo?: number | null;
  f_hi?: number | null;
  power_quantile?: number;
  levels?: number;
  rho?: number;
  min_bin_snapshots?: number;
}

export interface AnalysisRequestBody {
  dataset?: string;
  selection?: {
    nodes?: string[] | null;
    metrics?: string[] | null;
    window?: [number, number] | null;
  };
  params?: AnalysisParamsBody;
  band?: BandBody;
}

export interface ZScoresRequestBody {
  nodes: string[];
  metrics?: string[];
  band?: BandBody;
}

export type HeatmapCell = { metric: string; node: string };
