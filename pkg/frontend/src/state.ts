/**
 * Shared interaction state for the four coordinated views.
 *
 * Selections always reference entities present in the latest analysis
 * payload; reconcile() drops anything that went stale, and a dataset
 * switch clears every selection outright.
 */

import type { AnalysisPayload, HeatmapCell } from "./types.js";

export class ViewState {
  dataset: string | null = null;
  window: [number, number] | null = null;
  lasso: string[] = [];
  metrics: string[] = [];
  hovered: HeatmapCell | null = null;
  baselineBrushes = new Map<string, [number, number]>();

  // editable pipeline controls, mirrored into analysis requests
  k = 4;
  seed = 42;
  nNeighbors = 15;
  minDist = 0.1;
  smooth: number | undefined = undefined;

  /** Node ids and metric names the latest payload knows about. */
  private knownNodes = new Set<string>();
  private knownMetrics = new Set<string>();

  resetForDataset(dataset: string): void {
    if (this.dataset === dataset) return;
    this.dataset = dataset;
    this.window = null;
    this.lasso = [];
    this.metrics = [];
    this.hovered = null;
    this.baselineBrushes.clear();
    this.knownNodes.clear();
    this.knownMetrics.clear();
  }

  /** Drop selections that no longer resolve against the payload. */
  reconcile(payload: AnalysisPayload): void {
    this.knownNodes = new Set(payload.nodes);
    this.knownMetrics = new Set(payload.contributions.metrics);
    this.lasso = this.lasso.filter((n) => this.knownNodes.has(n));
    this.metrics = this.metrics.filter((m) => this.knownMetrics.has(m));
    if (this.hovered && !this.cellIsLive(this.hovered)) this.hovered = null;
    for (const metric of [...this.baselineBrushes.keys()]) {
      if (!this.knownMetrics.has(metric)) this.baselineBrushes.delete(metric);
    }
  }

  cellIsLive(cell: HeatmapCell): boolean {
    return this.knownNodes.has(cell.node) && this.knownMetrics.has(cell.metric);
  }

  hasNode(node: string): boolean {
    return this.knownNodes.has(node);
  }

  hasMetric(metric: string): boolean {
    return this.knownMetrics.has(metric);
  }

  /** Metrics the heatmap should request: the picks, or everything known. */
  activeMetrics(): string[] {
    return this.metrics.length ? [...this.metrics] : [...this.knownMetrics];
  }
}
