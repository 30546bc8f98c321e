/**
 * Dashboard: wires the four coordinated views over one API session.
 *
 * Interaction routing follows the analysis loop: brushing the time strip
 * re-windows the series plots client-side, a lasso scores the caught nodes,
 * k changes re-run clustering only, and baseline brushes update z-scores
 * without touching the embedding.
 */

import type { FleetApi } from "./api.js";
import { el } from "./dom.js";
import { ViewState } from "./state.js";
import { MetricReadingView } from "./views/metricReading.js";
import { NodeBehaviorView } from "./views/nodeBehavior.js";
import { SimilarityView } from "./views/similarity.js";
import { TimeDomainView } from "./views/timeDomain.js";
import type {
  AnalysisPayload,
  BandBody,
  BaselinePayload,
  HeatmapCell,
  RawPayload,
  SeriesPayload,
  ZScoresPayload,
} from "./types.js";

export class Dashboard {
  readonly state = new ViewState();
  readonly timeDomain: TimeDomainView;
  readonly similarity: SimilarityView;
  readonly metricReading: MetricReadingView;
  readonly nodeBehavior: NodeBehaviorView;

  latest: AnalysisPayload | null = null;
  latestZ: ZScoresPayload | null = null;
  band: BandBody = {};

  private seriesCache = new Map<string, SeriesPayload[]>();
  private rawCache = new Map<string, RawPayload>();
  private baselines = new Map<string, BaselinePayload>();
  private span: [number, number] = [0, 0];

  constructor(
    container: HTMLElement,
    private api: FleetApi,
    private sessionId = "ui",
  ) {
    const timeRoot = el("div", "fs-view fs-view-timedomain");
    const simRoot = el("div", "fs-view fs-view-similarity");
    const metricRoot = el("div", "fs-view fs-view-metrics");
    const behaviorRoot = el("div", "fs-view fs-view-behavior");
    for (const root of [timeRoot, simRoot, metricRoot, behaviorRoot]) {
      container.appendChild(root);
    }

    this.timeDomain = new TimeDomainView(timeRoot, (window) => this.applyBrush(window));
    this.similarity = new SimilarityView(simRoot, {
      onLasso: (nodes) => void this.applyLasso(nodes),
      onParams: (params) => void this.applyParams(params),
    });
    this.metricReading = new MetricReadingView(metricRoot, {
      onPick: (metrics) => void this.pickMetrics(metrics),
      onBaselineBrush: (metric, window) => void this.rebrushBaseline(metric, window),
      onSmooth: (window) => void this.setSmoothing(window),
    });
    this.nodeBehavior = new NodeBehaviorView(behaviorRoot, (cell) => this.hoverCell(cell));
    this.renderAll();
  }

  async loadDataset(body: { csv?: string; synth?: Record<string, unknown> }): Promise<void> {
    const uploaded = body.csv !== undefined
      ? await this.api.uploadCsv(body.csv)
      : await this.api.uploadSynth(body.synth ?? {});
    if (!uploaded) return;
    this.state.resetForDataset(uploaded.dataset);
    this.latestZ = null;
    this.seriesCache.clear();
    this.rawCache.clear();
    this.baselines.clear();
    await this.runAnalysis();
  }

  /** Full pipeline request; superseded responses are dropped silently. */
  async runAnalysis(): Promise<AnalysisPayload | null> {
    if (!this.state.dataset) return null;
    const payload = await this.api.analysis(this.sessionId, {
      dataset: this.state.dataset,
      params: {
        k: this.state.k,
        seed: this.state.seed,
        n_neighbors: this.state.nNeighbors,
        min_dist: this.state.minDist,
      },
      band: this.band,
    });
    if (!payload) return null;
    this.latest = payload;
    this.state.reconcile(payload);
    await this.ensureSeries(this.state.metrics);
    this.renderAll();
    return payload;
  }

  /** Brush in the Time Domain: re-window series panels, no refetch. */
  applyBrush(window: [number, number] | null): void {
    this.state.window = window;
    this.renderTimeDomain();
    this.renderMetricReading();
  }

  /** Lasso in the Similarity view: score the caught nodes. */
  async applyLasso(nodes: string[]): Promise<void> {
    if (!nodes.length) {
      this.similarity.showEmptyLassoHint();
      return;
    }
    this.similarity.clearLassoHint();
    this.state.lasso = nodes.filter((n) => this.state.hasNode(n));
    this.renderSimilarity();
    await this.refreshZScores();
  }

  /** k or neighborhood edits re-run clustering over the cached embedding. */
  async applyParams(params: { k?: number; nNeighbors?: number; minDist?: number }): Promise<void> {
    if (params.k !== undefined) this.state.k = params.k;
    if (params.nNeighbors !== undefined) this.state.nNeighbors = params.nNeighbors;
    if (params.minDist !== undefined) this.state.minDist = params.minDist;
    await this.runAnalysis();
  }

  async pickMetrics(metrics: string[]): Promise<void> {
    this.state.metrics = metrics.filter((m) => this.state.hasMetric(m));
    await this.ensureSeries(this.state.metrics);
    this.renderMetricReading();
    if (this.state.lasso.length) await this.refreshZScores();
  }

  /** Baseline re-brush: persist the window, rescore, leave the embedding alone. */
  async rebrushBaseline(metric: string, window: [number, number]): Promise<void> {
    if (!this.state.hasMetric(metric)) return;
    this.state.baselineBrushes.set(metric, window);
    const saved = await this.api.putBaseline(this.sessionId, metric, window[0], window[1]);
    if (saved) this.baselines.set(metric, saved);
    this.renderMetricReading();
    if (this.state.lasso.length) await this.refreshZScores();
  }

  async setSmoothing(window: number | undefined): Promise<void> {
    this.state.smooth = window;
    this.seriesCache.clear();
    await this.ensureSeries(this.state.metrics);
    this.renderMetricReading();
  }

  /** Hover linking with a stale guard against outdated cells. */
  hoverCell(cell: HeatmapCell | null): void {
    if (!cell) {
      this.state.hovered = null;
      this.metricReading.clearEmphasis();
      return;
    }
    if (!this.cellIsCurrent(cell)) return;
    this.state.hovered = cell;
    this.metricReading.emphasize(cell.metric, cell.node);
  }

  async refreshZScores(): Promise<ZScoresPayload | null> {
    if (!this.state.lasso.length) return null;
    const result = await this.api.zscores(this.sessionId, {
      nodes: this.state.lasso,
      metrics: this.state.activeMetrics(),
      band: this.band,
    });
    if (!result) return null;
    this.latestZ = result;
    for (const [metric, spec] of Object.entries(result.baselines)) {
      this.baselines.set(metric, spec);
    }
    this.renderNodeBehavior();
    this.renderMetricReading();
    return result;
  }

  /** True when the cell exists in the rendered matrix and is still picked. */
  private cellIsCurrent(cell: HeatmapCell): boolean {
    if (!this.state.cellIsLive(cell)) return false;
    const matrix = this.latestZ?.zscores;
    if (!matrix) return false;
    if (!matrix.metrics.includes(cell.metric) || !matrix.nodes.includes(cell.node)) return false;
    if (this.state.metrics.length && !this.state.metrics.includes(cell.metric)) return false;
    return true;
  }

  private async ensureSeries(metrics: string[]): Promise<void> {
    if (!this.latest) return;
    const labels = this.latest.embedding.labels ?? [];
    const clusters = [...new Set(labels)].sort((a, b) => a - b);
    for (const metric of metrics) {
      if (!this.seriesCache.has(metric)) {
        const fetched = await Promise.all(
          clusters.map((c) => this.api.series(this.sessionId, metric, c, this.state.smooth)),
        );
        const settled = fetched.filter((s): s is SeriesPayload => s !== null);
        this.seriesCache.set(metric, settled);
        for (const s of settled) {
          if (s.t.length) {
            this.span = [
              this.span[0] === this.span[1] ? s.t[0] : Math.min(this.span[0], s.t[0]),
              Math.max(this.span[1], s.t[s.t.length - 1]),
            ];
          }
        }
      }
      if (!this.rawCache.has(metric)) {
        const raw = await this.api.raw(this.sessionId, metric);
        if (raw) this.rawCache.set(metric, raw);
      }
      if (!this.baselines.has(metric)) {
        const baseline = await this.api.getBaseline(this.sessionId, metric);
        if (baseline) this.baselines.set(metric, baseline);
      }
    }
  }

  renderAll(): void {
    this.renderTimeDomain();
    this.renderSimilarity();
    this.renderMetricReading();
    this.renderNodeBehavior();
  }

  private renderTimeDomain(): void {
    const activity = this.latest?.null_activity ?? [];
    let span = this.span;
    if (span[0] === span[1] && activity.length) {
      span = [activity[0].t, activity[activity.length - 1].t];
    }
    this.timeDomain.render(activity, span, this.state.window);
  }

  private renderSimilarity(): void {
    this.similarity.render(
      this.latest?.embedding ?? null,
      this.latest?.nodes ?? [],
      this.state.lasso,
      this.state.k,
    );
  }

  private renderMetricReading(): void {
    this.metricReading.render(
      this.latest?.contributions ?? null,
      this.seriesCache,
      this.rawCache,
      this.baselines,
      this.state.window,
      this.state.metrics,
      this.state.smooth,
    );
  }

  private renderNodeBehavior(): void {
    this.nodeBehavior.render(this.latestZ?.zscores ?? null);
  }
}
