/**
 * Metric Reading view: metrics ranked by their strongest absolute
 * contribution, signed per-cluster bars (left of the centerline means a
 * positive weight, the cluster runs higher), smoothed cluster-average
 * polylines, and raw per-node series with a brushable baseline window.
 */

import { clear, el, emptyState, pathFrom, svgEl } from "../dom.js";
import { clusterColor, extent, linearScale } from "../scales.js";
import type {
  BaselinePayload,
  ContributionsPayload,
  RawPayload,
  SeriesPayload,
} from "../types.js";

const BAR_WIDTH = 220;
const BAR_HEIGHT = 12;
const SERIES_WIDTH = 420;
const SERIES_HEIGHT = 90;
const PAD = 10;

export interface MetricReadingCallbacks {
  onPick: (metrics: string[]) => void;
  onBaselineBrush: (metric: string, window: [number, number]) => void;
  onSmooth: (window: number | undefined) => void;
}

export class MetricReadingView {
  private picked = new Set<string>();
  private brushOrigin: { metric: string; x: number; svg: SVGSVGElement; scale: ReturnType<typeof linearScale>; rect: SVGRectElement } | null = null;

  constructor(private root: HTMLElement, private callbacks: MetricReadingCallbacks) {}

  render(
    contributions: ContributionsPayload | null,
    seriesByMetric: Map<string, SeriesPayload[]>,
    rawByMetric: Map<string, RawPayload>,
    baselines: Map<string, BaselinePayload>,
    window: [number, number] | null,
    picked: string[],
    smooth: number | undefined,
  ): void {
    clear(this.root);
    this.root.appendChild(el("h3", "fs-view-title", "Metric Reading"));
    if (!contributions) {
      emptyState(this.root, "run an analysis to rank metrics");
      return;
    }
    this.picked = new Set(picked);
    this.root.appendChild(this.smoothControl(smooth));

    const maxWeight = Math.max(
      1e-9,
      ...contributions.clusters.flatMap((c) => c.weights.map(Math.abs)),
    );
    const list = el("div", "fs-metric-list");
    for (const metric of contributions.ranking) {
      const index = contributions.metrics.indexOf(metric);
      const row = el("div", "fs-metric-row");
      row.dataset.metric = metric;
      row.appendChild(this.pickBox(metric));
      row.appendChild(el("span", "fs-metric-name", metric));
      row.appendChild(this.bars(contributions, index, maxWeight));
      list.appendChild(row);

      if (this.picked.has(metric)) {
        row.appendChild(
          this.seriesPanel(
            metric,
            seriesByMetric.get(metric) ?? [],
            rawByMetric.get(metric) ?? null,
            baselines.get(metric) ?? null,
            window,
          ),
        );
      }
    }
    this.root.appendChild(list);
  }

  /** Exactly one raw series carries the emphasis class at a time. */
  emphasize(metric: string, node: string): void {
    this.clearEmphasis();
    const selector = `.fs-raw-series[data-metric="${metric}"][data-node="${node}"]`;
    const path = this.root.querySelector(selector);
    if (!path) return;
    path.classList.add("fs-emphasized");
    path.setAttribute("stroke-width", "2.5");
    const band = this.root.querySelector(`.fs-baseline-band[data-metric="${metric}"]`);
    band?.classList.add("fs-band-active");
  }

  clearEmphasis(): void {
    for (const path of this.root.querySelectorAll(".fs-emphasized")) {
      path.classList.remove("fs-emphasized");
      path.setAttribute("stroke-width", "1");
    }
    for (const band of this.root.querySelectorAll(".fs-band-active")) {
      band.classList.remove("fs-band-active");
    }
  }

  private pickBox(metric: string): HTMLElement {
    const box = el("input", "fs-metric-pick") as HTMLInputElement;
    box.type = "checkbox";
    box.checked = this.picked.has(metric);
    box.dataset.metric = metric;
    box.addEventListener("change", () => {
      if (box.checked) this.picked.add(metric);
      else this.picked.delete(metric);
      this.callbacks.onPick([...this.picked]);
    });
    return box;
  }

  private bars(contributions: ContributionsPayload, index: number, maxWeight: number): SVGSVGElement {
    const height = contributions.clusters.length * (BAR_HEIGHT + 2);
    const svg = svgEl("svg", {
      class: "fs-contrib-bars",
      viewBox: `0 0 ${BAR_WIDTH} ${height}`,
      width: BAR_WIDTH,
      height,
    });
    const center = BAR_WIDTH / 2;
    const half = linearScale([0, maxWeight], [0, center - 4]);
    svg.appendChild(
      svgEl("line", {
        class: "fs-contrib-axis",
        x1: center,
        x2: center,
        y1: 0,
        y2: height,
        stroke: "#999999",
      }),
    );
    contributions.clusters.forEach((cluster, row) => {
      const weight = cluster.weights[index] ?? 0;
      const length = half(Math.abs(weight));
      // Positive weight (cluster runs higher) extends left of the axis.
      const bar = svgEl("rect", {
        class: "fs-contrib-bar",
        x: weight >= 0 ? center - length : center,
        y: row * (BAR_HEIGHT + 2),
        width: Math.max(length, 0.5),
        height: BAR_HEIGHT,
        fill: clusterColor(cluster.id),
        "data-cluster": String(cluster.id),
        "data-sign": weight >= 0 ? "positive" : "negative",
      });
      const title = svgEl("title");
      title.textContent = `cluster ${cluster.id}: ${weight.toFixed(4)}`;
      bar.appendChild(title);
      svg.appendChild(bar);
    });
    return svg;
  }

  private seriesPanel(
    metric: string,
    averages: SeriesPayload[],
    raw: RawPayload | null,
    baseline: BaselinePayload | null,
    window: [number, number] | null,
  ): HTMLElement {
    const panel = el("div", "fs-series-panel");
    panel.dataset.metric = metric;
    const svg = svgEl("svg", {
      class: "fs-series",
      viewBox: `0 0 ${SERIES_WIDTH} ${SERIES_HEIGHT}`,
      width: SERIES_WIDTH,
      height: SERIES_HEIGHT,
      "data-metric": metric,
    });

    const allT = averages.flatMap((s) => s.t).concat(raw ? raw.t : []);
    const inWindow = (t: number) => !window || (t >= window[0] && t <= window[1]);
    const shownT = allT.filter(inWindow);
    const span = extent(shownT.length ? shownT : allT);
    const x = linearScale(span, [PAD, SERIES_WIDTH - PAD]);

    const values: number[] = [];
    for (const s of averages) s.t.forEach((t, i) => inWindow(t) && values.push(s.v[i]));
    if (raw) {
      for (const vs of Object.values(raw.series)) {
        raw.t.forEach((t, i) => {
          const v = vs[i];
          if (v !== null && inWindow(t)) values.push(v);
        });
      }
    }
    const y = linearScale(extent(values), [SERIES_HEIGHT - PAD, PAD]);

    if (baseline) {
      const lo = Math.max(baseline.t_start, span[0]);
      const hi = Math.min(baseline.t_end, span[1]);
      if (hi >= lo) {
        svg.appendChild(
          svgEl("rect", {
            class: "fs-baseline-band",
            x: x(lo),
            y: PAD,
            width: Math.max(1, x(hi) - x(lo)),
            height: SERIES_HEIGHT - 2 * PAD,
            fill: "#59a14f",
            "fill-opacity": "0.15",
            "data-metric": metric,
            "data-source": baseline.source,
          }),
        );
      }
    }

    if (raw) {
      for (const [node, vs] of Object.entries(raw.series)) {
        const masked = raw.t.map((t, i) => (inWindow(t) ? vs[i] : null));
        svg.appendChild(
          svgEl("path", {
            class: "fs-raw-series",
            d: pathFrom(raw.t, masked, x, y),
            fill: "none",
            stroke: "#bbbbbb",
            "stroke-width": "1",
            "data-node": node,
            "data-metric": metric,
          }),
        );
      }
    }

    for (const s of averages) {
      const masked = s.t.map((t, i) => (inWindow(t) ? s.v[i] : null));
      svg.appendChild(
        svgEl("path", {
          class: "fs-avg-line",
          d: pathFrom(s.t, masked, x, y),
          fill: "none",
          stroke: clusterColor(s.cluster),
          "stroke-width": "1.5",
          "data-cluster": String(s.cluster),
          "data-metric": metric,
        }),
      );
    }

    svg.addEventListener("pointerdown", (event) => {
      const box = svg.getBoundingClientRect();
      const rect = svgEl("rect", {
        class: "fs-baseline-brush",
        y: PAD,
        height: SERIES_HEIGHT - 2 * PAD,
        fill: "#59a14f",
        "fill-opacity": "0.25",
      });
      svg.appendChild(rect);
      this.brushOrigin = { metric, x: event.clientX - box.left, svg, scale: x, rect };
    });
    svg.addEventListener("pointermove", (event) => {
      const origin = this.brushOrigin;
      if (!origin || origin.svg !== svg) return;
      const box = svg.getBoundingClientRect();
      const here = event.clientX - box.left;
      origin.rect.setAttribute("x", String(Math.min(origin.x, here)));
      origin.rect.setAttribute("width", String(Math.abs(here - origin.x)));
    });
    svg.addEventListener("pointerup", (event) => {
      const origin = this.brushOrigin;
      if (!origin || origin.svg !== svg) return;
      this.brushOrigin = null;
      origin.rect.remove();
      const box = svg.getBoundingClientRect();
      const here = event.clientX - box.left;
      if (Math.abs(here - origin.x) < 3) return;
      const lo = origin.scale.invert(Math.min(origin.x, here));
      const hi = origin.scale.invert(Math.max(origin.x, here));
      this.callbacks.onBaselineBrush(metric, [lo, hi]);
    });

    return panel.appendChild(svg), panel;
  }

  private smoothControl(smooth: number | undefined): HTMLElement {
    const bar = el("div", "fs-controls");
    const label = el("label", "fs-smooth-label", "smoothing ");
    const input = el("input", "fs-smooth") as HTMLInputElement;
    input.type = "number";
    input.min = "1";
    input.placeholder = "server default";
    if (smooth !== undefined) input.value = String(smooth);
    input.addEventListener("change", () => {
      const value = Number(input.value);
      this.callbacks.onSmooth(input.value === "" || !Number.isFinite(value) ? undefined : value);
    });
    label.appendChild(input);
    bar.appendChild(label);
    return bar;
  }
}
