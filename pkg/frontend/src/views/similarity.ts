/**
 * Node Similarity view: the 2-d embedding as a scatter colored by cluster
 * label, with lasso selection and editable k / neighborhood controls.
 */

import { clear, el, emptyState, svgEl } from "../dom.js";
import { LassoController, pointInPolygon } from "../lasso.js";
import { clusterColor, extent, linearScale } from "../scales.js";
import type { EmbeddingPayload } from "../types.js";

const WIDTH = 420;
const HEIGHT = 360;
const PAD = 18;

export interface SimilarityCallbacks {
  onLasso: (nodes: string[]) => void;
  onParams: (params: { k?: number; nNeighbors?: number; minDist?: number }) => void;
}

export class SimilarityView {
  private positions: { node: string; x: number; y: number }[] = [];

  constructor(private root: HTMLElement, private callbacks: SimilarityCallbacks) {}

  render(embedding: EmbeddingPayload | null, nodes: string[], selected: string[], k: number): void {
    clear(this.root);
    this.root.appendChild(el("h3", "fs-view-title", "Node Similarity"));
    if (!embedding || !embedding.coords.length) {
      emptyState(this.root, "run an analysis to see the embedding");
      return;
    }

    const svg = svgEl("svg", {
      class: "fs-similarity",
      viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
      width: WIDTH,
      height: HEIGHT,
    });
    const x = linearScale(extent(embedding.coords.map((c) => c[0])), [PAD, WIDTH - PAD]);
    const y = linearScale(extent(embedding.coords.map((c) => c[1])), [HEIGHT - PAD, PAD]);
    const chosen = new Set(selected);

    this.positions = [];
    embedding.coords.forEach(([cx, cy], i) => {
      const node = nodes[i] ?? String(i);
      const label = embedding.labels ? embedding.labels[i] : null;
      const px = x(cx);
      const py = y(cy);
      this.positions.push({ node, x: px, y: py });
      const mark = svgEl("circle", {
        class: chosen.size && chosen.has(node) ? "fs-node fs-node-selected" : "fs-node",
        cx: px,
        cy: py,
        r: chosen.has(node) ? 5 : 3.5,
        fill: clusterColor(label),
        "fill-opacity": chosen.size && !chosen.has(node) ? "0.25" : "0.9",
        "data-node": node,
        "data-cluster": label === null ? "" : String(label),
      });
      svg.appendChild(mark);
    });

    if (embedding.centroids) {
      embedding.centroids.forEach(([cx, cy], i) => {
        svg.appendChild(
          svgEl("path", {
            class: "fs-centroid",
            d: `M${x(cx) - 4},${y(cy)}L${x(cx) + 4},${y(cy)}M${x(cx)},${y(cy) - 4}L${x(cx)},${y(cy) + 4}`,
            stroke: clusterColor(i),
            "stroke-width": "2",
          }),
        );
      });
    }

    new LassoController(svg, (polygon) => {
      const caught = this.positions
        .filter((p) => pointInPolygon([p.x, p.y], polygon))
        .map((p) => p.node);
      this.callbacks.onLasso(caught);
    });

    this.root.appendChild(svg);
    this.root.appendChild(this.controls(k));
  }

  /** Hit-test a polygon against current mark positions (lasso core). */
  nodesInPolygon(polygon: [number, number][]): string[] {
    return this.positions
      .filter((p) => pointInPolygon([p.x, p.y], polygon))
      .map((p) => p.node);
  }

  showEmptyLassoHint(): void {
    if (this.root.querySelector(".fs-lasso-hint")) return;
    this.root.appendChild(el("div", "fs-lasso-hint", "lasso caught no nodes; selection unchanged"));
  }

  clearLassoHint(): void {
    this.root.querySelector(".fs-lasso-hint")?.remove();
  }

  private controls(k: number): HTMLElement {
    const bar = el("div", "fs-controls");
    const label = el("label", "fs-k-label", "k ");
    const input = el("input", "fs-k") as HTMLInputElement;
    input.type = "number";
    input.min = "1";
    input.value = String(k);
    input.addEventListener("change", () => {
      const value = Number(input.value);
      if (Number.isFinite(value) && value >= 1) {
        this.callbacks.onParams({ k: Math.round(value) });
      }
    });
    label.appendChild(input);
    bar.appendChild(label);
    return bar;
  }
}
