/**
 * Node Behavior view: the metrics-by-nodes z-score heatmap on a diverging
 * scale centered at zero. Hovering a cell links into the Metric Reading
 * view so the raw readings behind the score can be validated.
 */

import { clear, el, emptyState, svgEl } from "../dom.js";
import { divergingColor } from "../scales.js";
import type { HeatmapCell, ZScoreMatrixPayload } from "../types.js";

const CELL = 26;
const LABEL_W = 84;
const LABEL_H = 16;

export class NodeBehaviorView {
  constructor(
    private root: HTMLElement,
    private onHover: (cell: HeatmapCell | null) => void,
  ) {}

  render(matrix: ZScoreMatrixPayload | null): void {
    clear(this.root);
    this.root.appendChild(el("h3", "fs-view-title", "Node Behavior"));
    if (!matrix || !matrix.metrics.length || !matrix.nodes.length) {
      emptyState(this.root, "select nodes to score against their baselines");
      return;
    }

    const width = LABEL_W + matrix.nodes.length * CELL;
    const height = LABEL_H + matrix.metrics.length * CELL;
    const svg = svgEl("svg", {
      class: "fs-heatmap",
      viewBox: `0 0 ${width} ${height}`,
      width,
      height,
    });

    matrix.nodes.forEach((node, j) => {
      const tick = svgEl("text", {
        class: "fs-heatmap-col",
        x: LABEL_W + j * CELL + CELL / 2,
        y: LABEL_H - 4,
        "text-anchor": "middle",
        "font-size": "9",
      });
      tick.textContent = node;
      svg.appendChild(tick);
    });

    matrix.metrics.forEach((metric, i) => {
      const tick = svgEl("text", {
        class: "fs-heatmap-row",
        x: LABEL_W - 6,
        y: LABEL_H + i * CELL + CELL / 2 + 3,
        "text-anchor": "end",
        "font-size": "10",
      });
      tick.textContent = metric;
      svg.appendChild(tick);

      matrix.nodes.forEach((node, j) => {
        const z = matrix.z[i][j];
        const cell = svgEl("rect", {
          class: "fs-z-cell",
          x: LABEL_W + j * CELL,
          y: LABEL_H + i * CELL,
          width: CELL - 1,
          height: CELL - 1,
          fill: divergingColor(z),
          "data-metric": metric,
          "data-node": node,
          "data-z": z.toFixed(3),
        });
        const title = svgEl("title");
        title.textContent = `${metric} / ${node}: z = ${z.toFixed(2)}`;
        cell.appendChild(title);
        cell.addEventListener("mouseenter", () => this.onHover({ metric, node }));
        cell.addEventListener("mouseleave", () => this.onHover(null));
        svg.appendChild(cell);
      });
    });

    this.root.appendChild(svg);
  }
}
