/**
 * Time Domain view: stacked bars of all-metric-null node counts per
 * timestamp, colored by the nodes' cluster labels. Dragging across the
 * strip brushes the active time window for the series plots.
 */

import { clear, el, emptyState, svgEl } from "../dom.js";
import { clusterColor, linearScale } from "../scales.js";
import type { NullActivityEntry } from "../types.js";

const WIDTH = 640;
const HEIGHT = 120;
const MARGIN = { left: 6, right: 6, top: 8, bottom: 16 };

export class TimeDomainView {
  private svg: SVGSVGElement | null = null;
  private brushRect: SVGRectElement | null = null;
  private dragStart: number | null = null;
  private timeOf = linearScale([0, 1], [0, 1]);

  constructor(
    private root: HTMLElement,
    private onBrush: (window: [number, number] | null) => void,
  ) {}

  render(activity: NullActivityEntry[], span: [number, number], window: [number, number] | null): void {
    clear(this.root);
    this.root.appendChild(el("h3", "fs-view-title", "Time Domain"));
    if (!activity.length && span[0] === span[1]) {
      emptyState(this.root, "no dataset loaded");
      return;
    }

    const svg = svgEl("svg", {
      class: "fs-timedomain",
      viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
      width: WIDTH,
      height: HEIGHT,
    });
    const x = linearScale(span, [MARGIN.left, WIDTH - MARGIN.right]);
    this.timeOf = x;
    const maxCount = Math.max(1, ...activity.map((entry) => entry.nodes.length));
    const y = linearScale([0, maxCount], [HEIGHT - MARGIN.bottom, MARGIN.top]);
    const slot = activity.length > 1 ? (x.range[1] - x.range[0]) / activity.length : 8;
    const barWidth = Math.max(1, slot * 0.8);

    for (const entry of activity) {
      let stacked = 0;
      for (const item of entry.nodes) {
        const bar = svgEl("rect", {
          class: "fs-null-bar",
          x: x(entry.t) - barWidth / 2,
          y: y(stacked + 1),
          width: barWidth,
          height: Math.max(1, y(stacked) - y(stacked + 1)),
          fill: clusterColor(item.cluster),
          "data-node": item.node,
          "data-t": entry.t,
        });
        svg.appendChild(bar);
        stacked += 1;
      }
    }

    const axis = svgEl("line", {
      x1: MARGIN.left,
      x2: WIDTH - MARGIN.right,
      y1: HEIGHT - MARGIN.bottom,
      y2: HEIGHT - MARGIN.bottom,
      stroke: "#999999",
    });
    svg.appendChild(axis);

    this.brushRect = svgEl("rect", {
      class: "fs-time-brush",
      y: MARGIN.top,
      height: HEIGHT - MARGIN.top - MARGIN.bottom,
      fill: "#4e79a7",
      "fill-opacity": "0.15",
      stroke: "#4e79a7",
    });
    if (window) {
      this.placeBrush(window);
      svg.appendChild(this.brushRect);
    }

    svg.addEventListener("pointerdown", this.startBrush);
    svg.addEventListener("pointermove", this.moveBrush);
    svg.addEventListener("pointerup", this.endBrush);
    this.svg = svg;
    this.root.appendChild(svg);
  }

  private localX(event: PointerEvent): number {
    const box = this.svg!.getBoundingClientRect();
    return event.clientX - box.left;
  }

  private startBrush = (event: PointerEvent) => {
    this.dragStart = this.localX(event);
  };

  private moveBrush = (event: PointerEvent) => {
    if (this.dragStart === null || !this.brushRect || !this.svg) return;
    const here = this.localX(event);
    this.brushRect.setAttribute("x", String(Math.min(this.dragStart, here)));
    this.brushRect.setAttribute("width", String(Math.abs(here - this.dragStart)));
    if (!this.brushRect.parentNode) this.svg.appendChild(this.brushRect);
  };

  private endBrush = (event: PointerEvent) => {
    if (this.dragStart === null) return;
    const start = this.dragStart;
    this.dragStart = null;
    const end = this.localX(event);
    if (Math.abs(end - start) < 3) {
      // A click clears the brush back to the full range.
      this.brushRect?.remove();
      this.onBrush(null);
      return;
    }
    const lo = this.timeOf.invert(Math.min(start, end));
    const hi = this.timeOf.invert(Math.max(start, end));
    this.onBrush([lo, hi]);
  };

  private placeBrush(window: [number, number]): void {
    if (!this.brushRect) return;
    const x0 = this.timeOf(window[0]);
    const x1 = this.timeOf(window[1]);
    this.brushRect.setAttribute("x", String(Math.min(x0, x1)));
    this.brushRect.setAttribute("width", String(Math.abs(x1 - x0)));
  }
}
