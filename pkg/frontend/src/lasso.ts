/** Freehand lasso capture on an SVG surface. */

export type Point = [number, number];

/** Ray-cast point-in-polygon test in the surface's coordinate space. */
export function pointInPolygon(point: Point, polygon: Point[]): boolean {
  if (polygon.length < 3) return false;
  const [x, y] = point;
  let inside = false;
  for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
    const [xi, yi] = polygon[i];
    const [xj, yj] = polygon[j];
    const crosses =
      yi > y !== yj > y && x < ((xj - xi) * (y - yi)) / (yj - yi || 1e-12) + xi;
    if (crosses) inside = !inside;
  }
  return inside;
}

/**
 * Collects a polygon from pointer drags and hands it to the callback.
 * Coordinates are relative to the surface's bounding box, matching the
 * coordinate space the scatter positions its marks in.
 */
export class LassoController {
  private polygon: Point[] = [];
  private active = false;
  private trail: SVGPolylineElement;

  constructor(
    private surface: SVGSVGElement,
    private onComplete: (polygon: Point[]) => void,
  ) {
    this.trail = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
    this.trail.setAttribute("class", "fs-lasso-trail");
    this.trail.setAttribute("fill", "none");
    this.trail.setAttribute("stroke", "#555555");
    this.trail.setAttribute("stroke-dasharray", "4 3");
    surface.addEventListener("pointerdown", this.start);
    surface.addEventListener("pointermove", this.extend);
    surface.addEventListener("pointerup", this.finish);
  }

  private localPoint(event: PointerEvent): Point {
    const box = this.surface.getBoundingClientRect();
    return [event.clientX - box.left, event.clientY - box.top];
  }

  private start = (event: PointerEvent) => {
    this.active = true;
    this.polygon = [this.localPoint(event)];
    this.surface.appendChild(this.trail);
    this.redraw();
  };

  private extend = (event: PointerEvent) => {
    if (!this.active) return;
    this.polygon.push(this.localPoint(event));
    this.redraw();
  };

  private finish = () => {
    if (!this.active) return;
    this.active = false;
    this.trail.remove();
    const polygon = this.polygon;
    this.polygon = [];
    this.onComplete(polygon);
  };

  private redraw(): void {
    this.trail.setAttribute("points", this.polygon.map(([x, y]) => `${x},${y}`).join(" "));
  }
}
