/** Tiny DOM builders; all views render through these. */

const SVG_NS = "http://www.w3.org/2000/svg";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number> = {},
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, String(value));
  }
  return node;
}

export function clear(node: Element): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

export function emptyState(root: Element, message: string): void {
  root.appendChild(el("div", "fs-empty", message));
}

/** Polyline path string over (t, v) pairs, skipping null gaps. */
export function pathFrom(
  t: number[],
  v: (number | null)[],
  x: (value: number) => number,
  y: (value: number) => number,
): string {
  const parts: string[] = [];
  let pen = false;
  for (let i = 0; i < t.length; i++) {
    const value = v[i];
    if (value === null || value === undefined || !Number.isFinite(value)) {
      pen = false;
      continue;
    }
    parts.push(`${pen ? "L" : "M"}${x(t[i]).toFixed(2)},${y(value).toFixed(2)}`);
    pen = true;
  }
  return parts.join("");
}
