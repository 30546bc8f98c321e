/** Scale and palette helpers shared by the view renderers. */

export interface LinearScale {
  (value: number): number;
  domain: [number, number];
  range: [number, number];
  invert(value: number): number;
}

export function linearScale(domain: [number, number], range: [number, number]): LinearScale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const scale = ((value: number) => r0 + ((value - d0) / span) * (r1 - r0)) as LinearScale;
  scale.domain = domain;
  scale.range = range;
  scale.invert = (value: number) => d0 + ((value - r0) / (r1 - r0 || 1)) * span;
  return scale;
}

export function extent(values: Iterable<number>): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (!Number.isFinite(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo > hi) return [0, 1];
  return [lo, hi];
}

/** Categorical palette for cluster labels (wraps after ten). */
const CLUSTER_COLORS = [
  "#4e79a7",
  "#f28e2b",
  "#59a14f",
  "#e15759",
  "#b07aa1",
  "#76b7b2",
  "#edc948",
  "#ff9da7",
  "#9c755f",
  "#bab0ac",
];

export function clusterColor(label: number | null): string {
  if (label === null || label < 0) return "#cccccc";
  return CLUSTER_COLORS[label % CLUSTER_COLORS.length];
}

/** Saturation bound of the diverging z scale; beyond this the color pins. */
export const Z_CLAMP = 5;

const NEGATIVE: [number, number, number] = [33, 102, 172];
const NEUTRAL: [number, number, number] = [247, 247, 247];
const POSITIVE: [number, number, number] = [178, 24, 43];

function lerp(a: [number, number, number], b: [number, number, number], t: number): string {
  const channel = (i: number) => Math.round(a[i] + (b[i] - a[i]) * t);
  return `rgb(${channel(0)}, ${channel(1)}, ${channel(2)})`;
}

/** Diverging blue-white-red scale centered at z = 0, clamped at |z| = 5. */
export function divergingColor(z: number): string {
  if (!Number.isFinite(z)) return "#999999";
  const clamped = Math.max(-Z_CLAMP, Math.min(Z_CLAMP, z));
  const t = Math.abs(clamped) / Z_CLAMP;
  return clamped < 0 ? lerp(NEUTRAL, NEGATIVE, t) : lerp(NEUTRAL, POSITIVE, t);
}
