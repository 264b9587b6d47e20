/** Minimal SVG chart scaffolding: scales, axes, lines, bands, and bars.
 * Charts are plain strings, so rendering is deterministic and dependency
 * free. */

export interface Frame {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
}

export const DEFAULT_FRAME: Frame = {
  width: 640,
  height: 420,
  margin: { top: 40, right: 140, bottom: 52, left: 64 },
};

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
];

export interface LinearScale {
  (value: number): number;
  domain: [number, number];
}

export function linearScale(
  domain: [number, number],
  range: [number, number]
): LinearScale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const scale = ((value: number) =>
    r0 + ((value - d0) / span) * (r1 - r0)) as LinearScale;
  scale.domain = domain;
  return scale;
}

export function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) return [lo];
  const step = Math.pow(10, Math.floor(Math.log10((hi - lo) / count)));
  const err = (count * step) / (hi - lo);
  const factor = err <= 0.15 ? 10 : err <= 0.35 ? 5 : err <= 0.75 ? 2 : 1;
  const s = step * factor;
  const start = Math.ceil(lo / s) * s;
  const ticks: number[] = [];
  for (let v = start; v <= hi + 1e-9; v += s) ticks.push(Number(v.toFixed(10)));
  return ticks;
}

export function fmt(value: number): string {
  if (Number.isInteger(value)) return String(value);
  return value.toPrecision(3);
}

export function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function polyline(
  points: Array<[number, number]>,
  stroke: string,
  width = 2
): string {
  const d = points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
  return `<polyline fill="none" stroke="${stroke}" stroke-width="${width}" points="${d}"/>`;
}

/** Shaded mean+-se band: top edge left-to-right, bottom edge back. */
export function band(
  upper: Array<[number, number]>,
  lower: Array<[number, number]>,
  fill: string
): string {
  const path = [...upper, ...lower.slice().reverse()]
    .map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`)
    .join(" ");
  return `<polygon fill="${fill}" fill-opacity="0.18" stroke="none" points="${path}"/>`;
}

export function text(
  x: number,
  y: number,
  content: string,
  opts: { size?: number; anchor?: string; rotate?: boolean } = {}
): string {
  const size = opts.size ?? 12;
  const anchor = opts.anchor ?? "start";
  const transform = opts.rotate ? ` transform="rotate(-90 ${x} ${y})"` : "";
  return (
    `<text x="${x.toFixed(1)}" y="${y.toFixed(1)}" font-size="${size}" ` +
    `font-family="sans-serif" text-anchor="${anchor}"${transform}>` +
    `${escapeXml(content)}</text>`
  );
}

export interface AxisSpec {
  frame: Frame;
  xScale: LinearScale;
  yScale: LinearScale;
  xLabel: string;
  yLabel: string;
  xTicks?: number[];
  yTicks?: number[];
}

export function axes(spec: AxisSpec): string {
  const { frame, xScale, yScale, xLabel, yLabel } = spec;
  const { margin, width, height } = frame;
  const x0 = margin.left;
  const x1 = width - margin.right;
  const y0 = height - margin.bottom;
  const y1 = margin.top;
  const parts: string[] = [];
  parts.push(
    `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="#333"/>`,
    `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="#333"/>`
  );
  const xTicks = spec.xTicks ?? niceTicks(xScale.domain[0], xScale.domain[1]);
  for (const tick of xTicks) {
    const px = xScale(tick);
    parts.push(
      `<line x1="${px.toFixed(1)}" y1="${y0}" x2="${px.toFixed(1)}" y2="${y0 + 5}" stroke="#333"/>`,
      text(px, y0 + 18, fmt(tick), { anchor: "middle", size: 11 })
    );
  }
  const yTicks = spec.yTicks ?? niceTicks(yScale.domain[0], yScale.domain[1]);
  for (const tick of yTicks) {
    const py = yScale(tick);
    parts.push(
      `<line x1="${x0 - 5}" y1="${py.toFixed(1)}" x2="${x0}" y2="${py.toFixed(1)}" stroke="#333"/>`,
      text(x0 - 8, py + 4, fmt(tick), { anchor: "end", size: 11 })
    );
  }
  parts.push(
    text((x0 + x1) / 2, height - 12, xLabel, { anchor: "middle" }),
    text(18, (y0 + y1) / 2, yLabel, { anchor: "middle", rotate: true })
  );
  return parts.join("\n");
}

export function document(frame: Frame, title: string, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${frame.width}" ` +
    `height="${frame.height}" viewBox="0 0 ${frame.width} ${frame.height}">\n` +
    `<rect width="100%" height="100%" fill="white"/>\n` +
    text(frame.width / 2, 22, title, { anchor: "middle", size: 15 }) +
    "\n" +
    body +
    "\n</svg>\n"
  );
}

export function legend(
  frame: Frame,
  entries: Array<{ label: string; color: string }>
): string {
  const x = frame.width - frame.margin.right + 12;
  let y = frame.margin.top + 6;
  const parts: string[] = [];
  for (const { label, color } of entries) {
    parts.push(
      `<rect x="${x}" y="${y - 9}" width="12" height="12" fill="${color}"/>`,
      text(x + 17, y + 2, label, { size: 11 })
    );
    y += 20;
  }
  return parts.join("\n");
}
