/**
 * Minimal deterministic SVG assembly: linear scales, nice ticks, and the
 * handful of elements the figures need. No clock, no randomness; equal
 * inputs give byte-equal output.
 */

export type Scale = (v: number) => number;

export function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

/** Tick positions at 1/2/5 times a power of ten covering [lo, hi]. */
export function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) {
    return [lo];
  }
  const step0 = (hi - lo) / Math.max(1, count);
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  const norm = step0 / mag;
  const unit = norm <= 1 ? 1 : norm <= 2 ? 2 : norm <= 5 ? 5 : 10;
  const step = unit * mag;
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let k = 0; start + k * step <= hi + 1e-9 * step; k++) {
    out.push(start + k * step);
  }
  return out;
}

export function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e5 || a < 1e-4) {
    return v.toExponential(1);
  }
  const s = v.toPrecision(6);
  return s.includes(".") ? s.replace(/\.?0+$/, "") : s;
}

export function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

const px = (v: number) => v.toFixed(2);

export function polyline(points: Array<[number, number]>, attrs: string): string {
  const joined = points.map(([x, y]) => `${px(x)},${px(y)}`).join(" ");
  return `<polyline fill="none" ${attrs} points="${joined}"/>`;
}

export function line(x1: number, y1: number, x2: number, y2: number, attrs: string): string {
  return `<line x1="${px(x1)}" y1="${px(y1)}" x2="${px(x2)}" y2="${px(y2)}" ${attrs}/>`;
}

export function text(x: number, y: number, s: string, attrs: string): string {
  return `<text x="${px(x)}" y="${px(y)}" ${attrs}>${escapeXml(s)}</text>`;
}

export interface Frame {
  left: number;
  top: number;
  width: number;
  height: number;
  xlim: [number, number];
  ylim: [number, number];
}

/** Axis box with ticks and labels; returns the markup and the two scales. */
export function frameAxes(f: Frame): { parts: string[]; sx: Scale; sy: Scale } {
  const sx = linearScale(f.xlim[0], f.xlim[1], f.left, f.left + f.width);
  const sy = linearScale(f.ylim[0], f.ylim[1], f.top + f.height, f.top);
  const parts: string[] = [];
  const axis = 'stroke="#333333" stroke-width="1"';
  const grid = 'stroke="#dddddd" stroke-width="0.5"';
  const label = 'font-family="Helvetica, Arial, sans-serif" font-size="10" fill="#333333"';
  for (const v of niceTicks(f.xlim[0], f.xlim[1])) {
    const x = sx(v);
    parts.push(line(x, f.top, x, f.top + f.height, grid));
    parts.push(line(x, f.top + f.height, x, f.top + f.height + 4, axis));
    parts.push(text(x, f.top + f.height + 14, fmtTick(v), `${label} text-anchor="middle"`));
  }
  for (const v of niceTicks(f.ylim[0], f.ylim[1])) {
    const y = sy(v);
    parts.push(line(f.left, y, f.left + f.width, y, grid));
    parts.push(line(f.left - 4, y, f.left, y, axis));
    parts.push(text(f.left - 6, y + 3, fmtTick(v), `${label} text-anchor="end"`));
  }
  parts.push(
    `<rect x="${px(f.left)}" y="${px(f.top)}" width="${px(f.width)}" ` +
    `height="${px(f.height)}" fill="none" ${axis}/>`);
  return { parts, sx, sy };
}

export function document(width: number, height: number, body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">`,
    `<rect x="0" y="0" width="${width}" height="${height}" fill="#ffffff"/>`,
    ...body,
    "</svg>",
    "",
  ].join("\n");
}
