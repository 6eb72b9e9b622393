import type { SeriesView } from "./view.js";

/** Hand-rolled SVG line chart.
 *
 * Pure string generation: no DOM, no chart library, so the whole render
 * path is unit-testable in Node and the page just assigns innerHTML.
 */

export interface ChartOptions {
  width?: number;
  height?: number;
  yLabel?: string;
  /** Axis-unit factor applied to y values (e.g. per-100K). */
  yFactor?: number;
  /** ISO date where training data ends; drawn as a dashed divider. */
  trainEnd?: string | null;
}

const MARGIN = { top: 12, right: 16, bottom: 28, left: 52 };

export function dayNumber(iso: string): number {
  return Date.parse(`${iso}T00:00:00Z`) / 86_400_000;
}

export interface Scale {
  (value: number): number;
  readonly domain: [number, number];
}

export function linearScale(
  domain: [number, number],
  range: [number, number],
): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const fn = (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
  return Object.assign(fn, { domain }) as Scale;
}

export function linePath(xs: number[], ys: number[]): string {
  const parts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    parts.push(`${i === 0 ? "M" : "L"}${xs[i].toFixed(1)},${ys[i].toFixed(1)}`);
  }
  return parts.join("");
}

/** Closed path tracing the upper edge forward and the lower edge back. */
export function bandPath(xs: number[], lo: number[], hi: number[]): string {
  if (xs.length === 0) return "";
  const fwd = linePath(xs, hi);
  const back: string[] = [];
  for (let i = xs.length - 1; i >= 0; i--) {
    back.push(`L${xs[i].toFixed(1)},${lo[i].toFixed(1)}`);
  }
  return `${fwd}${back.join("")}Z`;
}

function ticks(lo: number, hi: number, count: number): number[] {
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = span / (count * step);
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const out: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-9; v += s) {
    out.push(v);
  }
  return out;
}

function fmt(v: number): string {
  if (Math.abs(v) >= 1000) return `${(v / 1000).toFixed(v % 1000 ? 1 : 0)}k`;
  if (Math.abs(v) >= 10 || v === 0) return v.toFixed(0);
  return v.toPrecision(2);
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function chartSvg(series: SeriesView[], opts: ChartOptions = {}): string {
  const width = opts.width ?? 720;
  const height = opts.height ?? 300;
  const factor = opts.yFactor ?? 1;
  if (series.length === 0) {
    return `<svg viewBox="0 0 ${width} ${height}" role="img"></svg>`;
  }

  let dayLo = Infinity;
  let dayHi = -Infinity;
  let yHi = 0;
  for (const s of series) {
    if (s.dates.length === 0) continue;
    dayLo = Math.min(dayLo, dayNumber(s.dates[0]));
    dayHi = Math.max(dayHi, dayNumber(s.dates[s.dates.length - 1]));
    const tops = s.showInterval ? s.band.upper : s.band.central;
    for (const v of tops) yHi = Math.max(yHi, v * factor);
  }
  const x = linearScale([dayLo, dayHi], [MARGIN.left, width - MARGIN.right]);
  const y = linearScale([0, yHi || 1], [height - MARGIN.bottom, MARGIN.top]);

  const parts: string[] = [
    `<svg viewBox="0 0 ${width} ${height}" role="img" ` +
    `preserveAspectRatio="xMidYMid meet">`,
  ];

  for (const tv of ticks(0, yHi || 1, 5)) {
    const py = y(tv).toFixed(1);
    parts.push(
      `<line class="grid" x1="${MARGIN.left}" y1="${py}" ` +
      `x2="${width - MARGIN.right}" y2="${py}"/>`,
      `<text class="tick" x="${MARGIN.left - 6}" y="${py}" ` +
      `text-anchor="end" dominant-baseline="middle">${fmt(tv)}</text>`,
    );
  }
  const nDateTicks = Math.min(6, Math.max(2, Math.floor(width / 120)));
  for (let i = 0; i < nDateTicks; i++) {
    const day = dayLo + ((dayHi - dayLo) * i) / (nDateTicks - 1);
    const iso = new Date(day * 86_400_000).toISOString().slice(5, 10);
    const px = x(day).toFixed(1);
    parts.push(
      `<text class="tick" x="${px}" y="${height - 8}" ` +
      `text-anchor="middle">${iso}</text>`,
    );
  }
  if (opts.yLabel) {
    parts.push(
      `<text class="axis-label" x="8" y="${MARGIN.top}" ` +
      `dominant-baseline="hanging">${esc(opts.yLabel)}</text>`,
    );
  }

  if (opts.trainEnd) {
    const px = x(dayNumber(opts.trainEnd)).toFixed(1);
    parts.push(
      `<line class="divider" x1="${px}" y1="${MARGIN.top}" ` +
      `x2="${px}" y2="${height - MARGIN.bottom}" stroke-dasharray="4 3"/>`,
    );
  }

  for (const s of series) {
    const xs = s.dates.map((d) => x(dayNumber(d)));
    if (s.showInterval) {
      const lo = s.band.lower.map((v) => y(v * factor));
      const hi = s.band.upper.map((v) => y(v * factor));
      parts.push(
        `<path class="interval" d="${bandPath(xs, lo, hi)}" ` +
        `fill="${s.color}" fill-opacity="0.15" stroke="none"/>`,
      );
    }
    const ys = s.band.central.map((v) => y(v * factor));
    parts.push(
      `<path class="series" d="${linePath(xs, ys)}" fill="none" ` +
      `stroke="${s.color}" stroke-width="1.8">` +
      `<title>${esc(s.name)}</title></path>`,
    );
  }

  parts.push("</svg>");
  return parts.join("\n");
}
