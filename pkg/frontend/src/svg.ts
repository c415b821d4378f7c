/**
 * Minimal deterministic SVG line charts.
 *
 * No DOM, no canvas: scales and tick positions come from d3-scale and the
 * markup is assembled as text, so rendering works the same everywhere and
 * repeated runs produce identical bytes.
 */

import { scaleLinear, scaleLog } from "d3-scale";

export interface Series {
  label: string;
  x: number[];
  y: number[];
}

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  xScale: "linear" | "log";
  yScale: "linear" | "log";
  subtitle?: string;
  width?: number;
  height?: number;
}

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
const MARGIN = { top: 42, right: 24, bottom: 46, left: 64 };

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function fmtTick(value: number): string {
  if (value === 0) return "0";
  const magnitude = Math.abs(value);
  if (magnitude >= 1e4 || magnitude < 1e-3) return value.toExponential(0);
  return String(Number(value.toPrecision(6)));
}

function makeScale(kind: "linear" | "log", domain: [number, number],
                   range: [number, number]) {
  if (kind === "log") {
    return scaleLog().domain(domain).range(range);
  }
  return scaleLinear().domain(domain).range(range);
}

function extent(values: number[], positiveOnly: boolean): [number, number] {
  const usable = positiveOnly ? values.filter((v) => v > 0) : values;
  if (usable.length === 0) throw new Error("no plottable values");
  let lo = Math.min(...usable);
  let hi = Math.max(...usable);
  if (lo === hi) {
    lo = positiveOnly ? lo / 2 : lo - 1;
    hi = positiveOnly ? hi * 2 : hi + 1;
  }
  return [lo, hi];
}

export function lineChart(series: Series[], options: ChartOptions): string {
  const width = options.width ?? 640;
  const height = options.height ?? 440;
  const innerW = width - MARGIN.left - MARGIN.right;
  const innerH = height - MARGIN.top - MARGIN.bottom;

  const allX = series.flatMap((s) => s.x);
  const allY = series.flatMap((s) => s.y);
  const xDomain = extent(allX, options.xScale === "log");
  const yDomain = extent(allY, options.yScale === "log");
  const xs = makeScale(options.xScale, xDomain, [0, innerW]);
  const ys = makeScale(options.yScale, yDomain, [innerH, 0]);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(`<text x="${width / 2}" y="20" text-anchor="middle" font-size="15">${esc(options.title)}</text>`);
  if (options.subtitle) {
    parts.push(`<text x="${width / 2}" y="36" text-anchor="middle" font-size="10" fill="#666">${esc(options.subtitle)}</text>`);
  }
  parts.push(`<g transform="translate(${MARGIN.left},${MARGIN.top})">`);

  const xTicks = xs.ticks(6);
  const yTicks = ys.ticks(6);
  for (const t of xTicks) {
    const px = xs(t);
    parts.push(`<line x1="${px}" y1="0" x2="${px}" y2="${innerH}" stroke="#eee"/>`);
    parts.push(`<text x="${px}" y="${innerH + 18}" text-anchor="middle" font-size="10">${esc(fmtTick(t))}</text>`);
  }
  for (const t of yTicks) {
    const py = ys(t);
    parts.push(`<line x1="0" y1="${py}" x2="${innerW}" y2="${py}" stroke="#eee"/>`);
    parts.push(`<text x="-8" y="${py + 3}" text-anchor="end" font-size="10">${esc(fmtTick(t))}</text>`);
  }
  parts.push(`<rect width="${innerW}" height="${innerH}" fill="none" stroke="#333"/>`);

  series.forEach((s, index) => {
    const color = COLORS[index % COLORS.length];
    const points: string[] = [];
    for (let i = 0; i < s.x.length; i += 1) {
      if (options.yScale === "log" && s.y[i] <= 0) continue;
      if (options.xScale === "log" && s.x[i] <= 0) continue;
      points.push(`${xs(s.x[i])},${ys(s.y[i])}`);
    }
    if (points.length > 1) {
      parts.push(`<polyline fill="none" stroke="${color}" stroke-width="1.6" points="${points.join(" ")}"/>`);
    }
    for (const p of points) {
      const [px, py] = p.split(",");
      parts.push(`<circle cx="${px}" cy="${py}" r="2.4" fill="${color}"/>`);
    }
    parts.push(
      `<g transform="translate(${innerW - 150},${12 + 16 * index})">` +
        `<line x1="0" y1="-4" x2="18" y2="-4" stroke="${color}" stroke-width="2"/>` +
        `<text x="24" y="0" font-size="11">${esc(s.label)}</text></g>`,
    );
  });

  parts.push(`<text x="${innerW / 2}" y="${innerH + 36}" text-anchor="middle" font-size="12">${esc(options.xLabel)}</text>`);
  parts.push(`<text transform="translate(${-46},${innerH / 2}) rotate(-90)" text-anchor="middle" font-size="12">${esc(options.yLabel)}</text>`);
  parts.push("</g></svg>");
  return parts.join("\n") + "\n";
}
