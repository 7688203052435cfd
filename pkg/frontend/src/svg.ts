/**
 * Minimal deterministic SVG line charts: axes, ticks, legend, and one
 * polyline per series.  A log-scale y-axis drops non-positive points (decay
 * curves can bottom out at exact zero) and ticks at powers of ten.
 */

import { FigureData, Series } from "./figures";

export interface ChartOptions {
  logY?: boolean;
  width?: number;
  height?: number;
}

const PALETTE = [
  "#1f77b4",
  "#ff7f0e",
  "#2ca02c",
  "#d62728",
  "#9467bd",
  "#8c564b",
  "#e377c2",
  "#17becf",
];

const MARGIN = { top: 42, right: 24, bottom: 46, left: 64 };

function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) {
    return [lo];
  }
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (count * step) / span;
  const factor = err <= 0.15 ? 10 : err <= 0.35 ? 5 : err <= 0.75 ? 2 : 1;
  const unit = step * factor;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / unit) * unit; v <= hi + 1e-12 * span; v += unit) {
    ticks.push(v);
  }
  return ticks;
}

function decadeTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(lo); e <= Math.floor(hi); e++) {
    ticks.push(e);
  }
  if (ticks.length === 0) {
    ticks.push(lo, hi);
  }
  return ticks;
}

function fmt(value: number): string {
  if (value === 0) return "0";
  const abs = Math.abs(value);
  if (abs >= 1e4 || abs < 1e-3) return value.toExponential(1);
  return String(Number(value.toPrecision(6)));
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderChart(data: FigureData, options: ChartOptions = {}): string {
  const width = options.width ?? 720;
  const height = options.height ?? 440;
  const logY = options.logY ?? false;

  const usable: Series[] = data.series.map((s) => ({
    label: s.label,
    points: logY ? s.points.filter(([, y]) => y > 0) : s.points.slice(),
  }));
  const points = usable.flatMap((s) => s.points);
  if (points.length === 0) {
    throw new Error(
      logY ? "nothing to draw: no positive values on a log axis" : "nothing to draw"
    );
  }

  const xs = points.map(([x]) => x);
  const ys = points.map(([, y]) => (logY ? Math.log10(y) : y));
  let xLo = Math.min(...xs);
  let xHi = Math.max(...xs);
  let yLo = Math.min(...ys);
  let yHi = Math.max(...ys);
  if (xHi === xLo) {
    xLo -= 0.5;
    xHi += 0.5;
  }
  if (yHi === yLo) {
    yLo -= 0.5;
    yHi += 0.5;
  }
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;
  const sx = (x: number) => MARGIN.left + ((x - xLo) / (xHi - xLo)) * plotW;
  const sy = (y: number) => {
    const v = logY ? Math.log10(y) : y;
    return MARGIN.top + plotH - ((v - yLo) / (yHi - yLo)) * plotH;
  };

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="12">`
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${width / 2}" y="20" text-anchor="middle" font-size="15">` +
      `${escapeXml(data.title)}</text>`
  );

  // axes
  const x0 = MARGIN.left;
  const y0 = MARGIN.top + plotH;
  parts.push(
    `<line x1="${x0}" y1="${y0}" x2="${x0 + plotW}" y2="${y0}" stroke="black"/>`,
    `<line x1="${x0}" y1="${MARGIN.top}" x2="${x0}" y2="${y0}" stroke="black"/>`
  );

  for (const t of niceTicks(xLo, xHi)) {
    const px = sx(t);
    parts.push(
      `<line x1="${px.toFixed(2)}" y1="${y0}" x2="${px.toFixed(2)}" y2="${y0 + 5}" stroke="black"/>`,
      `<text x="${px.toFixed(2)}" y="${y0 + 18}" text-anchor="middle">${fmt(t)}</text>`
    );
  }
  const yTicks = logY ? decadeTicks(yLo, yHi) : niceTicks(yLo, yHi);
  for (const t of yTicks) {
    const py = MARGIN.top + plotH - ((t - yLo) / (yHi - yLo)) * plotH;
    const label = logY ? `1e${fmt(t)}` : fmt(t);
    parts.push(
      `<line x1="${x0 - 5}" y1="${py.toFixed(2)}" x2="${x0}" y2="${py.toFixed(2)}" stroke="black"/>`,
      `<text x="${x0 - 8}" y="${(py + 4).toFixed(2)}" text-anchor="end">${label}</text>`,
      `<line x1="${x0}" y1="${py.toFixed(2)}" x2="${x0 + plotW}" y2="${py.toFixed(2)}" ` +
        `stroke="#dddddd" stroke-dasharray="3,3"/>`
    );
  }
  parts.push(
    `<text x="${x0 + plotW / 2}" y="${height - 8}" text-anchor="middle">` +
      `${escapeXml(data.xLabel)}${logY ? "" : ""}</text>`,
    `<text x="16" y="${MARGIN.top + plotH / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 16 ${MARGIN.top + plotH / 2})">` +
      `${escapeXml(data.yLabel)}${logY ? " (log scale)" : ""}</text>`
  );

  usable.forEach((series, i) => {
    if (series.points.length === 0) return;
    const color = PALETTE[i % PALETTE.length];
    const coords = series.points
      .map(([x, y]) => `${sx(x).toFixed(2)},${sy(y).toFixed(2)}`)
      .join(" ");
    parts.push(
      `<polyline points="${coords}" fill="none" stroke="${color}" stroke-width="1.8"/>`
    );
    for (const [x, y] of series.points) {
      parts.push(
        `<circle cx="${sx(x).toFixed(2)}" cy="${sy(y).toFixed(2)}" r="2.4" fill="${color}"/>`
      );
    }
  });

  // legend, top-right inside the plot area
  const legendX = x0 + plotW - 220;
  usable.forEach((series, i) => {
    const ly = MARGIN.top + 14 + i * 16;
    const color = PALETTE[i % PALETTE.length];
    parts.push(
      `<line x1="${legendX}" y1="${ly - 4}" x2="${legendX + 18}" y2="${ly - 4}" ` +
        `stroke="${color}" stroke-width="2"/>`,
      `<text x="${legendX + 24}" y="${ly}">${escapeXml(series.label)}</text>`
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
