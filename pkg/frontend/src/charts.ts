// SVG chart builders. Pure string assembly so the same code runs in tests
// without a DOM; the UI drops the markup into a container and wires hover.

import type { SweepPoint } from "./api.js";

export const CHART_W = 460;
export const CHART_H = 300;
const PAD = { left: 52, right: 16, top: 16, bottom: 36 };

export function fmt(v: number): string {
  return v.toFixed(2);
}

export function validRisk(v: number): boolean {
  return Number.isFinite(v) && v > 0 && v < 1;
}

interface Extreme {
  p: number;
  value: number;
  label: string;
}

export interface SweepChart {
  svg: string;
  min: Extreme;
  max: Extreme;
  // inverse x scale for hover readouts
  pAt(px: number): number;
  nearest(p: number): SweepPoint;
}

function xScale(p: number): number {
  return PAD.left + p * (CHART_W - PAD.left - PAD.right);
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function sweepChart(points: SweepPoint[], scale: "or" | "rr"): SweepChart {
  if (points.length === 0) throw new Error("empty sweep");
  const values = points.map((pt) => pt[scale]);
  const nulls = points.map((pt) => (scale === "or" ? pt.or_null : pt.rr_null));
  let minIdx = 0;
  let maxIdx = 0;
  values.forEach((v, i) => {
    if (v < values[minIdx]!) minIdx = i;
    if (v > values[maxIdx]!) maxIdx = i;
  });
  const lo = Math.min(...values, ...nulls);
  const hi = Math.max(...values, ...nulls);
  const span = hi - lo || 1;
  const yScale = (v: number) =>
    CHART_H - PAD.bottom - ((v - lo) / span) * (CHART_H - PAD.top - PAD.bottom);

  const path = (series: number[]) =>
    series
      .map((v, i) => `${i === 0 ? "M" : "L"}${xScale(points[i]!.p).toFixed(1)},${yScale(v).toFixed(1)}`)
      .join(" ");

  const ticksX = [0, 0.25, 0.5, 0.75, 1]
    .map((p) => {
      const x = xScale(p).toFixed(1);
      return (
        `<line x1="${x}" y1="${CHART_H - PAD.bottom}" x2="${x}" y2="${CHART_H - PAD.bottom + 5}" class="tick"/>` +
        `<text x="${x}" y="${CHART_H - PAD.bottom + 18}" class="tick-label" text-anchor="middle">${p}</text>`
      );
    })
    .join("");
  const ticksY = [lo, (lo + hi) / 2, hi]
    .map((v) => {
      const y = yScale(v).toFixed(1);
      return (
        `<line x1="${PAD.left - 5}" y1="${y}" x2="${PAD.left}" y2="${y}" class="tick"/>` +
        `<text x="${PAD.left - 8}" y="${y}" class="tick-label" text-anchor="end" dominant-baseline="middle">${fmt(v)}</text>`
      );
    })
    .join("");

  const min = { p: points[minIdx]!.p, value: values[minIdx]!, label: fmt(values[minIdx]!) };
  const max = { p: points[maxIdx]!.p, value: values[maxIdx]!, label: fmt(values[maxIdx]!) };

  const svg =
    `<svg viewBox="0 0 ${CHART_W} ${CHART_H}" class="chart sweep-chart" role="img" aria-label="${esc(scale)} sweep">` +
    `<rect x="${PAD.left}" y="${PAD.top}" width="${CHART_W - PAD.left - PAD.right}" height="${CHART_H - PAD.top - PAD.bottom}" class="plot-bg"/>` +
    ticksX +
    ticksY +
    `<path d="${path(nulls)}" class="series null-series" fill="none"/>` +
    `<path d="${path(values)}" class="series effect-series" fill="none"/>` +
    `<circle cx="${xScale(min.p).toFixed(1)}" cy="${yScale(min.value).toFixed(1)}" r="3.5" class="extreme min"/>` +
    `<circle cx="${xScale(max.p).toFixed(1)}" cy="${yScale(max.value).toFixed(1)}" r="3.5" class="extreme max"/>` +
    `<text x="${CHART_W - PAD.right}" y="${PAD.top + 12}" class="readout" text-anchor="end">` +
    esc(`${scale} from ${min.label} at p=${fmt(min.p)} to ${max.label} at p=${fmt(max.p)}`) +
    `</text>` +
    `</svg>`;

  return {
    svg,
    min,
    max,
    pAt(px: number): number {
      const p = (px - PAD.left) / (CHART_W - PAD.left - PAD.right);
      return Math.min(1, Math.max(0, p));
    },
    nearest(p: number): SweepPoint {
      let best = points[0]!;
      for (const pt of points) {
        if (Math.abs(pt.p - p) < Math.abs(best.p - p)) best = pt;
      }
      return best;
    },
  };
}

// --- L'Abbe panel -----------------------------------------------------------

// Loci of constant association in the (untreated risk, treated risk) unit
// square. These are display geometry only; every verdict and every swept
// value still comes from the service.
export function rrLocus(value: number, r0: number): number | null {
  const r1 = value * r0;
  return r1 > 0 && r1 < 1 ? r1 : null;
}

export function orLocus(value: number, r0: number): number | null {
  const odds = (value * r0) / (1 - r0);
  const r1 = odds / (1 + odds);
  return r1 > 0 && r1 < 1 ? r1 : null;
}

export interface LabbeCurve {
  scale: "or" | "rr";
  value: number;
}

export function labbeChart(curves: LabbeCurve[], steps = 200): string {
  const side = CHART_H;
  const pad = 40;
  const px = (v: number) => pad + v * (side - 2 * pad);
  const py = (v: number) => side - pad - v * (side - 2 * pad);

  const paths = curves
    .map((curve) => {
      const locus = curve.scale === "rr" ? rrLocus : orLocus;
      let d = "";
      for (let i = 1; i < steps; i += 1) {
        const r0 = i / steps;
        const r1 = locus(curve.value, r0);
        if (r1 === null) continue;
        d += `${d === "" ? "M" : "L"}${px(r0).toFixed(1)},${py(r1).toFixed(1)} `;
      }
      return `<path d="${d.trim()}" class="series ${curve.scale}-locus" fill="none" data-curve="${curve.scale}=${curve.value}"/>`;
    })
    .join("");

  const labels = curves
    .map((curve, i) => {
      return `<text x="${side - pad}" y="${pad + 14 * (i + 1)}" class="readout" text-anchor="end">${esc(`${curve.scale} = ${curve.value}`)}</text>`;
    })
    .join("");

  return (
    `<svg viewBox="0 0 ${side} ${side}" class="chart labbe-chart" role="img" aria-label="treated versus untreated risk">` +
    `<rect x="${pad}" y="${pad}" width="${side - 2 * pad}" height="${side - 2 * pad}" class="plot-bg"/>` +
    `<line x1="${px(0)}" y1="${py(0)}" x2="${px(1)}" y2="${py(1)}" class="diagonal"/>` +
    `<text x="${px(0.5)}" y="${side - 8}" class="tick-label" text-anchor="middle">untreated risk</text>` +
    `<text x="12" y="${py(0.5)}" class="tick-label" text-anchor="middle" transform="rotate(-90 12 ${py(0.5)})">treated risk</text>` +
    paths +
    labels +
    `</svg>`
  );
}
