/**
 * Variance-vs-time figure from checkpoint rows, linear axes: the
 * martingale-product estimators should run flat while Green-Kubo variance
 * grows linearly.  When GK series are present a second panel repeats them
 * with their least-squares line and the fit statistics.
 */

import { ResultRow, checkpointRows, groupBySeries } from "./csv.js";
import { Fit, linearFit } from "./fit.js";
import { Frame, colorFor, esc, fmtNum, frameBox, niceLinearTicks,
         svgDocument } from "./svg.js";

export interface VarianceSeries {
  label: string;
  points: Array<[number, number]>;  // [time, variance] sorted by time
  isGreenKubo: boolean;
  fit: Fit | null;  // linear fit, only for Green-Kubo series
}

export function extractVarianceSeries(rows: ResultRow[]): VarianceSeries[] {
  const cps = checkpointRows(rows);
  if (cps.length === 0) {
    throw new Error(
      "no checkpoint rows in this CSV: rerun the experiment with " +
      "checkpoints configured so variance-vs-time data is recorded");
  }
  const out: VarianceSeries[] = [];
  for (const [label, group] of [...groupBySeries(cps).entries()].sort()) {
    // one variance curve per series; if several dt values are present the
    // rows at different dt would collide, so keep the smallest dt
    const dt = Math.min(...group.map((r) => r.dt));
    const points = group
      .filter((r) => r.dt === dt)
      .map((r): [number, number] =>
        [r.checkpoint_time as number, r.checkpoint_variance as number])
      .sort((a, b) => a[0] - b[0]);
    const isGreenKubo = group[0].estimator.startsWith("gk");
    const fit = isGreenKubo && points.length >= 2 ? linearFit(points) : null;
    out.push({ label, points, isGreenKubo, fit });
  }
  return out;
}

function panel(b: { s: string }, f: Frame, series: VarianceSeries[],
               caption: string, colorOffset: (i: number) => number,
               drawFits: boolean): void {
  const ts = series.flatMap((s) => s.points.map((p) => p[0]));
  const vs = series.flatMap((s) => s.points.map((p) => p[1]));
  const xMax = Math.max(...ts) * 1.05;
  const yMax = Math.max(...vs) * 1.1 || 1;
  const xOf = (v: number) => f.x0 + (v / xMax) * f.w;
  const yOf = (v: number) => f.y0 + f.h - (v / yMax) * f.h;

  b.s += frameBox(f);
  for (const v of niceLinearTicks(0, yMax)) {
    const y = yOf(v);
    b.s += `<line x1="${f.x0}" y1="${y.toFixed(1)}" x2="${f.x0 + f.w}" y2="${y.toFixed(1)}" stroke="#eee" stroke-width="0.6"/>\n`;
    b.s += `<text x="${f.x0 - 5}" y="${(y + 3).toFixed(1)}" text-anchor="end" font-size="8.5" fill="#555">${fmtNum(v)}</text>\n`;
  }
  for (const v of niceLinearTicks(0, xMax)) {
    const x = xOf(v);
    b.s += `<line x1="${x.toFixed(1)}" y1="${f.y0 + f.h}" x2="${x.toFixed(1)}" y2="${f.y0 + f.h + 4}" stroke="#333" stroke-width="0.6"/>\n`;
    b.s += `<text x="${x.toFixed(1)}" y="${f.y0 + f.h + 15}" text-anchor="middle" font-size="8.5" fill="#555">${fmtNum(v)}</text>\n`;
  }
  b.s += `<text x="${f.x0 + f.w / 2}" y="${f.y0 + f.h + 32}" text-anchor="middle" font-size="10" fill="#333">integration time T</text>\n`;
  b.s += `<text x="${f.x0 + 4}" y="${f.y0 - 6}" font-size="10" fill="#444">${esc(caption)}</text>\n`;

  series.forEach((s, i) => {
    const color = colorFor(colorOffset(i));
    const pts = s.points
      .map(([t, v]) => `${xOf(t).toFixed(1)},${yOf(v).toFixed(1)}`)
      .join(" ");
    b.s += `<polyline fill="none" stroke="${color}" stroke-width="1.3" points="${pts}"/>\n`;
    for (const [t, v] of s.points) {
      b.s += `<circle cx="${xOf(t).toFixed(1)}" cy="${yOf(v).toFixed(1)}" r="2.6" fill="${color}"/>\n`;
    }
    if (drawFits && s.fit) {
      const y0v = Math.max(0, s.fit.intercept);
      const d = `${xOf(0).toFixed(1)},${yOf(Math.min(y0v, yMax)).toFixed(1)} ` +
        `${xOf(xMax).toFixed(1)},${yOf(Math.min(s.fit.slope * xMax + s.fit.intercept, yMax)).toFixed(1)}`;
      b.s += `<polyline fill="none" stroke="${color}" stroke-width="1" stroke-dasharray="5,4" points="${d}"/>\n`;
      b.s += `<text x="${f.x0 + f.w - 4}" y="${f.y0 + 14 + 12 * colorOffset(i)}" text-anchor="end" font-size="8.5" fill="${color}">fit slope ${fmtNum(s.fit.slope)}, r2 ${s.fit.r2.toFixed(3)}</text>\n`;
    }
  });
}

export function plotVariance(rows: ResultRow[],
                             title = "estimator variance vs time"): string {
  const series = extractVarianceSeries(rows);
  const gk = series.filter((s) => s.isGreenKubo);
  const twoPanels = gk.length > 0 && gk.length < series.length;

  const W = twoPanels ? 900 : 620;
  const H = 430;
  const b = { s: "" };
  b.s += `<text x="60" y="24" font-size="13" font-weight="600" fill="#222">${esc(title)}</text>\n`;

  const main: Frame = { x0: 60, y0: 46, w: twoPanels ? 380 : 400, h: 300 };
  panel(b, main, series, "all estimators", (i) => i, !twoPanels);
  if (twoPanels) {
    const inset: Frame = { x0: 520, y0: 46, w: 330, h: 300 };
    panel(b, inset, gk, "Green-Kubo linear growth",
          (i) => series.findIndex((s) => s.label === gk[i].label), true);
  }

  // legend along the bottom
  series.forEach((s, i) => {
    const x = 60 + i * 190;
    const y = H - 24;
    b.s += `<line x1="${x}" y1="${y}" x2="${x + 16}" y2="${y}" stroke="${colorFor(i)}" stroke-width="1.6"/>\n`;
    b.s += `<text x="${x + 21}" y="${y + 3}" font-size="10" fill="#333">${esc(s.label)}</text>\n`;
  });

  return svgDocument(W, H, b.s);
}
