/**
 * Log-log convergence figure: |bias| against the timestep, one series per
 * estimator/scheme pair, with stderr error bars and dashed slope-1 and
 * slope-2 reference guides.
 *
 * Points whose |bias| is below their stderr are drawn hollow: at that size
 * the sign and magnitude of the bias are noise-dominated and the marker
 * should not be over-read.
 */

import { ResultRow, groupBySeries, summaryRows } from "./csv.js";
import { fitLogLogSlope } from "./fit.js";
import { Frame, colorFor, decadeTicks, esc, fmtNum, frameBox,
         svgDocument } from "./svg.js";

export interface BiasSeries {
  label: string;
  /** [dt, |bias|, stderr] per summary row, sorted by dt */
  points: Array<[number, number, number]>;
  fittedSlope: number | null;
}

export function extractBiasSeries(rows: ResultRow[]): BiasSeries[] {
  const withBias = summaryRows(rows).filter((r) => r.bias !== null);
  if (withBias.length === 0) {
    throw new Error(
      "no bias values in this CSV: rerun the experiment with a declared " +
      "reference value (an exact constant or the coupled finite-difference " +
      "oracle) so the bias column is filled in");
  }
  const out: BiasSeries[] = [];
  for (const [label, group] of [...groupBySeries(withBias).entries()].sort()) {
    const points = group
      .map((r): [number, number, number] =>
        [r.dt, Math.abs(r.bias as number), r.stderr])
      .sort((a, b) => a[0] - b[0]);
    let fittedSlope: number | null = null;
    try {
      fittedSlope = fitLogLogSlope(points.map(([dt, b]) => [dt, b])).slope;
    } catch {
      // fewer than 2 positive points: plot without a slope annotation
    }
    out.push({ label, points, fittedSlope });
  }
  return out;
}

export function plotBias(rows: ResultRow[], title = "bias convergence"):
    string {
  const series = extractBiasSeries(rows);

  const W = 640, H = 440;
  const f: Frame = { x0: 70, y0: 46, w: W - 70 - 180, h: H - 46 - 60 };

  // log-scale domains; zero biases cannot be placed and are skipped, but
  // their error bar top |bias|+stderr still informs the range
  const dts = series.flatMap((s) => s.points.map((p) => p[0]));
  const yCandidates: number[] = [];
  for (const s of series) {
    for (const [, b, se] of s.points) {
      if (b > 0) yCandidates.push(b);
      if (b + se > 0) yCandidates.push(b + se);
      if (b - se > 0) yCandidates.push(b - se);
    }
  }
  if (yCandidates.length === 0) {
    throw new Error("every |bias| in this CSV is exactly zero; nothing to plot");
  }
  const xMin = Math.min(...dts) * 0.8;
  const xMax = Math.max(...dts) * 1.25;
  const yMin = Math.min(...yCandidates) * 0.5;
  const yMax = Math.max(...yCandidates) * 2.0;
  const xOf = (v: number) =>
    f.x0 + (Math.log(v / xMin) / Math.log(xMax / xMin)) * f.w;
  const yOf = (v: number) =>
    f.y0 + f.h - (Math.log(v / yMin) / Math.log(yMax / yMin)) * f.h;

  let b = "";
  b += `<text x="${f.x0}" y="24" font-size="13" font-weight="600" fill="#222">${esc(title)}</text>\n`;
  b += frameBox(f);

  // y grid/ticks at powers of ten
  for (const v of decadeTicks(yMin, yMax)) {
    const y = yOf(v);
    b += `<line x1="${f.x0}" y1="${y.toFixed(1)}" x2="${f.x0 + f.w}" y2="${y.toFixed(1)}" stroke="#eee" stroke-width="0.6"/>\n`;
    b += `<text x="${f.x0 - 6}" y="${(y + 3).toFixed(1)}" text-anchor="end" font-size="9" fill="#555">${fmtNum(v)}</text>\n`;
  }
  // x ticks at the distinct timesteps themselves (grids are short)
  for (const dt of [...new Set(dts)].sort((a, c) => a - c)) {
    const x = xOf(dt);
    b += `<line x1="${x.toFixed(1)}" y1="${f.y0 + f.h}" x2="${x.toFixed(1)}" y2="${f.y0 + f.h + 4}" stroke="#333" stroke-width="0.6"/>\n`;
    b += `<text x="${x.toFixed(1)}" y="${f.y0 + f.h + 16}" text-anchor="middle" font-size="9" fill="#555">${fmtNum(dt)}</text>\n`;
  }
  b += `<text x="${f.x0 + f.w / 2}" y="${H - 16}" text-anchor="middle" font-size="11" fill="#333">timestep dt (log)</text>\n`;
  b += `<text x="20" y="${f.y0 + f.h / 2}" text-anchor="middle" font-size="11" fill="#333" transform="rotate(-90,20,${f.y0 + f.h / 2})">|bias| (log)</text>\n`;

  // slope guides through the geometric center of all positive points
  const pos = series.flatMap((s) => s.points.filter(([, v]) => v > 0));
  const gx = Math.exp(pos.reduce((a, [dt]) => a + Math.log(dt), 0) / pos.length);
  const gy = Math.exp(pos.reduce((a, [, v]) => a + Math.log(v), 0) / pos.length);
  for (const slope of [1, 2]) {
    const yAt = (x: number) => gy * Math.pow(x / gx, slope);
    // clip the guide to the frame in log space
    const pts: Array<[number, number]> = [];
    const nSeg = 2;
    for (let i = 0; i <= nSeg; i++) {
      const x = xMin * Math.pow(xMax / xMin, i / nSeg);
      pts.push([x, Math.min(Math.max(yAt(x), yMin), yMax)]);
    }
    const d = pts.map(([x, y]) => `${xOf(x).toFixed(1)},${yOf(y).toFixed(1)}`).join(" ");
    b += `<polyline fill="none" stroke="#999" stroke-width="1" stroke-dasharray="5,4" points="${d}"/>\n`;
    const lx = xMin * Math.pow(xMax / xMin, 0.92);
    const ly = Math.min(Math.max(yAt(lx) * 1.3, yMin * 1.3), yMax / 1.1);
    b += `<text x="${xOf(lx).toFixed(1)}" y="${yOf(ly).toFixed(1)}" text-anchor="end" font-size="9" fill="#999">slope ${slope}</text>\n`;
  }

  // series: error bars, then markers on top
  series.forEach((s, i) => {
    const color = colorFor(i);
    for (const [dt, bias, se] of s.points) {
      if (bias <= 0) continue;  // sign crossed zero; nothing to place
      const x = xOf(dt);
      const hi = Math.min(bias + se, yMax);
      const lo = Math.max(bias - se, yMin);
      b += `<line x1="${x.toFixed(1)}" y1="${yOf(lo).toFixed(1)}" x2="${x.toFixed(1)}" y2="${yOf(hi).toFixed(1)}" stroke="${color}" stroke-width="1"/>\n`;
      const hollow = bias < se;
      b += `<circle cx="${x.toFixed(1)}" cy="${yOf(bias).toFixed(1)}" r="3.4" ` +
        (hollow
          ? `fill="none" stroke="${color}" stroke-width="1.4"`
          : `fill="${color}"`) + `/>\n`;
    }
  });

  // legend
  const lx = f.x0 + f.w + 14;
  series.forEach((s, i) => {
    const y = f.y0 + 10 + i * 30;
    b += `<circle cx="${lx + 5}" cy="${y}" r="3.4" fill="${colorFor(i)}"/>\n`;
    b += `<text x="${lx + 14}" y="${y + 3}" font-size="10" fill="#333">${esc(s.label)}</text>\n`;
    if (s.fittedSlope !== null) {
      b += `<text x="${lx + 14}" y="${y + 15}" font-size="9" fill="#777">fitted slope ${s.fittedSlope.toFixed(2)}</text>\n`;
    }
  });
  b += `<circle cx="${lx + 5}" cy="${f.y0 + f.h - 8}" r="3.4" fill="none" stroke="#555" stroke-width="1.4"/>\n`;
  b += `<text x="${lx + 14}" y="${f.y0 + f.h - 5}" font-size="9" fill="#777">hollow: |bias| &lt; stderr</text>\n`;

  return svgDocument(W, H, b);
}
