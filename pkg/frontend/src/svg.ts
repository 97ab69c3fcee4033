/** Small shared SVG helpers: no DOM, plain string assembly so output is
 * byte-deterministic for a given input. */

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#17becf", "#7f7f7f",
];

export function colorFor(index: number): string {
  return PALETTE[index % PALETTE.length];
}

export function fmtNum(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.01 && a < 10000) {
    return String(Number(v.toPrecision(4)));
  }
  return v.toExponential(1).replace("e-", "e-").replace("e+", "e");
}

export function niceLinearTicks(min: number, max: number,
                                count = 5): number[] {
  const range = max - min || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((n) => n >= rough)!;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 1e-9;
       v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

/** Powers of ten covering [min, max] (both > 0). */
export function decadeTicks(min: number, max: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(Math.log10(min) - 1e-9);
       e <= Math.floor(Math.log10(max) + 1e-9); e++) {
    ticks.push(Math.pow(10, e));
  }
  return ticks;
}

export interface Frame {
  x0: number;  // left edge of the data area
  y0: number;  // top edge
  w: number;
  h: number;
}

export function frameBox(f: Frame): string {
  return `<rect x="${f.x0}" y="${f.y0}" width="${f.w}" height="${f.h}" ` +
    `fill="none" stroke="#333" stroke-width="0.8"/>\n`;
}

export function svgDocument(width: number, height: number,
                            body: string): string {
  return `<svg xmlns="http://www.w3.org/2000/svg" ` +
    `viewBox="0 0 ${width} ${height}" ` +
    `font-family="Helvetica, Arial, sans-serif">\n` +
    `<rect width="${width}" height="${height}" fill="#fff"/>\n` +
    body + `</svg>\n`;
}
