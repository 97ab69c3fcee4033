/** Least-squares fits used for slope annotations; mirrors the conventions
 * of the experiment runner (log-log fit drops nonpositive values). */

export interface Fit {
  slope: number;
  intercept: number;
  r2: number;
}

export function linearFit(points: Array<[number, number]>): Fit {
  if (points.length < 2) {
    throw new Error("linear fit needs at least 2 points");
  }
  const n = points.length;
  const mx = points.reduce((s, [x]) => s + x, 0) / n;
  const my = points.reduce((s, [, y]) => s + y, 0) / n;
  let sxx = 0;
  let sxy = 0;
  let syy = 0;
  for (const [x, y] of points) {
    sxx += (x - mx) ** 2;
    sxy += (x - mx) * (y - my);
    syy += (y - my) ** 2;
  }
  if (sxx === 0) throw new Error("linear fit needs distinct x values");
  const slope = sxy / sxx;
  const intercept = my - slope * mx;
  const ssRes = points.reduce(
    (s, [x, y]) => s + (y - (slope * x + intercept)) ** 2, 0);
  const r2 = syy > 0 ? 1 - ssRes / syy : 1;
  return { slope, intercept, r2 };
}

/** Fit of log(y) against log(x); points with y <= 0 are dropped
 * (statistical noise makes a bias cross zero). */
export function fitLogLogSlope(points: Array<[number, number]>): Fit {
  const kept = points.filter(([, y]) => y > 0);
  if (kept.length < 2) {
    throw new Error("log-log fit needs at least 2 points with positive y");
  }
  return linearFit(kept.map(([x, y]) => [Math.log(x), Math.log(y)]));
}
