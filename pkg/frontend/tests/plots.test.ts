import { mkdtempSync, readFileSync, rmSync } from "fs";
import { tmpdir } from "os";
import path from "path";
import { fileURLToPath } from "url";
import { afterAll, describe, expect, it } from "vitest";

const __dirname = path.dirname(fileURLToPath(import.meta.url));

import { extractBiasSeries, plotBias } from "../src/bias.js";
import { main } from "../src/cli.js";
import { parseResultsCsv, summaryRows } from "../src/csv.js";
import { fitLogLogSlope, linearFit } from "../src/fit.js";
import { extractVarianceSeries, plotVariance } from "../src/variance.js";

const FIXTURES = path.join(__dirname, "fixtures");

const HEADER =
  "example,scheme,estimator,dt,n_steps,n_realizations,seed,estimate," +
  "stderr,bias,checkpoint_time,checkpoint_variance,wall_seconds";

function summaryLine(estimator: string, dt: number, bias: number,
                     stderr = 0.001): string {
  return `example1,bacab,${estimator},${dt},100,1000,1,` +
    `${2 + bias},${stderr},${bias},,,`;
}

function checkpointLine(estimator: string, t: number, v: number): string {
  return `example3,bacab,${estimator},0.1,250,1000,1,0.1,0.01,,${t},${v},`;
}

/** CSV whose bias is exactly dt^2 — must sit on the slope-2 guide. */
function quadraticCsv(): string {
  const dts = [0.05, 0.1, 0.2, 0.4];
  return [HEADER, ...dts.map((dt) => summaryLine("mp2", dt, dt * dt))]
    .join("\n");
}

describe("fits", () => {
  it("recovers an exact linear relation", () => {
    const f = linearFit([[0, 1], [1, 3], [2, 5]]);
    expect(f.slope).toBeCloseTo(2, 12);
    expect(f.intercept).toBeCloseTo(1, 12);
    expect(f.r2).toBeCloseTo(1, 12);
  });

  it("fits slope 2 for quadratic bias", () => {
    const rows = parseResultsCsv(quadraticCsv());
    const series = extractBiasSeries(rows);
    expect(series).toHaveLength(1);
    expect(series[0].fittedSlope).toBeGreaterThan(1.95);
    expect(series[0].fittedSlope).toBeLessThan(2.05);
  });

  it("drops nonpositive values from log-log fits", () => {
    const f = fitLogLogSlope([[0.05, -1e-9], [0.1, 0.01], [0.2, 0.04],
                              [0.4, 0.16]]);
    expect(f.slope).toBeCloseTo(2, 8);
  });

  it("rejects underdetermined fits", () => {
    expect(() => fitLogLogSlope([[0.1, 0.01]])).toThrow(/at least 2/);
  });
});

describe("csv parsing", () => {
  it("reads real runner output", () => {
    const text = readFileSync(path.join(FIXTURES, "bias_sample.csv"), "utf-8");
    const rows = parseResultsCsv(text);
    expect(rows.length).toBe(6);
    expect(summaryRows(rows)).toHaveLength(6);
    expect(rows[0].bias).not.toBeNull();
  });

  it("rejects CSVs missing schema columns", () => {
    expect(() => parseResultsCsv("a,b\n1,2")).toThrow(/missing required/);
  });
});

describe("bias plot", () => {
  it("renders the synthetic quadratic input with guides and legend", () => {
    const svg = plotBias(parseResultsCsv(quadraticCsv()));
    expect(svg).toContain("<svg");
    expect(svg).toContain("slope 1");
    expect(svg).toContain("slope 2");
    expect(svg).toContain("mp2 (bacab)");
    expect(svg).toContain("fitted slope 2.00");
  });

  it("renders real runner output", () => {
    const text = readFileSync(path.join(FIXTURES, "bias_sample.csv"), "utf-8");
    const svg = plotBias(parseResultsCsv(text));
    expect(svg).toContain("mp1 (bacab)");
    expect(svg).toContain("mp2 (bacab)");
  });

  it("is deterministic", () => {
    const rows = parseResultsCsv(quadraticCsv());
    expect(plotBias(rows)).toBe(plotBias(rows));
  });

  it("survives a single-point series", () => {
    const csv = [HEADER, summaryLine("mp1", 0.1, 0.02)].join("\n");
    const svg = plotBias(parseResultsCsv(csv));
    expect(svg).toContain("<svg");
  });

  it("hollow-marks noise-dominated points", () => {
    const csv = [HEADER,
                 summaryLine("mp1", 0.1, 0.0005, 0.01),   // below stderr
                 summaryLine("mp1", 0.4, 0.2, 0.01)].join("\n");
    const svg = plotBias(parseResultsCsv(csv));
    expect(svg).toMatch(/circle[^>]*fill="none" stroke="#1f77b4"/);
  });

  it("explains how to get a bias column", () => {
    const csv = [HEADER, "example1,bacab,mp1,0.1,100,1000,1,2.0,0.01,,,,"]
      .join("\n");
    expect(() => plotBias(parseResultsCsv(csv))).toThrow(/reference/);
  });
});

describe("variance plot", () => {
  it("renders flat MP and growing GK series with a fit panel", () => {
    const lines = [HEADER];
    for (const t of [5, 10, 15, 20, 25]) {
      lines.push(checkpointLine("mp1", t, 3.0 + 0.01 * Math.sin(t)));
      lines.push(checkpointLine("gk1", t, 0.2 * t));
    }
    const series = extractVarianceSeries(parseResultsCsv(lines.join("\n")));
    const gk = series.find((s) => s.isGreenKubo)!;
    expect(gk.fit!.slope).toBeCloseTo(0.2, 10);
    expect(gk.fit!.r2).toBeCloseTo(1, 10);
    const svg = plotVariance(parseResultsCsv(lines.join("\n")));
    expect(svg).toContain("Green-Kubo linear growth");
    expect(svg).toContain("fit slope 0.2");
  });

  it("renders real runner output", () => {
    const text = readFileSync(path.join(FIXTURES, "variance_sample.csv"),
                              "utf-8");
    const svg = plotVariance(parseResultsCsv(text));
    expect(svg).toContain("gk1 (bacab)");
    expect(svg).toContain("mp1 (bacab)");
  });

  it("requires checkpoint rows", () => {
    expect(() => plotVariance(parseResultsCsv(quadraticCsv())))
      .toThrow(/checkpoint/);
  });
});

describe("cli", () => {
  const dir = mkdtempSync(path.join(tmpdir(), "plots-"));
  afterAll(() => rmSync(dir, { recursive: true, force: true }));

  it("writes a bias figure", () => {
    const out = path.join(dir, "bias.svg");
    const code = main(["bias", path.join(FIXTURES, "bias_sample.csv"),
                       "--out", out]);
    expect(code).toBe(0);
    expect(readFileSync(out, "utf-8")).toContain("<svg");
  });

  it("writes a variance figure and redirects .png to .svg", () => {
    const out = path.join(dir, "var.png");
    const code = main(["variance",
                       path.join(FIXTURES, "variance_sample.csv"),
                       "--out", out]);
    expect(code).toBe(0);
    expect(readFileSync(path.join(dir, "var.svg"), "utf-8"))
      .toContain("<svg");
  });

  it("fails usage without --out", () => {
    expect(main(["bias", "whatever.csv"])).toBe(2);
  });

  it("fails cleanly on a missing file", () => {
    expect(main(["bias", path.join(dir, "nope.csv"),
                 "--out", path.join(dir, "x.svg")])).toBe(1);
  });
});
