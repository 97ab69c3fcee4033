/**
 * plots bias <results.csv> --out fig.svg [--title "..."]
 * plots variance <results.csv> --out fig.svg [--title "..."]
 *
 * Renders figures from the experiment runner's CSV output.  Only SVG is
 * emitted (no rasterizer is bundled); a .png output path is rewritten to
 * .svg with a notice.
 *
 * Exit codes: 0 success, 1 runtime failure (bad file/content), 2 usage.
 */

import { readFileSync, writeFileSync } from "fs";
import { parseResultsCsv } from "./csv.js";
import { plotBias } from "./bias.js";
import { plotVariance } from "./variance.js";

const USAGE = `usage: plots <bias|variance> <results.csv> --out <figure.svg> [--title <text>]

  bias      log-log |bias| vs dt with stderr bars and slope-1/2 guides
  variance  estimator variance vs integration time (with GK linear fit)
`;

interface Args {
  kind: "bias" | "variance";
  csv: string;
  out: string;
  title?: string;
}

class UsageError extends Error {}

function parseArgs(argv: string[]): Args {
  const positional: string[] = [];
  let out: string | undefined;
  let title: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (a === "--out" || a === "--title") {
      const v = argv[++i];
      if (v === undefined) throw new UsageError(`${a} needs a value`);
      if (a === "--out") out = v;
      else title = v;
    } else if (a === "-h" || a === "--help") {
      throw new UsageError("");
    } else if (a.startsWith("-")) {
      throw new UsageError(`unknown option ${a}`);
    } else {
      positional.push(a);
    }
  }
  if (positional.length !== 2) {
    throw new UsageError("expected exactly: <bias|variance> <results.csv>");
  }
  const [kind, csv] = positional;
  if (kind !== "bias" && kind !== "variance") {
    throw new UsageError(`unknown plot kind ${kind}`);
  }
  if (!out) throw new UsageError("--out is required");
  return { kind, csv, out, title };
}

function resolveOut(out: string): string {
  if (out.toLowerCase().endsWith(".png")) {
    const svgPath = out.slice(0, -4) + ".svg";
    console.error(`note: PNG output is not supported, writing ${svgPath}`);
    return svgPath;
  }
  return out;
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    if (err instanceof UsageError) {
      if (err.message) console.error(`error: ${err.message}`);
      console.error(USAGE);
      return 2;
    }
    throw err;
  }
  try {
    const rows = parseResultsCsv(readFileSync(args.csv, "utf-8"));
    const svg = args.kind === "bias"
      ? plotBias(rows, args.title ?? `bias convergence — ${args.csv}`)
      : plotVariance(rows,
                     args.title ?? `estimator variance vs time — ${args.csv}`);
    const target = resolveOut(args.out);
    writeFileSync(target, svg);
    console.log(`wrote ${target}`);
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

export function runFromProcessArgv(): never {
  process.exit(main(process.argv.slice(2)));
}
