/**
 * Reader for the experiment-runner CSV schema.
 *
 * One file per experiment: summary rows (one per dt x estimator) carry the
 * estimate/stderr/bias columns, checkpoint rows repeat the summary fields
 * and add (checkpoint_time, checkpoint_variance).  Empty string means
 * "not applicable" for the optional columns.
 */

export interface ResultRow {
  example: string;
  scheme: string;
  estimator: string;
  dt: number;
  n_steps: number;
  n_realizations: number;
  seed: number;
  estimate: number;
  stderr: number;
  bias: number | null;
  checkpoint_time: number | null;
  checkpoint_variance: number | null;
}

export const REQUIRED_COLUMNS = [
  "example", "scheme", "estimator", "dt", "n_steps", "n_realizations",
  "seed", "estimate", "stderr", "bias", "checkpoint_time",
  "checkpoint_variance",
];

function num(raw: string, column: string): number {
  const v = Number(raw);
  if (raw === "" || !Number.isFinite(v)) {
    throw new Error(`non-numeric value ${JSON.stringify(raw)} in column ${column}`);
  }
  return v;
}

function optNum(raw: string, column: string): number | null {
  return raw === "" ? null : num(raw, column);
}

/** The runner writes plain comma-separated values with no quoting (all
 * fields are numbers or simple identifiers), so a split-based parser is
 * exact here. */
export function parseResultsCsv(text: string): ResultRow[] {
  const lines = text.trim().split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) throw new Error("empty CSV");
  const fields = lines[0].split(",");
  const missing = REQUIRED_COLUMNS.filter((c) => !fields.includes(c));
  if (missing.length > 0) {
    throw new Error(`CSV is missing required columns: ${missing.join(", ")}`);
  }
  const data = lines.slice(1).map((line, i) => {
    const cells = line.split(",");
    if (cells.length !== fields.length) {
      throw new Error(`CSV row ${i + 2} has ${cells.length} fields, ` +
        `expected ${fields.length}`);
    }
    const r: Record<string, string> = {};
    fields.forEach((f, j) => { r[f] = cells[j]; });
    return r;
  });
  return data.map((r) => ({
    example: r.example,
    scheme: r.scheme,
    estimator: r.estimator,
    dt: num(r.dt, "dt"),
    n_steps: num(r.n_steps, "n_steps"),
    n_realizations: num(r.n_realizations, "n_realizations"),
    seed: num(r.seed, "seed"),
    estimate: num(r.estimate, "estimate"),
    stderr: num(r.stderr, "stderr"),
    bias: optNum(r.bias, "bias"),
    checkpoint_time: optNum(r.checkpoint_time, "checkpoint_time"),
    checkpoint_variance: optNum(r.checkpoint_variance, "checkpoint_variance"),
  }));
}

export function summaryRows(rows: ResultRow[]): ResultRow[] {
  return rows.filter((r) => r.checkpoint_time === null);
}

export function checkpointRows(rows: ResultRow[]): ResultRow[] {
  return rows.filter((r) => r.checkpoint_time !== null);
}

/** Group key shared by both plot kinds: one series per estimator+scheme. */
export function seriesKey(r: ResultRow): string {
  return `${r.estimator} (${r.scheme})`;
}

export function groupBySeries(rows: ResultRow[]): Map<string, ResultRow[]> {
  const groups = new Map<string, ResultRow[]>();
  for (const r of rows) {
    const key = seriesKey(r);
    const bucket = groups.get(key);
    if (bucket) bucket.push(r);
    else groups.set(key, [r]);
  }
  return groups;
}
