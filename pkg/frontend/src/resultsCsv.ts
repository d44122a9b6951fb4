/**
 * Typed access to the results CSV the CLI reads and writes. Cell
 * syntax (RFC 4180 quoting, `repr` float values, `k=v;k=v`
 * hyperparameter strings) is defined in docs/formats.md.
 */

import Papa from "papaparse";

export const RESULTS_HEADER = [
  "model",
  "dataset",
  "group",
  "hyperparameters",
  "metric",
  "value",
  "seed",
] as const;

export interface ResultRow {
  model: string;
  dataset: string;
  group: string;
  hyperparameters: Array<[string, string]>;
  metric: string;
  value: number;
  seed: number | null;
}

/** Parses `a=1;b=2` into ordered pairs; empty text gives no pairs. */
export function parseHyperparameters(text: string): Array<[string, string]> {
  if (!text) return [];
  return text.split(";").map((part) => {
    const eq = part.indexOf("=");
    if (eq < 1) throw new Error(`bad hyperparameter cell ${JSON.stringify(text)}`);
    return [part.slice(0, eq), part.slice(eq + 1)];
  });
}

export function formatHyperparameters(pairs: Iterable<readonly [string, string]>): string {
  return Array.from(pairs, ([k, v]) => `${k}=${v}`).join(";");
}

/** Parses a full results CSV; rejects files with an unexpected header. */
export function parseResultsCsv(text: string): ResultRow[] {
  const parsed = Papa.parse<string[]>(text.trimEnd(), { header: false });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0]!;
    throw new Error(`results CSV parse error at row ${first.row}: ${first.message}`);
  }
  const rows = parsed.data;
  const header = rows.shift();
  if (!header || header.join(",") !== RESULTS_HEADER.join(",")) {
    throw new Error(`bad results header ${JSON.stringify(header)}`);
  }
  return rows.map((raw, i) => {
    if (raw.length !== RESULTS_HEADER.length) {
      throw new Error(`row ${i + 1} has ${raw.length} cells, expected ${RESULTS_HEADER.length}`);
    }
    const [model, dataset, group, hyper, metric, value, seed] = raw as [
      string, string, string, string, string, string, string,
    ];
    const parsedValue = Number(value);
    if (!Number.isFinite(parsedValue)) {
      throw new Error(`row ${i + 1}: bad value cell ${JSON.stringify(value)}`);
    }
    return {
      model,
      dataset,
      group,
      hyperparameters: parseHyperparameters(hyper),
      metric,
      value: parsedValue,
      seed: seed === "" ? null : Number(seed),
    };
  });
}

/** The aggregate (`ALL` group) value of one metric, which must be present exactly once. */
export function metricValue(rows: ResultRow[], metric: string, group = "ALL"): number {
  const hits = rows.filter((r) => r.metric === metric && r.group === group);
  if (hits.length !== 1) {
    throw new Error(`expected exactly one ${metric}/${group} row, found ${hits.length}`);
  }
  return hits[0]!.value;
}
