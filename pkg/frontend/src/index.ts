/**
 * High-level bindings for the imeval evaluation CLI.
 *
 * Each compute function writes its inputs to a scratch directory in
 * the documented file formats, invokes one CLI subcommand, and parses
 * the results CSV back. Numbers round-trip exactly: the CSV stores
 * float64 `repr` strings and `Number()` parses them to the same bits.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { join, resolve } from "node:path";

import Papa from "papaparse";

import { assertBoundArray, writeNpy, type BoundArray } from "./npy.js";
import { metricValue, parseResultsCsv, type ResultRow } from "./resultsCsv.js";
import { runCli, withTempDir } from "./runner.js";

export { assertBoundArray, readNpy, writeNpy, type BoundArray } from "./npy.js";
export {
  formatHyperparameters,
  metricValue,
  parseHyperparameters,
  parseResultsCsv,
  RESULTS_HEADER,
  type ResultRow,
} from "./resultsCsv.js";
export { pythonExecutable, runCli, withTempDir } from "./runner.js";

/** k-NN manifold metrics of a generated set against a reference set. */
export interface Prdc {
  precision: number;
  recall: number;
  density: number;
  coverage: number;
}

function computeRows(args: string[], inputs: Record<string, BoundArray | Uint8Array | string>): ResultRow[] {
  return withTempDir((dir) => {
    const full = [...args, "--model", "bindings", "--dataset", "adhoc"];
    for (const [name, content] of Object.entries(inputs)) {
      const path = join(dir, name);
      if (content instanceof Uint8Array) writeFileSync(path, content);
      else if (typeof content === "string") writeFileSync(path, content, "utf8");
      else writeFileSync(path, writeNpy(content));
      full.push(`--${name.replace(/\.(npy|csv)$/, "").replaceAll("_", "-")}`, path);
    }
    const out = join(dir, "results.csv");
    full.push("--out", out);
    runCli(full);
    return parseResultsCsv(readFileSync(out, "utf8"));
  });
}

/**
 * Precision/recall/density/coverage with neighborhood size `k`
 * (default 3). Matches the CLI bit for bit: the value cells are parsed
 * from the same CSV the CLI writes.
 */
export function computePrdc(real: BoundArray, gen: BoundArray, opts: { k?: number } = {}): Prdc {
  assertBoundArray(real, "real");
  assertBoundArray(gen, "gen");
  const args = ["compute", "--metric", "prdc"];
  if (opts.k !== undefined) args.push("--k", String(opts.k));
  const rows = computeRows(args, { "real.npy": real, "gen.npy": gen });
  return {
    precision: metricValue(rows, "precision"),
    recall: metricValue(rows, "recall"),
    density: metricValue(rows, "density"),
    coverage: metricValue(rows, "coverage"),
  };
}

/** Frechet distance between Gaussians fitted to the two embedding sets. */
export function computeFid(real: BoundArray, gen: BoundArray): number {
  assertBoundArray(real, "real");
  assertBoundArray(gen, "gen");
  const rows = computeRows(["compute", "--metric", "fid"], {
    "real.npy": real,
    "gen.npy": gen,
  });
  return metricValue(rows, "fid");
}

/** Mean clamped cosine score over row-paired image/text embeddings. */
export function computeClipScore(
  image: BoundArray,
  text: BoundArray,
  opts: { scale?: number } = {},
): number {
  assertBoundArray(image, "image");
  assertBoundArray(text, "text");
  const args = ["compute", "--metric", "clipscore"];
  if (opts.scale !== undefined) args.push("--scale", String(opts.scale));
  const rows = computeRows(args, {
    "image_embeddings.npy": image,
    "text_embeddings.npy": text,
  });
  return metricValue(rows, "clipscore");
}

/** Mean of externally computed per-sample probabilities. */
export function computeVqaScore(scores: ArrayLike<number>): number {
  if (scores.length < 1) throw new Error("need at least one score");
  let csv = "index,score\n";
  for (let i = 0; i < scores.length; i++) csv += `${i},${scores[i]}\n`;
  const rows = computeRows(["compute", "--metric", "vqascore"], { "vqa_scores.csv": csv });
  return metricValue(rows, "vqascore");
}

/** Deterministic same-size index subset for every named dataset. */
export interface SubsampleAssignment {
  targetSize: number;
  /** dataset name -> sorted row indices, all of length targetSize */
  indices: Record<string, number[]>;
}

export function balancedSubsample(
  datasets: Array<{ name: string; size: number }>,
  seed = 0,
): SubsampleAssignment {
  if (datasets.length === 0) throw new Error("need at least one dataset");
  return withTempDir((dir) => {
    const out = join(dir, "subsample.csv");
    const args = ["subsample", "--seed", String(seed), "--out", out];
    for (const { name, size } of datasets) args.push("--dataset", `${name}=${size}`);
    runCli(args);
    const parsed = Papa.parse<[string, string]>(readFileSync(out, "utf8").trimEnd(), {
      header: false,
    });
    const rows = parsed.data;
    const header = rows.shift();
    if (!header || header.join(",") !== "dataset,index") {
      throw new Error(`bad subsample header ${JSON.stringify(header)}`);
    }
    const indices: Record<string, number[]> = {};
    for (const [name, index] of rows) (indices[name] ??= []).push(Number(index));
    const sizes = new Set(Object.values(indices).map((v) => v.length));
    if (sizes.size !== 1) throw new Error("datasets carry differing index counts");
    return { targetSize: [...sizes][0]!, indices };
  });
}

export type ExerciseKind =
  | "tradeoffs"
  | "group_representation"
  | "ranking_robustness"
  | "prompt_types";

export interface ExerciseRun {
  /** Promoted output directory holding results.csv, manifest.json, figures/. */
  outDir: string;
  rows: ResultRow[];
  manifest: Record<string, unknown>;
}

/**
 * Runs one scripted evaluation end to end from a TOML config on disk.
 * Option values override the config, exactly like the CLI flags they
 * map to.
 */
export function runExercise(
  kind: ExerciseKind,
  configPath: string,
  opts: { out: string; seed?: number; metrics?: string[]; k?: number; scale?: number },
): ExerciseRun {
  const args = ["exercise", kind, "--config", configPath, "--out", opts.out];
  if (opts.seed !== undefined) args.push("--seed", String(opts.seed));
  if (opts.metrics !== undefined) args.push("--metrics", opts.metrics.join(","));
  if (opts.k !== undefined) args.push("--k", String(opts.k));
  if (opts.scale !== undefined) args.push("--scale", String(opts.scale));
  runCli(args);
  const outDir = resolve(opts.out);
  return {
    outDir,
    rows: parseResultsCsv(readFileSync(join(outDir, "results.csv"), "utf8")),
    manifest: JSON.parse(readFileSync(join(outDir, "manifest.json"), "utf8")),
  };
}

/** Version string of the CLI behind the bindings. */
export function cliVersion(): string {
  return runCli(["--version"]).stdout.trim();
}
