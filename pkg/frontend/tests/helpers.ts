/** Shared test utilities: a tiny seeded PRNG and fixture builders. */

import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { writeNpy, type BoundArray } from "../src/npy";

/** mulberry32: deterministic floats in [0, 1) from a 32-bit seed. */
export function prng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function cloud(rand: () => number, rows: number, cols: number, shift = 0): BoundArray {
  const data = new Float64Array(rows * cols);
  for (let i = 0; i < data.length; i++) data[i] = rand() * 2 - 1 + shift;
  return { data, rows, cols, rowMajor: true };
}

export function scoreCsv(values: number[]): string {
  let text = "index,score\n";
  values.forEach((v, i) => {
    text += `${i},${v}\n`;
  });
  return text;
}

export function freshDir(label: string): string {
  return mkdtempSync(join(tmpdir(), `imeval-${label}-`));
}

/**
 * Writes a minimal but complete sweep-exercise input tree (reference
 * embeddings, two sweep points with generated embeddings and VQA
 * scores, and the TOML config) and returns the config path.
 */
export function buildTradeoffsFixture(dir: string, n = 24, d = 4): string {
  const rand = prng(42);
  writeFileSync(join(dir, "real.npy"), writeNpy(cloud(rand, n, d)));
  const lines = [
    'kind = "tradeoffs"',
    'model = "gen-a"',
    'dataset = "prompts"',
    'axis = "guidance"',
    'real_embeddings = "real.npy"',
    "seed = 5",
  ];
  const values = ["2.0", "4.5"];
  values.forEach((value, p) => {
    writeFileSync(join(dir, `p${p}_gen.npy`), writeNpy(cloud(rand, n, d, 0.3 * (1 - p))));
    const vqa = Array.from({ length: n }, () => 0.3 + 0.6 * rand());
    writeFileSync(join(dir, `p${p}_vqa.csv`), scoreCsv(vqa), "utf8");
    lines.push("", "[[points]]", `value = "${value}"`);
    lines.push(`gen_embeddings = "p${p}_gen.npy"`);
    lines.push(`vqa_scores = "p${p}_vqa.csv"`);
  });
  const config = join(dir, "tradeoffs.toml");
  writeFileSync(config, lines.join("\n") + "\n", "utf8");
  return config;
}
