import { readFileSync, rmSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { afterAll, describe, expect, it } from "vitest";

import {
  assertBoundArray,
  balancedSubsample,
  cliVersion,
  computeClipScore,
  computeFid,
  computePrdc,
  computeVqaScore,
  formatHyperparameters,
  metricValue,
  parseHyperparameters,
  parseResultsCsv,
  readNpy,
  runCli,
  writeNpy,
  type BoundArray,
} from "../src/index";
import { cloud, freshDir, prng } from "./helpers";

const scratch: string[] = [];
afterAll(() => {
  for (const dir of scratch) rmSync(dir, { recursive: true, force: true });
});

function tempDir(label: string): string {
  const dir = freshDir(label);
  scratch.push(dir);
  return dir;
}

describe("npy subset", () => {
  it("round-trips float64 matrices", () => {
    const arr: BoundArray = { data: Float64Array.from([1.5, -2, 3e-9, 4e12, 0.1, 6]), rows: 2, cols: 3 };
    const back = readNpy(writeNpy(arr));
    expect(back.rows).toBe(2);
    expect(back.cols).toBe(3);
    expect(Array.from(back.data)).toEqual(Array.from(arr.data as Float64Array));
  });

  it("pads the header so the payload starts on a 64-byte boundary", () => {
    const bytes = writeNpy({ data: [1, 2, 3, 4], rows: 2, cols: 2 });
    const headerLen = bytes[8]! | (bytes[9]! << 8);
    expect((10 + headerLen) % 64).toBe(0);
  });

  it("widens float32 data on read", () => {
    const arr: BoundArray = { data: Float32Array.from([0.5, 1.25, -3, 8]), rows: 4, cols: 1 };
    const back = readNpy(writeNpy(arr));
    expect(Array.from(back.data)).toEqual([0.5, 1.25, -3, 8]);
  });

  it("rejects column-major files", () => {
    const header = "{'descr': '<f8', 'fortran_order': True, 'shape': (2, 2), }";
    const pad = (64 - ((10 + header.length + 1) % 64)) % 64;
    const text = header + " ".repeat(pad) + "\n";
    const bytes = new Uint8Array(10 + text.length + 32);
    bytes.set([0x93, 0x4e, 0x55, 0x4d, 0x50, 0x59, 1, 0], 0);
    new DataView(bytes.buffer).setUint16(8, text.length, true);
    for (let i = 0; i < text.length; i++) bytes[10 + i] = text.charCodeAt(i);
    expect(() => readNpy(bytes)).toThrow(/column-major/);
  });

  it("rejects malformed bound arrays", () => {
    expect(() => assertBoundArray({ data: [1, 2, 3], rows: 2, cols: 2 })).toThrow(/holds 3 values/);
    expect(() => assertBoundArray({ data: [1, 2], rows: 1, cols: 2, rowMajor: false })).toThrow(
      /column-major/,
    );
    expect(() => assertBoundArray({ data: [], rows: 0, cols: 1 })).toThrow(/rows >= 1/);
    expect(() => writeNpy({ data: [1, NaN], rows: 1, cols: 2 })).toThrow(/row 0, col 1/);
  });
});

describe("results CSV", () => {
  it("parses hyperparameter cells both ways", () => {
    const pairs = parseHyperparameters("guidance=7.5;steps=30");
    expect(pairs).toEqual([
      ["guidance", "7.5"],
      ["steps", "30"],
    ]);
    expect(formatHyperparameters(pairs)).toBe("guidance=7.5;steps=30");
    expect(parseHyperparameters("")).toEqual([]);
  });

  it("round-trips quoted dataset names through the CLI", () => {
    const dir = tempDir("quoted");
    const rand = prng(7);
    writeFileSync(join(dir, "real.npy"), writeNpy(cloud(rand, 12, 3)));
    writeFileSync(join(dir, "gen.npy"), writeNpy(cloud(rand, 12, 3)));
    const out = join(dir, "results.csv");
    runCli([
      "compute", "--metric", "prdc",
      "--real", join(dir, "real.npy"), "--gen", join(dir, "gen.npy"),
      "--model", "m", "--dataset", 'ds,"quoted', "--out", out,
    ]);
    const rows = parseResultsCsv(readFileSync(out, "utf8"));
    expect(rows.length).toBeGreaterThan(0);
    for (const row of rows) expect(row.dataset).toBe('ds,"quoted');
  });

  it("metricValue demands exactly one matching row", () => {
    expect(() => metricValue([], "fid")).toThrow(/found 0/);
  });
});

describe("metric bindings", () => {
  it("reproduces the unit-square manifold values exactly", () => {
    const real: BoundArray = { data: [0, 0, 0, 1, 1, 0, 1, 1], rows: 4, cols: 2 };
    const gen: BoundArray = { data: [0.1, 0, 2, 2], rows: 2, cols: 2 };
    expect(computePrdc(real, gen, { k: 1 })).toEqual({
      precision: 0.5,
      recall: 1.0,
      density: 1.0,
      coverage: 0.5,
    });
  });

  it("matches a direct CLI invocation bit for bit", () => {
    const dir = tempDir("direct");
    const rand = prng(123);
    const real = cloud(rand, 40, 6);
    const gen = cloud(rand, 35, 6, 0.2);
    writeFileSync(join(dir, "real.npy"), writeNpy(real));
    writeFileSync(join(dir, "gen.npy"), writeNpy(gen));

    const outs: string[] = [];
    for (const name of ["a.csv", "b.csv"]) {
      const out = join(dir, name);
      runCli([
        "compute", "--metric", "prdc",
        "--real", join(dir, "real.npy"), "--gen", join(dir, "gen.npy"),
        "--model", "bindings", "--dataset", "adhoc", "--out", out,
      ]);
      outs.push(readFileSync(out, "utf8"));
    }
    expect(outs[0]).toBe(outs[1]); // CLI is deterministic on our bytes

    const viaCli = parseResultsCsv(outs[0]!);
    const viaBinding = computePrdc(real, gen);
    expect(viaBinding.precision).toBe(metricValue(viaCli, "precision"));
    expect(viaBinding.recall).toBe(metricValue(viaCli, "recall"));
    expect(viaBinding.density).toBe(metricValue(viaCli, "density"));
    expect(viaBinding.coverage).toBe(metricValue(viaCli, "coverage"));
  });

  it("computes fid, near zero for identical inputs", () => {
    const rand = prng(9);
    const x = cloud(rand, 60, 5);
    expect(Math.abs(computeFid(x, x))).toBeLessThanOrEqual(1e-9);
    const y = cloud(rand, 60, 5, 0.8);
    expect(computeFid(x, y)).toBeGreaterThan(0);
  });

  it("scores perfectly aligned image/text pairs at the scale cap", () => {
    const image: BoundArray = { data: [1, 0, 0, 2], rows: 2, cols: 2 };
    const text: BoundArray = { data: [3, 0, 0, 0.5], rows: 2, cols: 2 };
    expect(computeClipScore(image, text)).toBe(100);
    expect(computeClipScore(image, text, { scale: 2.5 })).toBe(2.5);
  });

  it("averages vqa probabilities", () => {
    expect(computeVqaScore([0.2, 0.4, 0.9])).toBe((0.2 + 0.4 + 0.9) / 3);
  });

  it("surfaces CLI errors with their stderr", () => {
    const one: BoundArray = { data: [1, 2], rows: 1, cols: 2 };
    const many = cloud(prng(5), 10, 2);
    expect(() => computePrdc(many, one, { k: 3 })).toThrow(/exited with/);
  });
});

describe("subsample binding", () => {
  it("targets the smallest dataset and is deterministic", () => {
    const datasets = [
      { name: "a", size: 40 },
      { name: "b", size: 25 },
      { name: "c", size: 31 },
    ];
    const first = balancedSubsample(datasets, 3);
    const second = balancedSubsample([...datasets].reverse(), 3);
    expect(first.targetSize).toBe(25);
    expect(first.indices["b"]).toEqual(Array.from({ length: 25 }, (_, i) => i));
    expect(first.indices).toEqual(second.indices);
    for (const name of ["a", "c"]) {
      const picks = first.indices[name]!;
      expect(picks.length).toBe(25);
      expect(new Set(picks).size).toBe(25);
      expect([...picks].sort((x, y) => x - y)).toEqual(picks);
    }
  });
});

describe("version", () => {
  it("reports the CLI version", () => {
    expect(cliVersion()).toBe("0.1.0");
  });
});
