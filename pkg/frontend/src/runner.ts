/**
 * Subprocess bridge to the evaluation CLI. Everything the bindings do
 * goes through `python3 -m imeval` plus the documented file formats;
 * there is no other coupling to the Python package.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

/** Interpreter used to launch the CLI; override with IMEVAL_PYTHON. */
export function pythonExecutable(): string {
  return process.env.IMEVAL_PYTHON || "python3";
}

export interface CliResult {
  stdout: string;
  stderr: string;
}

/** Runs one CLI invocation, throwing with stderr attached on failure. */
export function runCli(args: string[], cwd?: string): CliResult {
  const python = pythonExecutable();
  const proc = spawnSync(python, ["-m", "imeval", ...args], {
    cwd,
    encoding: "utf8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (proc.error) {
    throw new Error(`failed to launch ${python}: ${proc.error.message}`);
  }
  if (proc.status !== 0) {
    const head = args.slice(0, 2).join(" ");
    throw new Error(`imeval ${head} exited with ${proc.status}:\n${proc.stderr}`);
  }
  return { stdout: proc.stdout, stderr: proc.stderr };
}

/** Creates a scratch directory, hands it to `fn`, and always cleans up. */
export function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "imeval-bind-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}
