/**
 * Process bridge to the native CLI. Every call shells out to
 * `python3 -m latentdolly <subcommand>` and exchanges latent archives
 * through a per-call temporary directory, so all math runs in exactly
 * one implementation.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

const PYTHON = process.env.LATENTDOLLY_PYTHON ?? "python3";

/** Native failure, tagged with the error category the CLI printed. */
export class NativeError extends Error {
  constructor(
    message: string,
    public readonly category: string,
    public readonly exitCode: number,
  ) {
    super(message);
    this.name = "NativeError";
  }
}

export function runNative(args: string[]): string {
  const proc = spawnSync(PYTHON, ["-m", "latentdolly", ...args], {
    encoding: "utf-8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (proc.error) {
    throw new NativeError(`failed to launch ${PYTHON}: ${proc.error.message}`, "launch", -1);
  }
  if (proc.status !== 0) {
    const line = proc.stderr.trim().split("\n").pop() ?? "";
    // CLI error lines look like: "error (<category>): <message>"
    const m = /^error \(([^)]+)\): (.*)$/.exec(line);
    throw new NativeError(
      m ? m[2] : line || `exit code ${proc.status}`,
      m ? m[1] : "unknown",
      proc.status ?? -1,
    );
  }
  return proc.stdout;
}

export function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "latentdolly-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}
