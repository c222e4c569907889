/**
 * Bound entry points: schedule construction, K-RNR closed forms,
 * adaptive K-RNR, and stochastic latent modulation, all over flat
 * 32-bit float buffers. No math is reimplemented here; every result is
 * produced by the native toolkit and round-tripped through its latent
 * archive format.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { BufferView, Dims, decodeLatent, dimsProduct, encodeLatent } from "./archive.js";
import { NativeError, runNative, withTempDir } from "./native.js";

export { BufferView, Dims, decodeLatent, dimsProduct, encodeLatent } from "./archive.js";
export { NativeError } from "./native.js";

export interface ScheduleRow {
  t: number;
  beta: number;
  alphaBar: number;
  snr: number;
}

export interface ScheduleOptions {
  T?: number;
  betaStart?: number;
  betaEnd?: number;
  kind?: "linear" | "scaled_linear";
  zeroTerminal?: boolean;
}

function checkView(view: BufferView, name: string): void {
  const n = dimsProduct(view.dims);
  if (view.data.length !== n) {
    throw new NativeError(
      `${name}: buffer length ${view.data.length} does not match dims product ${n}`,
      "dims",
      -1,
    );
  }
}

function writeView(dir: string, name: string, view: BufferView): string {
  const path = join(dir, name);
  writeFileSync(path, encodeLatent(view));
  return path;
}

function readView(path: string): BufferView {
  return decodeLatent(readFileSync(path));
}

/** Version string of the native toolkit this package is bound to. */
export function nativeVersion(): string {
  return runNative(["--version"]).trim();
}

/** Diffusion schedule table: one row per timestep t in [1, T]. */
export function boundSchedule(options: ScheduleOptions = {}): ScheduleRow[] {
  const args = [
    "schedule",
    "--T", String(options.T ?? 1000),
    "--beta-start", String(options.betaStart ?? 0.00085),
    "--beta-end", String(options.betaEnd ?? 0.012),
    "--kind", options.kind ?? "scaled_linear",
    options.zeroTerminal === false ? "--no-zero-terminal" : "--zero-terminal",
  ];
  const lines = runNative(args).trim().split("\n");
  return lines.slice(1).map((line) => {
    const [t, beta, alphaBar, snr] = line.split(",").map(Number);
    return { t, beta, alphaBar, snr };
  });
}

/** Plain K-RNR closed form: c_x0 * x0 + c_eps * eps_inv at depth k. */
export function boundKrnrClosed(
  x0: BufferView,
  epsInv: BufferView,
  alphaBar: number,
  k: number,
): BufferView {
  return boundKrnr(x0, epsInv, alphaBar, k, 0);
}

/**
 * Adaptive K-RNR (delta >= 1) or the plain closed form (delta = 0),
 * computed by the native toolkit.
 */
export function boundKrnr(
  x0: BufferView,
  epsInv: BufferView,
  alphaBar: number,
  k: number,
  delta: number,
): BufferView {
  checkView(x0, "x0");
  checkView(epsInv, "epsInv");
  return withTempDir((dir) => {
    const out = join(dir, "out.krnr");
    runNative([
      "krnr",
      "--latent", writeView(dir, "x0.krnr", x0),
      "--noise", writeView(dir, "eps.krnr", epsInv),
      "--alpha-bar", String(alphaBar),
      "--k", String(k),
      "--delta", String(delta),
      "--out", out,
    ]);
    return readView(out);
  });
}

/**
 * Stochastic latent modulation: fills occluded cells (m = 1) of both
 * latents from the visible, depth-eligible pool (m = 0, d = 1), using
 * one shared draw per cell. Bit-exact per seed.
 */
export function boundSlm(
  x0: BufferView,
  epsInv: BufferView,
  m: BufferView,
  d: BufferView,
  seed: number,
  perChannel = false,
): [BufferView, BufferView] {
  checkView(x0, "x0");
  checkView(epsInv, "epsInv");
  checkView(m, "m");
  checkView(d, "d");
  return withTempDir((dir) => {
    const outLatent = join(dir, "out_x.krnr");
    const outNoise = join(dir, "out_e.krnr");
    const args = [
      "slm",
      "--latent", writeView(dir, "x0.krnr", x0),
      "--noise", writeView(dir, "eps.krnr", epsInv),
      "--mask", writeView(dir, "m.krnr", m),
      "--depthmask", writeView(dir, "d.krnr", d),
      "--seed", String(seed),
      "--out-latent", outLatent,
      "--out-noise", outNoise,
    ];
    if (perChannel) args.push("--per-channel");
    runNative(args);
    return [readView(outLatent), readView(outNoise)];
  });
}
