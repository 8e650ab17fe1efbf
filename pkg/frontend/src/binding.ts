/** Array-in/array-out binding over the native normalization library.
 *
 * Buffers are caller-owned typed arrays; each call marshals them through
 * the library's LCNT wire format and CLI, returns fresh (or caller-
 * supplied) output arrays, and retains nothing. Errors are reported as
 * status codes - a binding call never throws and never takes down the
 * host process on kernel-side failures.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { Dims4, Payload, decodeTensor, elementCount, encodeTensor } from "./lcnt.js";
import { StatusCode, statusFromCli } from "./status.js";

export type Mode = "sliding" | "tiled";
export type FamilyNorm = "gn" | "in" | "ln" | "bn" | "lrn";

export interface LcnOptions {
  cGroup: number;
  p: number;
  q: number;
  mode?: Mode;
  eps?: number;
  gamma?: Float64Array;
  beta?: Float64Array;
  threads?: number;
  /** Python interpreter hosting the native library (default: LCNORM_PYTHON
   * env var, then "python3"). */
  python?: string;
}

export interface ForwardResult {
  status: StatusCode;
  message?: string;
  y?: Payload;
  mean?: Float64Array;
  variance?: Float64Array;
}

export interface BackwardOptions extends LcnOptions {
  savedMean?: Float64Array;
  savedVar?: Float64Array;
}

export interface BackwardResult {
  status: StatusCode;
  message?: string;
  gradX?: Payload;
  gradGamma?: Float64Array;
  gradBeta?: Float64Array;
}

function pythonBin(opts: { python?: string }): string {
  return opts.python ?? process.env.LCNORM_PYTHON ?? "python3";
}

function fail(status: StatusCode, message: string): { status: StatusCode; message: string } {
  return { status, message };
}

function validateInput(x: Payload, dims: Dims4): { status: StatusCode; message: string } | null {
  for (const d of [dims.b, dims.c, dims.h, dims.w]) {
    if (!Number.isInteger(d) || d < 1) {
      return fail(StatusCode.ShapeError, `bad dimension ${d}`);
    }
  }
  if (x.length !== elementCount(dims)) {
    return fail(
      StatusCode.ShapeError,
      `buffer length ${x.length} != dims product ${elementCount(dims)}`
    );
  }
  for (let i = 0; i < x.length; i++) {
    if (!Number.isFinite(x[i])) {
      return fail(StatusCode.DataError, `non-finite element at flat index ${i}`);
    }
  }
  return null;
}

function validateAffine(
  dims: Dims4,
  gamma?: Float64Array,
  beta?: Float64Array
): { status: StatusCode; message: string } | null {
  for (const [name, vec] of [
    ["gamma", gamma],
    ["beta", beta],
  ] as const) {
    if (vec !== undefined && vec.length !== dims.c) {
      return fail(
        StatusCode.ShapeError,
        `${name} has ${vec.length} values for ${dims.c} channels`
      );
    }
  }
  return null;
}

function writeChannelVector(dir: string, name: string, dims: Dims4, vec: Float64Array): string {
  const path = join(dir, name);
  writeFileSync(path, encodeTensor({ b: 1, c: dims.c, h: 1, w: 1 }, vec));
  return path;
}

interface CliRun {
  status: StatusCode;
  message?: string;
}

function runCli(python: string, args: string[]): CliRun {
  const proc = spawnSync(python, ["-m", "lcnorm", ...args], {
    encoding: "utf8",
    timeout: 120_000,
  });
  if (proc.error) {
    return fail(StatusCode.InternalError, `failed to spawn ${python}: ${proc.error.message}`);
  }
  if (proc.status !== 0) {
    return {
      status: statusFromCli(proc.status ?? -1, proc.stderr ?? ""),
      message: (proc.stderr ?? "").trim().slice(-500),
    };
  }
  return { status: StatusCode.Ok };
}

function readTensorFile(path: string): { dims: Dims4; data: Payload } {
  return decodeTensor(new Uint8Array(readFileSync(path)));
}

function commonFlags(opts: LcnOptions): string[] {
  const flags = [
    "--c-group", String(opts.cGroup),
    "--window", `${opts.p}x${opts.q}`,
    "--mode", opts.mode ?? "sliding",
    "--eps", String(opts.eps ?? 1e-5),
  ];
  if (opts.threads !== undefined) flags.push("--threads", String(opts.threads));
  return flags;
}

/** Windowed normalization forward over a caller-owned buffer. */
export function lcnForward(x: Payload, dims: Dims4, opts: LcnOptions): ForwardResult {
  try {
    const bad =
      validateInput(x, dims) ??
      validateAffine(dims, opts.gamma, opts.beta) ??
      (opts.cGroup < 1 || dims.c % opts.cGroup !== 0
        ? fail(StatusCode.GroupError, `c_group ${opts.cGroup} does not partition ${dims.c}`)
        : null) ??
      (opts.p < 1 || opts.q < 1
        ? fail(StatusCode.RangeError, `window ${opts.p}x${opts.q} invalid`)
        : null);
    if (bad) return bad;

    const dir = mkdtempSync(join(tmpdir(), "lcnorm-"));
    try {
      const input = join(dir, "x.lcnt");
      const output = join(dir, "y.lcnt");
      const statsPrefix = join(dir, "st");
      writeFileSync(input, encodeTensor(dims, x));
      const args = [
        "apply", "--input", input, "--output", output, "--norm", "lcn",
        ...commonFlags(opts), "--stats", statsPrefix,
      ];
      if (opts.gamma) args.push("--gamma", writeChannelVector(dir, "g.lcnt", dims, opts.gamma));
      if (opts.beta) args.push("--beta", writeChannelVector(dir, "b.lcnt", dims, opts.beta));
      const run = runCli(pythonBin(opts), args);
      if (run.status !== StatusCode.Ok) return run;
      return {
        status: StatusCode.Ok,
        y: readTensorFile(output).data,
        mean: readTensorFile(`${statsPrefix}.mean.lcnt`).data as Float64Array,
        variance: readTensorFile(`${statsPrefix}.var.lcnt`).data as Float64Array,
      };
    } finally {
      rmSync(dir, { recursive: true, force: true });
    }
  } catch (err) {
    return fail(StatusCode.InternalError, String(err));
  }
}

/** Windowed normalization backward; saved statistics (from a matching
 * forward call) are passed through to the native backward. */
export function lcnBackward(
  gradY: Payload,
  x: Payload,
  dims: Dims4,
  opts: BackwardOptions
): BackwardResult {
  try {
    const n = elementCount(dims);
    const bad =
      validateInput(x, dims) ??
      validateInput(gradY, dims) ??
      validateAffine(dims, opts.gamma, opts.beta) ??
      (opts.cGroup < 1 || dims.c % opts.cGroup !== 0
        ? fail(StatusCode.GroupError, `c_group ${opts.cGroup} does not partition ${dims.c}`)
        : null);
    if (bad) return bad;
    if ((opts.savedMean === undefined) !== (opts.savedVar === undefined)) {
      return fail(StatusCode.StateError, "savedMean and savedVar must come together");
    }
    if (opts.savedMean && (opts.savedMean.length !== n || opts.savedVar!.length !== n)) {
      return fail(
        StatusCode.StateError,
        `saved stats have ${opts.savedMean.length}/${opts.savedVar!.length} values, need ${n}`
      );
    }

    const dir = mkdtempSync(join(tmpdir(), "lcnorm-"));
    try {
      const input = join(dir, "x.lcnt");
      const gy = join(dir, "gy.lcnt");
      const gx = join(dir, "gx.lcnt");
      const gg = join(dir, "gg.lcnt");
      const gb = join(dir, "gb.lcnt");
      writeFileSync(input, encodeTensor(dims, x));
      writeFileSync(gy, encodeTensor(dims, gradY));
      const args = [
        "grad", "--input", input, "--grad-output", gy, "--norm", "lcn",
        ...commonFlags(opts),
        "--out-grad-x", gx, "--out-grad-gamma", gg, "--out-grad-beta", gb,
      ];
      if (opts.gamma) args.push("--gamma", writeChannelVector(dir, "g.lcnt", dims, opts.gamma));
      if (opts.beta) args.push("--beta", writeChannelVector(dir, "b.lcnt", dims, opts.beta));
      if (opts.savedMean && opts.savedVar) {
        const sm = join(dir, "sm.lcnt");
        const sv = join(dir, "sv.lcnt");
        writeFileSync(sm, encodeTensor(dims, opts.savedMean));
        writeFileSync(sv, encodeTensor(dims, opts.savedVar));
        args.push("--saved-mean", sm, "--saved-var", sv);
      }
      const run = runCli(pythonBin(opts), args);
      if (run.status !== StatusCode.Ok) return run;
      return {
        status: StatusCode.Ok,
        gradX: readTensorFile(gx).data,
        gradGamma: readTensorFile(gg).data as Float64Array,
        gradBeta: readTensorFile(gb).data as Float64Array,
      };
    } finally {
      rmSync(dir, { recursive: true, force: true });
    }
  } catch (err) {
    return fail(StatusCode.InternalError, String(err));
  }
}

export interface FamilyOptions {
  /** Channels per group (gn only). */
  cGroup?: number;
  eps?: number;
  /** Square window side (lrn only). */
  window?: number;
  gamma?: Float64Array;
  beta?: Float64Array;
  threads?: number;
  python?: string;
}

/** Reference-family forward (group/instance/layer/batch/contrast norms). */
export function familyForward(
  norm: FamilyNorm,
  x: Payload,
  dims: Dims4,
  opts: FamilyOptions = {}
): ForwardResult {
  try {
    const bad = validateInput(x, dims) ?? validateAffine(dims, opts.gamma, opts.beta);
    if (bad) return bad;

    const dir = mkdtempSync(join(tmpdir(), "lcnorm-"));
    try {
      const input = join(dir, "x.lcnt");
      const output = join(dir, "y.lcnt");
      const statsPrefix = join(dir, "st");
      writeFileSync(input, encodeTensor(dims, x));
      const args = ["apply", "--input", input, "--output", output, "--norm", norm];
      if (norm === "gn") args.push("--c-group", String(opts.cGroup ?? 2));
      if (norm !== "lrn" && opts.eps !== undefined) args.push("--eps", String(opts.eps));
      if (norm === "lrn" && opts.window !== undefined) {
        args.push("--window", `${opts.window}x${opts.window}`);
      }
      if (norm !== "lrn") args.push("--stats", statsPrefix);
      if (opts.gamma) args.push("--gamma", writeChannelVector(dir, "g.lcnt", dims, opts.gamma));
      if (opts.beta) args.push("--beta", writeChannelVector(dir, "b.lcnt", dims, opts.beta));
      if (opts.threads !== undefined) args.push("--threads", String(opts.threads));
      const run = runCli(pythonBin(opts), args);
      if (run.status !== StatusCode.Ok) return run;
      const result: ForwardResult = {
        status: StatusCode.Ok,
        y: readTensorFile(output).data,
      };
      if (norm !== "lrn") {
        result.mean = readTensorFile(`${statsPrefix}.mean.lcnt`).data as Float64Array;
        result.variance = readTensorFile(`${statsPrefix}.var.lcnt`).data as Float64Array;
      }
      return result;
    } finally {
      rmSync(dir, { recursive: true, force: true });
    }
  } catch (err) {
    return fail(StatusCode.InternalError, String(err));
  }
}
