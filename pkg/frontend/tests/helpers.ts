import { spawnSync } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { Dims4, Payload, encodeTensor } from "../src/lcnt.js";

export const PYTHON = process.env.LCNORM_PYTHON ?? "python3";

/** Counter-based SplitMix64, same construction as the library's generator:
 * element k of the stream is mix64(seed + (k+1) * golden). */
const MASK = (1n << 64n) - 1n;
const GOLDEN = 0x9e3779b97f4a7c15n;

function mix64(z: bigint): bigint {
  z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK;
  z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK;
  return z ^ (z >> 31n);
}

export function uniform01(seed: number, count: number, offset = 0): Float64Array {
  const out = new Float64Array(count);
  const s = BigInt(seed) & MASK;
  for (let k = 0; k < count; k++) {
    const z = mix64((s + BigInt(offset + k + 1) * GOLDEN) & MASK);
    out[k] = Number(z >> 11n) * 2 ** -53;
  }
  return out;
}

export class CaseRng {
  private k = 0;
  constructor(private seed: number) {}

  next(): number {
    const s = BigInt(this.seed) & MASK;
    const z = mix64((s + BigInt(++this.k) * GOLDEN) & MASK);
    return Number(z >> 11n) * 2 ** -53;
  }

  pick<T>(options: readonly T[]): T {
    return options[Math.floor(this.next() * options.length)];
  }

  int(lo: number, hi: number): number {
    return lo + Math.floor(this.next() * (hi - lo + 1));
  }
}

export function bitsEqual(a: Payload | undefined, b: Payload | undefined): boolean {
  if (a === undefined || b === undefined) return false;
  if (a.constructor !== b.constructor || a.length !== b.length) return false;
  const ua = new Uint8Array(a.buffer, a.byteOffset, a.byteLength);
  const ub = new Uint8Array(b.buffer, b.byteOffset, b.byteLength);
  for (let i = 0; i < ua.length; i++) {
    if (ua[i] !== ub[i]) return false;
  }
  return true;
}

export function makeCaseDir(): string {
  return mkdtempSync(join(tmpdir(), "lcnorm-cases-"));
}

export function writeTensorFile(dir: string, name: string, dims: Dims4, data: Payload): string {
  const path = join(dir, name);
  writeFileSync(path, encodeTensor(dims, data));
  return path;
}

/** Run the in-process reference script once over a manifest of cases. */
export function runNativeRef(dir: string, cases: object[]): void {
  const manifest = join(dir, "manifest.json");
  writeFileSync(manifest, JSON.stringify({ cases }));
  const proc = spawnSync(
    PYTHON,
    [join(import.meta.dirname, "native_ref.py"), manifest],
    { encoding: "utf8", timeout: 300_000 }
  );
  if (proc.status !== 0) {
    throw new Error(`native_ref failed: ${proc.stderr}`);
  }
}
