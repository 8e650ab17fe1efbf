import { describe, expect, it } from "vitest";

import { HEADER_SIZE, LcntError, decodeTensor, encodeTensor } from "../src/lcnt.js";
import { uniform01 } from "./helpers.js";

describe("LCNT wire format", () => {
  it("has a 14-byte header", () => {
    expect(HEADER_SIZE).toBe(14);
    const bytes = encodeTensor({ b: 1, c: 1, h: 1, w: 1 }, new Float32Array([1]));
    expect(bytes.length).toBe(14 + 4);
    expect(String.fromCharCode(...bytes.slice(0, 4))).toBe("LCNT");
  });

  it("round-trips float64 bit-exactly", () => {
    const dims = { b: 2, c: 3, h: 4, w: 5 };
    const data = uniform01(99, 120);
    const back = decodeTensor(encodeTensor(dims, data));
    expect(back.dims).toEqual(dims);
    expect(back.data).toBeInstanceOf(Float64Array);
    expect([...back.data]).toEqual([...data]);
  });

  it("round-trips float32", () => {
    const dims = { b: 1, c: 2, h: 2, w: 2 };
    const data = new Float32Array(uniform01(7, 8));
    const back = decodeTensor(encodeTensor(dims, data));
    expect(back.data).toBeInstanceOf(Float32Array);
    expect([...back.data]).toEqual([...data]);
  });

  it("rejects length mismatches and bad headers", () => {
    expect(() => encodeTensor({ b: 1, c: 1, h: 1, w: 2 }, new Float64Array(3))).toThrow(
      LcntError
    );
    const good = encodeTensor({ b: 1, c: 1, h: 1, w: 1 }, new Float64Array([0.5]));
    const badMagic = new Uint8Array(good);
    badMagic[0] = 0x58;
    expect(() => decodeTensor(badMagic)).toThrow(LcntError);
    expect(() => decodeTensor(good.slice(0, good.length - 1))).toThrow(LcntError);
  });
});
