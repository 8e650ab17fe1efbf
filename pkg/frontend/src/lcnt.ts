/** The LCNT binary tensor format: 14-byte little-endian header (magic
 * "LCNT", version 1, dtype code, four uint16 dims) followed by the payload
 * in row-major order with W fastest. This is the wire format the binding
 * uses to exchange buffers with the native library. */

export interface Dims4 {
  b: number;
  c: number;
  h: number;
  w: number;
}

export type Payload = Float32Array | Float64Array;

export const HEADER_SIZE = 14;
const MAGIC = [0x4c, 0x43, 0x4e, 0x54]; // "LCNT"
const VERSION = 1;

export function elementCount(dims: Dims4): number {
  return dims.b * dims.c * dims.h * dims.w;
}

function dtypeCode(data: Payload): 0 | 1 {
  return data instanceof Float32Array ? 0 : 1;
}

export class LcntError extends Error {}

export function encodeTensor(dims: Dims4, data: Payload): Uint8Array {
  const n = elementCount(dims);
  if (data.length !== n) {
    throw new LcntError(`payload length ${data.length} != dims product ${n}`);
  }
  for (const d of [dims.b, dims.c, dims.h, dims.w]) {
    if (!Number.isInteger(d) || d < 1 || d > 0xffff) {
      throw new LcntError(`dimension ${d} out of range`);
    }
  }
  const itemSize = data.BYTES_PER_ELEMENT;
  const out = new Uint8Array(HEADER_SIZE + n * itemSize);
  const view = new DataView(out.buffer);
  MAGIC.forEach((byte, i) => view.setUint8(i, byte));
  view.setUint8(4, VERSION);
  view.setUint8(5, dtypeCode(data));
  view.setUint16(6, dims.b, true);
  view.setUint16(8, dims.c, true);
  view.setUint16(10, dims.h, true);
  view.setUint16(12, dims.w, true);
  // copy elementwise through a DataView so the payload is little-endian
  // regardless of the host's byte order
  for (let i = 0; i < n; i++) {
    if (itemSize === 4) {
      view.setFloat32(HEADER_SIZE + i * 4, data[i], true);
    } else {
      view.setFloat64(HEADER_SIZE + i * 8, data[i], true);
    }
  }
  return out;
}

export function decodeTensor(bytes: Uint8Array): { dims: Dims4; data: Payload } {
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  if (bytes.length < 4 || MAGIC.some((byte, i) => view.getUint8(i) !== byte)) {
    throw new LcntError("bad magic");
  }
  if (bytes.length < HEADER_SIZE) {
    throw new LcntError("header truncated");
  }
  if (view.getUint8(4) !== VERSION) {
    throw new LcntError(`unsupported version ${view.getUint8(4)}`);
  }
  const code = view.getUint8(5);
  if (code !== 0 && code !== 1) {
    throw new LcntError(`unknown dtype code ${code}`);
  }
  const dims: Dims4 = {
    b: view.getUint16(6, true),
    c: view.getUint16(8, true),
    h: view.getUint16(10, true),
    w: view.getUint16(12, true),
  };
  const n = elementCount(dims);
  const itemSize = code === 0 ? 4 : 8;
  if (bytes.length !== HEADER_SIZE + n * itemSize) {
    throw new LcntError(
      `payload is ${bytes.length - HEADER_SIZE} bytes, expected ${n * itemSize}`
    );
  }
  const data = code === 0 ? new Float32Array(n) : new Float64Array(n);
  for (let i = 0; i < n; i++) {
    data[i] =
      itemSize === 4
        ? view.getFloat32(HEADER_SIZE + i * 4, true)
        : view.getFloat64(HEADER_SIZE + i * 8, true);
  }
  return { dims, data };
}
