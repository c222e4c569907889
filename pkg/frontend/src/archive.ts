/**
 * Latent archive codec (magic "KRNR", version 1).
 *
 * Layout, all integers little-endian:
 *   bytes 0-3   magic "KRNR"
 *   bytes 4-5   version (u16), currently 1
 *   bytes 6-7   dtype tag (u16): 0 = float32 LE, 1 = float64 LE
 *   bytes 8-27  dims B, F, C, H, W (5 x u32)
 *   bytes 28-   raw row-major payload
 */

export type Dims = [number, number, number, number, number];

export interface BufferView {
  data: Float32Array;
  dims: Dims;
}

const MAGIC = 0x4b524e52; // "KRNR" big-endian read
export const ARCHIVE_VERSION = 1;
const HEADER_BYTES = 28;

export function dimsProduct(dims: Dims): number {
  return dims.reduce((a, b) => a * b, 1);
}

export function encodeLatent(view: BufferView): Buffer {
  const n = dimsProduct(view.dims);
  if (view.data.length !== n) {
    throw new Error(`buffer length ${view.data.length} does not match dims product ${n}`);
  }
  const buf = Buffer.alloc(HEADER_BYTES + n * 4);
  buf.write("KRNR", 0, "ascii");
  buf.writeUInt16LE(ARCHIVE_VERSION, 4);
  buf.writeUInt16LE(0, 6); // float32 tag
  view.dims.forEach((d, i) => buf.writeUInt32LE(d, 8 + 4 * i));
  Buffer.from(view.data.buffer, view.data.byteOffset, n * 4).copy(buf, HEADER_BYTES);
  return buf;
}

export function decodeLatent(raw: Buffer): BufferView {
  if (raw.length < HEADER_BYTES) {
    throw new Error(`file too short for a latent header (${raw.length} bytes)`);
  }
  if (raw.readUInt32BE(0) !== MAGIC) {
    throw new Error(`bad magic at offset 0: ${raw.subarray(0, 4).toString("ascii")}`);
  }
  const version = raw.readUInt16LE(4);
  if (version !== ARCHIVE_VERSION) {
    throw new Error(`unsupported archive version ${version}`);
  }
  const tag = raw.readUInt16LE(6);
  if (tag !== 0 && tag !== 1) {
    throw new Error(`unknown dtype tag ${tag}`);
  }
  const dims = [0, 1, 2, 3, 4].map((i) => raw.readUInt32LE(8 + 4 * i)) as Dims;
  const n = dimsProduct(dims);
  const itemSize = tag === 0 ? 4 : 8;
  const payload = raw.subarray(HEADER_BYTES);
  if (payload.length !== n * itemSize) {
    throw new Error(`payload is ${payload.length} bytes, header promises ${n * itemSize}`);
  }
  let data: Float32Array;
  if (tag === 0) {
    data = new Float32Array(n);
    for (let i = 0; i < n; i++) data[i] = payload.readFloatLE(i * 4);
  } else {
    data = new Float32Array(n);
    for (let i = 0; i < n; i++) data[i] = payload.readDoubleLE(i * 8);
  }
  return { data, dims };
}
