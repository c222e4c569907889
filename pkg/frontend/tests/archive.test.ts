import { describe, expect, it } from "vitest";

import { BufferView, Dims, decodeLatent, dimsProduct, encodeLatent } from "../src/archive.js";

const DIMS: Dims = [1, 2, 3, 4, 5];

function ramp(dims: Dims): BufferView {
  const n = dimsProduct(dims);
  const data = new Float32Array(n);
  for (let i = 0; i < n; i++) data[i] = i / 7;
  return { data, dims };
}

describe("latent archive codec", () => {
  it("round trips bit-exactly", () => {
    const view = ramp(DIMS);
    const back = decodeLatent(encodeLatent(view));
    expect(back.dims).toEqual(DIMS);
    expect(Buffer.from(back.data.buffer).equals(Buffer.from(view.data.buffer))).toBe(true);
  });

  it("writes the documented header layout", () => {
    const buf = encodeLatent(ramp(DIMS));
    expect(buf.subarray(0, 4).toString("ascii")).toBe("KRNR");
    expect(buf.readUInt16LE(4)).toBe(1);
    expect(buf.readUInt16LE(6)).toBe(0);
    for (let i = 0; i < 5; i++) expect(buf.readUInt32LE(8 + 4 * i)).toBe(DIMS[i]);
    expect(buf.length).toBe(28 + dimsProduct(DIMS) * 4);
  });

  it("reads float64 archives", () => {
    const n = dimsProduct(DIMS);
    const buf = Buffer.alloc(28 + n * 8);
    buf.write("KRNR", 0, "ascii");
    buf.writeUInt16LE(1, 4);
    buf.writeUInt16LE(1, 6); // float64 tag
    DIMS.forEach((d, i) => buf.writeUInt32LE(d, 8 + 4 * i));
    for (let i = 0; i < n; i++) buf.writeDoubleLE(i * 0.5, 28 + i * 8);
    const view = decodeLatent(buf);
    expect(view.data[4]).toBe(2);
  });

  it("rejects bad magic, bad version, and truncation", () => {
    const good = encodeLatent(ramp(DIMS));
    const badMagic = Buffer.from(good);
    badMagic.write("NOPE", 0, "ascii");
    expect(() => decodeLatent(badMagic)).toThrow(/magic/);
    const badVersion = Buffer.from(good);
    badVersion.writeUInt16LE(9, 4);
    expect(() => decodeLatent(badVersion)).toThrow(/version/);
    expect(() => decodeLatent(good.subarray(0, good.length - 4))).toThrow(/payload/);
    expect(() => decodeLatent(good.subarray(0, 10))).toThrow(/short/);
  });

  it("rejects length/dims mismatch on encode", () => {
    expect(() => encodeLatent({ data: new Float32Array(3), dims: DIMS })).toThrow(/dims/);
  });
});
