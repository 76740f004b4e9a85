import { describe, expect, it } from "vitest";

import { decodeGrayPng, encodeGrayPng } from "../src/png.js";

function pattern(width: number, height: number, fn: (x: number, y: number) => number): Uint8Array {
  const out = new Uint8Array(width * height);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      out[y * width + x] = fn(x, y) & 0xff;
    }
  }
  return out;
}

describe("gray png codec", () => {
  it("encode/decode round trip is exact", async () => {
    const pixels = pattern(17, 9, (x, y) => (x * 31 + y * 57) % 256);
    const png = await encodeGrayPng(pixels, 17, 9);
    const decoded = await decodeGrayPng(png);
    expect(decoded.width).toBe(17);
    expect(decoded.height).toBe(9);
    expect(decoded.pixels).toEqual(pixels);
  });

  it("binary masks survive the trip", async () => {
    const pixels = pattern(32, 32, (x, y) => (x >= 12 && x < 20 && y >= 12 && y < 20 ? 0 : 255));
    const decoded = await decodeGrayPng(await encodeGrayPng(pixels, 32, 32));
    expect(decoded.pixels).toEqual(pixels);
  });

  it("emits a well-formed signature and header", async () => {
    const png = await encodeGrayPng(new Uint8Array([0, 255]), 2, 1);
    expect(Array.from(png.subarray(0, 8))).toEqual([137, 80, 78, 71, 13, 10, 26, 10]);
    // IHDR width/height big-endian
    expect(png[16 + 3]).toBe(2);
    expect(png[20 + 3]).toBe(1);
  });

  it("rejects wrong buffer sizes and non-PNG data", async () => {
    await expect(encodeGrayPng(new Uint8Array(5), 2, 2)).rejects.toThrow();
    await expect(decodeGrayPng(new Uint8Array([1, 2, 3]))).rejects.toThrow();
  });

  it("decodes filtered scanlines (sub/up/average/paeth)", async () => {
    // exercise the unfilter paths by round-tripping through zlib with a
    // hand-built filtered body: encode with each filter type directly
    const width = 6;
    const height = 4;
    const pixels = pattern(width, height, (x, y) => x * 40 + y * 13);
    // rebuild raw scanlines with varied filters, then compress via the
    // same platform deflate the encoder uses
    const raw = new Uint8Array(height * (width + 1));
    const filters = [1, 2, 3, 4];
    for (let y = 0; y < height; y++) {
      const filter = filters[y % filters.length];
      raw[y * (width + 1)] = filter;
      for (let x = 0; x < width; x++) {
        const here = pixels[y * width + x];
        const left = x > 0 ? pixels[y * width + x - 1] : 0;
        const up = y > 0 ? pixels[(y - 1) * width + x] : 0;
        const upLeft = x > 0 && y > 0 ? pixels[(y - 1) * width + x - 1] : 0;
        let encoded = here;
        if (filter === 1) encoded = (here - left) & 0xff;
        if (filter === 2) encoded = (here - up) & 0xff;
        if (filter === 3) encoded = (here - ((left + up) >> 1)) & 0xff;
        if (filter === 4) {
          const p = left + up - upLeft;
          const pa = Math.abs(p - left);
          const pb = Math.abs(p - up);
          const pc = Math.abs(p - upLeft);
          const pred = pa <= pb && pa <= pc ? left : pb <= pc ? up : upLeft;
          encoded = (here - pred) & 0xff;
        }
        raw[y * (width + 1) + 1 + x] = encoded;
      }
    }
    // splice the filtered body into a PNG produced by our encoder
    const template = await encodeGrayPng(pixels, width, height);
    const compressed = new Uint8Array(
      await new Response(
        new Blob([raw as BlobPart]).stream().pipeThrough(new CompressionStream("deflate")),
      ).arrayBuffer(),
    );
    // rebuild: signature + IHDR (copied) + fresh IDAT + IEND
    const ihdr = template.subarray(8, 8 + 12 + 13);
    const crcTable = new Uint32Array(256).map((_, n) => {
      let c = n;
      for (let k = 0; k < 8; k++) c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
      return c >>> 0;
    });
    const crc32 = (bytes: Uint8Array) => {
      let c = 0xffffffff;
      for (const b of bytes) c = crcTable[(c ^ b) & 0xff] ^ (c >>> 8);
      return (c ^ 0xffffffff) >>> 0;
    };
    const u32 = (v: number) => new Uint8Array([(v >>> 24) & 255, (v >>> 16) & 255, (v >>> 8) & 255, v & 255]);
    const tag = new TextEncoder().encode("IDAT");
    const payload = new Uint8Array(4 + compressed.length);
    payload.set(tag, 0);
    payload.set(compressed, 4);
    const iend = new Uint8Array([0, 0, 0, 0, 73, 69, 78, 68, 174, 66, 96, 130]);
    const png = new Uint8Array(8 + ihdr.length + 4 + payload.length + 4 + iend.length);
    let pos = 0;
    for (const part of [template.subarray(0, 8), ihdr, u32(compressed.length), payload, u32(crc32(payload)), iend]) {
      png.set(part, pos);
      pos += part.length;
    }
    const decoded = await decodeGrayPng(png);
    expect(decoded.pixels).toEqual(pixels);
  });
});
