/**
 * Minimal 8-bit grayscale PNG codec.
 *
 * The mask convention is byte 0 = occluded, byte 255 = reliable — the
 * same convention the server reads and writes. Compression uses the
 * platform's CompressionStream/DecompressionStream ("deflate" = zlib),
 * available in every modern browser and in Node 18+.
 */

const SIGNATURE = new Uint8Array([137, 80, 78, 71, 13, 10, 26, 10]);

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(bytes: Uint8Array): number {
  let c = 0xffffffff;
  for (let i = 0; i < bytes.length; i++) {
    c = CRC_TABLE[(c ^ bytes[i]) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function u32be(value: number): Uint8Array {
  return new Uint8Array([(value >>> 24) & 0xff, (value >>> 16) & 0xff, (value >>> 8) & 0xff, value & 0xff]);
}

function concat(parts: Uint8Array[]): Uint8Array {
  const total = parts.reduce((n, p) => n + p.length, 0);
  const out = new Uint8Array(total);
  let pos = 0;
  for (const p of parts) {
    out.set(p, pos);
    pos += p.length;
  }
  return out;
}

function chunk(type: string, body: Uint8Array): Uint8Array {
  const tag = new TextEncoder().encode(type);
  const payload = concat([tag, body]);
  return concat([u32be(body.length), payload, u32be(crc32(payload))]);
}

async function pipeThrough(bytes: Uint8Array, stream: CompressionStream | DecompressionStream): Promise<Uint8Array> {
  const source = new Blob([bytes as BlobPart]).stream().pipeThrough(stream);
  const buffer = await new Response(source).arrayBuffer();
  return new Uint8Array(buffer);
}

export async function encodeGrayPng(pixels: Uint8Array, width: number, height: number): Promise<Uint8Array> {
  if (pixels.length !== width * height) {
    throw new Error(`pixel buffer is ${pixels.length}, expected ${width * height}`);
  }
  const raw = new Uint8Array(height * (width + 1));
  for (let y = 0; y < height; y++) {
    raw[y * (width + 1)] = 0; // filter: None
    raw.set(pixels.subarray(y * width, (y + 1) * width), y * (width + 1) + 1);
  }
  const compressed = await pipeThrough(raw, new CompressionStream("deflate"));
  const ihdr = new Uint8Array(13);
  ihdr.set(u32be(width), 0);
  ihdr.set(u32be(height), 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 0; // color type: grayscale
  return concat([SIGNATURE, chunk("IHDR", ihdr), chunk("IDAT", compressed), chunk("IEND", new Uint8Array(0))]);
}

export interface GrayImage {
  width: number;
  height: number;
  pixels: Uint8Array;
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

/** Decode an 8-bit grayscale, non-interlaced PNG (any scanline filters). */
export async function decodeGrayPng(blob: Uint8Array): Promise<GrayImage> {
  for (let i = 0; i < SIGNATURE.length; i++) {
    if (blob[i] !== SIGNATURE[i]) throw new Error("not a PNG");
  }
  let pos = 8;
  let width = 0;
  let height = 0;
  const idat: Uint8Array[] = [];
  while (pos < blob.length) {
    const view = new DataView(blob.buffer, blob.byteOffset + pos);
    const length = view.getUint32(0);
    const type = new TextDecoder().decode(blob.subarray(pos + 4, pos + 8));
    const body = blob.subarray(pos + 8, pos + 8 + length);
    if (type === "IHDR") {
      const hv = new DataView(body.buffer, body.byteOffset);
      width = hv.getUint32(0);
      height = hv.getUint32(4);
      if (body[8] !== 8 || body[9] !== 0) throw new Error("only 8-bit grayscale PNGs are supported");
      if (body[12] !== 0) throw new Error("interlaced PNGs are not supported");
    } else if (type === "IDAT") {
      idat.push(body);
    } else if (type === "IEND") {
      break;
    }
    pos += 12 + length;
  }
  const raw = await pipeThrough(concat(idat), new DecompressionStream("deflate"));
  const stride = width + 1;
  if (raw.length < stride * height) throw new Error("truncated PNG data");
  const pixels = new Uint8Array(width * height);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * stride];
    const line = raw.subarray(y * stride + 1, y * stride + 1 + width);
    const out = pixels.subarray(y * width, (y + 1) * width);
    const prev = y > 0 ? pixels.subarray((y - 1) * width, y * width) : null;
    for (let x = 0; x < width; x++) {
      const left = x > 0 ? out[x - 1] : 0;
      const up = prev ? prev[x] : 0;
      const upLeft = prev && x > 0 ? prev[x - 1] : 0;
      let value = line[x];
      switch (filter) {
        case 0:
          break;
        case 1:
          value = (value + left) & 0xff;
          break;
        case 2:
          value = (value + up) & 0xff;
          break;
        case 3:
          value = (value + ((left + up) >> 1)) & 0xff;
          break;
        case 4:
          value = (value + paeth(left, up, upLeft)) & 0xff;
          break;
        default:
          throw new Error(`unsupported scanline filter ${filter}`);
      }
      out[x] = value;
    }
  }
  return { width, height, pixels };
}
