/** Tiny PNG codec for tests: 8-bit RGB/gray, no interlace.
 *
 * The encoder writes filter-0 rows; the decoder reconstructs all five
 * standard filters so it can read Pillow-encoded service responses.
 */

import { deflateSync, inflateSync } from "node:zlib";

const SIGNATURE = Uint8Array.from([137, 80, 78, 71, 13, 10, 26, 10]);

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(data: Uint8Array): number {
  let crc = 0xffffffff;
  for (const byte of data) crc = CRC_TABLE[(crc ^ byte) & 0xff]! ^ (crc >>> 8);
  return (crc ^ 0xffffffff) >>> 0;
}

function chunk(type: string, data: Uint8Array): Uint8Array {
  const out = new Uint8Array(12 + data.length );
  const view = new DataView(out.buffer);
  view.setUint32(0, data.length);
  for (let i = 0; i < 4; i++) out[4 + i] = type.charCodeAt(i);
  out.set(data, 8);
  view.setUint32(8 + data.length, crc32(out.subarray(4, 8 + data.length)));
  return out;
}

export interface RgbImage {
  width: number;
  height: number;
  /** Row-major RGB triples, length = width * height * 3. */
  pixels: Uint8Array;
}

export function encodePng(img: RgbImage): Uint8Array {
  const { width, height, pixels } = img;
  const ihdr = new Uint8Array(13);
  const view = new DataView(ihdr.buffer);
  view.setUint32(0, width);
  view.setUint32(4, height);
  ihdr.set([8, 2, 0, 0, 0], 8);
  const stride = width * 3;
  const raw = new Uint8Array((stride + 1) * height);
  for (let y = 0; y < height; y++) {
    raw[y * (stride + 1)] = 0;
    raw.set(pixels.subarray(y * stride, (y + 1) * stride), y * (stride + 1) + 1);
  }
  const idat = new Uint8Array(deflateSync(raw));
  const parts = [
    SIGNATURE,
    chunk("IHDR", ihdr),
    chunk("IDAT", idat),
    chunk("IEND", new Uint8Array(0)),
  ];
  const total = parts.reduce((n, p) => n + p.length, 0);
  const out = new Uint8Array(total);
  let off = 0;
  for (const part of parts) {
    out.set(part, off);
    off += part.length;
  }
  return out;
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  return pb <= pc ? b : c;
}

export function decodePng(bytes: Uint8Array): RgbImage {
  for (let i = 0; i < 8; i++) {
    if (bytes[i] !== SIGNATURE[i]) throw new Error("not a PNG");
  }
  let off = 8;
  let width = 0;
  let height = 0;
  let colorType = -1;
  const idats: Uint8Array[] = [];
  while (off < bytes.length) {
    const view = new DataView(bytes.buffer, bytes.byteOffset + off);
    const length = view.getUint32(0);
    const type = String.fromCharCode(bytes[off + 4]!, bytes[off + 5]!, bytes[off + 6]!, bytes[off + 7]!);
    const data = bytes.subarray(off + 8, off + 8 + length);
    if (type === "IHDR") {
      const hv = new DataView(data.buffer, data.byteOffset);
      width = hv.getUint32(0);
      height = hv.getUint32(4);
      if (data[8] !== 8) throw new Error("only 8-bit PNGs supported");
      colorType = data[9]!;
      if (colorType !== 2 && colorType !== 0) throw new Error(`unsupported color type ${colorType}`);
      if (data[12] !== 0) throw new Error("interlaced PNGs not supported");
    } else if (type === "IDAT") {
      idats.push(data);
    } else if (type === "IEND") {
      break;
    }
    off += 12 + length;
  }
  const compressed = new Uint8Array(idats.reduce((n, d) => n + d.length, 0));
  let pos = 0;
  for (const data of idats) {
    compressed.set(data, pos);
    pos += data.length;
  }
  const raw = new Uint8Array(inflateSync(compressed));
  const bpp = colorType === 2 ? 3 : 1;
  const stride = width * bpp;
  const flat = new Uint8Array(stride * height);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)]!;
    const row = raw.subarray(y * (stride + 1) + 1, (y + 1) * (stride + 1));
    const out = flat.subarray(y * stride, (y + 1) * stride);
    const prev = y > 0 ? flat.subarray((y - 1) * stride, y * stride) : null;
    for (let x = 0; x < stride; x++) {
      const left = x >= bpp ? out[x - bpp]! : 0;
      const up = prev ? prev[x]! : 0;
      const upLeft = prev && x >= bpp ? prev[x - bpp]! : 0;
      let value = row[x]!;
      if (filter === 1) value += left;
      else if (filter === 2) value += up;
      else if (filter === 3) value += (left + up) >> 1;
      else if (filter === 4) value += paeth(left, up, upLeft);
      else if (filter !== 0) throw new Error(`bad filter ${filter}`);
      out[x] = value & 0xff;
    }
  }
  if (bpp === 3) return { width, height, pixels: flat };
  const rgb = new Uint8Array(width * height * 3);
  for (let i = 0; i < width * height; i++) rgb.fill(flat[i]!, i * 3, i * 3 + 3);
  return { width, height, pixels: rgb };
}
