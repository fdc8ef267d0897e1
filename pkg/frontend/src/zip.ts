/** Minimal ZIP reader for sweep bundles.
 *
 * The rendering service stores sweep frames uncompressed (method 0), so
 * only stored entries are supported; anything else is rejected loudly.
 * Parsing walks the end-of-central-directory record backwards from the
 * tail, then each central entry's local header for the data offset.
 */

const EOCD_SIG = 0x06054b50;
const CENTRAL_SIG = 0x02014b50;
const LOCAL_SIG = 0x04034b50;

export interface ZipEntry {
  name: string;
  data: Uint8Array;
}

function u16(buf: Uint8Array, off: number): number {
  return buf[off]! | (buf[off + 1]! << 8);
}

function u32(buf: Uint8Array, off: number): number {
  return (buf[off]! | (buf[off + 1]! << 8) | (buf[off + 2]! << 16)) + buf[off + 3]! * 0x1000000;
}

function findEocd(buf: Uint8Array): number {
  // EOCD is 22 bytes plus a comment of up to 65535 bytes.
  const lo = Math.max(0, buf.length - 22 - 65535);
  for (let off = buf.length - 22; off >= lo; off--) {
    if (u32(buf, off) === EOCD_SIG) return off;
  }
  throw new Error("not a ZIP archive: end record missing");
}

export function parseZip(buf: Uint8Array): ZipEntry[] {
  const eocd = findEocd(buf);
  const count = u16(buf, eocd + 10);
  let off = u32(buf, eocd + 16);
  const entries: ZipEntry[] = [];
  for (let i = 0; i < count; i++) {
    if (u32(buf, off) !== CENTRAL_SIG) throw new Error("corrupt ZIP: bad central entry");
    const method = u16(buf, off + 10);
    const compressedSize = u32(buf, off + 20);
    const nameLen = u16(buf, off + 28);
    const extraLen = u16(buf, off + 30);
    const commentLen = u16(buf, off + 32);
    const localOff = u32(buf, off + 42);
    const name = new TextDecoder().decode(buf.subarray(off + 46, off + 46 + nameLen));
    if (method !== 0) throw new Error(`unsupported compression method ${method} for ${name}`);
    if (u32(buf, localOff) !== LOCAL_SIG) throw new Error("corrupt ZIP: bad local header");
    const localNameLen = u16(buf, localOff + 26);
    const localExtraLen = u16(buf, localOff + 28);
    const dataStart = localOff + 30 + localNameLen + localExtraLen;
    entries.push({ name, data: buf.subarray(dataStart, dataStart + compressedSize) });
    off += 46 + nameLen + extraLen + commentLen;
  }
  return entries;
}
