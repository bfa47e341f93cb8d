/**
 * Minimal 8-bit grayscale PNG codec.
 *
 * Encoding writes stored (uncompressed) deflate blocks inside a zlib wrapper,
 * so exports are deterministic and dependency-free in both the browser and
 * node. Decoding handles any zlib-compressed stream via DecompressionStream
 * and all five scanline filters, which covers server-produced masks as well
 * as our own exports. Interlaced images are rejected.
 */

export interface GrayImage {
  width: number;
  height: number;
  /** Row-major luminance, one byte per pixel. */
  data: Uint8Array;
}

const SIGNATURE = new Uint8Array([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

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
  let crc = 0xffffffff;
  for (let i = 0; i < bytes.length; i++) {
    crc = CRC_TABLE[(crc ^ bytes[i]) & 0xff] ^ (crc >>> 8);
  }
  return (crc ^ 0xffffffff) >>> 0;
}

function adler32(bytes: Uint8Array): number {
  let a = 1;
  let b = 0;
  for (let i = 0; i < bytes.length; i++) {
    a = (a + bytes[i]) % 65521;
    b = (b + a) % 65521;
  }
  return ((b << 16) | a) >>> 0;
}

function u32be(value: number): Uint8Array {
  return new Uint8Array([(value >>> 24) & 0xff, (value >>> 16) & 0xff, (value >>> 8) & 0xff, value & 0xff]);
}

function readU32be(bytes: Uint8Array, offset: number): number {
  return ((bytes[offset] << 24) | (bytes[offset + 1] << 16) | (bytes[offset + 2] << 8) | bytes[offset + 3]) >>> 0;
}

function concat(parts: Uint8Array[]): Uint8Array {
  const total = parts.reduce((n, p) => n + p.length, 0);
  const out = new Uint8Array(total);
  let offset = 0;
  for (const part of parts) {
    out.set(part, offset);
    offset += part.length;
  }
  return out;
}

function chunk(type: string, body: Uint8Array): Uint8Array {
  const typeBytes = new Uint8Array([...type].map((c) => c.charCodeAt(0)));
  const payload = concat([typeBytes, body]);
  return concat([u32be(body.length), payload, u32be(crc32(payload))]);
}

/** zlib wrapper around stored (type 0) deflate blocks. */
function zlibStored(raw: Uint8Array): Uint8Array {
  const parts: Uint8Array[] = [new Uint8Array([0x78, 0x01])];
  const max = 0xffff;
  for (let offset = 0; offset < raw.length || raw.length === 0; offset += max) {
    const block = raw.subarray(offset, Math.min(offset + max, raw.length));
    const final = offset + max >= raw.length ? 1 : 0;
    const len = block.length;
    parts.push(new Uint8Array([final, len & 0xff, (len >> 8) & 0xff, ~len & 0xff, (~len >> 8) & 0xff]));
    parts.push(block);
    if (raw.length === 0) break;
  }
  parts.push(u32be(adler32(raw)));
  return concat(parts);
}

/** Encode a grayscale raster as an 8-bit PNG (color type 0, filter 0 rows). */
export function encodeGrayPng(img: GrayImage): Uint8Array {
  const { width, height, data } = img;
  if (width < 1 || height < 1 || data.length !== width * height) {
    throw new Error(`raster size ${data.length} does not match ${width}x${height}`);
  }
  const ihdr = concat([u32be(width), u32be(height), new Uint8Array([8, 0, 0, 0, 0])]);
  const filtered = new Uint8Array(height * (width + 1));
  for (let y = 0; y < height; y++) {
    filtered[y * (width + 1)] = 0;
    filtered.set(data.subarray(y * width, (y + 1) * width), y * (width + 1) + 1);
  }
  return concat([SIGNATURE, chunk("IHDR", ihdr), chunk("IDAT", zlibStored(filtered)), chunk("IEND", new Uint8Array(0))]);
}

async function inflateZlib(compressed: Uint8Array): Promise<Uint8Array> {
  const ds = new DecompressionStream("deflate");
  const stream = new Blob([compressed as BlobPart]).stream().pipeThrough(ds);
  const buffer = await new Response(stream).arrayBuffer();
  return new Uint8Array(buffer);
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

function unfilter(filtered: Uint8Array, width: number, height: number): Uint8Array {
  const stride = width + 1;
  const out = new Uint8Array(width * height);
  for (let y = 0; y < height; y++) {
    const type = filtered[y * stride];
    const row = filtered.subarray(y * stride + 1, y * stride + 1 + width);
    const prev = (x: number) => (y > 0 ? out[(y - 1) * width + x] : 0);
    for (let x = 0; x < width; x++) {
      const left = x > 0 ? out[y * width + x - 1] : 0;
      let value: number;
      switch (type) {
        case 0: value = row[x]; break;
        case 1: value = row[x] + left; break;
        case 2: value = row[x] + prev(x); break;
        case 3: value = row[x] + ((left + prev(x)) >> 1); break;
        case 4: value = row[x] + paeth(left, prev(x), x > 0 ? prev(x - 1) : 0); break;
        default: throw new Error(`unsupported scanline filter ${type}`);
      }
      out[y * width + x] = value & 0xff;
    }
  }
  return out;
}

/** Decode an 8-bit grayscale (or gray+alpha, alpha discarded) PNG. */
export async function decodeGrayPng(bytes: Uint8Array): Promise<GrayImage> {
  for (let i = 0; i < SIGNATURE.length; i++) {
    if (bytes[i] !== SIGNATURE[i]) throw new Error("not a PNG file");
  }
  let offset = SIGNATURE.length;
  let width = 0;
  let height = 0;
  let colorType = 0;
  const idat: Uint8Array[] = [];
  while (offset < bytes.length) {
    const length = readU32be(bytes, offset);
    const type = String.fromCharCode(...bytes.subarray(offset + 4, offset + 8));
    const body = bytes.subarray(offset + 8, offset + 8 + length);
    if (type === "IHDR") {
      width = readU32be(body, 0);
      height = readU32be(body, 4);
      const bitDepth = body[8];
      colorType = body[9];
      if (bitDepth !== 8) throw new Error(`unsupported bit depth ${bitDepth}`);
      if (colorType !== 0 && colorType !== 4) throw new Error(`unsupported color type ${colorType}`);
      if (body[12] !== 0) throw new Error("interlaced PNGs are not supported");
    } else if (type === "IDAT") {
      idat.push(body);
    } else if (type === "IEND") {
      break;
    }
    offset += 12 + length;
  }
  if (!width || !height) throw new Error("missing IHDR");
  const channels = colorType === 4 ? 2 : 1;
  const raw = await inflateZlib(concat(idat));
  if (channels === 1) {
    return { width, height, data: unfilter(raw, width, height) };
  }
  // gray+alpha: unfilter at 2 bytes/pixel, then drop alpha
  const stride = width * channels + 1;
  const wide = unfilterMulti(raw, width * channels, height, stride, channels);
  const data = new Uint8Array(width * height);
  for (let i = 0; i < width * height; i++) data[i] = wide[i * 2];
  return { width, height, data };
}

function unfilterMulti(filtered: Uint8Array, rowBytes: number, height: number, stride: number, bpp: number): Uint8Array {
  const out = new Uint8Array(rowBytes * height);
  for (let y = 0; y < height; y++) {
    const type = filtered[y * stride];
    const row = filtered.subarray(y * stride + 1, y * stride + 1 + rowBytes);
    const up = (x: number) => (y > 0 ? out[(y - 1) * rowBytes + x] : 0);
    for (let x = 0; x < rowBytes; x++) {
      const left = x >= bpp ? out[y * rowBytes + x - bpp] : 0;
      let value: number;
      switch (type) {
        case 0: value = row[x]; break;
        case 1: value = row[x] + left; break;
        case 2: value = row[x] + up(x); break;
        case 3: value = row[x] + ((left + up(x)) >> 1); break;
        case 4: value = row[x] + paeth(left, up(x), x >= bpp ? up(x - bpp) : 0); break;
        default: throw new Error(`unsupported scanline filter ${type}`);
      }
      out[y * rowBytes + x] = value & 0xff;
    }
  }
  return out;
}
