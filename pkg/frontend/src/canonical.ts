/**
 * Canonical binary encoding: the byte format every signed or hashed message
 * on the network uses. Must be byte-identical to the node implementation;
 * cross-checked by the vector tests.
 *
 * Tags: 0x01 u64 BE | 0x02 bytes | 0x03 utf-8 text | 0x04 list | 0x05 map
 * (u32 BE length/count prefixes, map keys are byte strings sorted ascending).
 */

export type CValue = number | bigint | Uint8Array | string | CValue[] | CMap;
/** Map keys are the UTF-8 decoding of the canonical byte-string key. */
export type CMap = Map<string, CValue>;

const TAG_INT = 0x01;
const TAG_BYTES = 0x02;
const TAG_TEXT = 0x03;
const TAG_LIST = 0x04;
const TAG_MAP = 0x05;

const U64_MAX = (1n << 64n) - 1n;

const textEncoder = new TextEncoder();
const textDecoder = new TextDecoder("utf-8", { fatal: true });

export function cmap(obj: Record<string, CValue>): CMap {
  return new Map(Object.entries(obj));
}

class Writer {
  private chunks: Uint8Array[] = [];

  push(...bytes: number[]) {
    this.chunks.push(new Uint8Array(bytes));
  }

  pushBytes(data: Uint8Array) {
    this.chunks.push(data);
  }

  pushU32(value: number) {
    const out = new Uint8Array(4);
    new DataView(out.buffer).setUint32(0, value, false);
    this.chunks.push(out);
  }

  pushU64(value: bigint) {
    const out = new Uint8Array(8);
    new DataView(out.buffer).setBigUint64(0, value, false);
    this.chunks.push(out);
  }

  finish(): Uint8Array {
    const total = this.chunks.reduce((n, c) => n + c.length, 0);
    const out = new Uint8Array(total);
    let offset = 0;
    for (const chunk of this.chunks) {
      out.set(chunk, offset);
      offset += chunk.length;
    }
    return out;
  }
}

export function encode(value: CValue): Uint8Array {
  const writer = new Writer();
  encodeInto(value, writer);
  return writer.finish();
}

function encodeInto(value: CValue, out: Writer) {
  if (typeof value === "number" || typeof value === "bigint") {
    const v = BigInt(value);
    if (v < 0n || v > U64_MAX) throw new Error(`integer out of u64 range: ${v}`);
    out.push(TAG_INT);
    out.pushU64(v);
  } else if (value instanceof Uint8Array) {
    out.push(TAG_BYTES);
    out.pushU32(value.length);
    out.pushBytes(value);
  } else if (typeof value === "string") {
    const raw = textEncoder.encode(value);
    out.push(TAG_TEXT);
    out.pushU32(raw.length);
    out.pushBytes(raw);
  } else if (Array.isArray(value)) {
    out.push(TAG_LIST);
    out.pushU32(value.length);
    for (const item of value) encodeInto(item, out);
  } else if (value instanceof Map) {
    const entries = [...value.entries()].map(
      ([k, v]) => [textEncoder.encode(k), v] as const,
    );
    entries.sort((a, b) => compareBytes(a[0], b[0]));
    for (let i = 1; i < entries.length; i++) {
      if (compareBytes(entries[i][0], entries[i - 1][0]) === 0) {
        throw new Error("duplicate map key");
      }
    }
    out.push(TAG_MAP);
    out.pushU32(entries.length);
    for (const [key, val] of entries) {
      out.push(TAG_BYTES);
      out.pushU32(key.length);
      out.pushBytes(key);
      encodeInto(val, out);
    }
  } else {
    throw new Error(`cannot encode ${typeof value}`);
  }
}

export function compareBytes(a: Uint8Array, b: Uint8Array): number {
  const n = Math.min(a.length, b.length);
  for (let i = 0; i < n; i++) {
    if (a[i] !== b[i]) return a[i] - b[i];
  }
  return a.length - b.length;
}

export function decode(data: Uint8Array): CValue {
  const [value, offset] = decodeAt(data, 0);
  if (offset !== data.length) throw new Error("trailing bytes after value");
  return value;
}

function decodeAt(data: Uint8Array, offset: number): [CValue, number] {
  if (offset >= data.length) throw new Error("truncated value");
  const tag = data[offset++];
  const view = new DataView(data.buffer, data.byteOffset);
  if (tag === TAG_INT) {
    if (offset + 8 > data.length) throw new Error("truncated integer");
    return [view.getBigUint64(offset, false), offset + 8];
  }
  if (tag === TAG_BYTES || tag === TAG_TEXT) {
    if (offset + 4 > data.length) throw new Error("truncated length");
    const size = view.getUint32(offset, false);
    offset += 4;
    if (offset + size > data.length) throw new Error("truncated string");
    const raw = data.slice(offset, offset + size);
    offset += size;
    return [tag === TAG_BYTES ? raw : textDecoder.decode(raw), offset];
  }
  if (tag === TAG_LIST) {
    const count = view.getUint32(offset, false);
    offset += 4;
    const items: CValue[] = [];
    for (let i = 0; i < count; i++) {
      const [item, next] = decodeAt(data, offset);
      items.push(item);
      offset = next;
    }
    return [items, offset];
  }
  if (tag === TAG_MAP) {
    const count = view.getUint32(offset, false);
    offset += 4;
    const out: CMap = new Map();
    let prev: Uint8Array | null = null;
    for (let i = 0; i < count; i++) {
      const [key, afterKey] = decodeAt(data, offset);
      if (!(key instanceof Uint8Array)) throw new Error("map key is not bytes");
      if (prev !== null && compareBytes(key, prev) <= 0) {
        throw new Error("map keys not strictly ascending");
      }
      prev = key;
      const [value, next] = decodeAt(data, afterKey);
      out.set(textDecoder.decode(key), value);
      offset = next;
    }
    return [out, offset];
  }
  throw new Error(`unknown tag 0x${tag.toString(16)}`);
}

export function toHex(data: Uint8Array): string {
  return [...data].map((b) => b.toString(16).padStart(2, "0")).join("");
}

export function fromHex(hex: string): Uint8Array {
  if (hex.length % 2 !== 0) throw new Error("odd-length hex");
  const out = new Uint8Array(hex.length / 2);
  for (let i = 0; i < out.length; i++) {
    const byte = parseInt(hex.slice(2 * i, 2 * i + 2), 16);
    if (Number.isNaN(byte)) throw new Error("bad hex");
    out[i] = byte;
  }
  return out;
}

export function concatBytes(...parts: Uint8Array[]): Uint8Array {
  const out = new Uint8Array(parts.reduce((n, p) => n + p.length, 0));
  let offset = 0;
  for (const part of parts) {
    out.set(part, offset);
    offset += part.length;
  }
  return out;
}

export function utf8(text: string): Uint8Array {
  return textEncoder.encode(text);
}
