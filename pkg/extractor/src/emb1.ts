/**
 * EMB1 binary array format.
 *
 * Header (16 bytes, little-endian): magic "EMB1", uint32 version = 1,
 * uint32 row count, uint32 dim; then row-major IEEE-754 float32 payload.
 * Writes are bit-exact: the Float32Array payload is serialized verbatim.
 */

export const EMB1_MAGIC = "EMB1";
export const EMB1_VERSION = 1;
const HEADER_BYTES = 16;

export function encodeEmb1(rows: Float32Array[], dim: number): Buffer {
  for (const row of rows) {
    if (row.length !== dim) {
      throw new Error(`EMB1 row has ${row.length} values, expected ${dim}`);
    }
  }
  const buffer = Buffer.alloc(HEADER_BYTES + rows.length * dim * 4);
  buffer.write(EMB1_MAGIC, 0, "ascii");
  buffer.writeUInt32LE(EMB1_VERSION, 4);
  buffer.writeUInt32LE(rows.length, 8);
  buffer.writeUInt32LE(dim, 12);
  let offset = HEADER_BYTES;
  for (const row of rows) {
    // Copy raw bits; Buffer.set on a Uint8Array view preserves every pattern.
    buffer.set(new Uint8Array(row.buffer, row.byteOffset, row.byteLength), offset);
    offset += row.byteLength;
  }
  return buffer;
}

export interface Emb1Array {
  rows: number;
  dim: number;
  data: Float32Array;
}

export function decodeEmb1(buffer: Buffer): Emb1Array {
  if (buffer.length < 4 || buffer.toString("ascii", 0, 4) !== EMB1_MAGIC) {
    throw new Error("not an EMB1 payload (bad magic)");
  }
  if (buffer.length < HEADER_BYTES) {
    throw new Error("EMB1 header cut short");
  }
  const version = buffer.readUInt32LE(4);
  if (version !== EMB1_VERSION) {
    throw new Error(`unsupported EMB1 version ${version}`);
  }
  const rows = buffer.readUInt32LE(8);
  const dim = buffer.readUInt32LE(12);
  const expected = HEADER_BYTES + rows * dim * 4;
  if (buffer.length !== expected) {
    throw new Error(`EMB1 payload is ${buffer.length} bytes, expected ${expected}`);
  }
  const bytes = buffer.subarray(HEADER_BYTES);
  const data = new Float32Array(rows * dim);
  new Uint8Array(data.buffer).set(bytes);
  return { rows, dim, data };
}
