/**
 * Writer (and verifying reader) for the engine's row-set container.
 *
 * Layout, all little-endian:
 *
 *   "PCL1"  u32 version=1  u32 count
 *   per record: u16 idLen, idLen bytes of UTF-8 id,
 *               u32 nRows, u32 dim, nRows*dim float32 row-major
 *
 * The reader exists so tests can prove byte-level round trips without
 * leaving this package; the engine remains the authority on validation.
 */

import { readFileSync, writeFileSync } from "node:fs";

export const ROWSET_MAGIC = "PCL1";
export const FORMAT_VERSION = 1;

export interface RowRecord {
  id: string;
  nRows: number;
  dim: number;
  /** Row-major values, length nRows * dim. */
  rows: Float32Array;
}

export class RowFileError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "RowFileError";
  }
}

function checkRecord(rec: RowRecord): Buffer {
  if (rec.id.length === 0) {
    throw new RowFileError("protein id must be non-empty");
  }
  const idBytes = Buffer.from(rec.id, "utf-8");
  if (idBytes.length > 0xffff) {
    throw new RowFileError(`protein id too long (${idBytes.length} bytes)`);
  }
  if (rec.nRows < 1 || rec.dim < 1) {
    throw new RowFileError(`'${rec.id}' has empty shape ${rec.nRows}x${rec.dim}`);
  }
  if (rec.rows.length !== rec.nRows * rec.dim) {
    throw new RowFileError(
      `'${rec.id}' has ${rec.rows.length} values, expected ${rec.nRows * rec.dim}`,
    );
  }
  for (let i = 0; i < rec.rows.length; i++) {
    const v = rec.rows[i] as number;
    if (!Number.isFinite(v)) {
      throw new RowFileError(`'${rec.id}' contains a non-finite value at ${i}`);
    }
  }
  return idBytes;
}

export function encodeRowFile(records: RowRecord[]): Buffer {
  const seen = new Set<string>();
  const parts: Buffer[] = [];

  const header = Buffer.alloc(12);
  header.write(ROWSET_MAGIC, 0, "ascii");
  header.writeUInt32LE(FORMAT_VERSION, 4);
  header.writeUInt32LE(records.length, 8);
  parts.push(header);

  for (const rec of records) {
    if (seen.has(rec.id)) {
      throw new RowFileError(`duplicate protein id '${rec.id}'`);
    }
    seen.add(rec.id);
    const idBytes = checkRecord(rec);
    const head = Buffer.alloc(2 + idBytes.length + 8);
    head.writeUInt16LE(idBytes.length, 0);
    idBytes.copy(head, 2);
    head.writeUInt32LE(rec.nRows, 2 + idBytes.length);
    head.writeUInt32LE(rec.dim, 6 + idBytes.length);
    parts.push(head);

    const payload = Buffer.alloc(rec.rows.length * 4);
    for (let i = 0; i < rec.rows.length; i++) {
      payload.writeFloatLE(rec.rows[i] as number, i * 4);
    }
    parts.push(payload);
  }
  return Buffer.concat(parts);
}

export function writeRowFile(path: string, records: RowRecord[]): void {
  writeFileSync(path, encodeRowFile(records));
}

class Cursor {
  private offset = 0;

  constructor(private readonly buf: Buffer) {}

  take(n: number, what: string): Buffer {
    if (this.offset + n > this.buf.length) {
      throw new RowFileError(`file ended while reading ${what}`);
    }
    const out = this.buf.subarray(this.offset, this.offset + n);
    this.offset += n;
    return out;
  }
}

export function readRowFile(path: string): RowRecord[] {
  const cur = new Cursor(readFileSync(path));
  const magic = cur.take(4, "magic").toString("ascii");
  if (magic !== ROWSET_MAGIC) {
    throw new RowFileError(`expected magic '${ROWSET_MAGIC}', found '${magic}'`);
  }
  const version = cur.take(4, "version").readUInt32LE(0);
  if (version !== FORMAT_VERSION) {
    throw new RowFileError(`unsupported row-set file version ${version}`);
  }
  const count = cur.take(4, "count").readUInt32LE(0);
  const out: RowRecord[] = [];
  const seen = new Set<string>();
  for (let r = 0; r < count; r++) {
    const idLen = cur.take(2, "id length").readUInt16LE(0);
    const id = cur.take(idLen, "protein id").toString("utf-8");
    if (seen.has(id)) {
      throw new RowFileError(`duplicate protein id '${id}'`);
    }
    seen.add(id);
    const shape = cur.take(8, `${id} shape`);
    const nRows = shape.readUInt32LE(0);
    const dim = shape.readUInt32LE(4);
    const payload = cur.take(nRows * dim * 4, `${id} rows`);
    const rows = new Float32Array(nRows * dim);
    for (let i = 0; i < rows.length; i++) {
      rows[i] = payload.readFloatLE(i * 4);
    }
    out.push({ id, nRows, dim, rows });
  }
  return out;
}
