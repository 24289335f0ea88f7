/**
 * Binary interchange writers matching the primary toolkit's readers:
 * embeddings as raw little-endian float32, unit streams as raw
 * little-endian uint16, codebooks as a float32 matrix plus a JSON
 * sidecar named after the matrix file with a .json suffix.
 */

import { writeFileSync, mkdirSync } from "node:fs";
import { dirname } from "node:path";

function ensureParent(path: string): void {
  mkdirSync(dirname(path), { recursive: true });
}

export function encodeFloat32LE(values: ArrayLike<number>): Buffer {
  const buf = Buffer.alloc(4 * values.length);
  for (let i = 0; i < values.length; i++) {
    const v = values[i];
    if (!Number.isFinite(v)) throw new Error(`non-finite value at index ${i}`);
    buf.writeFloatLE(v, 4 * i);
  }
  return buf;
}

export function writeEmbedding(path: string, values: ArrayLike<number>): void {
  ensureParent(path);
  writeFileSync(path, encodeFloat32LE(values));
}

export function writeUnits(path: string, ids: ArrayLike<number>): void {
  const buf = Buffer.alloc(2 * ids.length);
  for (let i = 0; i < ids.length; i++) {
    const id = ids[i];
    if (!Number.isInteger(id) || id < 0 || id > 0xffff) {
      throw new Error(`unit id ${id} at index ${i} does not fit in uint16`);
    }
    buf.writeUInt16LE(id, 2 * i);
  }
  ensureParent(path);
  writeFileSync(path, buf);
}

/** Replace the final suffix with .json, mirroring the reader's lookup. */
export function codebookSidecarPath(path: string): string {
  const dot = path.lastIndexOf(".");
  const slash = Math.max(path.lastIndexOf("/"), path.lastIndexOf("\\"));
  const stem = dot > slash ? path.slice(0, dot) : path;
  return `${stem}.json`;
}

export function writeCodebook(path: string, rows: Float64Array[]): void {
  if (rows.length === 0) throw new Error("codebook must have at least one row");
  const dim = rows[0].length;
  const flat = new Float64Array(rows.length * dim);
  for (let r = 0; r < rows.length; r++) {
    if (rows[r].length !== dim) {
      throw new Error(`codebook row ${r} has length ${rows[r].length}, expected ${dim}`);
    }
    flat.set(rows[r], r * dim);
  }
  ensureParent(path);
  writeFileSync(path, encodeFloat32LE(flat));
  writeFileSync(
    codebookSidecarPath(path),
    JSON.stringify({ n_units: rows.length, dim }) + "\n",
  );
}
