/**
 * Export pipeline: FASTA in, engine-readable row files out.
 *
 * Two products share one path. "hidden" keeps every per-token row (up to the
 * length cap) so the engine can project or normalize them itself; "pooled"
 * reduces each protein to a single unit vector, the uni-vector baseline
 * representation. Pooling normalizes each row first and then normalizes the
 * mean, which is exactly how the engine pools unit rows, so a pooled export
 * agrees with the engine's own mean-pooling of the matching hidden export.
 */

import { readFileSync } from "node:fs";

import { createEmbedder, type ResidueEmbedder } from "./backbone.js";
import { parseFasta } from "./fasta.js";
import { writeRowFile, type RowRecord } from "./rowfile.js";

export interface ExportManifest {
  /** Backbone identifier; "hash-ctx-<dim>" selects the built-in family. */
  modelName: string;
  /** Hidden layer index the rows come from. */
  layer: number;
  /** Keep begin/end marker rows (off by default: scoring sums residues). */
  includeSpecialTokens: boolean;
  /** Hard cap on rows per protein, applied after special tokens. */
  maxLen: number;
  /** Output path for the row file. */
  output: string;
  /** Records embedded per batch; output is written once at the end. */
  batchSize: number;
}

export const DEFAULT_MANIFEST: Omit<ExportManifest, "output"> = {
  modelName: "hash-ctx-32",
  layer: 4,
  includeSpecialTokens: false,
  maxLen: 256,
  batchSize: 8,
};

export function makeManifest(
  output: string,
  overrides: Partial<Omit<ExportManifest, "output">> = {},
): ExportManifest {
  const manifest = { ...DEFAULT_MANIFEST, output, ...overrides };
  if (!Number.isInteger(manifest.maxLen) || manifest.maxLen < 1) {
    throw new Error(`maxLen must be a positive integer, got ${manifest.maxLen}`);
  }
  if (!Number.isInteger(manifest.batchSize) || manifest.batchSize < 1) {
    throw new Error(`batchSize must be a positive integer, got ${manifest.batchSize}`);
  }
  return manifest;
}

export interface RecordFailure {
  id: string;
  error: string;
}

export interface ExportResult {
  written: number;
  failures: RecordFailure[];
  output: string;
}

/** Flatten per-token rows into one row-major record, capped at maxLen rows. */
function toRecord(id: string, rows: Float32Array[], maxLen: number): RowRecord {
  const kept = rows.slice(0, maxLen);
  const dim = kept[0]?.length ?? 0;
  if (kept.length === 0 || dim === 0) {
    throw new Error(`'${id}' produced no rows`);
  }
  const flat = new Float32Array(kept.length * dim);
  kept.forEach((row, t) => {
    if (row.length !== dim) {
      throw new Error(`'${id}' produced ragged rows (${row.length} vs ${dim})`);
    }
    flat.set(row, t * dim);
  });
  return { id, nRows: kept.length, dim, rows: flat };
}

/**
 * Mean of the unit-normalized rows, renormalized, as one f32 row.
 * Accumulates in f64; the engine redoes this computation from the f32 file
 * within 1e-4, which the cross-component test pins down.
 */
export function pooledRow(record: RowRecord): Float32Array {
  const { nRows, dim, rows } = record;
  const mean = new Float64Array(dim);
  for (let t = 0; t < nRows; t++) {
    let sq = 0;
    for (let d = 0; d < dim; d++) {
      const v = rows[t * dim + d] as number;
      sq += v * v;
    }
    const norm = Math.sqrt(sq);
    if (norm < 1e-12) {
      throw new Error(`'${record.id}' has a zero-norm row at ${t}`);
    }
    for (let d = 0; d < dim; d++) {
      mean[d] = (mean[d] as number) + (rows[t * dim + d] as number) / norm;
    }
  }
  let sq = 0;
  for (let d = 0; d < dim; d++) {
    mean[d] = (mean[d] as number) / nRows;
    sq += (mean[d] as number) ** 2;
  }
  const norm = Math.sqrt(sq);
  if (norm < 1e-12) {
    throw new Error(`'${record.id}' pools to a zero vector`);
  }
  const out = new Float32Array(dim);
  for (let d = 0; d < dim; d++) {
    out[d] = Math.fround((mean[d] as number) / norm);
  }
  return out;
}

export type ExportMode = "hidden" | "pooled";

export interface ExportOptions {
  /** Swap in a real backbone; defaults to the manifest's built-in model. */
  embedder?: ResidueEmbedder;
}

export function exportRecords(
  fastaText: string,
  manifest: ExportManifest,
  mode: ExportMode,
  options: ExportOptions = {},
): ExportResult {
  const embedder =
    options.embedder ?? createEmbedder(manifest.modelName, manifest.layer);
  const parsed = parseFasta(fastaText);
  const records: RowRecord[] = [];
  const failures: RecordFailure[] = [];

  for (let start = 0; start < parsed.length; start += manifest.batchSize) {
    const batch = parsed.slice(start, start + manifest.batchSize);
    for (const entry of batch) {
      try {
        const rows = embedder.embed(entry.sequence, manifest.includeSpecialTokens);
        const hidden = toRecord(entry.id, rows, manifest.maxLen);
        if (mode === "pooled") {
          records.push({
            id: entry.id,
            nRows: 1,
            dim: hidden.dim,
            rows: pooledRow(hidden),
          });
        } else {
          records.push(hidden);
        }
      } catch (err) {
        failures.push({ id: entry.id, error: (err as Error).message });
      }
    }
  }

  writeRowFile(manifest.output, records);
  return { written: records.length, failures, output: manifest.output };
}

export function exportHidden(
  fastaPath: string,
  manifest: ExportManifest,
  options: ExportOptions = {},
): ExportResult {
  return exportRecords(readFileSync(fastaPath, "utf-8"), manifest, "hidden", options);
}

export function exportPooled(
  fastaPath: string,
  manifest: ExportManifest,
  options: ExportOptions = {},
): ExportResult {
  return exportRecords(readFileSync(fastaPath, "utf-8"), manifest, "pooled", options);
}
