/**
 * Residue embedding backbones.
 *
 * The exporter talks to a backbone through the ResidueEmbedder interface so
 * a served or downloaded protein language model can be plugged in without
 * touching the export pipeline. The built-in family ("hash-ctx-<dim>") is a
 * fully offline stand-in: each residue gets a vector derived by hashing its
 * local sequence window, so embeddings are contextual (the same letter in a
 * different neighborhood gets a different vector), deterministic down to the
 * bit, and free of model downloads. That is enough to exercise and validate
 * every byte of the export path and the consuming engine.
 */

export const AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY";

/** Radius of the sequence window hashed for each residue. */
export const CONTEXT_RADIUS = 2;

export const BOS_TOKEN = "<bos>";
export const EOS_TOKEN = "<eos>";

export interface ResidueEmbedder {
  /** Identifier recorded for reproducibility (e.g. "hash-ctx-32"). */
  readonly modelName: string;
  /** Hidden layer the rows are taken from; part of the hash salt here. */
  readonly layer: number;
  readonly dim: number;
  /**
   * One row per token of the sanitized sequence, in order. When
   * includeSpecialTokens is set the first and last rows are the begin/end
   * marker tokens.
   */
  embed(sequence: string, includeSpecialTokens: boolean): Float32Array[];
}

/** Uppercase and map anything outside the 20-letter alphabet to 'X'. */
export function sanitizeSequence(sequence: string): string {
  let out = "";
  for (const ch of sequence.toUpperCase()) {
    out += AMINO_ACIDS.includes(ch) ? ch : "X";
  }
  return out;
}

// FNV-1a over UTF-16 code units; Math.imul keeps the product exact mod 2^32.
function fnv1a32(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h >>> 0;
}

// murmur3 finalizer: spreads a u32 so per-dimension values decorrelate.
function mix32(h: number): number {
  h ^= h >>> 16;
  h = Math.imul(h, 0x85ebca6b) >>> 0;
  h ^= h >>> 13;
  h = Math.imul(h, 0xc2b2ae35) >>> 0;
  h ^= h >>> 16;
  return h >>> 0;
}

export class HashContextEmbedder implements ResidueEmbedder {
  readonly modelName: string;
  readonly layer: number;
  readonly dim: number;

  constructor(dim: number, layer: number) {
    if (!Number.isInteger(dim) || dim < 1) {
      throw new Error(`embedding dim must be a positive integer, got ${dim}`);
    }
    if (!Number.isInteger(layer) || layer < 0) {
      throw new Error(`layer must be a non-negative integer, got ${layer}`);
    }
    this.dim = dim;
    this.layer = layer;
    this.modelName = `hash-ctx-${dim}`;
  }

  private tokenVector(token: string): Float32Array {
    const base = fnv1a32(`${this.modelName}|L${this.layer}|${token}`);
    const row = new Float32Array(this.dim);
    for (let d = 0; d < this.dim; d++) {
      const h = mix32((base ^ Math.imul(d + 1, 0x9e3779b9)) >>> 0);
      // u32 -> [-1, 1); fround makes the f32 value the definition, not an
      // accident of later serialization.
      row[d] = Math.fround(h / 2147483648 - 1);
    }
    return row;
  }

  embed(sequence: string, includeSpecialTokens: boolean): Float32Array[] {
    const seq = sanitizeSequence(sequence);
    if (seq.length === 0) {
      throw new Error("cannot embed an empty sequence");
    }
    const rows: Float32Array[] = [];
    if (includeSpecialTokens) rows.push(this.tokenVector(BOS_TOKEN));
    const pad = "^".repeat(CONTEXT_RADIUS) + seq + "$".repeat(CONTEXT_RADIUS);
    for (let i = 0; i < seq.length; i++) {
      rows.push(this.tokenVector(pad.slice(i, i + 2 * CONTEXT_RADIUS + 1)));
    }
    if (includeSpecialTokens) rows.push(this.tokenVector(EOS_TOKEN));
    return rows;
  }
}

const MODEL_PATTERN = /^hash-ctx-(\d+)$/;

/**
 * Instantiate a backbone by name. Only the offline hash-ctx family is
 * built in; other model names must arrive as ResidueEmbedder instances.
 */
export function createEmbedder(modelName: string, layer: number): ResidueEmbedder {
  const m = MODEL_PATTERN.exec(modelName);
  if (m === null) {
    throw new Error(
      `unknown model '${modelName}' (built in: hash-ctx-<dim>, e.g. hash-ctx-32)`,
    );
  }
  return new HashContextEmbedder(Number(m[1]), layer);
}
