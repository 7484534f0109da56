/**
 * Minimal FASTA reader matching the engine's parsing rules: the record id is
 * the first whitespace-separated token of the header, bodies may span lines,
 * and structural problems are reported with the 1-based line number.
 */

export interface FastaRecord {
  id: string;
  sequence: string;
  /** 1-based line number of the record's header, for error reporting. */
  line: number;
}

export class FastaParseError extends Error {
  readonly line: number;

  constructor(message: string, line: number) {
    super(`line ${line}: ${message}`);
    this.name = "FastaParseError";
    this.line = line;
  }
}

export function parseFasta(text: string): FastaRecord[] {
  const records: FastaRecord[] = [];
  const seen = new Set<string>();
  let current: FastaRecord | null = null;

  const flush = () => {
    if (current === null) return;
    if (current.sequence.length === 0) {
      throw new FastaParseError(`record '${current.id}' has no sequence`, current.line);
    }
    records.push(current);
    current = null;
  };

  const lines = text.split(/\r?\n/);
  for (let i = 0; i < lines.length; i++) {
    const lineNo = i + 1;
    const line = (lines[i] ?? "").trim();
    if (line.length === 0) continue;
    if (line.startsWith(">")) {
      flush();
      const id = line.slice(1).trim().split(/\s+/)[0] ?? "";
      if (id.length === 0) {
        throw new FastaParseError("header has no id", lineNo);
      }
      if (seen.has(id)) {
        throw new FastaParseError(`duplicate id '${id}'`, lineNo);
      }
      seen.add(id);
      current = { id, sequence: "", line: lineNo };
    } else {
      if (current === null) {
        throw new FastaParseError("sequence data before any header", lineNo);
      }
      current.sequence += line;
    }
  }
  flush();
  return records;
}
