#!/usr/bin/env node
/**
 * Command line entry point.
 *
 * Exit codes mirror the engine: 0 success, 2 bad flags (checked before any
 * file is read), 3 data or I/O failure. Per-record embedding failures go to
 * stderr and do not abort the run; the exit is 3 only when nothing at all
 * could be written.
 */

import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { createEmbedder } from "./backbone.js";
import { FastaParseError } from "./fasta.js";
import { exportHidden, exportPooled, makeManifest, type ExportManifest } from "./export.js";

const USAGE = `usage: embed-export --fasta <in.fasta> --output <out.pcl> [options]

options:
  --mode hidden|pooled       per-token rows or one pooled unit row (default hidden)
  --model <name>             backbone, e.g. hash-ctx-32 (default hash-ctx-32)
  --layer <n>                hidden layer index (default 4)
  --max-len <n>              row cap per protein (default 256)
  --include-special-tokens   keep begin/end marker rows
  --batch-size <n>           records embedded per batch (default 8)
`;

class UsageError extends Error {}

function parseIntFlag(value: string, flag: string): number {
  const n = Number(value);
  if (!Number.isInteger(n)) {
    throw new UsageError(`${flag} must be an integer, got '${value}'`);
  }
  return n;
}

interface ParsedCli {
  fasta: string;
  mode: "hidden" | "pooled";
  manifest: ExportManifest;
}

export function parseCli(argv: string[]): ParsedCli {
  const { values } = parseArgs({
    args: argv,
    options: {
      fasta: { type: "string" },
      output: { type: "string" },
      mode: { type: "string", default: "hidden" },
      model: { type: "string", default: "hash-ctx-32" },
      layer: { type: "string", default: "4" },
      "max-len": { type: "string", default: "256" },
      "include-special-tokens": { type: "boolean", default: false },
      "batch-size": { type: "string", default: "8" },
      help: { type: "boolean", default: false },
    },
    strict: true,
  });

  if (values.help) {
    throw new UsageError(USAGE);
  }
  if (!values.fasta || !values.output) {
    throw new UsageError("--fasta and --output are required");
  }
  if (values.mode !== "hidden" && values.mode !== "pooled") {
    throw new UsageError(`--mode must be 'hidden' or 'pooled', got '${values.mode}'`);
  }
  const layer = parseIntFlag(values.layer as string, "--layer");
  const maxLen = parseIntFlag(values["max-len"] as string, "--max-len");
  const batchSize = parseIntFlag(values["batch-size"] as string, "--batch-size");

  let manifest: ExportManifest;
  try {
    manifest = makeManifest(values.output, {
      modelName: values.model as string,
      layer,
      maxLen,
      batchSize,
      includeSpecialTokens: values["include-special-tokens"] as boolean,
    });
    // fail on an unknown model before touching the input file
    createEmbedder(manifest.modelName, manifest.layer);
  } catch (err) {
    throw new UsageError((err as Error).message);
  }
  return { fasta: values.fasta, mode: values.mode, manifest };
}

export function main(argv: string[]): number {
  let parsed: ParsedCli;
  try {
    parsed = parseCli(argv);
  } catch (err) {
    process.stderr.write(`${(err as Error).message}\n`);
    return 2;
  }

  try {
    const run = parsed.mode === "pooled" ? exportPooled : exportHidden;
    const result = run(parsed.fasta, parsed.manifest);
    for (const failure of result.failures) {
      process.stderr.write(`record '${failure.id}' failed: ${failure.error}\n`);
    }
    if (result.written === 0) {
      process.stderr.write("error: no records could be exported\n");
      return 3;
    }
    process.stderr.write(
      `wrote ${result.written} ${parsed.mode} record(s) to ${result.output}` +
        (result.failures.length > 0 ? ` (${result.failures.length} failed)` : "") +
        "\n",
    );
    return 0;
  } catch (err) {
    if (err instanceof FastaParseError) {
      process.stderr.write(`error: ${err.message}\n`);
    } else {
      process.stderr.write(`error: ${(err as Error).message}\n`);
    }
    return 3;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href;

if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
