export {
  AMINO_ACIDS,
  BOS_TOKEN,
  CONTEXT_RADIUS,
  EOS_TOKEN,
  HashContextEmbedder,
  createEmbedder,
  sanitizeSequence,
  type ResidueEmbedder,
} from "./backbone.js";
export { FastaParseError, parseFasta, type FastaRecord } from "./fasta.js";
export {
  DEFAULT_MANIFEST,
  exportHidden,
  exportPooled,
  exportRecords,
  makeManifest,
  pooledRow,
  type ExportManifest,
  type ExportMode,
  type ExportOptions,
  type ExportResult,
  type RecordFailure,
} from "./export.js";
export {
  FORMAT_VERSION,
  ROWSET_MAGIC,
  RowFileError,
  encodeRowFile,
  readRowFile,
  writeRowFile,
  type RowRecord,
} from "./rowfile.js";
