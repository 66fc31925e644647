import * as fs from "node:fs";
import * as path from "node:path";

import type { EmbeddingRecord } from "./types.js";

/** Parse JSONL embedding records, skipping blank lines. */
export function parseRecords(text: string, source = "<data>"): EmbeddingRecord[] {
  const records: EmbeddingRecord[] = [];
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i]!.trim();
    if (!line) continue;
    let rec: unknown;
    try {
      rec = JSON.parse(line);
    } catch (err) {
      throw new Error(`${source}:${i + 1}: bad JSON: ${String(err)}`);
    }
    if (
      typeof rec !== "object" ||
      rec === null ||
      typeof (rec as EmbeddingRecord).label !== "string" ||
      !Array.isArray((rec as EmbeddingRecord).vector)
    ) {
      throw new Error(`${source}:${i + 1}: each record needs 'label' and 'vector'`);
    }
    const vector = (rec as EmbeddingRecord).vector;
    if (!vector.every((v) => typeof v === "number" && Number.isFinite(v))) {
      throw new Error(`${source}:${i + 1}: vector entries must be finite numbers`);
    }
    records.push(rec as EmbeddingRecord);
  }
  return records;
}

/** Records already on disk, or an empty list when the file does not exist. */
export function readExisting(filePath: string): EmbeddingRecord[] {
  let text: string;
  try {
    text = fs.readFileSync(filePath, "utf8");
  } catch (err) {
    if ((err as NodeJS.ErrnoException).code === "ENOENT") return [];
    throw err;
  }
  return parseRecords(text, filePath);
}

function serialize(rec: EmbeddingRecord): string {
  const out: EmbeddingRecord = { label: rec.label, vector: rec.vector };
  if (rec.meta !== undefined) out.meta = rec.meta;
  return JSON.stringify(out);
}

/** Append records to the file as they arrive; each line is a complete record. */
export function appendRecords(filePath: string, records: EmbeddingRecord[]): void {
  if (records.length === 0) return;
  fs.mkdirSync(path.dirname(filePath), { recursive: true });
  fs.appendFileSync(filePath, records.map((r) => serialize(r) + "\n").join(""));
}

/**
 * Replace the file with the records sorted by label, via temp file + rename.
 *
 * Byte order, not locale order, so the result is machine-independent.
 */
export function writeSorted(filePath: string, records: EmbeddingRecord[]): void {
  const seen = new Set<string>();
  for (const rec of records) {
    if (seen.has(rec.label)) {
      throw new Error(`duplicate label ${JSON.stringify(rec.label)}`);
    }
    seen.add(rec.label);
  }
  const sorted = [...records].sort((a, b) =>
    a.label < b.label ? -1 : a.label > b.label ? 1 : 0,
  );
  fs.mkdirSync(path.dirname(filePath), { recursive: true });
  const tmp = `${filePath}.tmp-${process.pid}`;
  fs.writeFileSync(tmp, sorted.map((r) => serialize(r) + "\n").join(""));
  fs.renameSync(tmp, filePath);
}
