import * as path from "node:path";

import { appendRecords, readExisting, writeSorted } from "./jsonl.js";
import { DimensionError } from "./errors.js";
import type { AudioProvider, EmbeddingRecord, FetchJob } from "./types.js";

const DEFAULT_CONCURRENCY = 4;

export interface AudioFetchResult {
  fetched: string[];
  total: number;
  /** Files that could not be embedded; the run does not stop for them. */
  failures: { file: string; error: string }[];
}

/** Performance id: the file name without its extension. */
export function audioLabel(filePath: string): string {
  return path.basename(filePath, path.extname(filePath));
}

/**
 * Embed audio excerpts one file at a time, collecting per-file failures.
 *
 * A bad file is reported and skipped rather than aborting the run, so
 * one corrupt download does not cost a whole fetch. Labels already in
 * the output are not fetched again; the final sorted rewrite makes
 * reruns byte-stable. Provider notes (windowing, input handling) land
 * on each record under "meta".
 */
export async function fetchAudioEmbeddings(
  job: FetchJob,
  provider: AudioProvider,
): Promise<AudioFetchResult> {
  if (job.inputs.length === 0) {
    throw new Error("no audio files given");
  }
  const labels = job.inputs.map(audioLabel);
  const dup = labels.find((l, i) => labels.indexOf(l) !== i);
  if (dup !== undefined) {
    throw new Error(`two audio files map to the same label ${JSON.stringify(dup)}`);
  }

  const existing = readExisting(job.outPath);
  const have = new Set(existing.map((r) => r.label));
  const pending = job.inputs.filter((f) => !have.has(audioLabel(f)));
  const meta = provider.meta();

  const fetched: string[] = [];
  const failures: { file: string; error: string }[] = [];
  const workers = Math.max(1, job.concurrency ?? DEFAULT_CONCURRENCY);
  let cursor = 0;

  async function drain(): Promise<void> {
    while (cursor < pending.length) {
      const file = pending[cursor++]!;
      const label = audioLabel(file);
      let vector: number[];
      try {
        vector = await provider.embedAudio(file, job.modelId);
      } catch (err) {
        failures.push({ file, error: String(err) });
        continue;
      }
      if (job.expectDim !== undefined && vector.length !== job.expectDim) {
        failures.push({
          file,
          error: String(
            new DimensionError(
              `got ${vector.length} dimensions, expected ${job.expectDim}`,
            ),
          ),
        });
        continue;
      }
      const record: EmbeddingRecord = { label, vector, meta };
      appendRecords(job.outPath, [record]);
      fetched.push(label);
    }
  }

  await Promise.all(Array.from({ length: workers }, () => drain()));

  const all = readExisting(job.outPath);
  if (all.length > 0) {
    writeSorted(job.outPath, all);
  }
  failures.sort((a, b) => (a.file < b.file ? -1 : a.file > b.file ? 1 : 0));
  return { fetched, total: all.length, failures };
}
