import { DimensionError } from "./errors.js";
import { appendRecords, readExisting, writeSorted } from "./jsonl.js";
import { applyContext } from "./template.js";
import type { EmbeddingRecord, FetchJob, TextProvider } from "./types.js";

const DEFAULT_BATCH = 32;
const DEFAULT_CONCURRENCY = 4;

export interface TextFetchResult {
  /** Labels fetched in this run (already-present labels are skipped). */
  fetched: string[];
  total: number;
}

function chunk<T>(items: T[], size: number): T[][] {
  const out: T[][] = [];
  for (let i = 0; i < items.length; i += size) {
    out.push(items.slice(i, i + size));
  }
  return out;
}

function checkDim(vectors: number[][], labels: string[], expect?: number): void {
  for (let i = 0; i < vectors.length; i++) {
    const d = vectors[i]!.length;
    if (expect !== undefined && d !== expect) {
      throw new DimensionError(
        `${labels[i]}: got ${d} dimensions, expected ${expect}`,
      );
    }
  }
}

/**
 * Embed every term in the job, writing corpus-format JSONL.
 *
 * Labels are the raw terms even when a context template wraps the text
 * actually sent to the model. Terms whose labels are already in the
 * output file are not fetched again, so an interrupted run picks up
 * where it stopped. Completed batches are appended immediately; when
 * everything is in, the file is rewritten sorted by label, which makes
 * the bytes independent of batch completion order.
 */
export async function fetchTextEmbeddings(
  job: FetchJob,
  provider: TextProvider,
): Promise<TextFetchResult> {
  if (job.inputs.length === 0) {
    throw new Error("term list is empty");
  }
  const terms = job.inputs;
  const dup = terms.find((t, i) => terms.indexOf(t) !== i);
  if (dup !== undefined) {
    throw new Error(`duplicate term ${JSON.stringify(dup)}`);
  }
  const prompts =
    job.kind === "context_terms"
      ? applyContext(terms, job.template ?? "")
      : terms;

  const existing = readExisting(job.outPath);
  const have = new Set(existing.map((r) => r.label));
  const pending: { label: string; prompt: string }[] = [];
  for (let i = 0; i < terms.length; i++) {
    if (!have.has(terms[i]!)) {
      pending.push({ label: terms[i]!, prompt: prompts[i]! });
    }
  }

  const batches = chunk(pending, job.batchSize ?? DEFAULT_BATCH);
  const workers = Math.max(1, job.concurrency ?? DEFAULT_CONCURRENCY);
  const fetched: string[] = [];
  let cursor = 0;

  async function drain(): Promise<void> {
    while (cursor < batches.length) {
      const batch = batches[cursor++]!;
      const labels = batch.map((b) => b.label);
      const vectors = await provider.embedTexts(
        batch.map((b) => b.prompt),
        job.modelId,
      );
      if (vectors.length !== labels.length) {
        throw new Error(
          `provider returned ${vectors.length} vectors for ${labels.length} inputs`,
        );
      }
      checkDim(vectors, labels, job.expectDim);
      const records: EmbeddingRecord[] = labels.map((label, i) => ({
        label,
        vector: vectors[i]!,
      }));
      appendRecords(job.outPath, records);
      fetched.push(...labels);
    }
  }

  await Promise.all(Array.from({ length: workers }, () => drain()));

  const all = readExisting(job.outPath);
  checkDim(all.map((r) => r.vector), all.map((r) => r.label), job.expectDim);
  writeSorted(job.outPath, all);
  return { fetched, total: all.length };
}
