export interface EmbeddingRecord {
  label: string;
  vector: number[];
  meta?: Record<string, string>;
}

export type JobKind = "terms" | "context_terms" | "audio";

export interface FetchJob {
  modelId: string;
  kind: JobKind;
  /** Terms for text jobs, audio file paths for audio jobs. */
  inputs: string[];
  /** Required for context_terms; must contain the TERM placeholder exactly once. */
  template?: string;
  outPath: string;
  /** When set, every returned vector must have exactly this many entries. */
  expectDim?: number;
  concurrency?: number;
  batchSize?: number;
}

export interface TextProvider {
  embedTexts(texts: string[], model: string): Promise<number[][]>;
}

export interface AudioProvider {
  embedAudio(filePath: string, model: string): Promise<number[]>;
  /** Provider-specific notes (input handling, windowing) stored on each record. */
  meta(): Record<string, string>;
}
