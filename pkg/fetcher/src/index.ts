export { applyContext, PLACEHOLDER } from "./template.js";
export { fetchTextEmbeddings } from "./fetchText.js";
export { fetchAudioEmbeddings, audioLabel } from "./fetchAudio.js";
export { parseRecords, readExisting, writeSorted } from "./jsonl.js";
export {
  httpAudioProvider,
  httpTextProvider,
  mockAudioProvider,
  mockTextProvider,
} from "./provider.js";
export { AuthError, DimensionError, FetchFailure, TemplateError } from "./errors.js";
export type {
  AudioProvider,
  EmbeddingRecord,
  FetchJob,
  JobKind,
  TextProvider,
} from "./types.js";
