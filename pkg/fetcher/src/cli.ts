import * as fs from "node:fs";
import * as path from "node:path";
import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { AuthError, TemplateError } from "./errors.js";
import { fetchAudioEmbeddings } from "./fetchAudio.js";
import { fetchTextEmbeddings } from "./fetchText.js";
import {
  httpAudioProvider,
  httpTextProvider,
  mockAudioProvider,
  mockTextProvider,
} from "./provider.js";
import type { FetchJob } from "./types.js";

const USAGE = `usage:
  embedfetch fetch --model <id> --terms <file> --out <vectors.jsonl>
                   [--context-template <file>] [--dim <n>]
                   [--concurrency <n>] [--batch <n>] [--provider http|mock]
  embedfetch fetch-audio --model <id> --audio-dir <dir> --out <audio.jsonl>
                   [--dim <n>] [--concurrency <n>] [--provider http|mock]

Credentials are read from EMBEDFETCH_API_KEY (or OPENAI_API_KEY) only;
EMBEDFETCH_BASE_URL overrides the default API host.`;

const AUDIO_EXTENSIONS = new Set([".wav", ".flac", ".mp3", ".ogg"]);

class UsageError extends Error {}

function readTerms(file: string): string[] {
  const lines = fs.readFileSync(file, "utf8").split("\n");
  return lines.map((l) => l.trim()).filter((l) => l.length > 0);
}

function listAudio(dir: string): string[] {
  const files = fs
    .readdirSync(dir)
    .filter((f) => AUDIO_EXTENSIONS.has(path.extname(f).toLowerCase()))
    .sort()
    .map((f) => path.join(dir, f));
  if (files.length === 0) {
    throw new UsageError(`no audio files (${[...AUDIO_EXTENSIONS].join(", ")}) in ${dir}`);
  }
  return files;
}

function positiveInt(value: string | undefined, flag: string): number | undefined {
  if (value === undefined) return undefined;
  const n = Number(value);
  if (!Number.isInteger(n) || n < 1) {
    throw new UsageError(`${flag} must be a positive integer, got ${value}`);
  }
  return n;
}

async function runFetch(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      model: { type: "string" },
      terms: { type: "string" },
      out: { type: "string" },
      "context-template": { type: "string" },
      dim: { type: "string" },
      concurrency: { type: "string" },
      batch: { type: "string" },
      provider: { type: "string", default: "http" },
    },
  });
  if (!values.model || !values.terms || !values.out) {
    throw new UsageError("fetch needs --model, --terms and --out");
  }
  const templateFile = values["context-template"];
  const job: FetchJob = {
    modelId: values.model,
    kind: templateFile ? "context_terms" : "terms",
    inputs: readTerms(values.terms),
    template: templateFile ? fs.readFileSync(templateFile, "utf8").trim() : undefined,
    outPath: values.out,
    expectDim: positiveInt(values.dim, "--dim"),
    concurrency: positiveInt(values.concurrency, "--concurrency"),
    batchSize: positiveInt(values.batch, "--batch"),
  };
  const provider = pickTextProvider(values.provider!, job.expectDim);
  const result = await fetchTextEmbeddings(job, provider);
  console.log(
    `fetched ${result.fetched.length} of ${result.total} records -> ${job.outPath}`,
  );
  return 0;
}

async function runFetchAudio(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      model: { type: "string" },
      "audio-dir": { type: "string" },
      out: { type: "string" },
      dim: { type: "string" },
      concurrency: { type: "string" },
      provider: { type: "string", default: "http" },
    },
  });
  if (!values.model || !values["audio-dir"] || !values.out) {
    throw new UsageError("fetch-audio needs --model, --audio-dir and --out");
  }
  const expectDim = positiveInt(values.dim, "--dim");
  const job: FetchJob = {
    modelId: values.model,
    kind: "audio",
    inputs: listAudio(values["audio-dir"]),
    outPath: values.out,
    expectDim,
    concurrency: positiveInt(values.concurrency, "--concurrency"),
  };
  const provider =
    values.provider === "mock"
      ? mockAudioProvider(requireDim(expectDim))
      : httpAudioProvider();
  const result = await fetchAudioEmbeddings(job, provider);
  console.log(
    `fetched ${result.fetched.length} of ${result.total} records -> ${job.outPath}`,
  );
  for (const failure of result.failures) {
    console.error(`failed: ${failure.file}: ${failure.error}`);
  }
  return result.failures.length > 0 ? 1 : 0;
}

function requireDim(dim: number | undefined): number {
  if (dim === undefined) {
    throw new UsageError("--provider mock needs --dim to size its vectors");
  }
  return dim;
}

function pickTextProvider(name: string, dim: number | undefined) {
  if (name === "mock") return mockTextProvider(requireDim(dim));
  if (name === "http") return httpTextProvider();
  throw new UsageError(`unknown provider ${name}; use http or mock`);
}

export async function runCli(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  try {
    if (command === "fetch") return await runFetch(rest);
    if (command === "fetch-audio") return await runFetchAudio(rest);
    console.error(USAGE);
    return command === "--help" || command === "-h" ? 0 : 2;
  } catch (err) {
    const parseCode = (err as NodeJS.ErrnoException)?.code ?? "";
    if (
      err instanceof UsageError ||
      err instanceof TemplateError ||
      err instanceof AuthError ||
      parseCode.startsWith("ERR_PARSE_ARGS")
    ) {
      console.error(String(err instanceof Error ? err.message : err));
      return 2;
    }
    console.error(String(err));
    return 1;
  }
}

const entry = process.argv[1] ? pathToFileURL(process.argv[1]).href : "";
if (import.meta.url === entry) {
  runCli(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
