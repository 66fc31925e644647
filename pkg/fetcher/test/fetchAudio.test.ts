import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { audioLabel, fetchAudioEmbeddings } from "../src/fetchAudio.js";
import { readExisting } from "../src/jsonl.js";
import { mockAudioProvider } from "../src/provider.js";
import type { FetchJob } from "../src/types.js";

let dir: string;

beforeEach(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "fetchaudio-"));
});

afterEach(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

/** A minimal RIFF blob the mock provider accepts as audio. */
function writeWav(name: string, payload: string): string {
  const file = path.join(dir, name);
  fs.writeFileSync(file, Buffer.concat([Buffer.from("RIFF"), Buffer.from(payload)]));
  return file;
}

function job(inputs: string[], overrides: Partial<FetchJob> = {}): FetchJob {
  return {
    modelId: "audio-model",
    kind: "audio",
    inputs,
    outPath: path.join(dir, "audio.jsonl"),
    expectDim: 12,
    ...overrides,
  };
}

describe("audioLabel", () => {
  it("is the file name without directory or extension", () => {
    expect(audioLabel("/data/perf07.wav")).toBe("perf07");
    expect(audioLabel("clip.tar.gz")).toBe("clip.tar");
  });
});

describe("fetchAudioEmbeddings", () => {
  it("writes one record per file, keyed by performance id", async () => {
    const files = ["p00.wav", "p01.wav", "p02.wav"].map((n) => writeWav(n, n));
    const result = await fetchAudioEmbeddings(job(files), mockAudioProvider(12));
    expect(result.failures).toEqual([]);
    const records = readExisting(job(files).outPath);
    expect(records.map((r) => r.label)).toEqual(["p00", "p01", "p02"]);
    expect(records.every((r) => r.vector.length === 12)).toBe(true);
  });

  it("records the provider's input handling on every record", async () => {
    const files = [writeWav("p00.wav", "x")];
    await fetchAudioEmbeddings(job(files), mockAudioProvider(12));
    const records = readExisting(job(files).outPath);
    expect(records[0]!.meta).toEqual({ input: "whole excerpt, single window" });
  });

  it("lists a corrupt file and keeps going", async () => {
    const good = ["p00.wav", "p02.wav"].map((n) => writeWav(n, n));
    const bad = path.join(dir, "p01.wav");
    fs.writeFileSync(bad, "this is not audio");
    const result = await fetchAudioEmbeddings(
      job([good[0]!, bad, good[1]!]),
      mockAudioProvider(12),
    );
    expect(result.failures).toHaveLength(1);
    expect(result.failures[0]!.file).toBe(bad);
    expect(result.failures[0]!.error).toMatch(/not a recognized audio file/);
    const records = readExisting(job([]).outPath);
    expect(records.map((r) => r.label)).toEqual(["p00", "p02"]);
  });

  it("is idempotent across reruns", async () => {
    const files = ["p00.wav", "p01.wav"].map((n) => writeWav(n, n));
    const j = job(files);
    await fetchAudioEmbeddings(j, mockAudioProvider(12));
    const before = fs.readFileSync(j.outPath);
    const again = await fetchAudioEmbeddings(j, mockAudioProvider(12));
    expect(again.fetched).toEqual([]);
    expect(fs.readFileSync(j.outPath).equals(before)).toBe(true);
  });

  it("fetches only what a previous partial run left missing", async () => {
    const all = ["p00.wav", "p01.wav", "p02.wav"].map((n) => writeWav(n, n));
    const j = job(all);
    await fetchAudioEmbeddings(job(all.slice(0, 1)), mockAudioProvider(12));
    const result = await fetchAudioEmbeddings(j, mockAudioProvider(12));
    expect(result.fetched.sort()).toEqual(["p01", "p02"]);
    expect(readExisting(j.outPath)).toHaveLength(3);
  });

  it("rejects two files that collapse to one label", async () => {
    const a = writeWav("p00.wav", "a");
    const sub = path.join(dir, "sub");
    fs.mkdirSync(sub);
    const b = path.join(sub, "p00.wav");
    fs.writeFileSync(b, Buffer.from("RIFFb"));
    await expect(
      fetchAudioEmbeddings(job([a, b]), mockAudioProvider(12)),
    ).rejects.toThrow(/same label/);
  });

  it("treats a wrong-dimension vector as a per-file failure", async () => {
    const files = [writeWav("p00.wav", "x")];
    const result = await fetchAudioEmbeddings(
      job(files, { expectDim: 99 }),
      mockAudioProvider(12),
    );
    expect(result.failures).toHaveLength(1);
    expect(result.failures[0]!.error).toMatch(/99/);
  });
});
