/**
 * The two batch extraction flows. Both walk a corpus, skip and record
 * per-file failures, and emit a manifest the primary toolkit loads with
 * zero validation errors. Failed utterances are left out of the
 * manifest (the schema demands playable artifacts) and reported in
 * `metadata.failures` instead.
 */

import { join, resolve } from "node:path";

import { writeCodebook, writeEmbedding, writeUnits } from "./binary.js";
import { frameBandLogPowers } from "./dsp.js";
import {
  EMBED_FRAME_LEN,
  EMBED_HOP,
  UNIT_BANDS,
  UNIT_FRAME_LEN,
  resolveExtractor,
  type ExtractorSpec,
} from "./extractors.js";
import { kmeans } from "./kmeans.js";
import { discoverCorpus, writeManifest, type CorpusEntry } from "./manifest.js";
import { readWav } from "./wav.js";

/** Manifest schema requires embedding_dim even in a units-only corpus. */
const FALLBACK_EMBEDDING_DIM = 16;
const DEFAULT_UNIT_HOP_MS = 20;

export interface ExtractOptions {
  /** spectral-stats embedding length (even, >= 4). */
  dim: number;
  /** kmeans-units codebook size. */
  codebookSize: number;
  /** unit hop in milliseconds. */
  hopMs: number;
  seed: number;
}

export const DEFAULT_OPTIONS: ExtractOptions = {
  dim: 16,
  codebookSize: 32,
  hopMs: DEFAULT_UNIT_HOP_MS,
  seed: 0,
};

export interface ExtractionReport {
  manifestPath: string;
  model: string;
  /** Utterance ids successfully extracted, in manifest order. */
  extracted: string[];
  /** Utterance id -> reason, for files that could not be processed. */
  failures: Record<string, string>;
}

function meanStdEmbedding(frames: Float64Array[], nBands: number): Float64Array {
  const mean = new Float64Array(nBands);
  for (const frame of frames) {
    for (let b = 0; b < nBands; b++) mean[b] += frame[b];
  }
  for (let b = 0; b < nBands; b++) mean[b] /= frames.length;
  const std = new Float64Array(nBands);
  for (const frame of frames) {
    for (let b = 0; b < nBands; b++) {
      const d = frame[b] - mean[b];
      std[b] += d * d;
    }
  }
  const vec = new Float64Array(2 * nBands);
  for (let b = 0; b < nBands; b++) {
    vec[b] = mean[b];
    vec[nBands + b] = Math.sqrt(std[b] / frames.length);
  }
  let norm = 0;
  for (const v of vec) norm += v * v;
  norm = Math.sqrt(norm);
  for (let i = 0; i < vec.length; i++) vec[i] /= norm;
  return vec;
}

interface LoadedFrames {
  entry: CorpusEntry;
  frames: Float64Array[];
}

/** Read and frame every utterance, splitting successes from failures. */
function loadFrames(
  entries: CorpusEntry[],
  frameLen: number,
  hop: number,
  nBands: number,
): { loaded: LoadedFrames[]; failures: Record<string, string> } {
  const loaded: LoadedFrames[] = [];
  const failures: Record<string, string> = {};
  for (const entry of entries) {
    if (entry.audio === null) {
      failures[entry.id] = "no audio file listed for this utterance";
      continue;
    }
    let frames: Float64Array[];
    try {
      const wave = readWav(entry.audio);
      frames = frameBandLogPowers(wave.samples, wave.sampleRate, frameLen, hop, nBands);
    } catch (err) {
      failures[entry.id] = err instanceof Error ? err.message : String(err);
      continue;
    }
    if (frames.length === 0) {
      failures[entry.id] = "audio shorter than one analysis frame";
      continue;
    }
    loaded.push({ entry, frames });
  }
  return { loaded, failures };
}

function requireSurvivors(loaded: LoadedFrames[], failures: Record<string, string>): void {
  if (loaded.length === 0) {
    const detail = Object.entries(failures)
      .map(([id, why]) => `${id}: ${why}`)
      .join("; ");
    throw new Error(`no utterance could be extracted (${detail})`);
  }
}

export function extractEmbeddings(
  inDir: string,
  outDir: string,
  spec: ExtractorSpec,
  options: ExtractOptions,
): ExtractionReport {
  const corpus = discoverCorpus(inDir);
  const nBands = spec.dim / 2;
  const { loaded, failures } = loadFrames(corpus.entries, EMBED_FRAME_LEN, EMBED_HOP, nBands);
  requireSurvivors(loaded, failures);

  const out = resolve(outDir);
  const survivors: CorpusEntry[] = [];
  for (const { entry, frames } of loaded) {
    const path = join(out, "embeddings", `${entry.id}.f32`);
    writeEmbedding(path, meanStdEmbedding(frames, nBands));
    survivors.push({ ...entry, embedding: path });
  }

  const manifestPath = join(out, "manifest.json");
  writeManifest(manifestPath, survivors, spec.dim, corpus.unitVocabSize, corpus.unitHopMs ?? DEFAULT_UNIT_HOP_MS, {
    tool: "voicemetrics-bridge",
    model: spec.name,
    checkpoint: spec.checkpoint,
    seed: options.seed,
    failures,
  });
  return { manifestPath, model: spec.name, extracted: survivors.map((e) => e.id), failures };
}

export function extractUnits(
  inDir: string,
  outDir: string,
  spec: ExtractorSpec,
  options: ExtractOptions,
): ExtractionReport {
  const corpus = discoverCorpus(inDir);
  const hop = Math.round((options.hopMs / 1000) * 16000);
  if (hop < 1) throw new Error(`hop of ${options.hopMs} ms is shorter than one sample`);
  if (options.codebookSize < 1 || options.codebookSize > 65536) {
    throw new Error(`codebook size must be in [1, 65536], got ${options.codebookSize}`);
  }
  const { loaded, failures } = loadFrames(corpus.entries, UNIT_FRAME_LEN, hop, UNIT_BANDS);
  requireSurvivors(loaded, failures);

  const pooled: Float64Array[] = [];
  for (const { frames } of loaded) pooled.push(...frames);
  if (pooled.length < options.codebookSize) {
    throw new Error(
      `corpus has ${pooled.length} frames, fewer than the ${options.codebookSize}-entry codebook`,
    );
  }
  const { centroids, assignments } = kmeans(pooled, options.codebookSize, options.seed);

  const out = resolve(outDir);
  const survivors: CorpusEntry[] = [];
  let offset = 0;
  for (const { entry, frames } of loaded) {
    const ids = assignments.subarray(offset, offset + frames.length);
    offset += frames.length;
    const path = join(out, "units", `${entry.id}.u16`);
    writeUnits(path, Array.from(ids));
    survivors.push({ ...entry, units: path });
  }
  writeCodebook(join(out, "codebook.f32"), centroids);

  const manifestPath = join(out, "manifest.json");
  writeManifest(
    manifestPath,
    survivors,
    corpus.embeddingDim ?? FALLBACK_EMBEDDING_DIM,
    options.codebookSize,
    options.hopMs,
    {
      tool: "voicemetrics-bridge",
      model: spec.name,
      checkpoint: spec.checkpoint,
      seed: options.seed,
      failures,
    },
  );
  return { manifestPath, model: spec.name, extracted: survivors.map((e) => e.id), failures };
}

/** Resolve the model and run whichever flow it implements. */
export function runExtraction(
  model: string,
  inDir: string,
  outDir: string,
  options: Partial<ExtractOptions> = {},
): ExtractionReport {
  const opts = { ...DEFAULT_OPTIONS, ...options };
  const spec = resolveExtractor(model, opts.dim);
  return spec.kind === "embedding"
    ? extractEmbeddings(inDir, outDir, spec, opts)
    : extractUnits(inDir, outDir, spec, opts);
}
