/**
 * Corpus discovery and manifest emission.
 *
 * A corpus directory is either a bare pile of 16 kHz WAVs (utterance id
 * = file stem, speaker = stem up to the first underscore) or a
 * directory holding a manifest.json from a previous stage, whose ids,
 * speakers, durations, and already-extracted artifact paths are
 * preserved. The emitted manifest matches the primary loader's schema:
 * embedding_dim, optional unit_vocab_size, unit_hop_ms, and one entry
 * per utterance with paths relative to the manifest's directory.
 */

import { existsSync, readFileSync, readdirSync, writeFileSync, mkdirSync } from "node:fs";
import { dirname, join, relative, resolve } from "node:path";

import { wavDurationSeconds } from "./wav.js";

export interface CorpusEntry {
  id: string;
  speaker: string;
  durationS: number;
  /** Absolute paths; null when the artifact does not exist yet. */
  audio: string | null;
  embedding: string | null;
  units: string | null;
  segments: string | null;
}

export interface Corpus {
  entries: CorpusEntry[];
  embeddingDim: number | null;
  unitVocabSize: number | null;
  unitHopMs: number | null;
}

export function speakerFromId(id: string): string {
  const underscore = id.indexOf("_");
  return underscore > 0 ? id.slice(0, underscore) : id;
}

function corpusFromManifest(manifestPath: string): Corpus {
  const doc = JSON.parse(readFileSync(manifestPath, "utf8"));
  const root = dirname(resolve(manifestPath));
  if (!Array.isArray(doc.utterances)) {
    throw new Error(`${manifestPath}: utterances must be a list`);
  }
  const abs = (rel: unknown): string | null =>
    typeof rel === "string" && rel.length > 0 ? resolve(root, rel) : null;
  const entries: CorpusEntry[] = doc.utterances.map((u: Record<string, unknown>) => {
    if (typeof u.id !== "string" || typeof u.speaker !== "string") {
      throw new Error(`${manifestPath}: every utterance needs string id and speaker`);
    }
    return {
      id: u.id,
      speaker: u.speaker,
      durationS: Number(u.duration_s),
      audio: abs(u.audio),
      embedding: abs(u.embedding),
      units: abs(u.units),
      segments: abs(u.segments),
    };
  });
  entries.sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0));
  return {
    entries,
    embeddingDim: typeof doc.embedding_dim === "number" ? doc.embedding_dim : null,
    unitVocabSize: typeof doc.unit_vocab_size === "number" ? doc.unit_vocab_size : null,
    unitHopMs: typeof doc.unit_hop_ms === "number" ? doc.unit_hop_ms : null,
  };
}

function corpusFromWavs(dir: string): Corpus {
  const wavs = readdirSync(dir)
    .filter((name) => name.toLowerCase().endsWith(".wav"))
    .sort();
  const entries: CorpusEntry[] = wavs.map((name) => {
    const id = name.slice(0, -4);
    const path = resolve(dir, name);
    let durationS: number;
    try {
      durationS = wavDurationSeconds(path);
    } catch {
      // keep the entry; extraction will fail it with the real message
      durationS = NaN;
    }
    return {
      id,
      speaker: speakerFromId(id),
      durationS,
      audio: path,
      embedding: null,
      units: null,
      segments: null,
    };
  });
  return { entries, embeddingDim: null, unitVocabSize: null, unitHopMs: null };
}

export function discoverCorpus(dir: string): Corpus {
  const manifestPath = join(dir, "manifest.json");
  const corpus = existsSync(manifestPath) ? corpusFromManifest(manifestPath) : corpusFromWavs(dir);
  if (corpus.entries.length === 0) {
    throw new Error(`no utterances found in ${dir} (no manifest.json, no *.wav)`);
  }
  const seen = new Set<string>();
  for (const entry of corpus.entries) {
    if (seen.has(entry.id)) throw new Error(`duplicate utterance id '${entry.id}'`);
    seen.add(entry.id);
  }
  return corpus;
}

export interface ManifestMetadata {
  tool: string;
  model: string;
  checkpoint: string;
  seed: number;
  failures: Record<string, string>;
}

/**
 * Write the manifest JSON next to the emitted artifacts.
 *
 * Key order and 2-space indentation follow the primary writer; the
 * extra `metadata` block (extractor identity, checkpoint identifier,
 * per-file failures) is ignored by the primary loader. Nothing
 * time-dependent is written, so reruns are byte-identical.
 */
export function writeManifest(
  path: string,
  entries: CorpusEntry[],
  embeddingDim: number,
  unitVocabSize: number | null,
  unitHopMs: number,
  metadata: ManifestMetadata,
): void {
  const base = dirname(resolve(path));
  const rel = (p: string | null): string | undefined =>
    p === null ? undefined : relative(base, p);
  const doc: Record<string, unknown> = { embedding_dim: embeddingDim };
  if (unitVocabSize !== null) doc.unit_vocab_size = unitVocabSize;
  doc.unit_hop_ms = unitHopMs;
  doc.metadata = metadata;
  doc.utterances = entries.map((e) => {
    const entry: Record<string, unknown> = {
      id: e.id,
      speaker: e.speaker,
      duration_s: e.durationS,
    };
    if (e.audio) entry.audio = rel(e.audio);
    if (e.embedding) entry.embedding = rel(e.embedding);
    if (e.units) entry.units = rel(e.units);
    if (e.segments) entry.segments = rel(e.segments);
    return entry;
  });
  mkdirSync(base, { recursive: true });
  writeFileSync(path, JSON.stringify(doc, null, 2) + "\n");
}
