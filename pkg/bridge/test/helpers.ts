/** Shared fixture builders for the bridge tests. */

import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { SAMPLE_RATE, writeWav } from "../src/wav.js";

export function tempDir(prefix: string): string {
  return mkdtempSync(join(tmpdir(), `${prefix}-`));
}

export function sine(freqHz: number, durationS: number, amplitude = 0.4): Float64Array {
  const n = Math.round(durationS * SAMPLE_RATE);
  const samples = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    samples[i] = amplitude * Math.sin((2 * Math.PI * freqHz * i) / SAMPLE_RATE);
  }
  return samples;
}

export interface CorpusOptions {
  withZeroLength?: boolean;
  withGarbage?: boolean;
}

/**
 * Three speakers at well-separated pitches, two utterances each, with
 * slightly different durations and levels per utterance.
 */
export function buildWavCorpus(dir: string, options: CorpusOptions = {}): string[] {
  const freqs: Record<string, number> = { spk0: 220, spk1: 880, spk2: 3000 };
  const ids: string[] = [];
  for (const [speaker, freq] of Object.entries(freqs)) {
    for (let j = 0; j < 2; j++) {
      const id = `${speaker}_00${j}`;
      writeWav(join(dir, `${id}.wav`), sine(freq, 0.3 + 0.1 * j, 0.35 + 0.05 * j));
      ids.push(id);
    }
  }
  if (options.withZeroLength) {
    writeWav(join(dir, "spk0_empty.wav"), new Float64Array(0));
    ids.push("spk0_empty");
  }
  if (options.withGarbage) {
    writeFileSync(join(dir, "spk1_bad.wav"), "this is not audio");
    ids.push("spk1_bad");
  }
  return ids.sort();
}
