/**
 * Minimal WAV codec for the toolkit's audio contract:
 * 16 kHz, mono, 16-bit PCM, little-endian. Anything else is rejected
 * rather than resampled, so a corpus never changes shape silently.
 */

import { readFileSync, writeFileSync } from "node:fs";

export const SAMPLE_RATE = 16000;

const PCM_FULL_SCALE = 32768;

export interface Wave {
  sampleRate: number;
  /** Samples scaled to [-1, 1) with full scale at 32768. */
  samples: Float64Array;
}

/** Decode a RIFF/WAVE buffer, walking chunks until fmt and data appear. */
export function decodeWav(bytes: Buffer): Wave {
  if (bytes.length < 12 || bytes.toString("ascii", 0, 4) !== "RIFF") {
    throw new Error("not a RIFF file");
  }
  if (bytes.toString("ascii", 8, 12) !== "WAVE") {
    throw new Error("not a WAVE file");
  }

  let offset = 12;
  let format: { audioFormat: number; channels: number; rate: number; bits: number } | null = null;
  let data: Buffer | null = null;
  while (offset + 8 <= bytes.length) {
    const id = bytes.toString("ascii", offset, offset + 4);
    const size = bytes.readUInt32LE(offset + 4);
    const body = offset + 8;
    if (body + size > bytes.length) {
      throw new Error(`truncated '${id}' chunk`);
    }
    if (id === "fmt ") {
      if (size < 16) throw new Error("fmt chunk too small");
      format = {
        audioFormat: bytes.readUInt16LE(body),
        channels: bytes.readUInt16LE(body + 2),
        rate: bytes.readUInt32LE(body + 4),
        bits: bytes.readUInt16LE(body + 14),
      };
    } else if (id === "data") {
      data = bytes.subarray(body, body + size);
    }
    offset = body + size + (size % 2); // chunks are word-aligned
  }

  if (format === null) throw new Error("missing fmt chunk");
  if (data === null) throw new Error("missing data chunk");
  if (format.audioFormat !== 1 || format.bits !== 16) {
    throw new Error(`need 16-bit PCM, got format ${format.audioFormat} at ${format.bits} bits`);
  }
  if (format.channels !== 1) {
    throw new Error(`need mono audio, got ${format.channels} channels`);
  }
  if (format.rate !== SAMPLE_RATE) {
    throw new Error(`need ${SAMPLE_RATE} Hz audio, got ${format.rate} Hz`);
  }
  if (data.length % 2 !== 0) {
    throw new Error(`odd data chunk length ${data.length}`);
  }

  const n = data.length / 2;
  const samples = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    samples[i] = data.readInt16LE(2 * i) / PCM_FULL_SCALE;
  }
  return { sampleRate: format.rate, samples };
}

export function readWav(path: string): Wave {
  return decodeWav(readFileSync(path));
}

/** Encode samples in [-1, 1) as a canonical 44-byte-header WAV buffer. */
export function encodeWav(samples: Float64Array | number[], sampleRate = SAMPLE_RATE): Buffer {
  const n = samples.length;
  const buf = Buffer.alloc(44 + 2 * n);
  buf.write("RIFF", 0, "ascii");
  buf.writeUInt32LE(36 + 2 * n, 4);
  buf.write("WAVE", 8, "ascii");
  buf.write("fmt ", 12, "ascii");
  buf.writeUInt32LE(16, 16);
  buf.writeUInt16LE(1, 20); // PCM
  buf.writeUInt16LE(1, 22); // mono
  buf.writeUInt32LE(sampleRate, 24);
  buf.writeUInt32LE(sampleRate * 2, 28); // byte rate
  buf.writeUInt16LE(2, 32); // block align
  buf.writeUInt16LE(16, 34); // bits per sample
  buf.write("data", 36, "ascii");
  buf.writeUInt32LE(2 * n, 40);
  for (let i = 0; i < n; i++) {
    const scaled = Math.round(samples[i] * PCM_FULL_SCALE);
    buf.writeInt16LE(Math.max(-32768, Math.min(32767, scaled)), 44 + 2 * i);
  }
  return buf;
}

export function writeWav(path: string, samples: Float64Array | number[], sampleRate = SAMPLE_RATE): void {
  writeFileSync(path, encodeWav(samples, sampleRate));
}

/** Duration in seconds as the primary loader computes it: frames / rate. */
export function wavDurationSeconds(path: string): number {
  const wave = readWav(path);
  return wave.samples.length / wave.sampleRate;
}
