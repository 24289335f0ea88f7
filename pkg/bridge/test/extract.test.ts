import { mkdirSync, readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";
import { spawnSync } from "node:child_process";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { CheckpointRequiredError } from "../src/extractors.js";
import { runExtraction } from "../src/extract.js";
import { runCli } from "../src/cli.js";
import { writeWav } from "../src/wav.js";
import { buildWavCorpus, sine, tempDir } from "./helpers.js";

function readFloat32(path: string): number[] {
  const buf = readFileSync(path);
  const out: number[] = [];
  for (let i = 0; i < buf.length; i += 4) out.push(buf.readFloatLE(i));
  return out;
}

function readUint16(path: string): number[] {
  const buf = readFileSync(path);
  const out: number[] = [];
  for (let i = 0; i < buf.length; i += 2) out.push(buf.readUInt16LE(i));
  return out;
}

function cosine(a: number[], b: number[]): number {
  let dot = 0;
  let na = 0;
  let nb = 0;
  for (let i = 0; i < a.length; i++) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / Math.sqrt(na * nb);
}

describe("embedding extraction", () => {
  it("writes unit-norm float32 embeddings that cluster by speaker", () => {
    const root = tempDir("embed");
    const src = join(root, "src");
    mkdirSync(src, { recursive: true });
    buildWavCorpus(src);
    const report = runExtraction("spectral-stats", src, join(root, "out"));

    expect(report.extracted).toEqual([
      "spk0_000",
      "spk0_001",
      "spk1_000",
      "spk1_001",
      "spk2_000",
      "spk2_001",
    ]);
    expect(report.failures).toEqual({});

    const manifest = JSON.parse(readFileSync(report.manifestPath, "utf8"));
    expect(manifest.embedding_dim).toBe(16);
    expect(manifest.metadata.model).toBe("spectral-stats");
    expect(manifest.metadata.checkpoint).toMatch(/deterministic/);
    expect(manifest.utterances).toHaveLength(6);

    const vecs: Record<string, number[]> = {};
    for (const utt of manifest.utterances) {
      const values = readFloat32(join(root, "out", utt.embedding));
      expect(values).toHaveLength(16);
      const norm = Math.sqrt(values.reduce((s, v) => s + v * v, 0));
      expect(norm).toBeCloseTo(1.0, 5);
      vecs[utt.id] = values;
    }
    const same = cosine(vecs.spk0_000, vecs.spk0_001);
    const cross = cosine(vecs.spk0_000, vecs.spk1_000);
    expect(same).toBeGreaterThan(cross);
  });

  it("replays byte-identically and lists per-file failures without aborting", () => {
    const root = tempDir("embed-replay");
    const src = join(root, "src");
    mkdirSync(src, { recursive: true });
    buildWavCorpus(src, { withZeroLength: true, withGarbage: true });

    const first = runExtraction("spectral-stats", src, join(root, "out1"));
    const second = runExtraction("spectral-stats", src, join(root, "out2"));

    expect(Object.keys(first.failures).sort()).toEqual(["spk0_empty", "spk1_bad"]);
    expect(first.failures.spk0_empty).toMatch(/shorter than one analysis frame/);
    expect(first.extracted).toHaveLength(6);

    const manifest = JSON.parse(readFileSync(first.manifestPath, "utf8"));
    expect(manifest.utterances.map((u: { id: string }) => u.id)).not.toContain("spk0_empty");
    expect(manifest.metadata.failures.spk1_bad).toMatch(/RIFF/);

    // identical bytes: manifest and every artifact
    expect(readFileSync(first.manifestPath, "utf8")).toBe(
      readFileSync(second.manifestPath, "utf8"),
    );
    for (const name of readdirSync(join(root, "out1", "embeddings"))) {
      expect(
        readFileSync(join(root, "out1", "embeddings", name)).equals(
          readFileSync(join(root, "out2", "embeddings", name)),
        ),
      ).toBe(true);
    }
  });
});

describe("unit extraction", () => {
  it("chains over an embedding stage and emits units plus a codebook", () => {
    const root = tempDir("units");
    const src = join(root, "src");
    mkdirSync(src, { recursive: true });
    buildWavCorpus(src);

    const stage1 = runExtraction("spectral-stats", src, join(root, "embedded"));
    const stage2 = runExtraction("kmeans-units", join(root, "embedded"), join(root, "full"), {
      codebookSize: 12,
      seed: 3,
    });
    expect(stage2.extracted).toHaveLength(6);

    const manifest = JSON.parse(readFileSync(stage2.manifestPath, "utf8"));
    expect(manifest.embedding_dim).toBe(16);
    expect(manifest.unit_vocab_size).toBe(12);
    expect(manifest.unit_hop_ms).toBe(20);
    for (const utt of manifest.utterances) {
      expect(utt.embedding).toBeDefined(); // preserved from stage 1
      expect(utt.units).toBeDefined();
      const ids = readUint16(join(root, "full", utt.units));
      expect(ids.length).toBeGreaterThan(0);
      for (const id of ids) expect(id).toBeLessThan(12);
      // hop arithmetic: 400-sample frames every 320 samples
      const n = Math.round(utt.duration_s * 16000);
      expect(ids.length).toBe(Math.floor((n - 400) / 320) + 1);
    }

    const codebook = readFloat32(join(root, "full", "codebook.f32"));
    expect(codebook).toHaveLength(12 * 8);
    const sidecar = JSON.parse(readFileSync(join(root, "full", "codebook.json"), "utf8"));
    expect(sidecar).toEqual({ n_units: 12, dim: 8 });
    void stage1;
  });

  it("emits about fifty ids for one second of audio at the 20 ms hop", () => {
    const root = tempDir("units-hop");
    const src = join(root, "src");
    mkdirSync(src, { recursive: true });
    writeWav(join(src, "solo_000.wav"), sine(440, 1.0));

    const report = runExtraction("kmeans-units", src, join(root, "out"), { codebookSize: 4 });
    const manifest = JSON.parse(readFileSync(report.manifestPath, "utf8"));
    const ids = readUint16(join(root, "out", manifest.utterances[0].units));
    expect(ids.length).toBeGreaterThanOrEqual(48);
    expect(ids.length).toBeLessThanOrEqual(51);
  });
});

describe("model registry", () => {
  it("fails checkpoint families with a checkpoint error, not a typo error", () => {
    const root = tempDir("registry");
    buildWavCorpus(root);
    for (const model of ["ecapa-tdnn", "resnet-tdnn", "x-vector", "ge2e", "hubert-units"]) {
      expect(() => runExtraction(model, root, join(root, "out"))).toThrow(
        CheckpointRequiredError,
      );
    }
    expect(() => runExtraction("no-such-model", root, join(root, "out"))).toThrow(/unknown model/);
  });
});

describe("cli", () => {
  it("validates usage and maps error kinds to exit codes", () => {
    const root = tempDir("cli-usage");
    buildWavCorpus(root);
    expect(runCli(["--in", root, "--out", join(root, "out")])).toBe(2); // missing --model
    expect(runCli(["--model", "ecapa-tdnn", "--in", root, "--out", join(root, "out")])).toBe(2);
    expect(runCli(["--model", "no-such", "--in", root, "--out", join(root, "out")])).toBe(1);
    expect(runCli(["--help"])).toBe(0);
  });

  it("runs end to end as a built executable", () => {
    const root = tempDir("cli-exec");
    const src = join(root, "src");
    mkdirSync(src, { recursive: true });
    buildWavCorpus(src);

    const cliPath = fileURLToPath(new URL("../dist/cli.js", import.meta.url));
    const result = spawnSync(
      process.execPath,
      [cliPath, "--model", "spectral-stats", "--in", src, "--out", join(root, "out")],
      { encoding: "utf8" },
    );
    expect(result.status).toBe(0);
    expect(result.stdout).toMatch(/extracted 6 utterances/);
    expect(JSON.parse(readFileSync(join(root, "out", "manifest.json"), "utf8")).utterances).toHaveLength(6);
  });
});
