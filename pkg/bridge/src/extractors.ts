/**
 * The extractor registry.
 *
 * Two models run out of the box with no weights: `spectral-stats`
 * (fixed-length embeddings from band-energy statistics) and
 * `kmeans-units` (frame-level discrete units against a k-means
 * codebook). The released neural families are registered by name so
 * invocations fail with a clear checkpoint error instead of a typo
 * error; pointing them at real weights is deliberately out of scope —
 * this bridge only moves data into the interchange formats, it never
 * reimplements models or computes metrics.
 */

export type ExtractorKind = "embedding" | "units";

export interface ExtractorSpec {
  name: string;
  kind: ExtractorKind;
  /** Output dimension: embedding length, or codebook row length. */
  dim: number;
  /** Identifier recorded in the manifest metadata. */
  checkpoint: string;
}

export class CheckpointRequiredError extends Error {
  constructor(model: string) {
    super(
      `model '${model}' requires a local pretrained checkpoint and none is bundled; ` +
        `use 'spectral-stats' or 'kmeans-units' for checkpoint-free extraction`,
    );
    this.name = "CheckpointRequiredError";
  }
}

/** Embedding frame geometry: 25 ms windows every 10 ms. */
export const EMBED_FRAME_LEN = 400;
export const EMBED_HOP = 160;

/** Unit frame geometry: 25 ms windows at the 20 ms unit hop. */
export const UNIT_FRAME_LEN = 400;
export const UNIT_BANDS = 8;

const CHECKPOINT_FAMILIES: Record<string, { kind: ExtractorKind; dim: number }> = {
  "ecapa-tdnn": { kind: "embedding", dim: 192 },
  "resnet-tdnn": { kind: "embedding", dim: 256 },
  "x-vector": { kind: "embedding", dim: 512 },
  ge2e: { kind: "embedding", dim: 256 },
  "hubert-units": { kind: "units", dim: 768 },
};

export function listModels(): string[] {
  return ["spectral-stats", "kmeans-units", ...Object.keys(CHECKPOINT_FAMILIES)].sort();
}

export function resolveExtractor(model: string, embeddingDim: number): ExtractorSpec {
  if (model === "spectral-stats") {
    if (embeddingDim < 4 || embeddingDim % 2 !== 0) {
      throw new Error(`spectral-stats needs an even dimension >= 4, got ${embeddingDim}`);
    }
    return {
      name: model,
      kind: "embedding",
      dim: embeddingDim,
      checkpoint: "none (deterministic band-statistics extractor)",
    };
  }
  if (model === "kmeans-units") {
    return {
      name: model,
      kind: "units",
      dim: UNIT_BANDS,
      checkpoint: "none (seeded k-means over band energies)",
    };
  }
  if (model in CHECKPOINT_FAMILIES) {
    throw new CheckpointRequiredError(model);
  }
  throw new Error(`unknown model '${model}'; available: ${listModels().join(", ")}`);
}
