export { decodeWav, encodeWav, readWav, writeWav, wavDurationSeconds, SAMPLE_RATE } from "./wav.js";
export { fftRadix2, hannWindow, bandEdges, frameBandLogPowers } from "./dsp.js";
export { mulberry32, nextInt } from "./prng.js";
export { kmeans, nearestCentroid } from "./kmeans.js";
export {
  encodeFloat32LE,
  writeEmbedding,
  writeUnits,
  writeCodebook,
  codebookSidecarPath,
} from "./binary.js";
export { discoverCorpus, speakerFromId, writeManifest } from "./manifest.js";
export {
  CheckpointRequiredError,
  listModels,
  resolveExtractor,
} from "./extractors.js";
export {
  runExtraction,
  extractEmbeddings,
  extractUnits,
  DEFAULT_OPTIONS,
} from "./extract.js";
export { runCli } from "./cli.js";
