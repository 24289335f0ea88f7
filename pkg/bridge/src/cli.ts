/**
 * extract --model <name> --in <dir> --out <dir>
 *
 * Runs one extractor over a WAV corpus (or a previous stage's output
 * directory) and writes the interchange files next to a manifest.json.
 * Partial per-file failures are reported and do not abort the run.
 */

import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { CheckpointRequiredError, listModels } from "./extractors.js";
import { runExtraction } from "./extract.js";

const USAGE = `usage: extract --model <name> --in <dir> --out <dir>
               [--dim N] [--codebook-size K] [--hop-ms MS] [--seed S]

models: ${listModels().join(", ")}

  --dim            spectral-stats embedding length, even and >= 4 (default 16)
  --codebook-size  kmeans-units codebook entries (default 32)
  --hop-ms         unit hop in milliseconds (default 20)
  --seed           PRNG seed for codebook clustering (default 0)
`;

function parseIntArg(value: string, name: string): number {
  const parsed = Number(value);
  if (!Number.isInteger(parsed)) throw new Error(`--${name} must be an integer, got '${value}'`);
  return parsed;
}

export function runCli(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        model: { type: "string" },
        in: { type: "string" },
        out: { type: "string" },
        dim: { type: "string", default: "16" },
        "codebook-size": { type: "string", default: "32" },
        "hop-ms": { type: "string", default: "20" },
        seed: { type: "string", default: "0" },
        help: { type: "boolean", default: false },
      },
      allowPositionals: true,
    });
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    console.error(USAGE);
    return 2;
  }
  const { values, positionals } = parsed;
  if (values.help) {
    console.log(USAGE);
    return 0;
  }
  // tolerate the spelled-out subcommand: `extract --model ...`
  const extras = positionals.filter((p) => p !== "extract");
  if (extras.length > 0) {
    console.error(`unexpected arguments: ${extras.join(" ")}`);
    console.error(USAGE);
    return 2;
  }
  if (!values.model || !values.in || !values.out) {
    console.error("--model, --in, and --out are all required");
    console.error(USAGE);
    return 2;
  }

  let report;
  try {
    report = runExtraction(values.model, values.in, values.out, {
      dim: parseIntArg(values.dim!, "dim"),
      codebookSize: parseIntArg(values["codebook-size"]!, "codebook-size"),
      hopMs: Number(values["hop-ms"]!),
      seed: parseIntArg(values.seed!, "seed"),
    });
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    return err instanceof CheckpointRequiredError ? 2 : 1;
  }

  for (const [id, why] of Object.entries(report.failures)) {
    console.error(`failed ${id}: ${why}`);
  }
  const failed = Object.keys(report.failures).length;
  console.log(
    `${report.model}: extracted ${report.extracted.length} utterances` +
      (failed ? ` (${failed} failed)` : "") +
      ` -> ${report.manifestPath}`,
  );
  return 0;
}

const isMain =
  typeof process.argv[1] === "string" && import.meta.url === pathToFileURL(process.argv[1]).href;
if (isMain) {
  process.exit(runCli(process.argv.slice(2)));
}
