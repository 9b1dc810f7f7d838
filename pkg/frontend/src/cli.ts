#!/usr/bin/env node
/**
 * export-embeddings: encode a JSONL corpus into a HIREMB01 file.
 *
 * Exit status: 0 success, 1 usage error, 2 data or encoder error.
 */

import { resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { parseArgs } from "node:util";

import { CorpusError } from "./corpus.js";
import { DEFAULT_MODEL, EncoderLoadError, loadEncoder } from "./encoder.js";
import { exportEmbeddings } from "./export.js";

const USAGE = `usage: export-embeddings --input corpus.jsonl --output out.emb
                         [--batch-size 32] [--limit N]
                         [--device cpu|accelerator] [--model id-or-local-dir]

Encodes every document with a sentence encoder (default ${DEFAULT_MODEL},
384-dim, mean pooling + L2 normalization) and writes the HIREMB01
binary layout: row i is the embedding of document index i.`;

export async function main(argv: string[]): Promise<number> {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        input: { type: "string" },
        output: { type: "string" },
        "batch-size": { type: "string", default: "32" },
        limit: { type: "string" },
        device: { type: "string", default: "cpu" },
        model: { type: "string" },
        help: { type: "boolean", default: false },
      },
    }));
  } catch (error) {
    console.error(`error: ${(error as Error).message}`);
    console.error(USAGE);
    return 1;
  }
  if (values.help) {
    console.log(USAGE);
    return 0;
  }
  if (!values.input || !values.output) {
    console.error("error: --input and --output are required");
    console.error(USAGE);
    return 1;
  }
  const batchSize = Number(values["batch-size"]);
  const limit = values.limit === undefined ? undefined : Number(values.limit);
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    console.error(`error: --batch-size must be a positive integer, got ${values["batch-size"]}`);
    return 1;
  }
  if (limit !== undefined && (!Number.isInteger(limit) || limit < 0)) {
    console.error(`error: --limit must be a non-negative integer, got ${values.limit}`);
    return 1;
  }
  if (values.device !== "cpu" && values.device !== "accelerator") {
    console.error(`error: --device must be "cpu" or "accelerator", got ${values.device}`);
    return 1;
  }

  let encoder;
  try {
    encoder = await loadEncoder({ model: values.model, device: values.device });
  } catch (error) {
    console.error(`error: ${(error as EncoderLoadError).message}`);
    return 2;
  }
  try {
    const { rows, dim } = await exportEmbeddings(
      { corpusPath: values.input, outPath: values.output, batchSize, limit },
      encoder,
    );
    console.log(`wrote ${values.output} (${rows} rows, dim=${dim})`);
    return 0;
  } catch (error) {
    if (error instanceof CorpusError) {
      console.error(`error: ${error.message}`);
    } else {
      console.error(`error: ${(error as Error).message}`);
    }
    return 2;
  } finally {
    await encoder.close();
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && fileURLToPath(import.meta.url) === resolve(process.argv[1]);
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
