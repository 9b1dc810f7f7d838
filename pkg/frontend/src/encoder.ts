/**
 * Sentence encoder behind the exporter.
 *
 * The default implementation runs a transformers.js feature-extraction
 * pipeline with mean pooling and L2 normalization, the semantics of
 * the 384-dim all-MiniLM-L6-v2 sentence encoder. Any model id works,
 * as does a local model directory (config.json + tokenizer.json +
 * onnx/model.onnx), which keeps fully offline runs possible.
 */

import { existsSync } from "node:fs";
import { basename, dirname, resolve } from "node:path";

export const DEFAULT_MODEL = "Xenova/all-MiniLM-L6-v2";

export interface Encoder {
  /** Native embedding width; every encode() row has this many values. */
  readonly dim: number;
  encode(texts: readonly string[]): Promise<Float32Array[]>;
  close(): Promise<void>;
}

export class EncoderLoadError extends Error {
  constructor(
    readonly model: string,
    cause: unknown,
  ) {
    super(`failed to load encoder "${model}": ${(cause as Error)?.message ?? cause}`);
  }
}

export interface EncoderOptions {
  /** Model id on the hub, or a local model directory. */
  model?: string;
  device?: "cpu" | "accelerator";
}

type FeatureExtractor = {
  (texts: string[], options: { pooling: "mean"; normalize: boolean }): Promise<{
    dims: number[];
    data: Float32Array;
  }>;
  dispose?: () => Promise<void>;
};

function rowsOf(output: { dims: number[]; data: Float32Array }): Float32Array[] {
  const [batch, dim] = output.dims;
  const rows: Float32Array[] = [];
  for (let i = 0; i < batch; i++) {
    rows.push(output.data.slice(i * dim, (i + 1) * dim));
  }
  return rows;
}

export async function loadEncoder(options: EncoderOptions = {}): Promise<Encoder> {
  const model = options.model ?? DEFAULT_MODEL;
  let extractor: FeatureExtractor;
  try {
    const { pipeline, env } = await import("@huggingface/transformers");
    let resolved = model;
    if (existsSync(model)) {
      // a local model directory: resolve it through localModelPath and
      // never touch the network
      const absolute = resolve(model);
      env.localModelPath = dirname(absolute);
      env.allowRemoteModels = false;
      resolved = basename(absolute);
    }
    const device = options.device === "accelerator" ? "gpu" : "cpu";
    extractor = (await pipeline("feature-extraction", resolved, {
      dtype: "fp32",
      device,
    })) as unknown as FeatureExtractor;
  } catch (cause) {
    throw new EncoderLoadError(model, cause);
  }

  // one probe encode pins the native dimension
  const probe = await extractor([" "], { pooling: "mean", normalize: true });
  const dim = probe.dims[1];

  return {
    dim,
    async encode(texts: readonly string[]): Promise<Float32Array[]> {
      if (texts.length === 0) return [];
      const output = await extractor([...texts], { pooling: "mean", normalize: true });
      return rowsOf(output);
    },
    async close(): Promise<void> {
      await extractor.dispose?.();
    },
  };
}
