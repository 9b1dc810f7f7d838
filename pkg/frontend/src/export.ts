/**
 * Batch-encode a corpus into an embedding file.
 *
 * Row i of the output is the embedding of document index i; memory is
 * bounded by one batch of texts plus the encoder's own buffers.
 */

import { streamDocuments } from "./corpus.js";
import type { Encoder } from "./encoder.js";
import { EmbeddingWriter } from "./format.js";

export interface ExportJob {
  corpusPath: string;
  outPath: string;
  batchSize: number;
  limit?: number;
}

export interface ExportResult {
  rows: number;
  dim: number;
}

export async function exportEmbeddings(job: ExportJob, encoder: Encoder): Promise<ExportResult> {
  if (!Number.isInteger(job.batchSize) || job.batchSize < 1) {
    throw new Error(`batch size must be a positive integer, got ${job.batchSize}`);
  }
  const writer = await EmbeddingWriter.create(job.outPath, encoder.dim);
  let batch: string[] = [];

  const flush = async () => {
    if (batch.length === 0) return;
    await writer.writeBatch(await encoder.encode(batch));
    batch = [];
  };

  for await (const record of streamDocuments(job.corpusPath, job.limit)) {
    batch.push(record.text);
    if (batch.length >= job.batchSize) {
      await flush();
    }
  }
  await flush();
  return writer.close();
}
