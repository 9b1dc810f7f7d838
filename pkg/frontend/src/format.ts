/**
 * Writer (and test reader) for the HIREMB01 embedding file layout.
 *
 * Little-endian: bytes 0-7 magic ASCII "HIREMB01", bytes 8-15 u64 row
 * count, bytes 16-19 u32 dim, bytes 20-23 reserved zero, then
 * rows*dim float32 values, row-major. Row i belongs to document i.
 */

import { open, stat, type FileHandle } from "node:fs/promises";

export const MAGIC = "HIREMB01";
export const HEADER_SIZE = 24;

export class EmbeddingFormatError extends Error {}

function headerBuffer(rows: number, dim: number): Buffer {
  const header = Buffer.alloc(HEADER_SIZE);
  header.write(MAGIC, 0, "ascii");
  header.writeBigUInt64LE(BigInt(rows), 8);
  header.writeUInt32LE(dim, 16);
  header.writeUInt32LE(0, 20);
  return header;
}

/**
 * Streaming writer: the header goes out first with a zero row count,
 * rows are appended batch by batch, and close() patches the count.
 * Memory stays bounded by one batch.
 */
export class EmbeddingWriter {
  private position = HEADER_SIZE;
  private rows = 0;

  private constructor(
    private readonly handle: FileHandle,
    readonly dim: number,
  ) {}

  static async create(path: string, dim: number): Promise<EmbeddingWriter> {
    if (!Number.isInteger(dim) || dim < 1) {
      throw new EmbeddingFormatError(`dim must be a positive integer, got ${dim}`);
    }
    const handle = await open(path, "w");
    await handle.write(headerBuffer(0, dim), 0, HEADER_SIZE, 0);
    return new EmbeddingWriter(handle, dim);
  }

  async writeBatch(vectors: readonly Float32Array[]): Promise<void> {
    if (vectors.length === 0) return;
    const payload = Buffer.allocUnsafe(vectors.length * this.dim * 4);
    let offset = 0;
    for (const vector of vectors) {
      if (vector.length !== this.dim) {
        throw new EmbeddingFormatError(
          `vector has ${vector.length} values, expected dim=${this.dim}`,
        );
      }
      for (let i = 0; i < vector.length; i++) {
        payload.writeFloatLE(vector[i], offset);
        offset += 4;
      }
    }
    await this.handle.write(payload, 0, payload.length, this.position);
    this.position += payload.length;
    this.rows += vectors.length;
  }

  /** Patch the row count into the header and close the file. */
  async close(): Promise<{ rows: number; dim: number }> {
    const counter = Buffer.alloc(8);
    counter.writeBigUInt64LE(BigInt(this.rows), 0);
    await this.handle.write(counter, 0, 8, 8);
    await this.handle.close();
    return { rows: this.rows, dim: this.dim };
  }
}

export interface EmbeddingFile {
  rows: number;
  dim: number;
  data: Float32Array; // rows*dim values, row-major
}

/** Whole-file reader used by the tests to verify layout conformance. */
export async function readEmbeddings(path: string): Promise<EmbeddingFile> {
  const handle = await open(path, "r");
  try {
    const header = Buffer.alloc(HEADER_SIZE);
    const { bytesRead } = await handle.read(header, 0, HEADER_SIZE, 0);
    if (bytesRead < HEADER_SIZE) {
      throw new EmbeddingFormatError(`${path}: file too short for a ${HEADER_SIZE}-byte header`);
    }
    const magic = header.toString("ascii", 0, 8);
    if (magic !== MAGIC) {
      throw new EmbeddingFormatError(`${path}: bad magic ${JSON.stringify(magic)}`);
    }
    const rows = Number(header.readBigUInt64LE(8));
    const dim = header.readUInt32LE(16);
    const expected = HEADER_SIZE + rows * dim * 4;
    const { size } = await stat(path);
    if (size !== expected) {
      throw new EmbeddingFormatError(
        `${path}: expected ${expected} bytes for ${rows}x${dim}, found ${size}`,
      );
    }
    const payload = Buffer.alloc(rows * dim * 4);
    await handle.read(payload, 0, payload.length, HEADER_SIZE);
    const data = new Float32Array(rows * dim);
    for (let i = 0; i < data.length; i++) {
      data[i] = payload.readFloatLE(i * 4);
    }
    return { rows, dim, data };
  } finally {
    await handle.close();
  }
}
