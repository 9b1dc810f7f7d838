/**
 * Streaming reader for line-delimited corpus files.
 *
 * One JSON record per line with a required "text" string field; a
 * document's index is its 0-based line number. Lines are decoded with
 * a fatal UTF-8 decoder so invalid bytes surface as errors instead of
 * silent replacement, matching the selection pipeline's reader.
 */

import { createReadStream } from "node:fs";

export interface DocumentRecord {
  index: number;
  text: string;
}

export class CorpusError extends Error {
  constructor(
    message: string,
    readonly path: string,
    readonly lineNo?: number,
  ) {
    super(lineNo === undefined ? `${path}: ${message}` : `${path}:${lineNo}: ${message}`);
  }
}

function parseRecord(line: string, index: number, path: string): DocumentRecord {
  const lineNo = index + 1;
  let parsed: unknown;
  try {
    parsed = JSON.parse(line);
  } catch (cause) {
    throw new CorpusError(`malformed record: ${(cause as Error).message}`, path, lineNo);
  }
  if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
    throw new CorpusError("record is not an object", path, lineNo);
  }
  const text = (parsed as Record<string, unknown>).text;
  if (typeof text !== "string") {
    throw new CorpusError('record has no "text" string field', path, lineNo);
  }
  return { index, text };
}

export async function* streamDocuments(
  path: string,
  limit?: number,
): AsyncGenerator<DocumentRecord> {
  const decoder = new TextDecoder("utf-8", { fatal: true });
  const stream = createReadStream(path);
  let pending: Buffer = Buffer.alloc(0);
  let index = 0;

  const decodeLine = (raw: Buffer): string => {
    try {
      // strip a trailing \r so CRLF corpora parse too
      const end = raw.length > 0 && raw[raw.length - 1] === 0x0d ? raw.length - 1 : raw.length;
      return decoder.decode(raw.subarray(0, end));
    } catch {
      throw new CorpusError("invalid UTF-8", path, index + 1);
    }
  };

  try {
    for await (const chunk of stream) {
      pending = pending.length === 0 ? (chunk as Buffer) : Buffer.concat([pending, chunk as Buffer]);
      let newline: number;
      while ((newline = pending.indexOf(0x0a)) !== -1) {
        if (limit !== undefined && index >= limit) return;
        const raw = pending.subarray(0, newline);
        pending = pending.subarray(newline + 1);
        yield parseRecord(decodeLine(raw), index, path);
        index += 1;
      }
    }
    if (pending.length > 0 && (limit === undefined || index < limit)) {
      yield parseRecord(decodeLine(pending), index, path);
    }
  } finally {
    stream.destroy();
  }
}
