import { mkdtemp, rm, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { CorpusError, streamDocuments } from "../src/corpus.js";

let dir: string;
beforeEach(async () => {
  dir = await mkdtemp(join(tmpdir(), "corpus-"));
});
afterEach(async () => {
  await rm(dir, { recursive: true, force: true });
});

async function collect(path: string, limit?: number) {
  const records = [];
  for await (const record of streamDocuments(path, limit)) {
    records.push(record);
  }
  return records;
}

describe("streamDocuments", () => {
  it("yields records in order with line-number indices", async () => {
    const path = join(dir, "c.jsonl");
    await writeFile(path, '{"text": "a"}\n{"text": "b"}\n{"text": "c"}\n');
    const records = await collect(path);
    expect(records).toEqual([
      { index: 0, text: "a" },
      { index: 1, text: "b" },
      { index: 2, text: "c" },
    ]);
  });

  it("handles an empty file", async () => {
    const path = join(dir, "empty.jsonl");
    await writeFile(path, "");
    expect(await collect(path)).toEqual([]);
  });

  it("honors the limit as a prefix cap", async () => {
    const path = join(dir, "c.jsonl");
    await writeFile(path, '{"text": "a"}\n{"text": "b"}\n{"text": "c"}\n');
    const records = await collect(path, 2);
    expect(records.map((r) => r.text)).toEqual(["a", "b"]);
  });

  it("reads a final line without a trailing newline", async () => {
    const path = join(dir, "c.jsonl");
    await writeFile(path, '{"text": "a"}\n{"text": "b"}');
    expect((await collect(path)).map((r) => r.text)).toEqual(["a", "b"]);
  });

  it("accepts CRLF line endings", async () => {
    const path = join(dir, "c.jsonl");
    await writeFile(path, '{"text": "a"}\r\n{"text": "b"}\r\n');
    expect((await collect(path)).map((r) => r.text)).toEqual(["a", "b"]);
  });

  it("reports malformed lines with their line number", async () => {
    const path = join(dir, "bad.jsonl");
    await writeFile(path, '{"text": "ok"}\nnot json\n');
    await expect(collect(path)).rejects.toThrowError(CorpusError);
    await expect(collect(path)).rejects.toThrow(/:2:/);
  });

  it("reports a missing text field with its line number", async () => {
    const path = join(dir, "bad.jsonl");
    await writeFile(path, '{"meta": {}}\n');
    await expect(collect(path)).rejects.toThrow(/"text"/);
  });

  it("treats invalid UTF-8 as an error, not replacement", async () => {
    const path = join(dir, "bad.jsonl");
    await writeFile(path, Buffer.concat([Buffer.from('{"text": "a'), Buffer.from([0xff, 0xfe]), Buffer.from('b"}\n')]));
    await expect(collect(path)).rejects.toThrow(/invalid UTF-8/);
  });

  it("keeps multi-byte characters split across chunks intact", async () => {
    // a 3-byte character repeated enough to span stream chunk boundaries
    const text = "世".repeat(40_000);
    const path = join(dir, "wide.jsonl");
    await writeFile(path, JSON.stringify({ text }) + "\n");
    const records = await collect(path);
    expect(records[0].text).toBe(text);
  });
});
