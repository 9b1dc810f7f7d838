"""Streaming line-delimited corpus I/O and selection manifests.

A corpus file holds one JSON record per line with a required "text"
string field and an optional "meta" string map. Document identity is
positional: a record's index is its 0-based line number.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

from .errors import CorpusError


@dataclass
class DocumentRecord:
    """One raw or target text sample with its stable corpus index."""

    index: int
    text: str
    meta: Optional[dict[str, str]] = None


@dataclass
class CorpusManifest:
    path: str
    record_count: int
    role: str  # "raw" | "target" | "selected"
    limit: Optional[int] = None


def stream_documents(path: str | Path, limit: Optional[int] = None) -> Iterator[DocumentRecord]:
    """Yield records in file order with index = line number.

    Stops after ``limit`` records when set. Memory use is one record plus
    the read buffer, independent of file size. Invalid UTF-8, malformed
    JSON, and records without a "text" string raise CorpusError carrying
    the path and 1-based line number.
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8", errors="strict") as f:
            index = 0
            while True:
                if limit is not None and index >= limit:
                    return
                try:
                    line = f.readline()
                except UnicodeDecodeError as exc:
                    raise CorpusError(f"invalid UTF-8: {exc}", path=str(path)) from exc
                if not line:
                    return
                yield _parse_record(line, index, path)
                index += 1
    except OSError as exc:
        raise CorpusError(f"cannot read corpus: {exc}", path=str(path)) from exc


def _parse_record(line: str, index: int, path: Path) -> DocumentRecord:
    line_no = index + 1
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"malformed record: {exc.msg}", path=str(path), line_no=line_no) from exc
    if not isinstance(obj, dict):
        raise CorpusError("record is not an object", path=str(path), line_no=line_no)
    text = obj.get("text")
    if not isinstance(text, str):
        raise CorpusError('record has no "text" string field', path=str(path), line_no=line_no)
    meta = obj.get("meta")
    if meta is not None and not isinstance(meta, dict):
        raise CorpusError('"meta" field is not an object', path=str(path), line_no=line_no)
    return DocumentRecord(index=index, text=text, meta=meta)


def count_documents(path: str | Path, limit: Optional[int] = None) -> int:
    """Number of records in a corpus file, honoring ``limit``."""
    n = 0
    for _ in stream_documents(path, limit=limit):
        n += 1
    return n


def write_documents(
    records: Iterable[DocumentRecord],
    path: str | Path,
    role: str = "raw",
) -> CorpusManifest:
    """Write one JSON line per record, in sequence order.

    Newlines inside text are escaped by the JSON encoding and round-trip
    to identical strings. Text that cannot be encoded as UTF-8 raises
    CorpusError.
    """
    path = Path(path)
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            try:
                rec.text.encode("utf-8")
            except UnicodeEncodeError as exc:
                raise CorpusError(
                    f"record {rec.index} text is not valid UTF-8: {exc}", path=str(path)
                ) from exc
            obj: dict = {"text": rec.text}
            if rec.meta is not None:
                obj["meta"] = rec.meta
            f.write(json.dumps(obj, ensure_ascii=False) + "\n")
            count += 1
    return CorpusManifest(path=str(path), record_count=count, role=role)


@dataclass
class SelectionManifest:
    """Persisted record of a selection: header plus per-document rows."""

    seed: int
    k: int
    alpha: float
    config_fingerprint: str
    indices: list[int] = field(default_factory=list)
    log_weights_ng: list[float] = field(default_factory=list)
    log_weights_nn: list[float] = field(default_factory=list)


def write_selection(
    indices: Sequence[int],
    log_weights_ng: Sequence[float],
    log_weights_nn: Sequence[float],
    seed: int,
    config_fingerprint: str,
    path: str | Path,
    alpha: float,
) -> None:
    """Persist a selection manifest.

    Line 1 is the header record {"seed", "k", "alpha",
    "config_fingerprint"}; each following line is {"idx", "log_w_ng",
    "log_w_nn"} for one selected document, in selection order.
    """
    if not (len(indices) == len(log_weights_ng) == len(log_weights_nn)):
        raise ValueError(
            "length mismatch: "
            f"{len(indices)} indices, {len(log_weights_ng)} ng weights, "
            f"{len(log_weights_nn)} nn weights"
        )
    seen: set[int] = set()
    for idx in indices:
        if idx in seen:
            raise ValueError(f"duplicate index {idx} in selection")
        seen.add(int(idx))
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        header = {
            "seed": int(seed),
            "k": len(indices),
            "alpha": float(alpha),
            "config_fingerprint": config_fingerprint,
        }
        f.write(json.dumps(header) + "\n")
        for idx, w_ng, w_nn in zip(indices, log_weights_ng, log_weights_nn):
            f.write(
                json.dumps({"idx": int(idx), "log_w_ng": float(w_ng), "log_w_nn": float(w_nn)})
                + "\n"
            )


def read_selection(path: str | Path) -> SelectionManifest:
    """Read back a selection manifest written by write_selection."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        header_line = f.readline()
        if not header_line:
            raise CorpusError("selection manifest is empty", path=str(path))
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"malformed header: {exc.msg}", path=str(path), line_no=1) from exc
        manifest = SelectionManifest(
            seed=int(header["seed"]),
            k=int(header["k"]),
            alpha=float(header["alpha"]),
            config_fingerprint=str(header["config_fingerprint"]),
        )
        for line_no, line in enumerate(f, start=2):
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(
                    f"malformed row: {exc.msg}", path=str(path), line_no=line_no
                ) from exc
            manifest.indices.append(int(row["idx"]))
            manifest.log_weights_ng.append(float(row["log_w_ng"]))
            manifest.log_weights_nn.append(float(row["log_w_nn"]))
    if len(manifest.indices) != manifest.k:
        raise CorpusError(
            f"header declares k={manifest.k} but manifest has {len(manifest.indices)} rows",
            path=str(path),
        )
    return manifest
