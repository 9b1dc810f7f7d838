"""Binary storage for document-embedding matrices.

File layout (little-endian): bytes 0-7 magic ASCII "HIREMB01",
bytes 8-15 u64 row count, bytes 16-19 u32 dim, bytes 20-23 reserved
zero, then rows*dim float32 values, row-major. Row i is the embedding
of document index i.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import EmbeddingFormatError

MAGIC = b"HIREMB01"
HEADER_SIZE = 24
_HEADER = struct.Struct("<8sQII")


@dataclass
class EmbeddingMatrix:
    """Row-major float32 matrix; row order matches corpus document order."""

    rows: int
    dim: int
    data: np.ndarray

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype="<f4")
        if self.data.shape != (self.rows, self.dim):
            raise ValueError(
                f"data shape {self.data.shape} does not match rows={self.rows}, dim={self.dim}"
            )
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")

    @classmethod
    def from_array(cls, array: np.ndarray) -> "EmbeddingMatrix":
        array = np.atleast_2d(np.asarray(array))
        return cls(rows=array.shape[0], dim=array.shape[1], data=array)


def write_embeddings(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Write the matrix in the exact binary layout, bit-preserving."""
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, matrix.rows, matrix.dim, 0))
        f.write(matrix.data.tobytes())


def _read_header(f, path: Path) -> tuple[int, int]:
    raw = f.read(HEADER_SIZE)
    if len(raw) < HEADER_SIZE:
        raise EmbeddingFormatError(f"{path}: file too short for a {HEADER_SIZE}-byte header")
    magic, rows, dim, _reserved = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise EmbeddingFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if dim < 1:
        raise EmbeddingFormatError(f"{path}: dim must be >= 1, got {dim}")
    return rows, dim


def _check_payload_size(path: Path, rows: int, dim: int) -> None:
    expected = HEADER_SIZE + rows * dim * 4
    actual = path.stat().st_size
    if actual != expected:
        raise EmbeddingFormatError(
            f"{path}: truncated or padded file: expected {expected} bytes "
            f"for {rows}x{dim}, found {actual}"
        )


def read_embedding_header(path: str | Path) -> tuple[int, int]:
    """Return (rows, dim) without reading the payload."""
    path = Path(path)
    with open(path, "rb") as f:
        rows, dim = _read_header(f, path)
    _check_payload_size(path, rows, dim)
    return rows, dim


def read_embeddings(path: str | Path) -> EmbeddingMatrix:
    """Read a whole embedding file into memory, bit-exactly."""
    path = Path(path)
    with open(path, "rb") as f:
        rows, dim = _read_header(f, path)
        _check_payload_size(path, rows, dim)
        data = np.fromfile(f, dtype="<f4", count=rows * dim).reshape(rows, dim)
    return EmbeddingMatrix(rows=rows, dim=dim, data=data)


def iter_embedding_chunks(path: str | Path, chunk_rows: int) -> Iterator[np.ndarray]:
    """Yield row blocks of at most ``chunk_rows`` rows, in row order.

    Memory is bounded by one chunk; chunked and whole-matrix reads see
    identical row contents.
    """
    if chunk_rows < 1:
        raise ValueError(f"chunk_rows must be >= 1, got {chunk_rows}")
    path = Path(path)
    with open(path, "rb") as f:
        rows, dim = _read_header(f, path)
        _check_payload_size(path, rows, dim)
        remaining = rows
        while remaining > 0:
            take = min(chunk_rows, remaining)
            block = np.fromfile(f, dtype="<f4", count=take * dim)
            yield block.reshape(take, dim)
            remaining -= take
