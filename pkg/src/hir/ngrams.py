"""Hashed unigram+bigram featurization of text.

Text is lowercased and split into tokens; the unigrams followed by the
bigrams (adjacent tokens joined by one space) are hashed into ``m``
buckets with 64-bit FNV-1a, giving a sparse count vector per document.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

DEFAULT_BUCKETS = 10_000

FNV64_OFFSET_BASIS = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

# A token is a maximal run of Unicode alphanumerics, or a maximal run of
# non-alphanumeric non-whitespace characters (underscore is treated as
# punctuation, not as a word character).
_TOKEN_RE = re.compile(r"[^\W_\s]+|(?:[^\w\s]|_)+")


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a hash of ``data``."""
    h = FNV64_OFFSET_BASIS
    for byte in data:
        h = ((h ^ byte) * FNV64_PRIME) & _MASK64
    return h


def bucket_index(ngram: str, m: int) -> int:
    """Bucket for an n-gram string: FNV-1a over its UTF-8 bytes, mod m."""
    return fnv1a_64(ngram.encode("utf-8")) % m


def tokenize(text: str) -> list[str]:
    """Split ``text`` into lowercased tokens.

    Punctuation runs become tokens of their own; whitespace never
    appears inside a token. Empty input gives an empty list.
    """
    return _TOKEN_RE.findall(text.lower())


def ngram_strings(tokens: list[str]) -> list[str]:
    """All unigrams followed by all bigrams of a token list.

    A bigram is two adjacent tokens joined by a single space.
    """
    return list(tokens) + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]


@dataclass
class FeatureVector:
    """Sparse m-bucket count vector of hashed n-grams.

    ``counts`` maps bucket index -> positive count and stores no zero
    entries; ``total`` is the number of n-grams extracted.
    """

    m: int
    counts: dict[int, int] = field(default_factory=dict)
    total: int = 0

    @classmethod
    def from_dense(cls, values: list[int]) -> "FeatureVector":
        """Build a vector from a dense count list (convenience for tests)."""
        counts = {j: int(c) for j, c in enumerate(values) if c}
        return cls(m=len(values), counts=counts, total=int(sum(values)))

    def to_dense(self) -> list[int]:
        dense = [0] * self.m
        for j, c in self.counts.items():
            dense[j] = c
        return dense


def featurize(text: str, m: int = DEFAULT_BUCKETS) -> FeatureVector:
    """Hash the unigrams and bigrams of ``text`` into an m-bucket count vector.

    Collisions accumulate: two n-grams hashing to the same bucket add two
    counts there. ``total`` is #tokens + max(#tokens - 1, 0).
    """
    if m < 1:
        raise ValueError(f"bucket count must be >= 1, got {m}")
    grams = ngram_strings(tokenize(text))
    counts = Counter(bucket_index(g, m) for g in grams)
    return FeatureVector(m=m, counts=dict(counts), total=len(grams))
