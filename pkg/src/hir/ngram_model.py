"""Bag-of-hashed-n-grams multinomial models and importance weights.

A corpus is summarized by a smoothed bucket-probability vector; a
document scores as the sum of count * log-probability over its buckets.
The log importance weight of a document is the target-model score minus
the raw-model score.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .ngrams import FeatureVector

DEFAULT_SMOOTHING = 1e-5


@dataclass
class MultinomialModel:
    """Smoothed multinomial over ``m`` hash buckets.

    ``log_gamma`` holds log((1 - smoothing) * mle + smoothing / m); the
    ``smoothing`` field is serialized under the key "lambda".
    """

    m: int
    log_gamma: np.ndarray
    smoothing: float
    total_ngrams_seen: int


def accumulate_counts(vectors: Iterable[FeatureVector], m: int) -> tuple[np.ndarray, int]:
    """Sum feature vectors into a dense int64 bucket-count array.

    Accumulation is integer and single-pass, so the result is exact and
    independent of input order. Returns (counts, grand_total).
    """
    counts = np.zeros(m, dtype=np.int64)
    total = 0
    for z in vectors:
        if z.m != m:
            raise ValueError(f"feature vector has m={z.m}, expected {m}")
        for j, c in z.counts.items():
            counts[j] += c
        total += z.total
    return counts, total


def fit_from_counts(counts: np.ndarray, smoothing: float = DEFAULT_SMOOTHING) -> MultinomialModel:
    """Build a model from an aggregated bucket-count array."""
    if not 0.0 <= smoothing <= 1.0:
        raise ValueError(f"smoothing must be in [0, 1], got {smoothing}")
    counts = np.asarray(counts, dtype=np.int64)
    m = counts.shape[0]
    total = int(counts.sum())
    if total <= 0:
        raise ValueError("cannot fit a multinomial on all-zero counts")
    gamma_mle = counts / total
    mixed = (1.0 - smoothing) * gamma_mle + smoothing / m
    with np.errstate(divide="ignore"):
        log_gamma = np.log(mixed)
    return MultinomialModel(m=m, log_gamma=log_gamma, smoothing=smoothing, total_ngrams_seen=total)


def fit_multinomial(
    vectors: Iterable[FeatureVector],
    m: int,
    smoothing: float = DEFAULT_SMOOTHING,
) -> MultinomialModel:
    """Fit bucket probabilities as column sums over the grand total.

    With smoothing s the stored probabilities are
    (1 - s) * count[j] / total + s / m; at s = 0 unseen buckets have
    log-probability -inf.
    """
    counts, _ = accumulate_counts(vectors, m)
    return fit_from_counts(counts, smoothing)


def _check_m(model: MultinomialModel, z: FeatureVector) -> None:
    if z.m != model.m:
        raise ValueError(f"feature vector has m={z.m}, model has m={model.m}")


def log_prob(model: MultinomialModel, z: FeatureVector) -> float:
    """log P(z) = sum_j z[j] * log_gamma[j], entirely in log space.

    The empty vector scores 0.0; -inf occurs only when some counted
    bucket has log_gamma = -inf (possible only at smoothing = 0).
    """
    _check_m(model, z)
    if z.total == 0:
        return 0.0
    idx = np.fromiter(z.counts.keys(), dtype=np.int64, count=len(z.counts))
    cnt = np.fromiter(z.counts.values(), dtype=np.float64, count=len(z.counts))
    return float(cnt @ model.log_gamma[idx])


def log_weight_ng(
    p_model: MultinomialModel,
    q_model: MultinomialModel,
    z: FeatureVector,
    per_token_normalize: bool = False,
) -> float:
    """n-gram channel log importance weight log p(z) - log q(z).

    Computed as sum_j z[j] * (log_gamma_p[j] - log_gamma_q[j]), which is
    exactly antisymmetric in (p, q). With ``per_token_normalize`` the
    result is divided by z.total when z.total > 0.
    """
    if p_model.m != q_model.m:
        raise ValueError(f"models disagree on m: {p_model.m} vs {q_model.m}")
    _check_m(p_model, z)
    if z.total == 0:
        return 0.0
    idx = np.fromiter(z.counts.keys(), dtype=np.int64, count=len(z.counts))
    cnt = np.fromiter(z.counts.values(), dtype=np.float64, count=len(z.counts))
    value = float(cnt @ (p_model.log_gamma[idx] - q_model.log_gamma[idx]))
    if per_token_normalize:
        value /= z.total
    return value


def save_multinomial(model: MultinomialModel, path: str | Path) -> None:
    """Write the model as a single JSON document with a dense log_gamma array."""
    doc = {
        "m": model.m,
        "lambda": model.smoothing,
        "total_ngrams_seen": model.total_ngrams_seen,
        "log_gamma": model.log_gamma.tolist(),
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_multinomial(path: str | Path) -> MultinomialModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    log_gamma = np.asarray(doc["log_gamma"], dtype=np.float64)
    return MultinomialModel(
        m=int(doc["m"]),
        log_gamma=log_gamma,
        smoothing=float(doc["lambda"]),
        total_ngrams_seen=int(doc["total_ngrams_seen"]),
    )
