"""Distribution-alignment diagnostics in hashed n-gram space.

Measures how closely a selected subset matches the target corpus by
fitting a smoothed multinomial to each corpus and comparing KL
divergences against a random baseline. Alignment is always measured in
n-gram space, even when selection used the neural channel, so the
yardstick is independent of the selection method.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .corpus import stream_documents
from .errors import PipelineError
from .ngram_model import DEFAULT_SMOOTHING, MultinomialModel, fit_from_counts
from .ngrams import DEFAULT_BUCKETS, featurize


@dataclass
class AlignmentReport:
    kl_selected_vs_target: float
    kl_random_vs_target: float
    bucket_occupancy_selected: int
    bucket_occupancy_target: int
    top_diverging_buckets: list[tuple[int, float]]

    def to_dict(self) -> dict:
        return {
            "kl_selected_vs_target": self.kl_selected_vs_target,
            "kl_random_vs_target": self.kl_random_vs_target,
            "bucket_occupancy_selected": self.bucket_occupancy_selected,
            "bucket_occupancy_target": self.bucket_occupancy_target,
            "top_diverging_buckets": [
                {"bucket": int(b), "contribution": float(c)} for b, c in self.top_diverging_buckets
            ],
        }

    def table(self) -> str:
        lines = [
            f"{'KL(selected || target)':32s} {self.kl_selected_vs_target:.6f}",
            f"{'KL(random || target)':32s} {self.kl_random_vs_target:.6f}",
            f"{'occupied buckets (selected)':32s} {self.bucket_occupancy_selected}",
            f"{'occupied buckets (target)':32s} {self.bucket_occupancy_target}",
            "top diverging buckets (bucket: contribution to KL(selected || target)):",
        ]
        for bucket, contribution in self.top_diverging_buckets:
            lines.append(f"  {bucket:>8d}: {contribution:+.6f}")
        return "\n".join(lines)


def kl_divergence(p_model: MultinomialModel, q_model: MultinomialModel) -> float:
    """KL(p || q) = sum_j p[j] * log(p[j] / q[j]) over the bucket distributions.

    Always >= 0; +inf when q has a zero bucket where p is nonzero (only
    possible at smoothing = 0).
    """
    if p_model.m != q_model.m:
        raise ValueError(f"models disagree on m: {p_model.m} vs {q_model.m}")
    return float(np.sum(_kl_terms(p_model, q_model)))


def _kl_terms(p_model: MultinomialModel, q_model: MultinomialModel) -> np.ndarray:
    p = np.exp(p_model.log_gamma)
    # 0 * log(0/q) contributes nothing, even against q = 0.
    terms = np.zeros_like(p)
    support = p > 0
    terms[support] = p[support] * (p_model.log_gamma[support] - q_model.log_gamma[support])
    return terms


def corpus_bucket_counts(
    path: str | Path,
    m: int = DEFAULT_BUCKETS,
    limit: Optional[int] = None,
) -> tuple[np.ndarray, int]:
    """Aggregated n-gram bucket counts of a corpus; returns (counts, n_docs)."""
    counts = np.zeros(m, dtype=np.int64)
    n_docs = 0
    for record in stream_documents(path, limit=limit):
        z = featurize(record.text, m)
        for j, c in z.counts.items():
            counts[j] += c
        n_docs += 1
    return counts, n_docs


def _fit_corpus(path: str | Path, m: int, smoothing: float) -> tuple[MultinomialModel, int]:
    counts, n_docs = corpus_bucket_counts(path, m)
    if n_docs == 0:
        raise PipelineError(f"corpus is empty: {path}")
    return fit_from_counts(counts, smoothing), int(np.count_nonzero(counts))


def alignment_report(
    selected: str | Path,
    random_baseline: str | Path,
    target: str | Path,
    m: int = DEFAULT_BUCKETS,
    smoothing: float = DEFAULT_SMOOTHING,
    top_n: int = 10,
) -> AlignmentReport:
    """Fit a multinomial per corpus and compare KLs against the target."""
    selected_model, occ_selected = _fit_corpus(selected, m, smoothing)
    random_model, _ = _fit_corpus(random_baseline, m, smoothing)
    target_model, occ_target = _fit_corpus(target, m, smoothing)

    terms = _kl_terms(selected_model, target_model)
    top = np.argsort(-terms)[:top_n]
    return AlignmentReport(
        kl_selected_vs_target=float(terms.sum()),
        kl_random_vs_target=kl_divergence(random_model, target_model),
        bucket_occupancy_selected=occ_selected,
        bucket_occupancy_target=occ_target,
        top_diverging_buckets=[(int(b), float(terms[b])) for b in top],
    )
