"""Hybrid log-weight combination and without-replacement top-k selection.

The two importance-weight channels are mixed in log space with a
parameter alpha; selection is either Gumbel-perturbed top-k (sampling
without replacement proportional to the weights) or plain top-k.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

MODE_GUMBEL = "gumbel_topk"
MODE_DETERMINISTIC = "deterministic_topk"


@dataclass
class WeightTable:
    """Per-document log-weights for the n-gram and neural channels."""

    log_w_ng: np.ndarray
    log_w_nn: np.ndarray

    def __post_init__(self):
        self.log_w_ng = np.asarray(self.log_w_ng, dtype=np.float64)
        self.log_w_nn = np.asarray(self.log_w_nn, dtype=np.float64)
        if self.log_w_ng.shape != self.log_w_nn.shape or self.log_w_ng.ndim != 1:
            raise ValueError(
                f"channel shapes disagree: {self.log_w_ng.shape} vs {self.log_w_nn.shape}"
            )

    @property
    def n(self) -> int:
        return self.log_w_ng.shape[0]


@dataclass
class SelectionResult:
    """k selected indices ordered by descending (perturbed) score.

    ``seed`` is None for deterministic selection; ``alpha`` is None when
    the selection was made from a single pre-combined weight vector.
    """

    indices: np.ndarray
    scores: np.ndarray
    mode: str
    seed: Optional[int] = None
    alpha: Optional[float] = None


def _standardize(values: np.ndarray) -> np.ndarray:
    std = values.std()
    centered = values - values.mean()
    return centered / std if std > 0 else centered


def combine_log_weights(
    table: WeightTable,
    alpha: float,
    standardize: bool = False,
) -> np.ndarray:
    """Elementwise alpha * log_w_ng + (1 - alpha) * log_w_nn.

    At the endpoints the untouched channel vector is returned exactly.
    With ``standardize`` each channel is shifted to mean 0 and scaled to
    unit standard deviation before combining (raw channel scales differ
    by orders of magnitude, which makes intermediate alpha degenerate).
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    for name, channel in (("log_w_ng", table.log_w_ng), ("log_w_nn", table.log_w_nn)):
        nan = np.flatnonzero(np.isnan(channel))
        if nan.size:
            raise ValueError(f"NaN in {name} at index {nan[0]}")
    ng, nn = table.log_w_ng, table.log_w_nn
    if standardize:
        ng, nn = _standardize(ng), _standardize(nn)
    if alpha == 1.0:
        return ng.copy()
    if alpha == 0.0:
        return nn.copy()
    return alpha * ng + (1.0 - alpha) * nn


def _top_k_by_score(scores: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices and scores of the k largest entries, ties broken by lower index.

    Uses a partial partition, O(n + k log k); the returned scores are
    non-increasing.
    """
    n = scores.shape[0]
    if n == k:
        chosen = np.arange(n)
    else:
        part = np.argpartition(-scores, k - 1)
        threshold = scores[part[k - 1]]
        above = np.flatnonzero(scores > threshold)
        ties = np.flatnonzero(scores == threshold)
        chosen = np.concatenate([above, ties[: k - above.size]])
    order = np.lexsort((chosen, -scores[chosen]))
    chosen = chosen[order]
    return chosen, scores[chosen]


def _check_k(k: int, n: int) -> None:
    if k <= 0:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of candidates n={n}")


def gumbel_noise(n: int, seed: int) -> np.ndarray:
    """n standard Gumbel variates from a counter-based generator keyed by seed.

    Philox is counter-based, so variate i depends only on (seed, i) and
    sharded generation would reproduce the same stream.
    """
    rng = np.random.Generator(np.random.Philox(key=seed % (1 << 128)))
    return rng.gumbel(size=n)


def gumbel_topk(log_weights: np.ndarray, k: int, seed: int) -> SelectionResult:
    """Sample k indices without replacement, proportional to exp(log_weights).

    Each index gets one seeded standard Gumbel variate g_i; the k
    largest log_weights[i] + g_i are returned, which realizes sequential
    (Plackett-Luce) sampling without replacement.
    """
    log_weights = np.asarray(log_weights, dtype=np.float64)
    _check_k(k, log_weights.shape[0])
    perturbed = log_weights + gumbel_noise(log_weights.shape[0], seed)
    indices, scores = _top_k_by_score(perturbed, k)
    return SelectionResult(indices=indices, scores=scores, mode=MODE_GUMBEL, seed=seed)


def deterministic_topk(log_weights: np.ndarray, k: int) -> SelectionResult:
    """The k largest-weight indices, ties broken by lower index."""
    log_weights = np.asarray(log_weights, dtype=np.float64)
    _check_k(k, log_weights.shape[0])
    indices, scores = _top_k_by_score(log_weights, k)
    return SelectionResult(indices=indices, scores=scores, mode=MODE_DETERMINISTIC)
