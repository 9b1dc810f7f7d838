"""Masked-language-model corruption of token-id sequences.

Each non-special position is independently selected with probability
``select_rate``; a selected position is replaced by the mask token, by a
uniform random non-special id, or kept unchanged, with the configured
80/10/10 split. Labels carry the original id at selected positions and
-100 elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

IGNORE_INDEX = -100


@dataclass
class MaskingConfig:
    mask_token_id: int
    vocab_size: int
    select_rate: float = 0.15
    mask_rate: float = 0.8
    random_rate: float = 0.1
    keep_rate: float = 0.1
    special_token_ids: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        self.special_token_ids = frozenset(self.special_token_ids)
        if abs(self.mask_rate + self.random_rate + self.keep_rate - 1.0) > 1e-12:
            raise ValueError(
                "mask_rate + random_rate + keep_rate must equal 1, got "
                f"{self.mask_rate} + {self.random_rate} + {self.keep_rate}"
            )
        if not 0.0 <= self.select_rate <= 1.0:
            raise ValueError(f"select_rate must be in [0, 1], got {self.select_rate}")
        if not 0 <= self.mask_token_id < self.vocab_size:
            raise ValueError(
                f"mask_token_id {self.mask_token_id} outside vocab of size {self.vocab_size}"
            )


@dataclass
class MaskedBatch:
    input_ids: np.ndarray
    labels: np.ndarray


def mask_tokens(ids, config: MaskingConfig, seed: int) -> MaskedBatch:
    """Corrupt a token-id sequence for MLM training.

    Special-token positions are never selected. Deterministic in
    (ids, config, seed).
    """
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 1:
        raise ValueError(f"expected a 1-D id sequence, got shape {ids.shape}")
    if ids.size:
        bad = np.flatnonzero((ids < 0) | (ids >= config.vocab_size))
        if bad.size:
            raise ValueError(
                f"id {ids[bad[0]]} at position {bad[0]} outside vocab of size {config.vocab_size}"
            )

    special_ids = np.fromiter(config.special_token_ids, dtype=np.int64, count=len(config.special_token_ids))
    special = np.isin(ids, special_ids)
    rng = np.random.default_rng(seed)
    selected = ~special & (rng.random(ids.size) < config.select_rate)

    labels = np.where(selected, ids, IGNORE_INDEX)
    input_ids = ids.copy()

    action = rng.random(ids.size)
    to_mask = selected & (action < config.mask_rate)
    to_random = selected & (action >= config.mask_rate) & (action < config.mask_rate + config.random_rate)
    input_ids[to_mask] = config.mask_token_id

    n_random = int(to_random.sum())
    if n_random:
        allowed = np.setdiff1d(np.arange(config.vocab_size, dtype=np.int64), special_ids)
        if allowed.size == 0:
            raise ValueError("random replacement impossible: every vocab id is special")
        input_ids[to_random] = allowed[rng.integers(0, allowed.size, size=n_random)]

    return MaskedBatch(input_ids=input_ids, labels=labels)
