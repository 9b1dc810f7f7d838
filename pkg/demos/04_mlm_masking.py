"""
Preparing selected data for masked-language-model pretraining
=============================================================

Applies the 15% / 80-10-10 corruption scheme to token-id sequences and
verifies its statistics: which positions were selected, and how the
selected positions split between mask, random replacement, and keep.
"""

import numpy as np

from hir import IGNORE_INDEX, MaskingConfig, mask_tokens

config = MaskingConfig(
    mask_token_id=4,
    vocab_size=30_522,
    special_token_ids=frozenset({0, 1, 2, 3, 4}),  # pad/unk/cls/sep/mask
)

# A small sequence: special tokens (here 2 and 3 as [CLS]/[SEP]) are
# never selected, so they survive corruption untouched.
ids = np.array([2, 1037, 2154, 2003, 1037, 2204, 2154, 3])
batch = mask_tokens(ids, config, seed=0)
print("input :", ids.tolist())
print("masked:", batch.input_ids.tolist())
print("labels:", batch.labels.tolist())

# At scale the statistics match the configured rates.
rng = np.random.default_rng(0)
big = rng.integers(5, config.vocab_size, size=200_000)
batch = mask_tokens(big, config, seed=1)
selected = batch.labels != IGNORE_INDEX
n = selected.sum()
masked = selected & (batch.input_ids == config.mask_token_id)
kept = selected & (batch.input_ids == big)
randomized = selected & ~masked & ~kept
print(f"selected fraction : {n / big.size:.4f}  (target {config.select_rate})")
print(f"  -> [MASK]       : {masked.sum() / n:.4f}  (target {config.mask_rate})")
print(f"  -> random token : {randomized.sum() / n:.4f}  (target {config.random_rate})")
print(f"  -> kept         : {kept.sum() / n:.4f}  (target {config.keep_rate})")

# The label contract: selected positions carry their original id,
# unselected positions carry -100 and are never corrupted.
assert np.array_equal(batch.labels[selected], big[selected])
assert np.array_equal(batch.input_ids[~selected], big[~selected])
print("label contract holds on every position")
