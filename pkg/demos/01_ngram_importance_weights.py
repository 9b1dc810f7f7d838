"""
The hashed n-gram channel
=========================

Walks the n-gram path end to end: tokenize text, hash unigrams and
bigrams into buckets, fit a multinomial to a target and a raw corpus,
and turn the two models into per-document importance weights.
"""

import numpy as np

from hir import featurize, fit_multinomial, log_prob, log_weight_ng, tokenize

# Tokenization keeps punctuation as its own token and lowercases.
print("tokens:", tokenize("I love Montreal."))

# A document becomes a sparse count vector over m hash buckets. The
# total is #unigrams + #bigrams.
z = featurize("I love Montreal.", m=10_000)
print("total n-grams:", z.total, "| distinct buckets:", len(z.counts))

# Fit one model per corpus. The target distribution here over-uses the
# word "science"; the raw distribution is generic.
target_docs = [
    "science is organized knowledge",
    "the science of data selection",
    "open science benefits everyone",
]
raw_docs = [
    "the weather is nice today",
    "stock prices fell sharply",
    "a recipe for sourdough bread",
    "science fiction is fun",
]
m = 4096
p_ng = fit_multinomial([featurize(t, m) for t in target_docs], m=m, smoothing=1e-5)
q_ng = fit_multinomial([featurize(t, m) for t in raw_docs], m=m, smoothing=1e-5)

# log P(z) under each model, and the importance weight log p - log q.
# Documents that look like the target get positive log-weights.
for text in raw_docs:
    z = featurize(text, m)
    w = log_weight_ng(p_ng, q_ng, z)
    print(f"{w:+8.3f}  log p={log_prob(p_ng, z):8.3f}  {text!r}")

# Smoothing keeps weights finite even for n-grams the target never saw;
# with smoothing=0 those documents would score -inf and silently vanish.
weights = np.array([log_weight_ng(p_ng, q_ng, featurize(t, m)) for t in raw_docs])
print("all weights finite:", bool(np.isfinite(weights).all()))
