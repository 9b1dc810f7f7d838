"""
The neural embedding channel
============================

Fits diagonal Gaussian mixtures to document embeddings, including the
chunked warm-start procedure used when the embedding matrix is too
large for memory, and scores the log-density ratio that becomes the
neural channel of the hybrid weights.
"""

import numpy as np

from hir import EmbeddingMatrix, fit_em, fit_incremental, log_density, write_embeddings
from hir.embeddings import iter_embedding_chunks
from hir.gmm import log_densities

rng = np.random.default_rng(0)

# Synthetic "embeddings": two clusters standing in for two domains.
dim = 16
cluster_a = rng.normal(loc=-2.0, scale=0.8, size=(800, dim))
cluster_b = rng.normal(loc=+2.0, scale=0.5, size=(200, dim))
raw_embeddings = np.vstack([cluster_a, cluster_b]).astype(np.float32)
rng.shuffle(raw_embeddings)

# Whole-matrix EM fit. The trace is the mean log-likelihood after each
# iteration; EM guarantees it never decreases.
model, stats = fit_em(raw_embeddings, k=4, seed=0)
print(f"EM ran {stats.iterations_run} iterations, converged={stats.converged}")
print("trace head:", [round(v, 3) for v in stats.log_likelihood_trace[:5]])

# The same fit, chunked: write the matrix to disk, then stream row
# blocks. Each chunk's EM starts from the previous chunk's parameters.
path = "/tmp/hir-demo-embeddings.emb"
write_embeddings(EmbeddingMatrix.from_array(raw_embeddings), path)
chunked_model, chunked_stats = fit_incremental(
    iter_embedding_chunks(path, chunk_rows=256), k=4, seed=0
)
print(f"chunked fit ran {chunked_stats.iterations_run} total iterations")

held_out = np.vstack(
    [
        rng.normal(loc=-2.0, scale=0.8, size=(150, dim)),
        rng.normal(loc=+2.0, scale=0.5, size=(50, dim)),
    ]
)
print("held-out mean LL, whole fit:  ", float(np.mean(log_densities(model, held_out))))
print("held-out mean LL, chunked fit:", float(np.mean(log_densities(chunked_model, held_out))))

# The neural channel weight of a document is log p_nn(x) - log q_nn(x).
# Fit a small target mixture on cluster-B-like vectors and compare.
target_model, _ = fit_em(
    rng.normal(loc=+2.0, scale=0.5, size=(300, dim)), k=2, seed=1
)
for label, x in (("a-like", -2.0 * np.ones(dim)), ("b-like", +2.0 * np.ones(dim))):
    w = log_density(target_model, x) - log_density(chunked_model, x)
    print(f"{label} document: neural log-weight {w:+.2f}")
