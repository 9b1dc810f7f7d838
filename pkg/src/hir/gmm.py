"""Diagonal-covariance Gaussian mixtures fitted by EM.

Supports warm-started fitting over row chunks of an embedding matrix:
the first chunk is fitted from a k-means++ initialization and every
later chunk starts EM from the previous chunk's parameters. All
accumulation is float64 and every density goes through log-sum-exp.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

import numpy as np
from scipy.special import logsumexp

from .embeddings import EmbeddingMatrix

DEFAULT_VARIANCE_FLOOR = 1e-6
DEFAULT_REL_TOL = 1e-4
DEFAULT_MAX_ITER = 100

# Components whose total responsibility falls below this are re-seeded
# at the worst-modeled data point so k stays fixed.
EMPTY_COMPONENT_THRESHOLD = 1e-10

ArrayLike = Union[np.ndarray, EmbeddingMatrix]


@dataclass
class DiagonalGmm:
    """K-component mixture with diagonal covariances, parameters in float64."""

    log_weights: np.ndarray  # (k,)
    means: np.ndarray  # (k, dim)
    variances: np.ndarray  # (k, dim)
    variance_floor: float = DEFAULT_VARIANCE_FLOOR

    def __post_init__(self):
        self.log_weights = np.asarray(self.log_weights, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.variances = np.asarray(self.variances, dtype=np.float64)
        if self.means.ndim != 2 or self.means.shape != self.variances.shape:
            raise ValueError(
                f"means {self.means.shape} and variances {self.variances.shape} "
                "must be matching (k, dim) matrices"
            )
        if self.k < 1:
            raise ValueError("mixture needs at least one component")
        if self.log_weights.shape != (self.k,):
            raise ValueError(
                f"log_weights shape {self.log_weights.shape} does not match k={self.k}"
            )
        total = float(np.exp(self.log_weights).sum())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"mixing weights sum to {total!r}, expected 1 within 1e-9")
        if not np.all(self.variances >= self.variance_floor):
            raise ValueError(f"all variances must be >= variance_floor={self.variance_floor}")

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


@dataclass
class EmStats:
    """Bookkeeping for an EM run; the trace holds per-iteration mean log-likelihood."""

    iterations_run: int
    log_likelihood_trace: list[float] = field(default_factory=list)
    converged: bool = False


def _as_matrix(data: ArrayLike) -> np.ndarray:
    if isinstance(data, EmbeddingMatrix):
        data = data.data
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D data matrix, got shape {X.shape}")
    return X


def weighted_log_densities(model: DiagonalGmm, X: np.ndarray) -> np.ndarray:
    """(n, k) matrix of log(weight_c) + log N(x_i; mean_c, var_c)."""
    X = np.asarray(X, dtype=np.float64)
    inv = 1.0 / model.variances
    const = -0.5 * np.sum(np.log(2.0 * np.pi * model.variances), axis=1)
    quad = (
        (X * X) @ inv.T
        - 2.0 * (X @ (model.means * inv).T)
        + np.sum(model.means * model.means * inv, axis=1)
    )
    return model.log_weights + const - 0.5 * quad


def log_densities(model: DiagonalGmm, X: np.ndarray) -> np.ndarray:
    """Mixture log-density of every row of X, via log-sum-exp over components."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise ValueError(f"data has shape {X.shape}, model dim is {model.dim}")
    return logsumexp(weighted_log_densities(model, X), axis=1)


def log_density(model: DiagonalGmm, x: np.ndarray) -> float:
    """Mixture log-density of a single length-dim vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dim,):
        raise ValueError(f"vector has shape {x.shape}, model dim is {model.dim}")
    return float(log_densities(model, x[None, :])[0])


def responsibilities(model: DiagonalGmm, X: np.ndarray) -> np.ndarray:
    """(n, k) posterior component probabilities; rows sum to 1."""
    log_comp = weighted_log_densities(model, _as_matrix(X))
    return np.exp(log_comp - logsumexp(log_comp, axis=1)[:, None])


def _kmeans_pp_centers(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]), dtype=np.float64)
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centers[c] = X[idx]
        np.minimum(d2, np.sum((X - centers[c]) ** 2, axis=1), out=d2)
    return centers


def _initial_model(X: np.ndarray, k: int, seed: int, variance_floor: float) -> DiagonalGmm:
    rng = np.random.default_rng(seed)
    means = _kmeans_pp_centers(X, k, rng)
    var = np.maximum(X.var(axis=0), variance_floor)
    return DiagonalGmm(
        log_weights=np.full(k, -math.log(k)),
        means=means,
        variances=np.tile(var, (k, 1)),
        variance_floor=variance_floor,
    )


def _m_step(
    X: np.ndarray,
    resp: np.ndarray,
    log_px: np.ndarray,
    variance_floor: float,
) -> DiagonalGmm:
    n = X.shape[0]
    nk = resp.sum(axis=0)
    empty = nk < EMPTY_COMPONENT_THRESHOLD
    nk_safe = np.where(empty, 1.0, nk)
    means = (resp.T @ X) / nk_safe[:, None]
    second_moment = (resp.T @ (X * X)) / nk_safe[:, None]
    variances = np.maximum(second_moment - means * means, variance_floor)
    weights = nk / n
    if empty.any():
        # Re-seed starved components at the points the current model
        # explains worst, keeping k fixed.
        worst = np.argsort(log_px)
        data_var = np.maximum(X.var(axis=0), variance_floor)
        for slot, comp in enumerate(np.flatnonzero(empty)):
            means[comp] = X[worst[slot % n]]
            variances[comp] = data_var
            weights[comp] = 1.0 / n
        weights = weights / weights.sum()
    return DiagonalGmm(
        log_weights=np.log(weights),
        means=means,
        variances=variances,
        variance_floor=variance_floor,
    )


def fit_em(
    data: ArrayLike,
    k: int,
    init: DiagonalGmm | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    rel_tol: float = DEFAULT_REL_TOL,
    seed: int = 0,
    variance_floor: float = DEFAULT_VARIANCE_FLOOR,
) -> tuple[DiagonalGmm, EmStats]:
    """Fit a k-component diagonal GMM by EM.

    When ``init`` is given it is used verbatim as the starting point (no
    re-initialization); otherwise means are seeded with k-means++ from
    ``seed``. Each iteration runs one E+M step and appends the mean
    log-likelihood under the updated parameters to the trace; fitting
    stops once the relative improvement drops below ``rel_tol`` or after
    ``max_iter`` iterations. ``max_iter=0`` returns ``init`` unchanged.
    """
    X = _as_matrix(data)
    bad = np.flatnonzero(~np.isfinite(X).all(axis=1))
    if bad.size:
        raise ValueError(f"non-finite value in data row {bad[0]}")
    if init is None:
        if X.shape[0] < k:
            raise ValueError(f"need at least k={k} rows to initialize, got {X.shape[0]}")
        model = _initial_model(X, k, seed, variance_floor)
    else:
        if init.k != k:
            raise ValueError(f"init has k={init.k}, requested k={k}")
        if init.dim != X.shape[1]:
            raise ValueError(f"init has dim={init.dim}, data has dim={X.shape[1]}")
        model = init

    trace: list[float] = []
    converged = False
    prev_ll: float | None = None
    log_comp = weighted_log_densities(model, X)
    for _ in range(max_iter):
        log_px = logsumexp(log_comp, axis=1)
        resp = np.exp(log_comp - log_px[:, None])
        model = _m_step(X, resp, log_px, variance_floor)
        log_comp = weighted_log_densities(model, X)
        ll = float(np.mean(logsumexp(log_comp, axis=1)))
        trace.append(ll)
        if prev_ll is not None and ll - prev_ll < rel_tol * abs(prev_ll):
            converged = True
            break
        prev_ll = ll
    return model, EmStats(iterations_run=len(trace), log_likelihood_trace=trace, converged=converged)


def fit_incremental(
    chunks: Iterable[ArrayLike],
    k: int,
    max_iter_per_chunk: int = DEFAULT_MAX_ITER,
    rel_tol: float = DEFAULT_REL_TOL,
    seed: int = 0,
    variance_floor: float = DEFAULT_VARIANCE_FLOOR,
) -> tuple[DiagonalGmm, EmStats]:
    """Fit chunk by chunk, warm-starting each chunk from the previous model.

    Chunk 1 is fitted with a fresh initialization; every later chunk runs
    EM with the previous chunk's parameters as the verbatim starting
    point, so only the first chunk needs >= k rows.
    """
    model: DiagonalGmm | None = None
    trace: list[float] = []
    converged = False
    for chunk in chunks:
        model, stats = fit_em(
            chunk,
            k,
            init=model,
            max_iter=max_iter_per_chunk,
            rel_tol=rel_tol,
            seed=seed,
            variance_floor=variance_floor,
        )
        trace.extend(stats.log_likelihood_trace)
        converged = stats.converged
    if model is None:
        raise ValueError("empty chunk sequence")
    return model, EmStats(iterations_run=len(trace), log_likelihood_trace=trace, converged=converged)


def save_gmm(model: DiagonalGmm, path: str | Path) -> None:
    """Write the mixture as a single JSON document of decimal reals."""
    doc = {
        "k": model.k,
        "dim": model.dim,
        "variance_floor": model.variance_floor,
        "log_weights": model.log_weights.tolist(),
        "means": model.means.tolist(),
        "variances": model.variances.tolist(),
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_gmm(path: str | Path) -> DiagonalGmm:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    model = DiagonalGmm(
        log_weights=np.asarray(doc["log_weights"], dtype=np.float64),
        means=np.asarray(doc["means"], dtype=np.float64),
        variances=np.asarray(doc["variances"], dtype=np.float64),
        variance_floor=float(doc["variance_floor"]),
    )
    if model.k != int(doc["k"]) or model.dim != int(doc["dim"]):
        raise ValueError(f"{path}: header k/dim disagrees with stored arrays")
    return model
