"""End-to-end selection pipeline with per-stage caching.

Stages: fit the target and raw n-gram models, score the n-gram channel,
optionally fit the two embedding GMMs and score the neural channel,
combine with alpha, select k documents, and write the selection
manifest plus the selected corpus. Every stage's artifact is cached
under a fingerprint of the inputs that determine it, so reruns skip
refitting and expensive fits are restartable.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from itertools import repeat
from pathlib import Path
from typing import Optional

import numpy as np

from . import corpus as corpus_io
from . import gmm as gmm_mod
from . import ngram_model
from .embeddings import MAGIC, iter_embedding_chunks, read_embedding_header
from .errors import PipelineError
from .ngram_model import DEFAULT_SMOOTHING, MultinomialModel
from .ngrams import DEFAULT_BUCKETS, featurize
from .resample import WeightTable, combine_log_weights, deterministic_topk, gumbel_topk

_SCORE_BATCH = 2048


@dataclass
class PipelineConfig:
    """Every knob of one selection run; hashed into a fingerprint."""

    raw_path: str
    target_path: str
    output_dir: str
    alpha: float
    k: int
    seed: int = 0
    mode: str = "gumbel"  # "gumbel" | "topk"
    m: int = DEFAULT_BUCKETS
    smoothing: float = DEFAULT_SMOOTHING  # config key / CLI flag name: lambda
    per_token: bool = False
    standardize: bool = False
    gmm_components_raw: int = 1000
    gmm_components_target: int = 50
    gmm_chunk_rows: int = 100_000
    gmm_max_iter: int = 100
    gmm_rel_tol: float = 1e-4
    variance_floor: float = 1e-6
    raw_limit: Optional[int] = None
    target_limit: Optional[int] = None
    raw_embeddings: Optional[str] = None
    target_embeddings: Optional[str] = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.mode not in ("gumbel", "topk"):
            raise ValueError(f"mode must be 'gumbel' or 'topk', got {self.mode!r}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")

    def fingerprint(self) -> str:
        pairs = {f.name: getattr(self, f.name) for f in fields(self)}
        return stage_fingerprint(**pairs)

    def raw_embeddings_path(self) -> Path:
        return Path(self.raw_embeddings) if self.raw_embeddings else Path(str(self.raw_path) + ".emb")

    def target_embeddings_path(self) -> Path:
        return (
            Path(self.target_embeddings)
            if self.target_embeddings
            else Path(str(self.target_path) + ".emb")
        )


def stage_fingerprint(**values) -> str:
    """Stable short hash of key=value pairs (floats via repr)."""
    lines = [f"{key}={values[key]!r}" for key in sorted(values)]
    digest = hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()
    return digest[:16]


def _file_state(path: str | Path) -> tuple[int, int]:
    st = Path(path).stat()
    return st.st_size, st.st_mtime_ns


def worker_count() -> int:
    """Worker cap from HIR_THREADS (default 1, clamped to the cpu count)."""
    cap = os.environ.get("HIR_THREADS", "1")
    try:
        requested = max(1, int(cap))
    except ValueError:
        requested = 1
    return min(requested, os.cpu_count() or 1)


# ----- n-gram stages ---------------------------------------------------------


def _featurize_batch(texts: list[str], m: int) -> tuple[np.ndarray, int]:
    counts = np.zeros(m, dtype=np.int64)
    total = 0
    for text in texts:
        z = featurize(text, m)
        for j, c in z.counts.items():
            counts[j] += c
        total += z.total
    return counts, total


def _score_batch(
    texts: list[str],
    m: int,
    log_gamma_diff: np.ndarray,
    per_token: bool,
) -> np.ndarray:
    out = np.empty(len(texts), dtype=np.float64)
    for i, text in enumerate(texts):
        z = featurize(text, m)
        if z.total == 0:
            out[i] = 0.0
            continue
        idx = np.fromiter(z.counts.keys(), dtype=np.int64, count=len(z.counts))
        cnt = np.fromiter(z.counts.values(), dtype=np.float64, count=len(z.counts))
        value = float(cnt @ log_gamma_diff[idx])
        out[i] = value / z.total if per_token else value
    return out


def _iter_text_batches(path: str | Path, limit: Optional[int], batch: int):
    texts: list[str] = []
    for record in corpus_io.stream_documents(path, limit=limit):
        texts.append(record.text)
        if len(texts) >= batch:
            yield texts
            texts = []
    if texts:
        yield texts


def fit_ngram_model_for_corpus(
    path: str | Path,
    m: int = DEFAULT_BUCKETS,
    smoothing: float = DEFAULT_SMOOTHING,
    limit: Optional[int] = None,
    workers: int = 1,
) -> MultinomialModel:
    """Featurize a corpus and fit its bucket multinomial.

    Partial integer count arrays are merged by addition, so the result
    is identical for any worker count.
    """
    counts = np.zeros(m, dtype=np.int64)
    total = 0
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part, part_total in pool.map(
                _featurize_batch, _iter_text_batches(path, limit, _SCORE_BATCH), repeat(m)
            ):
                counts += part
                total += part_total
    else:
        for texts in _iter_text_batches(path, limit, _SCORE_BATCH):
            part, part_total = _featurize_batch(texts, m)
            counts += part
            total += part_total
    if total == 0:
        raise PipelineError(f"corpus {path} contains no n-grams to fit")
    return ngram_model.fit_from_counts(counts, smoothing)


def ngram_log_weights_for_corpus(
    path: str | Path,
    p_model: MultinomialModel,
    q_model: MultinomialModel,
    limit: Optional[int] = None,
    per_token: bool = False,
    workers: int = 1,
) -> np.ndarray:
    """Per-document n-gram channel log-weights, in document order."""
    if p_model.m != q_model.m:
        raise ValueError(f"models disagree on m: {p_model.m} vs {q_model.m}")
    diff = p_model.log_gamma - q_model.log_gamma
    parts: list[np.ndarray] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    _score_batch,
                    _iter_text_batches(path, limit, _SCORE_BATCH),
                    repeat(p_model.m),
                    repeat(diff),
                    repeat(per_token),
                )
            )
    else:
        for texts in _iter_text_batches(path, limit, _SCORE_BATCH):
            parts.append(_score_batch(texts, p_model.m, diff, per_token))
    if not parts:
        return np.empty(0, dtype=np.float64)
    return np.concatenate(parts)


# ----- neural stages ---------------------------------------------------------


def require_embeddings(path: Path) -> None:
    if not path.exists():
        raise PipelineError(
            f"missing embedding file {path}: expected a {MAGIC.decode('ascii')} file "
            "(run the embedding exporter or pass --raw-embeddings/--target-embeddings)"
        )


def _limited_chunks(path: str | Path, chunk_rows: int, max_rows: Optional[int]):
    """Row blocks of an embedding file, capped at the first max_rows rows."""
    remaining = max_rows
    for block in iter_embedding_chunks(path, chunk_rows):
        if remaining is None:
            yield block
            continue
        if remaining <= 0:
            return
        yield block[:remaining]
        remaining -= min(block.shape[0], remaining)


def fit_gmm_for_embeddings(
    path: str | Path,
    components: int,
    chunk_rows: int,
    max_iter: int,
    rel_tol: float,
    seed: int,
    variance_floor: float,
    max_rows: Optional[int] = None,
) -> gmm_mod.DiagonalGmm:
    """Chunked warm-start GMM fit over (a row prefix of) an embedding file."""
    model, _ = gmm_mod.fit_incremental(
        _limited_chunks(path, chunk_rows, max_rows),
        k=components,
        max_iter_per_chunk=max_iter,
        rel_tol=rel_tol,
        seed=seed,
        variance_floor=variance_floor,
    )
    return model


def gmm_log_weights_for_embeddings(
    path: str | Path,
    p_model: gmm_mod.DiagonalGmm,
    q_model: gmm_mod.DiagonalGmm,
    n_docs: int,
    chunk_rows: int = 100_000,
) -> np.ndarray:
    """Neural channel log-weights log p_nn(x_i) - log q_nn(x_i) for rows 0..n_docs-1.

    The embedding file may hold more rows than n_docs (a full export used
    with a limited corpus); fewer rows is an error.
    """
    rows, dim = read_embedding_header(path)
    if rows < n_docs:
        raise PipelineError(
            f"embedding file {path} has {rows} rows but the corpus has {n_docs} documents"
        )
    if dim != p_model.dim or dim != q_model.dim:
        raise PipelineError(
            f"embedding dim {dim} does not match GMM dims p={p_model.dim}, q={q_model.dim}"
        )
    out = np.empty(n_docs, dtype=np.float64)
    done = 0
    for block in iter_embedding_chunks(path, chunk_rows):
        if done >= n_docs:
            break
        take = min(block.shape[0], n_docs - done)
        X = block[:take]
        out[done : done + take] = gmm_mod.log_densities(p_model, X) - gmm_mod.log_densities(
            q_model, X
        )
        done += take
    return out


# ----- select / extract ------------------------------------------------------


def _cached_ngram_model(cache_dir: Path, tag: str, fp: str, fit) -> MultinomialModel:
    path = cache_dir / f"ngram_{tag}_{fp}.json"
    if path.exists():
        return ngram_model.load_multinomial(path)
    model = fit()
    ngram_model.save_multinomial(model, path)
    return model


def _cached_gmm(cache_dir: Path, tag: str, fp: str, fit) -> gmm_mod.DiagonalGmm:
    path = cache_dir / f"gmm_{tag}_{fp}.json"
    if path.exists():
        return gmm_mod.load_gmm(path)
    model = fit()
    gmm_mod.save_gmm(model, path)
    return model


def _cached_weights(cache_dir: Path, tag: str, fp: str, compute) -> np.ndarray:
    path = cache_dir / f"weights_{tag}_{fp}.npz"
    if path.exists():
        with np.load(path) as archive:
            return archive["log_weights"]
    values = compute()
    np.savez(path, log_weights=values)
    return values


def run_select(config: PipelineConfig) -> Path:
    """Run the full selection pipeline; returns the manifest path.

    Deterministic given (config, seed); intermediate models and weight
    arrays are cached in <output_dir>/cache and reused when their stage
    fingerprints match.
    """
    raw = Path(config.raw_path)
    target = Path(config.target_path)
    for path in (raw, target):
        if not path.exists():
            raise PipelineError(f"corpus not found: {path}")
    out_dir = Path(config.output_dir)
    cache_dir = out_dir / "cache"
    cache_dir.mkdir(parents=True, exist_ok=True)
    workers = worker_count()

    p_ng_fp = stage_fingerprint(
        stage="ngram",
        path=str(target),
        state=_file_state(target),
        limit=config.target_limit,
        m=config.m,
        smoothing=config.smoothing,
    )
    q_ng_fp = stage_fingerprint(
        stage="ngram",
        path=str(raw),
        state=_file_state(raw),
        limit=config.raw_limit,
        m=config.m,
        smoothing=config.smoothing,
    )
    p_ng = _cached_ngram_model(
        cache_dir,
        "target",
        p_ng_fp,
        lambda: fit_ngram_model_for_corpus(
            target, config.m, config.smoothing, config.target_limit, workers
        ),
    )
    q_ng = _cached_ngram_model(
        cache_dir,
        "raw",
        q_ng_fp,
        lambda: fit_ngram_model_for_corpus(
            raw, config.m, config.smoothing, config.raw_limit, workers
        ),
    )

    n_docs = corpus_io.count_documents(raw, limit=config.raw_limit)
    if config.k > n_docs:
        raise PipelineError(f"k={config.k} exceeds the raw corpus size {n_docs}")

    w_ng_fp = stage_fingerprint(
        stage="weights_ng",
        p=p_ng_fp,
        q=q_ng_fp,
        path=str(raw),
        state=_file_state(raw),
        limit=config.raw_limit,
        per_token=config.per_token,
    )
    log_w_ng = _cached_weights(
        cache_dir,
        "ng",
        w_ng_fp,
        lambda: ngram_log_weights_for_corpus(
            raw, p_ng, q_ng, config.raw_limit, config.per_token, workers
        ),
    )

    if config.alpha < 1.0:
        raw_emb = config.raw_embeddings_path()
        target_emb = config.target_embeddings_path()
        require_embeddings(raw_emb)
        require_embeddings(target_emb)
        n_target = corpus_io.count_documents(target, limit=config.target_limit)
        gmm_params = dict(
            chunk_rows=config.gmm_chunk_rows,
            max_iter=config.gmm_max_iter,
            rel_tol=config.gmm_rel_tol,
            seed=config.seed,
            variance_floor=config.variance_floor,
        )
        p_nn_fp = stage_fingerprint(
            stage="gmm",
            path=str(target_emb),
            state=_file_state(target_emb),
            components=config.gmm_components_target,
            rows=n_target,
            **gmm_params,
        )
        q_nn_fp = stage_fingerprint(
            stage="gmm",
            path=str(raw_emb),
            state=_file_state(raw_emb),
            components=config.gmm_components_raw,
            rows=n_docs,
            **gmm_params,
        )
        p_nn = _cached_gmm(
            cache_dir,
            "target",
            p_nn_fp,
            lambda: fit_gmm_for_embeddings(
                target_emb, config.gmm_components_target, max_rows=n_target, **gmm_params
            ),
        )
        q_nn = _cached_gmm(
            cache_dir,
            "raw",
            q_nn_fp,
            lambda: fit_gmm_for_embeddings(
                raw_emb, config.gmm_components_raw, max_rows=n_docs, **gmm_params
            ),
        )
        w_nn_fp = stage_fingerprint(
            stage="weights_nn",
            p=p_nn_fp,
            q=q_nn_fp,
            path=str(raw_emb),
            state=_file_state(raw_emb),
            n_docs=n_docs,
        )
        log_w_nn = _cached_weights(
            cache_dir,
            "nn",
            w_nn_fp,
            lambda: gmm_log_weights_for_embeddings(
                raw_emb, p_nn, q_nn, n_docs, config.gmm_chunk_rows
            ),
        )
    else:
        # Neural channel never fitted at alpha=1; identity weights keep
        # the manifest schema complete.
        log_w_nn = np.zeros(n_docs, dtype=np.float64)

    table = WeightTable(log_w_ng=log_w_ng, log_w_nn=log_w_nn)
    combined = combine_log_weights(table, config.alpha, standardize=config.standardize)
    if config.mode == "gumbel":
        result = gumbel_topk(combined, config.k, config.seed)
    else:
        result = deterministic_topk(combined, config.k)
    result.alpha = config.alpha

    manifest_path = out_dir / "selection.jsonl"
    corpus_io.write_selection(
        indices=[int(i) for i in result.indices],
        log_weights_ng=[float(log_w_ng[i]) for i in result.indices],
        log_weights_nn=[float(log_w_nn[i]) for i in result.indices],
        seed=config.seed,
        config_fingerprint=config.fingerprint(),
        path=manifest_path,
        alpha=config.alpha,
    )
    extract_selected(manifest_path, raw, out_dir / "selected.jsonl", limit=config.raw_limit)
    return manifest_path


def extract_selected(
    manifest_path: str | Path,
    raw_path: str | Path,
    out_path: str | Path,
    limit: Optional[int] = None,
) -> int:
    """Write the selected documents in manifest order.

    Streams the raw corpus exactly once (indices visited in sorted
    order), then reorders to manifest order. Returns the number written.
    """
    manifest = corpus_io.read_selection(manifest_path)
    wanted = set(manifest.indices)
    found: dict[int, corpus_io.DocumentRecord] = {}
    highest = -1
    for record in corpus_io.stream_documents(raw_path, limit=limit):
        highest = record.index
        if record.index in wanted:
            found[record.index] = record
    missing = wanted - found.keys()
    if missing:
        raise PipelineError(
            f"selection index {min(missing)} is out of range: raw corpus has "
            f"{highest + 1} documents"
        )
    records = (found[i] for i in manifest.indices)
    corpus_io.write_documents(records, out_path, role="selected")
    return len(manifest.indices)
