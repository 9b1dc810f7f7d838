"""Command-line interface: the pipeline as composable subcommands.

Each expensive stage (n-gram fits, GMM fits, weight computation) is
usable standalone so intermediate artifacts can be cached and reruns
are cheap. Exit status is 0 on success, 1 on usage errors, 2 on data
errors. The HIR_THREADS environment variable caps worker counts.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import gmm as gmm_mod
from . import ngram_model
from .diagnostics import alignment_report
from .errors import HirError
from .mlm import MaskingConfig, mask_tokens
from .pipeline import (
    PipelineConfig,
    extract_selected,
    fit_gmm_for_embeddings,
    fit_ngram_model_for_corpus,
    gmm_log_weights_for_embeddings,
    ngram_log_weights_for_corpus,
    require_embeddings,
    run_select,
    worker_count,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _parse_optional_int(value: str) -> int | None:
    lowered = value.strip().lower()
    return None if lowered in ("", "none") else int(value)


# config-file key -> (PipelineConfig field, converter); CLI flags carry
# the same names with dashes.
_CONFIG_KEYS = {
    "raw": ("raw_path", str),
    "target": ("target_path", str),
    "output_dir": ("output_dir", str),
    "alpha": ("alpha", float),
    "k": ("k", int),
    "seed": ("seed", int),
    "mode": ("mode", str),
    "ngram_buckets": ("m", int),
    "lambda": ("smoothing", float),
    "per_token": ("per_token", _parse_bool),
    "standardize_channels": ("standardize", _parse_bool),
    "gmm_components_raw": ("gmm_components_raw", int),
    "gmm_components_target": ("gmm_components_target", int),
    "gmm_chunk_rows": ("gmm_chunk_rows", int),
    "gmm_max_iter": ("gmm_max_iter", int),
    "gmm_rel_tol": ("gmm_rel_tol", float),
    "variance_floor": ("variance_floor", float),
    "raw_limit": ("raw_limit", _parse_optional_int),
    "target_limit": ("target_limit", _parse_optional_int),
    "raw_embeddings": ("raw_embeddings", str),
    "target_embeddings": ("target_embeddings", str),
}


def load_config_file(path: str | Path) -> dict:
    """Parse a flat key=value config file into PipelineConfig fields."""
    values = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, raw_value = line.partition("=")
        if not sep:
            raise HirError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key = key.strip().replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise HirError(f"{path}:{line_no}: unknown config key {key!r}")
        field, convert = _CONFIG_KEYS[key]
        try:
            values[field] = convert(raw_value.strip())
        except ValueError as exc:
            raise HirError(f"{path}:{line_no}: bad value for {key}: {exc}") from exc
    return values


def _add_select_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--raw", dest="raw_path", help="raw corpus (jsonl)")
    p.add_argument("--target", dest="target_path", help="target corpus (jsonl)")
    p.add_argument("--output-dir", dest="output_dir", help="directory for manifest and outputs")
    p.add_argument("--alpha", type=float, help="n-gram channel exponent in [0, 1]")
    p.add_argument("--k", type=int, help="number of documents to select")
    p.add_argument("--seed", type=int, help="selection seed (default 0)")
    p.add_argument("--mode", choices=("gumbel", "topk"), help="selection mode (default gumbel)")
    p.add_argument("--ngram-buckets", dest="m", type=int, help="hash buckets m (default 10000)")
    p.add_argument("--lambda", dest="smoothing", type=float, help="smoothing mass (default 1e-5)")
    p.add_argument("--per-token", dest="per_token", action=argparse.BooleanOptionalAction)
    p.add_argument(
        "--standardize-channels", dest="standardize", action=argparse.BooleanOptionalAction
    )
    p.add_argument("--gmm-components-raw", type=int, help="raw GMM components (default 1000)")
    p.add_argument("--gmm-components-target", type=int, help="target GMM components (default 50)")
    p.add_argument("--gmm-chunk-rows", type=int, help="rows per EM chunk (default 100000)")
    p.add_argument("--gmm-max-iter", type=int, help="EM iterations per chunk (default 100)")
    p.add_argument("--gmm-rel-tol", type=float, help="EM relative tolerance (default 1e-4)")
    p.add_argument("--variance-floor", type=float, help="GMM variance floor (default 1e-6)")
    p.add_argument("--raw-limit", type=int, help="use only the first N raw documents")
    p.add_argument("--target-limit", type=int, help="use only the first N target documents")
    p.add_argument("--raw-embeddings", help="HIREMB01 file for the raw corpus")
    p.add_argument("--target-embeddings", help="HIREMB01 file for the target corpus")


def cmd_select(args: argparse.Namespace) -> int:
    values: dict = {}
    if args.config:
        values.update(load_config_file(args.config))
    for field, _ in _CONFIG_KEYS.values():
        flag_value = getattr(args, field, None)
        if flag_value is not None:
            values[field] = flag_value
    missing = [name for name in ("raw_path", "target_path", "output_dir", "alpha", "k") if name not in values]
    if missing:
        print(f"error: missing required option(s): {', '.join(missing)}", file=sys.stderr)
        return EXIT_USAGE
    try:
        config = PipelineConfig(**values)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    manifest_path = run_select(config)
    print(f"wrote {manifest_path}")
    return EXIT_OK


def cmd_ngram_fit(args: argparse.Namespace) -> int:
    model = fit_ngram_model_for_corpus(
        args.input, m=args.m, smoothing=args.smoothing, limit=args.limit, workers=worker_count()
    )
    ngram_model.save_multinomial(model, args.output)
    print(f"wrote {args.output} (m={model.m}, ngrams={model.total_ngrams_seen})")
    return EXIT_OK


def cmd_gmm_fit(args: argparse.Namespace) -> int:
    require_embeddings(Path(args.embeddings))
    model = fit_gmm_for_embeddings(
        args.embeddings,
        components=args.components,
        chunk_rows=args.gmm_chunk_rows,
        max_iter=args.gmm_max_iter,
        rel_tol=args.gmm_rel_tol,
        seed=args.seed,
        variance_floor=args.variance_floor,
    )
    gmm_mod.save_gmm(model, args.output)
    print(f"wrote {args.output} (k={model.k}, dim={model.dim})")
    return EXIT_OK


def cmd_weights(args: argparse.Namespace) -> int:
    p_ng = ngram_model.load_multinomial(args.p_ngram)
    q_ng = ngram_model.load_multinomial(args.q_ngram)
    log_w_ng = ngram_log_weights_for_corpus(
        args.raw, p_ng, q_ng, limit=args.raw_limit, per_token=args.per_token,
        workers=worker_count(),
    )
    if args.p_gmm or args.q_gmm:
        if not (args.p_gmm and args.q_gmm and args.raw_embeddings):
            print(
                "error: neural channel needs --p-gmm, --q-gmm and --raw-embeddings together",
                file=sys.stderr,
            )
            return EXIT_USAGE
        require_embeddings(Path(args.raw_embeddings))
        p_nn = gmm_mod.load_gmm(args.p_gmm)
        q_nn = gmm_mod.load_gmm(args.q_gmm)
        log_w_nn = gmm_log_weights_for_embeddings(
            args.raw_embeddings, p_nn, q_nn, n_docs=log_w_ng.shape[0]
        )
    else:
        log_w_nn = np.zeros_like(log_w_ng)
    np.savez(args.output, log_w_ng=log_w_ng, log_w_nn=log_w_nn)
    print(f"wrote {args.output} ({log_w_ng.shape[0]} documents)")
    return EXIT_OK


def cmd_extract(args: argparse.Namespace) -> int:
    written = extract_selected(args.manifest, args.raw, args.output)
    print(f"wrote {args.output} ({written} documents)")
    return EXIT_OK


def _parse_id_line(line: str, path: str, line_no: int) -> list[int]:
    try:
        return [int(token) for token in line.split()]
    except ValueError as exc:
        raise HirError(f"{path}:{line_no}: not a space-separated id sequence: {exc}") from exc


def cmd_mlm_mask(args: argparse.Namespace) -> int:
    special = frozenset(int(t) for t in args.special_ids.split(",") if t.strip() != "")
    config = MaskingConfig(
        mask_token_id=args.mask_token_id,
        vocab_size=args.vocab_size,
        select_rate=args.select_rate,
        mask_rate=args.mask_rate,
        random_rate=args.random_rate,
        keep_rate=args.keep_rate,
        special_token_ids=special,
    )
    with open(args.input, "r", encoding="utf-8") as src, open(
        args.output, "w", encoding="utf-8"
    ) as dst:
        for line_no, line in enumerate(src, start=1):
            line = line.strip()
            if not line:
                continue
            ids = _parse_id_line(line, args.input, line_no)
            batch = mask_tokens(ids, config, seed=args.seed + line_no - 1)
            dst.write(" ".join(str(i) for i in batch.input_ids) + "\n")
            dst.write(" ".join(str(i) for i in batch.labels) + "\n")
    print(f"wrote {args.output}")
    return EXIT_OK


def cmd_eval_align(args: argparse.Namespace) -> int:
    report = alignment_report(
        args.selected,
        args.random,
        args.target,
        m=args.m,
        smoothing=args.smoothing,
        top_n=args.top_n,
    )
    doc = json.dumps(report.to_dict())
    if args.json:
        Path(args.json).write_text(doc + "\n", encoding="utf-8")
    print(doc)
    print(report.table())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hir",
        description="Select a subset of a raw corpus whose distribution matches a target corpus.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="run the full selection pipeline")
    _add_select_flags(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("ngram-fit", help="fit a hashed n-gram multinomial to a corpus")
    p.add_argument("--input", required=True, help="corpus (jsonl)")
    p.add_argument("--output", required=True, help="model file to write (json)")
    p.add_argument("--ngram-buckets", dest="m", type=int, default=10_000)
    p.add_argument("--lambda", dest="smoothing", type=float, default=1e-5)
    p.add_argument("--limit", type=int, default=None)
    p.set_defaults(func=cmd_ngram_fit)

    p = sub.add_parser("gmm-fit", help="fit a diagonal GMM to an embedding file")
    p.add_argument("--embeddings", required=True, help="HIREMB01 embedding file")
    p.add_argument("--output", required=True, help="model file to write (json)")
    p.add_argument("--components", required=True, type=int)
    p.add_argument("--gmm-chunk-rows", type=int, default=100_000)
    p.add_argument("--gmm-max-iter", type=int, default=100)
    p.add_argument("--gmm-rel-tol", type=float, default=1e-4)
    p.add_argument("--variance-floor", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gmm_fit)

    p = sub.add_parser("weights", help="compute per-document log-weights for a raw corpus")
    p.add_argument("--raw", required=True)
    p.add_argument("--p-ngram", required=True, help="target n-gram model file")
    p.add_argument("--q-ngram", required=True, help="raw n-gram model file")
    p.add_argument("--output", required=True, help="npz file to write")
    p.add_argument("--p-gmm", help="target GMM model file")
    p.add_argument("--q-gmm", help="raw GMM model file")
    p.add_argument("--raw-embeddings", help="HIREMB01 file aligned with the raw corpus")
    p.add_argument("--raw-limit", type=int, default=None)
    p.add_argument("--per-token", action="store_true")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("extract", help="extract manifest-selected documents from a raw corpus")
    p.add_argument("--manifest", required=True)
    p.add_argument("--raw", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("mlm-mask", help="apply MLM corruption to integer id sequences")
    p.add_argument("--input", required=True, help="one space-separated id sequence per line")
    p.add_argument("--output", required=True, help="pairs of lines: corrupted ids, then labels")
    p.add_argument("--vocab-size", required=True, type=int)
    p.add_argument("--mask-token-id", required=True, type=int)
    p.add_argument("--select-rate", type=float, default=0.15)
    p.add_argument("--mask-rate", type=float, default=0.8)
    p.add_argument("--random-rate", type=float, default=0.1)
    p.add_argument("--keep-rate", type=float, default=0.1)
    p.add_argument("--special-ids", default="", help="comma-separated special token ids")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_mlm_mask)

    p = sub.add_parser("eval-align", help="report distribution alignment against a target")
    p.add_argument("--selected", required=True)
    p.add_argument("--random", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--ngram-buckets", dest="m", type=int, default=10_000)
    p.add_argument("--lambda", dest="smoothing", type=float, default=1e-5)
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--json", help="also write the structured report to this file")
    p.set_defaults(func=cmd_eval_align)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else EXIT_USAGE
        return EXIT_OK if code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except HirError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
