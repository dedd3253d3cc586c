"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 backend error,
5 evaluation finished with unscored items.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .backends import RecordCache, resolve_cache_dir
from .config import apply_overrides, load_config
from .errors import (
    BackendError,
    ConfigError,
    DataError,
    DomainError,
    PartialEvaluationError,
)
from .harness import load_dataset
from .pipeline import collect_prompts, run_evaluate, run_score, run_tie_report
from .records import dumps_record, loads_record, validate_record


def _add_common(p: argparse.ArgumentParser, need_config: bool = True) -> None:
    p.add_argument("--config", required=need_config, metavar="PATH", help="run configuration (TOML)")
    p.add_argument("--dataset", metavar="PATH", help="override the configured dataset")
    p.add_argument("--out", metavar="DIR", help="override the configured output directory")
    p.add_argument("--alpha", metavar="F|adaptive", help="mixing weight override")
    p.add_argument("--pooling", choices=("max", "avg", "none"), help="pooling override")
    p.add_argument(
        "--tie-policy", choices=("zero", "half"), help="credit for metric ties", dest="tie_policy"
    )
    p.add_argument("--cache", metavar="DIR", help="cache directory override")
    p.add_argument(
        "--no-cache", action="store_true", help="bypass the inference cache entirely"
    )
    p.add_argument(
        "--dry-run", action="store_true", help="check config and data, touch no backend"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cafscore",
        description=(
            "Reference-free audio captioning evaluation: sliding-window CLAP"
            " similarity, distribution-aware judge scores, and their fusion."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score one (audio, caption) pair")
    _add_common(p)
    p.add_argument("--audio-id", required=True, help="clip id known to the backends")
    p.add_argument("--duration", type=float, required=True, help="clip duration in seconds")
    p.add_argument("--caption", required=True, help="caption text to score")
    p.add_argument("--caption-id", default="c0", help="caption id (default c0)")

    p = sub.add_parser("evaluate", help="run the configured metrics over a dataset")
    _add_common(p)

    p = sub.add_parser("sweep-alpha", help="accuracy across the mixing-weight grid")
    _add_common(p)

    p = sub.add_parser("tie-report", help="tie statistics of judges' printed scores")
    _add_common(p)

    p = sub.add_parser("validate", help="validate interchange JSONL files")
    p.add_argument("paths", nargs="+", metavar="PATH")

    p = sub.add_parser("export-prompts", help="write the judge prompts for a dataset")
    _add_common(p)
    p.add_argument("--prompts-out", required=True, metavar="PATH", help="output JSONL")

    p = sub.add_parser("cache-gc", help="evict least-recently-used cache entries")
    p.add_argument("--cache", metavar="DIR", help="cache directory override")
    p.add_argument("--max-bytes", type=int, required=True, help="size budget to enforce")
    return parser


def _load(args: argparse.Namespace):
    cfg = load_config(args.config)
    return apply_overrides(
        cfg,
        dataset=args.dataset,
        out=args.out,
        alpha=args.alpha,
        pooling=args.pooling,
        tie_policy=args.tie_policy,
        cache=args.cache,
    )


def _dry_run_check(cfg, need_dataset: bool) -> int:
    models = sorted(cfg.clap_models) + sorted(cfg.lalm_models)
    print(f"config ok: models {', '.join(models)}")
    if cfg.dataset_path:
        kind, items = load_dataset(cfg.dataset_path)
        print(f"dataset ok: {cfg.dataset_path} ({kind}, n={len(items)})")
    elif need_dataset:
        raise ConfigError("no dataset configured (set [dataset] path or pass --dataset)")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    cfg = _load(args)
    if args.dry_run:
        return _dry_run_check(cfg, need_dataset=False)
    from .pipeline import make_fetcher

    fetcher = make_fetcher(cfg, use_cache=not args.no_cache)
    bundles = run_score(
        cfg,
        audio_id=args.audio_id,
        duration_s=args.duration,
        caption_text=args.caption,
        caption_id=args.caption_id,
        fetcher=fetcher,
    )
    for bundle in bundles:
        print(dumps_record(bundle))
    return 0


def _print_report_paths(paths) -> None:
    for path in paths:
        print(f"wrote {path}")


def cmd_evaluate(args: argparse.Namespace, sweep_only: bool = False) -> int:
    cfg = _load(args)
    if args.dry_run:
        return _dry_run_check(cfg, need_dataset=True)
    from .pipeline import make_fetcher

    fetcher = make_fetcher(cfg, use_cache=not args.no_cache)
    try:
        _, paths = run_evaluate(cfg, fetcher=fetcher, sweep_only=sweep_only)
    except PartialEvaluationError:
        # the report is already on disk; surface what was written, then the error
        _print_report_paths(sorted(Path(cfg.output_dir).glob("*")))
        raise
    _print_report_paths(paths)
    return 0


def cmd_tie_report(args: argparse.Namespace) -> int:
    cfg = _load(args)
    if args.dry_run:
        return _dry_run_check(cfg, need_dataset=True)
    from .pipeline import make_fetcher

    fetcher = make_fetcher(cfg, use_cache=not args.no_cache)
    _, paths = run_tie_report(cfg, fetcher=fetcher)
    _print_report_paths(paths)
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    total = 0
    problems = 0
    for path in args.paths:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                lines = fh.readlines()
        except OSError as exc:
            print(f"{path}: unreadable: {exc}", file=sys.stderr)
            problems += 1
            continue
        count = 0
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            count += 1
            try:
                rec = loads_record(line)
            except DataError as exc:
                print(f"{path}:{lineno}: {exc}", file=sys.stderr)
                problems += 1
                continue
            for violation in validate_record(rec):
                print(f"{path}:{lineno}: {violation}", file=sys.stderr)
                problems += 1
        total += count
        if problems == 0:
            print(f"{path}: ok ({count} records)")
    if problems:
        raise DataError(f"{problems} violation(s) across {len(args.paths)} file(s)")
    return 0


def cmd_export_prompts(args: argparse.Namespace) -> int:
    cfg = _load(args)
    if not cfg.dataset_path:
        raise ConfigError("no dataset configured (set [dataset] path or pass --dataset)")
    kind, items = load_dataset(cfg.dataset_path)
    rows = collect_prompts(cfg, items)
    if args.dry_run:
        print(f"would write {len(rows)} prompts to {args.prompts_out}")
        return 0
    out = Path(args.prompts_out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")
    print(f"wrote {len(rows)} prompts to {out}")
    return 0


def cmd_cache_gc(args: argparse.Namespace) -> int:
    cache = RecordCache(resolve_cache_dir(args.cache))
    if args.max_bytes < 0:
        raise ConfigError("--max-bytes must be >= 0")
    summary = cache.gc(args.max_bytes)
    print(
        f"evicted {summary.evicted} entries ({summary.evicted_bytes} bytes),"
        f" kept {summary.kept} ({summary.remaining_bytes} bytes)"
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "score":
            return cmd_score(args)
        if args.command == "evaluate":
            return cmd_evaluate(args)
        if args.command == "sweep-alpha":
            return cmd_evaluate(args, sweep_only=True)
        if args.command == "tie-report":
            return cmd_tie_report(args)
        if args.command == "validate":
            return cmd_validate(args)
        if args.command == "export-prompts":
            return cmd_export_prompts(args)
        if args.command == "cache-gc":
            return cmd_cache_gc(args)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PartialEvaluationError as exc:
        print(f"partial evaluation: {exc}", file=sys.stderr)
        for failure in exc.failures[:20]:
            print(f"  {failure}", file=sys.stderr)
        return 5
    except (DataError, DomainError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
