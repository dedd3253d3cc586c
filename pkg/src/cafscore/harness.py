"""Benchmark harness: accuracy tables, tie reports, sweeps, and report files.

Preference datasets measure how often a metric reproduces the human choice
between two captions for the same clip; rating datasets measure correlation
against scalar human ratings.  All aggregation is deterministic: reruns over
the same inputs produce byte-identical report files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from .errors import DataError, DomainError
from .fusion import caf_score
from .records import (
    PAIR_TYPES,
    PreferenceItem,
    RatingItem,
    RawScore,
    ScoreBundle,
    dumps_record,
    read_records,
)
from .stats import kendall_tau, pearson, spearman

TIE_POLICIES = ("zero_credit", "half_credit")


def load_preference_dataset(path: str | Path) -> list[PreferenceItem]:
    items = read_records(path, expect_kind="pref_item")
    if not items:
        raise DataError(f"{path}: empty dataset")
    return items  # type: ignore[return-value]


def load_rating_dataset(path: str | Path) -> list[RatingItem]:
    items = read_records(path, expect_kind="rating_item")
    if not items:
        raise DataError(f"{path}: empty dataset")
    return items  # type: ignore[return-value]


def load_dataset(path: str | Path) -> tuple[str, list[PreferenceItem] | list[RatingItem]]:
    """Load a dataset file, sniffing whether it holds preference or rating items."""

    records = read_records(path)
    if not records:
        raise DataError(f"{path}: empty dataset")
    kinds = {type(r) for r in records}
    if kinds == {PreferenceItem}:
        return "preference", records  # type: ignore[return-value]
    if kinds == {RatingItem}:
        return "rating", records  # type: ignore[return-value]
    raise DataError(f"{path}: expected a single dataset kind, got mixed or non-dataset records")


def reconstruct_preference(score_a: float, score_b: float) -> str:
    """Which caption a metric prefers: 'A', 'B', or 'Tie' on exact equality."""

    for name, v in (("score_a", score_a), ("score_b", score_b)):
        if not (isinstance(v, (int, float)) and math.isfinite(v)):
            raise DomainError(f"{name} must be a finite real, got {v!r}")
    if score_a > score_b:
        return "A"
    if score_a < score_b:
        return "B"
    return "Tie"


@dataclass(frozen=True)
class TypeAccuracy:
    correct: float
    total: int
    # None when no pairs of this type exist
    accuracy_pct: float | None


@dataclass(frozen=True)
class SubsetAccuracy:
    subset: str
    per_type: dict[str, TypeAccuracy]
    correct: float
    total: int
    accuracy_pct: float


@dataclass(frozen=True)
class PreferenceAccuracy:
    """Per-subset, per-pair-type accuracy; overall is weighted by pair count."""

    subsets: tuple[SubsetAccuracy, ...]
    correct: float
    total: int
    accuracy_pct: float


def _credit(pred: str, human_choice: str, tie_policy: str) -> float:
    if pred == human_choice:
        return 1.0
    if pred == "Tie" and tie_policy == "half_credit":
        return 0.5
    return 0.0


def pairwise_accuracy(
    items: Sequence[PreferenceItem],
    score_pairs: Sequence[tuple[float, float] | None],
    tie_policy: str = "zero_credit",
) -> PreferenceAccuracy:
    """Accuracy of reconstructed preferences against human choices.

    ``score_pairs[i]`` holds (score_a, score_b) for ``items[i]``.  A missing
    pair is an error: callers decide up front which items are scorable.
    Ties earn zero credit by default, half under ``half_credit``.
    """

    if tie_policy not in TIE_POLICIES:
        raise DomainError(f"unknown tie policy: {tie_policy!r}")
    if len(items) != len(score_pairs):
        raise DomainError(f"{len(items)} items but {len(score_pairs)} score pairs")
    if not items:
        raise DomainError("no items to evaluate")
    missing = [
        items[i].audio.id + "/" + items[i].caption_a.id
        for i, pair in enumerate(score_pairs)
        if pair is None or pair[0] is None or pair[1] is None
    ]
    if missing:
        raise DataError("missing scores for items: " + ", ".join(missing[:10]))

    cells: dict[str, dict[str, list[float]]] = {}
    for item, pair in zip(items, score_pairs):
        pred = reconstruct_preference(pair[0], pair[1])
        c = _credit(pred, item.human_choice, tie_policy)
        sub = cells.setdefault(item.subset, {})
        cell = sub.setdefault(item.pair_type, [0.0, 0])
        cell[0] += c
        cell[1] += 1

    subsets: list[SubsetAccuracy] = []
    grand_correct = 0.0
    grand_total = 0
    for subset in sorted(cells):
        per_type: dict[str, TypeAccuracy] = {}
        sub_correct = 0.0
        sub_total = 0
        for pt in PAIR_TYPES:
            correct, total = cells[subset].get(pt, [0.0, 0])
            per_type[pt] = TypeAccuracy(
                correct=correct,
                total=total,
                accuracy_pct=(100.0 * correct / total) if total else None,
            )
            sub_correct += correct
            sub_total += total
        subsets.append(
            SubsetAccuracy(
                subset=subset,
                per_type=per_type,
                correct=sub_correct,
                total=sub_total,
                accuracy_pct=100.0 * sub_correct / sub_total,
            )
        )
        grand_correct += sub_correct
        grand_total += sub_total
    return PreferenceAccuracy(
        subsets=tuple(subsets),
        correct=grand_correct,
        total=grand_total,
        accuracy_pct=100.0 * grand_correct / grand_total,
    )


@dataclass(frozen=True)
class TieReport:
    model_id: str
    tie_count: int
    pair_count: int
    excluded_pairs: int
    # None when no pair had two parseable scores
    tie_rate: float | None
    tie_value_histogram: dict[float, int] = field(default_factory=dict)


def tie_report(
    model_id: str, score_pairs: Sequence[tuple[RawScore, RawScore]]
) -> TieReport:
    """Tie statistics of printed scores over a preference dataset.

    A pair counts when both sides parsed; it ties when the parsed values are
    exactly equal.  Pairs with an unparseable side are excluded and counted
    separately.
    """

    if not score_pairs:
        raise DomainError("no score pairs")
    tie_count = 0
    pair_count = 0
    excluded = 0
    hist: dict[float, int] = {}
    for ra, rb in score_pairs:
        if ra.value is None or rb.value is None:
            excluded += 1
            continue
        pair_count += 1
        if ra.value == rb.value:
            tie_count += 1
            hist[ra.value] = hist.get(ra.value, 0) + 1
    return TieReport(
        model_id=model_id,
        tie_count=tie_count,
        pair_count=pair_count,
        excluded_pairs=excluded,
        tie_rate=(tie_count / pair_count) if pair_count else None,
        tie_value_histogram=dict(sorted(hist.items())),
    )


@dataclass(frozen=True)
class CorrelationReport:
    n: int
    lcc: float
    srcc: float
    ktau: float


def correlation_report(xs: Sequence[float], ys: Sequence[float]) -> CorrelationReport:
    """Linear, rank, and tie-adjusted ordinal correlation of scores vs ratings."""

    return CorrelationReport(
        n=len(xs), lcc=pearson(xs, ys), srcc=spearman(xs, ys), ktau=kendall_tau(xs, ys)
    )


BundlePair = tuple[ScoreBundle, ScoreBundle]


def _component_scores(bundle: ScoreBundle, strategy: str) -> tuple[float, float]:
    s = bundle.s_clap_by_strategy.get(strategy)
    if s is None:
        raise DataError(
            f"bundle {bundle.audio_id}/{bundle.caption_id}: no '{strategy}' pooled score"
        )
    if bundle.fleur is None:
        raise DataError(f"bundle {bundle.audio_id}/{bundle.caption_id}: no fleur score")
    return s, bundle.fleur


def alpha_sweep(
    items: Sequence[PreferenceItem],
    bundle_pairs: Sequence[BundlePair],
    grid: Iterable[float],
    strategy: str = "max",
    tie_policy: str = "zero_credit",
) -> list[tuple[float, float]]:
    """Overall accuracy of the fused score at each mixing weight in ``grid``.

    The endpoints coincide with the component metrics: rows at 0 and 1 equal
    the judge-only and similarity-only accuracies bit for bit.
    """

    comps = [
        (_component_scores(a, strategy), _component_scores(b, strategy))
        for a, b in bundle_pairs
    ]
    rows: list[tuple[float, float]] = []
    for alpha in grid:
        a = float(alpha)
        if not 0.0 <= a <= 1.0:
            raise DomainError(f"alpha must be in [0, 1], got {alpha!r}")
        pairs = [
            (caf_score(sa, fa, a), caf_score(sb, fb, a)) for (sa, fa), (sb, fb) in comps
        ]
        acc = pairwise_accuracy(items, pairs, tie_policy)
        rows.append((a, acc.accuracy_pct))
    return rows


def adaptive_accuracy(
    items: Sequence[PreferenceItem],
    bundle_pairs: Sequence[BundlePair],
    strategy: str = "max",
    tie_policy: str = "zero_credit",
) -> float | None:
    """Accuracy with per-caption entropy-adaptive mixing; None without entropy data."""

    pairs: list[tuple[float, float]] = []
    for a, b in bundle_pairs:
        if a.entropy is None or b.entropy is None:
            return None
        (sa, fa), (sb, fb) = _component_scores(a, strategy), _component_scores(b, strategy)
        aa = min(1.0, max(0.0, a.entropy))
        ab = min(1.0, max(0.0, b.entropy))
        pairs.append((caf_score(sa, fa, aa), caf_score(sb, fb, ab)))
    return pairwise_accuracy(items, pairs, tie_policy).accuracy_pct


def pooling_ablation(
    items: Sequence[PreferenceItem],
    bundle_pairs: Sequence[BundlePair],
    alpha: float,
    tie_policy: str = "zero_credit",
) -> dict[str, PreferenceAccuracy]:
    """Accuracy per pooling strategy shared by every bundle.

    When all bundles carry a judge score the fused metric is ablated;
    otherwise the pooled similarity score is evaluated on its own.
    """

    if not bundle_pairs:
        raise DomainError("no bundles")
    shared: set[str] | None = None
    fused = True
    for a, b in bundle_pairs:
        for bundle in (a, b):
            keys = set(bundle.s_clap_by_strategy)
            shared = keys if shared is None else shared & keys
            if bundle.fleur is None:
                fused = False
    if not shared:
        raise DataError("bundles share no pooling strategy")
    out: dict[str, PreferenceAccuracy] = {}
    for strategy in sorted(shared):
        pairs = []
        for a, b in bundle_pairs:
            if fused:
                (sa, fa), (sb, fb) = (
                    _component_scores(a, strategy),
                    _component_scores(b, strategy),
                )
                pairs.append((caf_score(sa, fa, alpha), caf_score(sb, fb, alpha)))
            else:
                pairs.append(
                    (a.s_clap_by_strategy[strategy], b.s_clap_by_strategy[strategy])
                )
        out[strategy] = pairwise_accuracy(items, pairs, tie_policy)
    return out


@dataclass
class EvaluationResults:
    """Everything emit_report needs to write the report files."""

    fingerprint: str
    fingerprint_fields: dict[str, Any]
    dataset_path: str
    dataset_kind: str
    n_items: int
    accuracy_rows: list[tuple[str, PreferenceAccuracy]] = field(default_factory=list)
    correlation_rows: list[tuple[str, CorrelationReport]] = field(default_factory=list)
    sweep_rows: list[tuple[str, float | None]] = field(default_factory=list)
    tie_rows: list[TieReport] = field(default_factory=list)
    bundles: list[ScoreBundle] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)


def _fmt_pct(v: float | None) -> str:
    return "-" if v is None else f"{v:.2f}%"


def _fmt_count(v: float) -> str:
    return f"{v:g}"


def _accuracy_lines(label: str, acc: PreferenceAccuracy) -> list[str]:
    lines = [f"[{label}]"]
    for sub in acc.subsets:
        cells = " | ".join(
            f"{pt} {_fmt_count(ta.correct)}/{ta.total} ({_fmt_pct(ta.accuracy_pct)})"
            for pt, ta in sub.per_type.items()
        )
        name = sub.subset or "(all)"
        lines.append(
            f"  subset {name}: {cells} | total {_fmt_count(sub.correct)}/{sub.total}"
            f" ({_fmt_pct(sub.accuracy_pct)})"
        )
    lines.append(
        f"  overall: {_fmt_count(acc.correct)}/{acc.total} ({_fmt_pct(acc.accuracy_pct)})"
    )
    return lines


def _accuracy_json(label: str, acc: PreferenceAccuracy) -> dict[str, Any]:
    return {
        "kind": "result_accuracy",
        "label": label,
        "overall": {
            "correct": acc.correct,
            "total": acc.total,
            "accuracy_pct": acc.accuracy_pct,
        },
        "subsets": [
            {
                "subset": sub.subset,
                "per_type": {
                    pt: {
                        "correct": ta.correct,
                        "total": ta.total,
                        "accuracy_pct": ta.accuracy_pct,
                    }
                    for pt, ta in sub.per_type.items()
                },
                "correct": sub.correct,
                "total": sub.total,
                "accuracy_pct": sub.accuracy_pct,
            }
            for sub in acc.subsets
        ],
    }


def emit_report(results: EvaluationResults, out_dir: str | Path) -> list[Path]:
    """Write report.txt, results.jsonl, and sweep/ties CSVs when applicable.

    Output is a pure function of ``results``: no timestamps, no environment
    details, stable ordering throughout.
    """

    if not (
        results.accuracy_rows
        or results.correlation_rows
        or results.sweep_rows
        or results.tie_rows
        or results.bundles
    ):
        raise DataError("nothing to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    lines: list[str] = [
        f"run fingerprint: {results.fingerprint}",
        f"dataset: {results.dataset_path} ({results.dataset_kind}, n={results.n_items})",
    ]
    for key in sorted(results.fingerprint_fields):
        lines.append(f"  {key}: {results.fingerprint_fields[key]}")
    if results.accuracy_rows:
        lines.append("")
        lines.append("== accuracy ==")
        for label, acc in results.accuracy_rows:
            lines.extend(_accuracy_lines(label, acc))
    if results.correlation_rows:
        lines.append("")
        lines.append("== correlations ==")
        for label, rep in results.correlation_rows:
            lines.append(
                f"[{label}] n={rep.n} lcc={rep.lcc:.4f} srcc={rep.srcc:.4f} ktau={rep.ktau:.4f}"
            )
    if results.sweep_rows:
        lines.append("")
        lines.append("== alpha sweep ==")
        for label, pct in results.sweep_rows:
            lines.append(f"alpha {label}: {_fmt_pct(pct)}")
    if results.tie_rows:
        lines.append("")
        lines.append("== ties ==")
        for rep in results.tie_rows:
            rate = "-" if rep.tie_rate is None else f"{100.0 * rep.tie_rate:.2f}%"
            top = sorted(rep.tie_value_histogram.items(), key=lambda kv: (-kv[1], kv[0]))
            shown = ", ".join(f"{v!r} x{c}" for v, c in top[:5])
            lines.append(
                f"{rep.model_id}: ties {rep.tie_count}/{rep.pair_count} ({rate}),"
                f" excluded {rep.excluded_pairs}"
                + (f"; top values: {shown}" if shown else "")
            )
    lines.append("")
    if results.failures:
        lines.append("== failures ==")
        lines.extend(f"  {f}" for f in results.failures)
        lines.append("")

    report_path = out / "report.txt"
    report_path.write_text("\n".join(lines), encoding="utf-8", newline="\n")
    written.append(report_path)

    rows: list[str] = [
        json.dumps(
            {
                "kind": "run_info",
                "fingerprint": results.fingerprint,
                "dataset_path": results.dataset_path,
                "dataset_kind": results.dataset_kind,
                "n_items": results.n_items,
                "fields": results.fingerprint_fields,
                "failures": results.failures,
            },
            ensure_ascii=False,
            separators=(",", ":"),
            sort_keys=True,
        )
    ]
    rows.extend(dumps_record(b) for b in results.bundles)
    for label, acc in results.accuracy_rows:
        rows.append(
            json.dumps(_accuracy_json(label, acc), ensure_ascii=False, separators=(",", ":"))
        )
    for label, rep in results.correlation_rows:
        rows.append(
            json.dumps(
                {
                    "kind": "result_correlation",
                    "label": label,
                    "n": rep.n,
                    "lcc": rep.lcc,
                    "srcc": rep.srcc,
                    "ktau": rep.ktau,
                },
                ensure_ascii=False,
                separators=(",", ":"),
            )
        )
    for label, pct in results.sweep_rows:
        rows.append(
            json.dumps(
                {"kind": "result_sweep", "alpha": label, "overall_accuracy_pct": pct},
                ensure_ascii=False,
                separators=(",", ":"),
            )
        )
    for rep in results.tie_rows:
        rows.append(
            json.dumps(
                {
                    "kind": "result_ties",
                    "model_id": rep.model_id,
                    "tie_count": rep.tie_count,
                    "pair_count": rep.pair_count,
                    "excluded_pairs": rep.excluded_pairs,
                    "tie_rate": rep.tie_rate,
                    "tie_value_histogram": {repr(k): v for k, v in rep.tie_value_histogram.items()},
                },
                ensure_ascii=False,
                separators=(",", ":"),
            )
        )
    results_path = out / "results.jsonl"
    results_path.write_text("\n".join(rows) + "\n", encoding="utf-8", newline="\n")
    written.append(results_path)

    if results.sweep_rows:
        csv_lines = ["alpha,overall_accuracy"]
        csv_lines.extend(
            f"{label},{'' if pct is None else repr(pct)}" for label, pct in results.sweep_rows
        )
        sweep_path = out / "sweep.csv"
        sweep_path.write_text("\n".join(csv_lines) + "\n", encoding="utf-8", newline="\n")
        written.append(sweep_path)

    if results.tie_rows:
        csv_lines = ["model_id,value,count"]
        for rep in results.tie_rows:
            for value, count in rep.tie_value_histogram.items():
                csv_lines.append(f"{rep.model_id},{value!r},{count}")
        ties_path = out / "ties.csv"
        ties_path.write_text("\n".join(csv_lines) + "\n", encoding="utf-8", newline="\n")
        written.append(ties_path)
    return written
