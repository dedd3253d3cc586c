"""Scoring orchestration: configs + backends + datasets -> bundles and reports."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from .backends import (
    Backend,
    Fetcher,
    RecordCache,
    build_backend,
    cache_digest,
    canonical_json,
    file_sha256,
    resolve_cache_dir,
)
from .config import RunConfig
from .errors import (
    BackendError,
    ConfigError,
    DataError,
    DomainError,
    ExtractionError,
    PartialEvaluationError,
)
from .fleur import (
    build_caption_prompt,
    build_tta_prompt,
    distribution_entropy,
    extract_digit_distributions,
    fleur_score,
    parse_raw_score,
)
from .fusion import caf_score
from .harness import (
    EvaluationResults,
    PreferenceItem,
    RatingItem,
    adaptive_accuracy,
    alpha_sweep,
    correlation_report,
    emit_report,
    load_dataset,
    pairwise_accuracy,
    tie_report,
)
from .records import (
    AudioClipRef,
    AudioWindowSubject,
    CaptionCandidate,
    CaptionSubject,
    RawScore,
    ScoreBundle,
)
from .windowing import WindowingConfig, generate_windows, s_clap_score, truncated_window

Combo = tuple[str | None, str | None]  # (clap model name, lalm model name)


def build_backends(cfg: RunConfig) -> dict[str, Backend]:
    """Instantiate every backend referenced by a configured model."""

    used = {m.backend for m in cfg.clap_models.values()}
    used |= {m.backend for m in cfg.lalm_models.values()}
    return {name: build_backend(cfg.backends[name]) for name in sorted(used)}


def make_fetcher(cfg: RunConfig, use_cache: bool = True) -> Fetcher:
    cache = RecordCache(resolve_cache_dir(cfg.cache_dir)) if use_cache else None
    return Fetcher(cache)


def score_caption(
    cfg: RunConfig,
    backends: dict[str, Backend],
    fetcher: Fetcher,
    audio: AudioClipRef,
    caption: CaptionCandidate,
) -> dict[Combo, ScoreBundle]:
    """Compute every configured metric for one (audio, caption) pair.

    Returns one bundle per model combination.  A trace without an extractable
    digit distribution yields a bundle whose fleur and entropy are absent.
    """

    clap_parts: dict[str, tuple[str, dict[str, float]]] = {}
    for name in sorted(cfg.clap_models):
        m = cfg.clap_models[name]
        backend = backends[m.backend]
        text_emb = fetcher.fetch_embedding(backend, CaptionSubject(caption.id, caption.text))
        if cfg.pooling == "none":
            windows = [truncated_window(audio.duration_s, m.window_len_s)]
        else:
            windows = generate_windows(
                audio.duration_s, WindowingConfig(m.window_len_s, m.hop_s)
            )
        window_embs = [
            fetcher.fetch_embedding(backend, AudioWindowSubject(audio.id, w)) for w in windows
        ]
        score = s_clap_score(text_emb, window_embs, cfg.pooling)
        clap_parts[name] = (m.model_id, {cfg.pooling: score})

    lalm_parts: dict[str, tuple[str, float | None, float | None, float | None]] = {}
    for name in sorted(cfg.lalm_models):
        m = cfg.lalm_models[name]
        backend = backends[m.backend]
        if m.prompt == "caption":
            prompt = build_caption_prompt(caption.text)
        else:
            prompt = build_tta_prompt(caption.text)
        trace = fetcher.fetch_trace(backend, prompt, m.template_version, m.top_logprobs_k)
        raw = parse_raw_score(trace.greedy_text)
        fleur = entropy = None
        try:
            dist = extract_digit_distributions(trace)
        except ExtractionError:
            dist = None
        if dist is not None:
            fleur = fleur_score(dist)
            entropy = distribution_entropy(dist, cfg.entropy_mode)
        lalm_parts[name] = (m.model_id, raw.value, fleur, entropy)

    alphas = set(cfg.alpha_grid)
    if cfg.alpha.kind == "fixed":
        alphas.add(cfg.alpha.alpha)

    out: dict[Combo, ScoreBundle] = {}
    if clap_parts and lalm_parts:
        for cname, (cid, sbs) in clap_parts.items():
            for lname, (lid, raw_v, fleur, entropy) in lalm_parts.items():
                caf = {}
                if fleur is not None:
                    s = sbs[cfg.pooling]
                    caf = {a: caf_score(s, fleur, a) for a in sorted(alphas)}
                out[(cname, lname)] = ScoreBundle(
                    audio_id=audio.id,
                    caption_id=caption.id,
                    clap_model_id=cid,
                    lalm_model_id=lid,
                    s_clap_by_strategy=dict(sbs),
                    fleur=fleur,
                    raw=raw_v,
                    entropy=entropy,
                    caf_by_alpha=caf,
                )
    elif clap_parts:
        for cname, (cid, sbs) in clap_parts.items():
            out[(cname, None)] = ScoreBundle(
                audio_id=audio.id,
                caption_id=caption.id,
                clap_model_id=cid,
                s_clap_by_strategy=dict(sbs),
            )
    else:
        for lname, (lid, raw_v, fleur, entropy) in lalm_parts.items():
            out[(None, lname)] = ScoreBundle(
                audio_id=audio.id,
                caption_id=caption.id,
                lalm_model_id=lid,
                fleur=fleur,
                raw=raw_v,
                entropy=entropy,
            )
    return out


@dataclass
class ScoredPreferences:
    items: list[PreferenceItem]
    # per combo: aligned (bundle_a, bundle_b) or None for failed items
    pairs: dict[Combo, list[tuple[ScoreBundle, ScoreBundle] | None]]
    failures: list[str]
    bundles: list[ScoreBundle]


def score_preference_items(
    cfg: RunConfig,
    backends: dict[str, Backend],
    fetcher: Fetcher,
    items: Sequence[PreferenceItem],
) -> ScoredPreferences:
    pairs: dict[Combo, list[tuple[ScoreBundle, ScoreBundle] | None]] = {}
    failures: list[str] = []
    bundles: list[ScoreBundle] = []
    combos: list[Combo] | None = None
    for idx, item in enumerate(items):
        try:
            by_combo_a = score_caption(cfg, backends, fetcher, item.audio, item.caption_a)
            by_combo_b = score_caption(cfg, backends, fetcher, item.audio, item.caption_b)
        except (BackendError, DataError, DomainError) as exc:
            failures.append(
                f"item {idx} ({item.audio.id}: {item.caption_a.id} vs {item.caption_b.id}): {exc}"
            )
            if combos is not None:
                for lst in pairs.values():
                    lst.append(None)
            continue
        if combos is None:
            combos = sorted(by_combo_a, key=lambda c: (c[0] or "", c[1] or ""))
            for combo in combos:
                pairs[combo] = [None] * idx
        for combo in combos:
            pairs[combo].append((by_combo_a[combo], by_combo_b[combo]))
            bundles.append(by_combo_a[combo])
            bundles.append(by_combo_b[combo])
    if combos is None and items:
        raise BackendError("no item could be scored: " + (failures[0] if failures else ""))
    return ScoredPreferences(
        items=list(items), pairs=pairs, failures=failures, bundles=bundles
    )


def _combo_label(cfg: RunConfig, combo: Combo) -> str:
    cname, lname = combo
    if cname and lname:
        return f"{cname}+{lname}"
    return cname or lname or "?"


def _present(
    items: Sequence[PreferenceItem],
    aligned: Sequence[tuple[ScoreBundle, ScoreBundle] | None],
    want,
    failures: list[str],
    row_label: str,
) -> tuple[list[PreferenceItem], list[tuple[Any, Any]]]:
    """Filter to items where ``want(bundle)`` yields a score for both sides."""

    kept_items: list[PreferenceItem] = []
    kept_scores: list[tuple[Any, Any]] = []
    for item, pair in zip(items, aligned):
        if pair is None:
            continue
        va, vb = want(pair[0]), want(pair[1])
        if va is None or vb is None:
            failures.append(
                f"{row_label}: item {item.audio.id}/{item.caption_a.id}"
                f" vs {item.caption_b.id} not scorable"
            )
            continue
        kept_items.append(item)
        kept_scores.append((va, vb))
    return kept_items, kept_scores


def _fingerprint(cfg: RunConfig, dataset_digest: str, used_keys) -> tuple[str, dict[str, Any]]:
    fields = dict(cfg.resolved_fields())
    fields["dataset_sha256"] = dataset_digest
    digest = hashlib.sha256(canonical_json(fields).encode("utf-8")).hexdigest()[:12]
    fields["cache_keys_digest"] = cache_digest(used_keys)[:12]
    return digest, fields


def run_evaluate(
    cfg: RunConfig,
    backends: dict[str, Backend] | None = None,
    fetcher: Fetcher | None = None,
    sweep_only: bool = False,
) -> tuple[EvaluationResults, list[Path]]:
    """Evaluate the configured metrics over the configured dataset.

    Writes the report files and returns the results.  Raises
    PartialEvaluationError after writing when any item went unscored.
    """

    if not cfg.dataset_path:
        raise ConfigError("no dataset configured (set [dataset] path or pass --dataset)")
    if backends is None:
        backends = build_backends(cfg)
    if fetcher is None:
        fetcher = make_fetcher(cfg)
    kind, items = load_dataset(cfg.dataset_path)
    if sweep_only and kind != "preference":
        raise DataError("alpha sweep needs a preference dataset")

    if kind == "preference":
        results = _evaluate_preferences(cfg, backends, fetcher, items, sweep_only)
    else:
        results = _evaluate_ratings(cfg, backends, fetcher, items)
    paths = emit_report(results, cfg.output_dir)
    if results.failures:
        raise PartialEvaluationError(results.failures)
    return results, paths


def _evaluate_preferences(
    cfg: RunConfig,
    backends: dict[str, Backend],
    fetcher: Fetcher,
    items: list[PreferenceItem],
    sweep_only: bool,
) -> EvaluationResults:
    scored = score_preference_items(cfg, backends, fetcher, items)
    failures = list(scored.failures)
    accuracy_rows: list[tuple[str, Any]] = []
    sweep_rows: list[tuple[str, float | None]] = []

    if sweep_only:
        if len(cfg.clap_models) != 1 or len(cfg.lalm_models) != 1:
            raise ConfigError(
                "alpha sweep needs exactly one clap model and one lalm model configured"
            )
        combo = next(iter(scored.pairs))
        aligned = scored.pairs[combo]
        kept_items, kept_pairs = [], []
        for item, pair in zip(scored.items, aligned):
            if pair is None:
                continue
            if pair[0].fleur is None or pair[1].fleur is None:
                failures.append(
                    f"sweep: item {item.audio.id}/{item.caption_a.id}"
                    f" vs {item.caption_b.id} has no digit distribution"
                )
                continue
            kept_items.append(item)
            kept_pairs.append(pair)
        if not kept_items:
            raise DataError("alpha sweep: no fully scored items")
        grid = sorted(set(cfg.alpha_grid))
        rows = alpha_sweep(kept_items, kept_pairs, grid, cfg.pooling, cfg.tie_policy)
        sweep_rows = [(repr(a), pct) for a, pct in rows]
        adaptive = adaptive_accuracy(kept_items, kept_pairs, cfg.pooling, cfg.tie_policy)
        if adaptive is not None:
            sweep_rows.append(("adaptive", adaptive))
    else:
        seen_clap: set[str] = set()
        seen_lalm: set[str] = set()
        for combo in sorted(scored.pairs, key=lambda c: (c[0] or "", c[1] or "")):
            cname, lname = combo
            aligned = scored.pairs[combo]
            if cname and cname not in seen_clap:
                seen_clap.add(cname)
                label = f"s_clap[{cname}|{cfg.pooling}]"
                kept, vals = _present(
                    scored.items,
                    aligned,
                    lambda b: b.s_clap_by_strategy.get(cfg.pooling),
                    failures,
                    label,
                )
                if kept:
                    accuracy_rows.append(
                        (label, pairwise_accuracy(kept, vals, cfg.tie_policy))
                    )
            if lname and lname not in seen_lalm:
                seen_lalm.add(lname)
                label = f"raw[{lname}]"
                kept, vals = _present(scored.items, aligned, lambda b: b.raw, failures, label)
                if kept:
                    accuracy_rows.append(
                        (label, pairwise_accuracy(kept, vals, cfg.tie_policy))
                    )
                label = f"fleur[{lname}]"
                kept, vals = _present(
                    scored.items, aligned, lambda b: b.fleur, failures, label
                )
                if kept:
                    accuracy_rows.append(
                        (label, pairwise_accuracy(kept, vals, cfg.tie_policy))
                    )
            if cname and lname:
                label = f"caf[{_combo_label(cfg, combo)}|alpha={cfg.alpha_label()}]"

                if cfg.alpha.kind == "adaptive":

                    def fused(b: ScoreBundle):
                        if b.fleur is None or b.entropy is None:
                            return None
                        a = min(1.0, max(0.0, b.entropy))
                        return caf_score(b.s_clap_by_strategy[cfg.pooling], b.fleur, a)

                else:
                    alpha = cfg.alpha.alpha

                    def fused(b: ScoreBundle):
                        if b.fleur is None:
                            return None
                        return b.caf_by_alpha.get(
                            alpha, caf_score(b.s_clap_by_strategy[cfg.pooling], b.fleur, alpha)
                        )

                kept, vals = _present(scored.items, aligned, fused, failures, label)
                if kept:
                    accuracy_rows.append(
                        (label, pairwise_accuracy(kept, vals, cfg.tie_policy))
                    )

    digest = file_sha256(cfg.dataset_path)
    fingerprint, fields = _fingerprint(cfg, digest, fetcher.used_keys)
    return EvaluationResults(
        fingerprint=fingerprint,
        fingerprint_fields=fields,
        dataset_path=str(cfg.dataset_path),
        dataset_kind="preference",
        n_items=len(items),
        accuracy_rows=accuracy_rows,
        sweep_rows=sweep_rows,
        bundles=scored.bundles,
        failures=failures,
    )


def _evaluate_ratings(
    cfg: RunConfig,
    backends: dict[str, Backend],
    fetcher: Fetcher,
    items: list[RatingItem],
) -> EvaluationResults:
    failures: list[str] = []
    per_combo: dict[Combo, list[ScoreBundle | None]] = {}
    bundles: list[ScoreBundle] = []
    combos: list[Combo] | None = None
    for idx, item in enumerate(items):
        try:
            by_combo = score_caption(cfg, backends, fetcher, item.audio, item.caption)
        except (BackendError, DataError, DomainError) as exc:
            failures.append(f"item {idx} ({item.audio.id}/{item.caption.id}): {exc}")
            if combos is not None:
                for lst in per_combo.values():
                    lst.append(None)
            continue
        if combos is None:
            combos = sorted(by_combo, key=lambda c: (c[0] or "", c[1] or ""))
            for combo in combos:
                per_combo[combo] = [None] * idx
        for combo in combos:
            per_combo[combo].append(by_combo[combo])
            bundles.append(by_combo[combo])
    if combos is None:
        raise BackendError("no item could be scored: " + (failures[0] if failures else ""))

    correlation_rows: list[tuple[str, Any]] = []

    def add_row(label: str, want) -> None:
        xs: list[float] = []
        ys: list[float] = []
        for item, bundle in zip(items, per_combo[combo]):
            if bundle is None:
                continue
            v = want(bundle)
            if v is None:
                failures.append(f"{label}: item {item.audio.id}/{item.caption.id} not scorable")
                continue
            xs.append(v)
            ys.append(item.human_rating)
        if len(xs) >= 2:
            correlation_rows.append((label, correlation_report(xs, ys)))
        elif xs or ys:
            failures.append(f"{label}: fewer than two scorable items")

    seen_clap: set[str] = set()
    seen_lalm: set[str] = set()
    for combo in combos:
        cname, lname = combo
        if cname and cname not in seen_clap:
            seen_clap.add(cname)
            add_row(
                f"s_clap[{cname}|{cfg.pooling}]",
                lambda b: b.s_clap_by_strategy.get(cfg.pooling),
            )
        if lname and lname not in seen_lalm:
            seen_lalm.add(lname)
            add_row(f"raw[{lname}]", lambda b: b.raw)
            add_row(f"fleur[{lname}]", lambda b: b.fleur)
        if cname and lname:
            label = f"caf[{_combo_label(cfg, combo)}|alpha={cfg.alpha_label()}]"
            if cfg.alpha.kind == "adaptive":

                def fused(b: ScoreBundle):
                    if b.fleur is None or b.entropy is None:
                        return None
                    a = min(1.0, max(0.0, b.entropy))
                    return caf_score(b.s_clap_by_strategy[cfg.pooling], b.fleur, a)

            else:
                alpha = cfg.alpha.alpha

                def fused(b: ScoreBundle):
                    if b.fleur is None:
                        return None
                    return b.caf_by_alpha.get(
                        alpha, caf_score(b.s_clap_by_strategy[cfg.pooling], b.fleur, alpha)
                    )

            add_row(label, fused)

    digest = file_sha256(cfg.dataset_path)
    fingerprint, fields = _fingerprint(cfg, digest, fetcher.used_keys)
    return EvaluationResults(
        fingerprint=fingerprint,
        fingerprint_fields=fields,
        dataset_path=str(cfg.dataset_path),
        dataset_kind="rating",
        n_items=len(items),
        correlation_rows=correlation_rows,
        bundles=bundles,
        failures=failures,
    )


def run_tie_report(
    cfg: RunConfig,
    backends: dict[str, Backend] | None = None,
    fetcher: Fetcher | None = None,
) -> tuple[EvaluationResults, list[Path]]:
    """Tie statistics of every configured judge's printed scores."""

    if not cfg.dataset_path:
        raise ConfigError("no dataset configured (set [dataset] path or pass --dataset)")
    if not cfg.lalm_models:
        raise ConfigError("tie report needs at least one [lalm_models] entry")
    if backends is None:
        backends = build_backends(cfg)
    if fetcher is None:
        fetcher = make_fetcher(cfg)
    kind, items = load_dataset(cfg.dataset_path)
    if kind != "preference":
        raise DataError("tie report needs a preference dataset")

    failures: list[str] = []
    tie_rows = []
    for name in sorted(cfg.lalm_models):
        m = cfg.lalm_models[name]
        backend = backends[m.backend]
        pairs: list[tuple[RawScore, RawScore]] = []
        for idx, item in enumerate(items):
            try:
                raws = []
                for caption in (item.caption_a, item.caption_b):
                    if m.prompt == "caption":
                        prompt = build_caption_prompt(caption.text)
                    else:
                        prompt = build_tta_prompt(caption.text)
                    trace = fetcher.fetch_trace(
                        backend, prompt, m.template_version, m.top_logprobs_k
                    )
                    raws.append(parse_raw_score(trace.greedy_text))
            except (BackendError, DataError, DomainError) as exc:
                failures.append(f"{name}: item {idx} ({item.audio.id}): {exc}")
                continue
            pairs.append((raws[0], raws[1]))
        if pairs:
            tie_rows.append(tie_report(m.model_id, pairs))
        else:
            failures.append(f"{name}: no items scorable")

    digest = file_sha256(cfg.dataset_path)
    fingerprint, fields = _fingerprint(cfg, digest, fetcher.used_keys)
    results = EvaluationResults(
        fingerprint=fingerprint,
        fingerprint_fields=fields,
        dataset_path=str(cfg.dataset_path),
        dataset_kind="preference",
        n_items=len(items),
        tie_rows=tie_rows,
        failures=failures,
    )
    paths = emit_report(results, cfg.output_dir)
    if failures:
        raise PartialEvaluationError(failures)
    return results, paths


def run_score(
    cfg: RunConfig,
    audio_id: str,
    duration_s: float,
    caption_text: str,
    caption_id: str = "c0",
    backends: dict[str, Backend] | None = None,
    fetcher: Fetcher | None = None,
) -> list[ScoreBundle]:
    """Score one ad-hoc (audio, caption) pair; returns bundles per model combo."""

    if duration_s <= 0:
        raise DataError(f"duration must be > 0, got {duration_s}")
    if not caption_text.strip():
        raise DataError("caption must be non-empty")
    if backends is None:
        backends = build_backends(cfg)
    if fetcher is None:
        fetcher = make_fetcher(cfg)
    audio = AudioClipRef(id=audio_id, duration_s=float(duration_s))
    caption = CaptionCandidate(id=caption_id, text=caption_text)
    by_combo = score_caption(cfg, backends, fetcher, audio, caption)
    return [by_combo[c] for c in sorted(by_combo, key=lambda c: (c[0] or "", c[1] or ""))]


def collect_prompts(cfg: RunConfig, items) -> list[dict[str, str]]:
    """Prompt sidecar rows for adapters: every unique judge prompt in a dataset."""

    from .backends import prompt_hash as hash_fn

    kinds: set[str] = set()
    for m in cfg.lalm_models.values():
        kinds.add(m.prompt)
    if not kinds:
        kinds = {"caption"}
    captions: dict[str, str] = {}
    for item in items:
        if isinstance(item, PreferenceItem):
            captions[item.caption_a.id] = item.caption_a.text
            captions[item.caption_b.id] = item.caption_b.text
        elif isinstance(item, RatingItem):
            captions[item.caption.id] = item.caption.text
    rows: list[dict[str, str]] = []
    seen: set[str] = set()
    for _, text in sorted(captions.items()):
        for kind in sorted(kinds):
            if kind == "caption":
                prompt = build_caption_prompt(text)
                version = "caption_v1"
            else:
                prompt = build_tta_prompt(text)
                version = "tta_v1"
            h = hash_fn(prompt)
            if h in seen:
                continue
            seen.add(h)
            rows.append({"prompt_hash": h, "template_version": version, "prompt": prompt})
    rows.sort(key=lambda r: r["prompt_hash"])
    return rows
