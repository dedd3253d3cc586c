"""Core value types and the JSON Lines interchange format.

Every record that crosses a process boundary (file backends, HTTP bodies,
result files, the cache) is one of six kinds, discriminated by a ``kind``
field:

    embedding   -> EmbeddingRecord
    digit_dist  -> DigitDistribution
    raw_gen     -> GenerationTrace
    score_bundle-> ScoreBundle
    pref_item   -> PreferenceItem
    rating_item -> RatingItem

Decoding is lenient: structurally well-formed JSON objects decode even when
field values are the wrong type, and ``validate_record`` reports every
violation instead of raising.  Unknown fields survive a decode/encode round
trip unchanged.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import DataError

PAIR_TYPES = ("HH", "HM", "MM")
CHOICES = ("A", "B")
ORIGINS = ("human", "machine", "unknown")
POOLING_NAMES = ("none", "avg", "max")

# Per-place probability mass may overshoot 1 by accumulated rounding only.
MASS_TOL = 1e-9
# Fused-score endpoints must reproduce the component scores to this tolerance.
ENDPOINT_TOL = 1e-12


@dataclass(frozen=True)
class WindowSpec:
    """Half-open audio segment [start_s, start_s + len_s)."""

    start_s: float
    len_s: float

    @property
    def end_s(self) -> float:
        return self.start_s + self.len_s


@dataclass(frozen=True)
class AudioClipRef:
    id: str
    duration_s: float
    source: str = ""


@dataclass(frozen=True)
class CaptionCandidate:
    id: str
    text: str
    origin: str = "unknown"


@dataclass(frozen=True)
class AudioWindowSubject:
    audio_id: str
    window: WindowSpec


@dataclass(frozen=True)
class CaptionSubject:
    caption_id: str
    # Carried so embed-on-demand backends can see the text; optional on disk.
    text: str | None = None


@dataclass(frozen=True)
class EmbeddingRecord:
    subject: AudioWindowSubject | CaptionSubject
    model_id: str
    dim: int
    vector: tuple[float, ...]
    extra: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Provenance:
    greedy_text: str
    model_id: str


@dataclass(frozen=True)
class DigitDistribution:
    """Per-decimal-place digit probabilities.

    ``places[0]`` is the first decimal place, ``places[1]`` the second.
    Maps may be sparse; missing digits carry zero mass.
    """

    places: tuple[dict[int, float], dict[int, float]]
    provenance: Provenance
    extra: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class TokenStep:
    chosen_token_text: str
    top_logprobs: dict[str, float]


@dataclass(frozen=True)
class GenerationTrace:
    model_id: str
    prompt_hash: str
    greedy_text: str
    token_steps: tuple[TokenStep, ...]
    extra: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class RawScore:
    value: float | None
    parse_status: str  # "parsed" | "unparseable"


@dataclass(frozen=True)
class ScoreBundle:
    """All scores computed for one (audio, caption) pair."""

    audio_id: str
    caption_id: str
    clap_model_id: str | None = None
    lalm_model_id: str | None = None
    s_clap_by_strategy: dict[str, float] = field(default_factory=dict)
    fleur: float | None = None
    raw: float | None = None
    entropy: float | None = None
    caf_by_alpha: dict[float, float] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class PreferenceItem:
    audio: AudioClipRef
    caption_a: CaptionCandidate
    caption_b: CaptionCandidate
    human_choice: str  # "A" | "B"
    pair_type: str  # "HH" | "HM" | "MM"
    subset: str = ""
    extra: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class RatingItem:
    audio: AudioClipRef
    caption: CaptionCandidate
    human_rating: float
    extra: dict[str, Any] = field(default_factory=dict)


Record = (
    EmbeddingRecord
    | DigitDistribution
    | GenerationTrace
    | ScoreBundle
    | PreferenceItem
    | RatingItem
)

KIND_BY_TYPE = {
    EmbeddingRecord: "embedding",
    DigitDistribution: "digit_dist",
    GenerationTrace: "raw_gen",
    ScoreBundle: "score_bundle",
    PreferenceItem: "pref_item",
    RatingItem: "rating_item",
}


def _clip_to_json(ref: Any) -> Any:
    if isinstance(ref, AudioClipRef):
        return {"id": ref.id, "duration_s": ref.duration_s, "source": ref.source}
    return ref


def _caption_to_json(cand: Any) -> Any:
    if isinstance(cand, CaptionCandidate):
        return {"id": cand.id, "text": cand.text, "origin": cand.origin}
    return cand


def _subject_to_json(subject: Any) -> Any:
    if isinstance(subject, AudioWindowSubject):
        win = subject.window
        if isinstance(win, WindowSpec):
            win = {"start_s": win.start_s, "len_s": win.len_s}
        return {"audio_id": subject.audio_id, "window": win}
    if isinstance(subject, CaptionSubject):
        out: dict[str, Any] = {"caption_id": subject.caption_id}
        if subject.text is not None:
            out["text"] = subject.text
        return out
    return subject


def _float_key_map_to_json(mapping: Any) -> Any:
    if not isinstance(mapping, dict):
        return mapping
    # float keys become their shortest round-trip repr
    return {repr(float(k)) if isinstance(k, (int, float)) else k: v for k, v in mapping.items()}


def _digit_map_to_json(mapping: Any) -> Any:
    if not isinstance(mapping, dict):
        return mapping
    return {str(k): v for k, v in mapping.items()}


def encode_record(rec: Record) -> dict[str, Any]:
    """Encode a record to a JSON-ready dict with ``kind`` first.

    ``None``-valued optional fields are omitted.  Unknown fields captured at
    decode time are merged back in (known fields win on collision).
    """

    kind = KIND_BY_TYPE.get(type(rec))
    if kind is None:
        raise DataError(f"not an interchange record: {type(rec).__name__}")
    body: dict[str, Any]
    if isinstance(rec, EmbeddingRecord):
        body = {
            "subject": _subject_to_json(rec.subject),
            "model_id": rec.model_id,
            "dim": rec.dim,
            "vector": list(rec.vector) if isinstance(rec.vector, (tuple, list)) else rec.vector,
        }
    elif isinstance(rec, DigitDistribution):
        places = rec.places
        body = {
            "places": [_digit_map_to_json(p) for p in places]
            if isinstance(places, (tuple, list))
            else places,
            "provenance": {
                "greedy_text": rec.provenance.greedy_text,
                "model_id": rec.provenance.model_id,
            }
            if isinstance(rec.provenance, Provenance)
            else rec.provenance,
        }
    elif isinstance(rec, GenerationTrace):
        steps = rec.token_steps
        body = {
            "model_id": rec.model_id,
            "prompt_hash": rec.prompt_hash,
            "greedy_text": rec.greedy_text,
            "token_steps": [
                {"chosen_token_text": s.chosen_token_text, "top_logprobs": s.top_logprobs}
                if isinstance(s, TokenStep)
                else s
                for s in steps
            ]
            if isinstance(steps, (tuple, list))
            else steps,
        }
    elif isinstance(rec, ScoreBundle):
        body = {"audio_id": rec.audio_id, "caption_id": rec.caption_id}
        if rec.clap_model_id is not None:
            body["clap_model_id"] = rec.clap_model_id
        if rec.lalm_model_id is not None:
            body["lalm_model_id"] = rec.lalm_model_id
        body["s_clap_by_strategy"] = rec.s_clap_by_strategy
        if rec.fleur is not None:
            body["fleur"] = rec.fleur
        if rec.raw is not None:
            body["raw"] = rec.raw
        if rec.entropy is not None:
            body["entropy"] = rec.entropy
        body["caf_by_alpha"] = _float_key_map_to_json(rec.caf_by_alpha)
    elif isinstance(rec, PreferenceItem):
        body = {
            "audio": _clip_to_json(rec.audio),
            "caption_a": _caption_to_json(rec.caption_a),
            "caption_b": _caption_to_json(rec.caption_b),
            "human_choice": rec.human_choice,
            "pair_type": rec.pair_type,
            "subset": rec.subset,
        }
    else:
        body = {
            "audio": _clip_to_json(rec.audio),
            "caption": _caption_to_json(rec.caption),
            "human_rating": rec.human_rating,
        }
    out: dict[str, Any] = {"kind": kind}
    out.update(body)
    extra = getattr(rec, "extra", None)
    if extra:
        for k, v in extra.items():
            if k not in out:
                out[k] = v
    return out


def _decode_window(obj: Any) -> Any:
    if isinstance(obj, dict) and set(obj) >= {"start_s", "len_s"}:
        return WindowSpec(start_s=obj.get("start_s"), len_s=obj.get("len_s"))
    return obj


def _decode_subject(obj: Any) -> Any:
    if isinstance(obj, dict):
        if "audio_id" in obj:
            return AudioWindowSubject(
                audio_id=obj.get("audio_id"), window=_decode_window(obj.get("window"))
            )
        if "caption_id" in obj:
            return CaptionSubject(caption_id=obj.get("caption_id"), text=obj.get("text"))
    return obj


def _decode_clip(obj: Any) -> Any:
    if isinstance(obj, dict):
        return AudioClipRef(
            id=obj.get("id"), duration_s=obj.get("duration_s"), source=obj.get("source", "")
        )
    return obj


def _decode_caption(obj: Any) -> Any:
    if isinstance(obj, dict):
        return CaptionCandidate(
            id=obj.get("id"), text=obj.get("text"), origin=obj.get("origin", "unknown")
        )
    return obj


def _decode_digit_map(obj: Any) -> Any:
    if not isinstance(obj, dict):
        return obj
    out: dict[Any, Any] = {}
    for k, v in obj.items():
        try:
            out[int(k)] = v
        except (TypeError, ValueError):
            out[k] = v
    return out


def _decode_float_key_map(obj: Any) -> Any:
    if not isinstance(obj, dict):
        return obj
    out: dict[Any, Any] = {}
    for k, v in obj.items():
        try:
            out[float(k)] = v
        except (TypeError, ValueError):
            out[k] = v
    return out


def _extras(obj: dict[str, Any], known: tuple[str, ...]) -> dict[str, Any]:
    return {k: v for k, v in obj.items() if k not in known and k != "kind"}


def decode_record(obj: Any) -> Record:
    """Decode one JSON object into a record.

    Raises DataError for non-objects and unknown/missing ``kind``; wrong-typed
    field values are preserved as-is for ``validate_record`` to report.
    """

    if not isinstance(obj, dict):
        raise DataError(f"record must be a JSON object, got {type(obj).__name__}")
    kind = obj.get("kind")
    if kind == "embedding":
        vec = obj.get("vector")
        return EmbeddingRecord(
            subject=_decode_subject(obj.get("subject")),
            model_id=obj.get("model_id"),
            dim=obj.get("dim"),
            vector=tuple(vec) if isinstance(vec, list) else vec,
            extra=_extras(obj, ("subject", "model_id", "dim", "vector")),
        )
    if kind == "digit_dist":
        places = obj.get("places")
        prov = obj.get("provenance")
        if isinstance(places, list):
            places = tuple(_decode_digit_map(p) for p in places)
        if isinstance(prov, dict):
            prov = Provenance(
                greedy_text=prov.get("greedy_text"), model_id=prov.get("model_id")
            )
        return DigitDistribution(
            places=places, provenance=prov, extra=_extras(obj, ("places", "provenance"))
        )
    if kind == "raw_gen":
        steps = obj.get("token_steps")
        if isinstance(steps, list):
            steps = tuple(
                TokenStep(
                    chosen_token_text=s.get("chosen_token_text"),
                    top_logprobs=s.get("top_logprobs"),
                )
                if isinstance(s, dict)
                else s
                for s in steps
            )
        return GenerationTrace(
            model_id=obj.get("model_id"),
            prompt_hash=obj.get("prompt_hash"),
            greedy_text=obj.get("greedy_text"),
            token_steps=steps,
            extra=_extras(obj, ("model_id", "prompt_hash", "greedy_text", "token_steps")),
        )
    if kind == "score_bundle":
        return ScoreBundle(
            audio_id=obj.get("audio_id"),
            caption_id=obj.get("caption_id"),
            clap_model_id=obj.get("clap_model_id"),
            lalm_model_id=obj.get("lalm_model_id"),
            s_clap_by_strategy=obj.get("s_clap_by_strategy", {}),
            fleur=obj.get("fleur"),
            raw=obj.get("raw"),
            entropy=obj.get("entropy"),
            caf_by_alpha=_decode_float_key_map(obj.get("caf_by_alpha", {})),
            extra=_extras(
                obj,
                (
                    "audio_id",
                    "caption_id",
                    "clap_model_id",
                    "lalm_model_id",
                    "s_clap_by_strategy",
                    "fleur",
                    "raw",
                    "entropy",
                    "caf_by_alpha",
                ),
            ),
        )
    if kind == "pref_item":
        return PreferenceItem(
            audio=_decode_clip(obj.get("audio")),
            caption_a=_decode_caption(obj.get("caption_a")),
            caption_b=_decode_caption(obj.get("caption_b")),
            human_choice=obj.get("human_choice"),
            pair_type=obj.get("pair_type"),
            subset=obj.get("subset", ""),
            extra=_extras(
                obj, ("audio", "caption_a", "caption_b", "human_choice", "pair_type", "subset")
            ),
        )
    if kind == "rating_item":
        return RatingItem(
            audio=_decode_clip(obj.get("audio")),
            caption=_decode_caption(obj.get("caption")),
            human_rating=obj.get("human_rating"),
            extra=_extras(obj, ("audio", "caption", "human_rating")),
        )
    raise DataError(f"unknown record kind: {kind!r}")


def _is_real(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _check_clip(ref: Any, where: str, out: list[str]) -> None:
    if not isinstance(ref, AudioClipRef):
        out.append(f"{where}: not an audio clip object")
        return
    if not isinstance(ref.id, str) or not ref.id:
        out.append(f"{where}.id: must be a non-empty string")
    if not _is_real(ref.duration_s) or ref.duration_s <= 0:
        out.append(f"{where}.duration_s: must be a finite real > 0")
    if not isinstance(ref.source, str):
        out.append(f"{where}.source: must be a string")


def _check_caption(cand: Any, where: str, out: list[str]) -> None:
    if not isinstance(cand, CaptionCandidate):
        out.append(f"{where}: not a caption object")
        return
    if not isinstance(cand.id, str) or not cand.id:
        out.append(f"{where}.id: must be a non-empty string")
    if not isinstance(cand.text, str) or not cand.text.strip():
        out.append(f"{where}.text: must be non-empty after trimming")
    if cand.origin not in ORIGINS:
        out.append(f"{where}.origin: must be one of {ORIGINS}")


def _check_digit_place(place: Any, where: str, out: list[str]) -> None:
    if not isinstance(place, dict):
        out.append(f"{where}: must be a digit->probability map")
        return
    mass = 0.0
    for k, v in place.items():
        if not isinstance(k, int) or isinstance(k, bool) or not 0 <= k <= 9:
            out.append(f"{where}[{k!r}]: digit keys must be integers in 0..9")
            continue
        if not _is_real(v) or v < 0 or v > 1:
            out.append(f"{where}[{k}]: probability must be in [0, 1]")
            continue
        mass += v
    if mass > 1 + MASS_TOL:
        out.append(f"{where}: mass exceeds 1 ({mass!r})")


def validate_record(rec: Record) -> list[str]:
    """Return every invariant violation for ``rec`` (empty when valid).

    Malformed field types are reported as violations, never raised.
    """

    out: list[str] = []
    if isinstance(rec, EmbeddingRecord):
        subj = rec.subject
        if isinstance(subj, AudioWindowSubject):
            if not isinstance(subj.audio_id, str) or not subj.audio_id:
                out.append("subject.audio_id: must be a non-empty string")
            win = subj.window
            if not isinstance(win, WindowSpec):
                out.append("subject.window: not a window object")
            else:
                if not _is_real(win.start_s) or win.start_s < 0:
                    out.append("subject.window.start_s: must be a finite real >= 0")
                if not _is_real(win.len_s) or win.len_s <= 0:
                    out.append("subject.window.len_s: must be a finite real > 0")
        elif isinstance(subj, CaptionSubject):
            if not isinstance(subj.caption_id, str) or not subj.caption_id:
                out.append("subject.caption_id: must be a non-empty string")
            if subj.text is not None and not isinstance(subj.text, str):
                out.append("subject.text: must be a string when present")
        else:
            out.append("subject: must reference an audio window or a caption")
        if not isinstance(rec.model_id, str) or not rec.model_id:
            out.append("model_id: must be a non-empty string")
        if not isinstance(rec.dim, int) or isinstance(rec.dim, bool) or rec.dim <= 0:
            out.append("dim: must be a positive integer")
        vec = rec.vector
        if not isinstance(vec, tuple):
            out.append("vector: must be an array of numbers")
        else:
            bad = [i for i, x in enumerate(vec) if not _is_real(x)]
            if bad:
                out.append(f"vector: non-finite or non-numeric entries at {bad[:5]}")
            elif isinstance(rec.dim, int) and not isinstance(rec.dim, bool) and rec.dim > 0:
                if len(vec) != rec.dim:
                    out.append(f"vector: length mismatch (dim={rec.dim}, got {len(vec)})")
            if not bad and vec and all(x == 0 for x in vec):
                out.append("vector: all-zero vector")
    elif isinstance(rec, DigitDistribution):
        places = rec.places
        if not isinstance(places, tuple) or len(places) != 2:
            out.append("places: must hold exactly two decimal places")
        else:
            _check_digit_place(places[0], "places[0]", out)
            _check_digit_place(places[1], "places[1]", out)
        prov = rec.provenance
        if not isinstance(prov, Provenance):
            out.append("provenance: missing or malformed")
        else:
            if not isinstance(prov.greedy_text, str):
                out.append("provenance.greedy_text: must be a string")
            if not isinstance(prov.model_id, str) or not prov.model_id:
                out.append("provenance.model_id: must be a non-empty string")
    elif isinstance(rec, GenerationTrace):
        if not isinstance(rec.model_id, str) or not rec.model_id:
            out.append("model_id: must be a non-empty string")
        if not isinstance(rec.prompt_hash, str) or not rec.prompt_hash:
            out.append("prompt_hash: must be a non-empty string")
        if not isinstance(rec.greedy_text, str):
            out.append("greedy_text: must be a string")
        steps = rec.token_steps
        if not isinstance(steps, tuple):
            out.append("token_steps: must be an array")
        else:
            for i, step in enumerate(steps):
                if not isinstance(step, TokenStep):
                    out.append(f"token_steps[{i}]: not a token step object")
                    continue
                if not isinstance(step.chosen_token_text, str):
                    out.append(f"token_steps[{i}].chosen_token_text: must be a string")
                lps = step.top_logprobs
                if not isinstance(lps, dict):
                    out.append(f"token_steps[{i}].top_logprobs: must be a token->logprob map")
                    continue
                for tok, lp in lps.items():
                    if not isinstance(tok, str):
                        out.append(f"token_steps[{i}].top_logprobs: non-string token {tok!r}")
                    elif not _is_real(lp) or lp > 0:
                        out.append(
                            f"token_steps[{i}].top_logprobs[{tok!r}]: logprob must be <= 0"
                        )
    elif isinstance(rec, ScoreBundle):
        if not isinstance(rec.audio_id, str) or not rec.audio_id:
            out.append("audio_id: must be a non-empty string")
        if not isinstance(rec.caption_id, str) or not rec.caption_id:
            out.append("caption_id: must be a non-empty string")
        for name in ("clap_model_id", "lalm_model_id"):
            v = getattr(rec, name)
            if v is not None and (not isinstance(v, str) or not v):
                out.append(f"{name}: must be a non-empty string when present")
        sbs = rec.s_clap_by_strategy
        if not isinstance(sbs, dict):
            out.append("s_clap_by_strategy: must be a strategy->score map")
            sbs = {}
        else:
            for k, v in sbs.items():
                if k not in POOLING_NAMES:
                    out.append(f"s_clap_by_strategy: unknown strategy {k!r}")
                if not _is_real(v) or not -1 <= v <= 1:
                    out.append(f"s_clap_by_strategy[{k!r}]: score must be in [-1, 1]")
        if rec.fleur is not None and (not _is_real(rec.fleur) or not 0 <= rec.fleur <= 0.99):
            out.append("fleur: must be in [0, 0.99]")
        if rec.raw is not None and (not _is_real(rec.raw) or not 0 <= rec.raw <= 1):
            out.append("raw: must be in [0, 1]")
        if rec.entropy is not None and (not _is_real(rec.entropy) or rec.entropy < 0):
            out.append("entropy: must be a finite real >= 0")
        cba = rec.caf_by_alpha
        if not isinstance(cba, dict):
            out.append("caf_by_alpha: must be an alpha->score map")
        else:
            for k, v in cba.items():
                if not _is_real(k) or not 0 <= k <= 1:
                    out.append(f"caf_by_alpha: alpha {k!r} outside [0, 1]")
                if not _is_real(v):
                    out.append(f"caf_by_alpha[{k!r}]: score must be a finite real")
            one = cba.get(1.0)
            if _is_real(one) and isinstance(sbs, dict) and sbs:
                vals = [v for v in sbs.values() if _is_real(v)]
                if vals and not any(abs(one - v) <= ENDPOINT_TOL for v in vals):
                    out.append("caf_by_alpha[1.0]: does not match any s_clap score")
            zero = cba.get(0.0)
            if _is_real(zero) and _is_real(rec.fleur):
                if abs(zero - rec.fleur) > ENDPOINT_TOL:
                    out.append("caf_by_alpha[0.0]: does not match fleur")
    elif isinstance(rec, PreferenceItem):
        _check_clip(rec.audio, "audio", out)
        _check_caption(rec.caption_a, "caption_a", out)
        _check_caption(rec.caption_b, "caption_b", out)
        if (
            isinstance(rec.caption_a, CaptionCandidate)
            and isinstance(rec.caption_b, CaptionCandidate)
            and isinstance(rec.caption_a.id, str)
            and rec.caption_a.id == rec.caption_b.id
        ):
            out.append("caption_b.id: must differ from caption_a.id")
        if rec.human_choice not in CHOICES:
            out.append(f"human_choice: must be one of {CHOICES}")
        if rec.pair_type not in PAIR_TYPES:
            out.append(f"pair_type: must be one of {PAIR_TYPES}")
        if not isinstance(rec.subset, str):
            out.append("subset: must be a string")
    elif isinstance(rec, RatingItem):
        _check_clip(rec.audio, "audio", out)
        _check_caption(rec.caption, "caption", out)
        if not _is_real(rec.human_rating):
            out.append("human_rating: must be a finite real")
    else:
        out.append(f"not an interchange record: {type(rec).__name__}")
    return out


def dumps_record(rec: Record) -> str:
    return json.dumps(encode_record(rec), ensure_ascii=False, separators=(",", ":"))


def loads_record(line: str) -> Record:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc}") from exc
    return decode_record(obj)


def write_records(path: str | Path, records: Iterable[Record]) -> int:
    """Write records as JSON Lines; returns the number written."""

    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps_record(rec))
            fh.write("\n")
            n += 1
    return n


def iter_records(path: str | Path) -> Iterator[tuple[int, Record]]:
    """Yield (line_number, record) pairs; blank lines are skipped.

    Raises DataError with the offending line number on parse failures.
    """

    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, loads_record(line)
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc


def read_records(path: str | Path, expect_kind: str | None = None) -> list[Record]:
    """Load and validate all records from a JSON Lines file."""

    out: list[Record] = []
    for lineno, rec in iter_records(path):
        if expect_kind is not None and KIND_BY_TYPE[type(rec)] != expect_kind:
            raise DataError(
                f"{path}:{lineno}: expected {expect_kind}, got {KIND_BY_TYPE[type(rec)]}"
            )
        violations = validate_record(rec)
        if violations:
            raise DataError(f"{path}:{lineno}: " + "; ".join(violations))
        out.append(rec)
    return out
