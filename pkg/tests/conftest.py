"""Shared test helpers: a randomized record generator and a small end-to-end
fixture whose expected numbers are hand-derived in the tests that use it."""

from __future__ import annotations

import json
import math
import random
from pathlib import Path

from cafscore.backends import prompt_hash
from cafscore.fleur import build_caption_prompt
from cafscore.records import (
    AudioClipRef,
    AudioWindowSubject,
    CaptionCandidate,
    CaptionSubject,
    DigitDistribution,
    EmbeddingRecord,
    GenerationTrace,
    PreferenceItem,
    Provenance,
    RatingItem,
    ScoreBundle,
    TokenStep,
    WindowSpec,
    write_records,
)

_WORDS = ("dog", "rain", "engine", "bird", "wind", "music", "crowd", "steps")


def _rand_text(rng: random.Random) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(rng.randint(2, 5)))


def _rand_extra(rng: random.Random) -> dict:
    if rng.random() < 0.5:
        return {}
    out = {}
    if rng.random() < 0.7:
        out["note"] = _rand_text(rng)
    if rng.random() < 0.5:
        out["tags"] = [rng.randint(0, 9) for _ in range(rng.randint(1, 3))]
    if rng.random() < 0.3:
        out["meta"] = {"depth": rng.randint(0, 3), "flag": bool(rng.getrandbits(1))}
    return out


def _rand_float(rng: random.Random) -> float:
    roll = rng.random()
    if roll < 0.2:
        return rng.choice([0.0, 1.0, -1.0, 0.5, 1e-12, 1e300, -2.5])
    if roll < 0.6:
        return rng.uniform(-1000.0, 1000.0)
    return rng.uniform(-1.0, 1.0)


def rand_record(rng: random.Random):
    """One random, valid record of a random kind."""

    kind = rng.randrange(6)
    if kind == 0:
        dim = rng.randint(1, 6)
        vec = [rng.uniform(-2, 2) for _ in range(dim)]
        if all(v == 0 for v in vec):
            vec[0] = 1.0
        if rng.random() < 0.5:
            subject = AudioWindowSubject(
                audio_id=f"a{rng.randint(0, 99)}",
                window=WindowSpec(start_s=rng.uniform(0, 30), len_s=rng.uniform(0.5, 10)),
            )
        else:
            subject = CaptionSubject(
                caption_id=f"c{rng.randint(0, 99)}",
                text=_rand_text(rng) if rng.random() < 0.5 else None,
            )
        return EmbeddingRecord(
            subject=subject,
            model_id=f"m{rng.randint(0, 9)}",
            dim=dim,
            vector=tuple(vec),
            extra=_rand_extra(rng),
        )
    if kind == 1:
        places = []
        for _ in range(2):
            digits = rng.sample(range(10), rng.randint(0, 4))
            raw = {d: rng.random() for d in digits}
            mass = sum(raw.values())
            scale = rng.uniform(0.2, 1.0) / mass if mass > 1 else 1.0
            places.append({d: p * scale for d, p in raw.items()})
        return DigitDistribution(
            places=(places[0], places[1]),
            provenance=Provenance(greedy_text=f"0.{rng.randint(0, 99):02d}", model_id="judge"),
            extra=_rand_extra(rng),
        )
    if kind == 2:
        steps = []
        for _ in range(rng.randint(1, 5)):
            toks = {f"t{rng.randint(0, 30)}": -rng.uniform(0, 5) for _ in range(rng.randint(1, 4))}
            steps.append(
                TokenStep(chosen_token_text=rng.choice(["0", ".", "8", "85", "9 "]), top_logprobs=toks)
            )
        return GenerationTrace(
            model_id=f"m{rng.randint(0, 9)}",
            prompt_hash=f"{rng.getrandbits(128):032x}",
            greedy_text=f"0.{rng.randint(0, 99):02d}",
            token_steps=tuple(steps),
            extra=_rand_extra(rng),
        )
    if kind == 3:
        s = rng.uniform(-1, 1)
        f = rng.uniform(0, 0.99) if rng.random() < 0.8 else None
        caf = {}
        if f is not None:
            for alpha in sorted(rng.sample([0.0, 0.2, 0.5, 0.8, 1.0], rng.randint(0, 5))):
                mixed = alpha * s + (1 - alpha) * f
                lo, hi = min(s, f), max(s, f)
                caf[alpha] = min(hi, max(lo, mixed))
        return ScoreBundle(
            audio_id=f"a{rng.randint(0, 99)}",
            caption_id=f"c{rng.randint(0, 99)}",
            clap_model_id="clap" if rng.random() < 0.9 else None,
            lalm_model_id="judge" if f is not None else None,
            s_clap_by_strategy={rng.choice(["max", "avg", "none"]): s},
            fleur=f,
            raw=rng.choice([None, 0.85, round(rng.random(), 2)]),
            entropy=rng.uniform(0, 1) if f is not None else None,
            caf_by_alpha=caf,
            extra=_rand_extra(rng),
        )
    if kind == 4:
        return PreferenceItem(
            audio=AudioClipRef(id=f"a{rng.randint(0, 99)}", duration_s=rng.uniform(1, 30)),
            caption_a=CaptionCandidate(id="ca", text=_rand_text(rng), origin="human"),
            caption_b=CaptionCandidate(id="cb", text=_rand_text(rng), origin="machine"),
            human_choice=rng.choice(["A", "B"]),
            pair_type=rng.choice(["HH", "HM", "MM"]),
            subset=rng.choice(["", "main", "hard"]),
            extra=_rand_extra(rng),
        )
    return RatingItem(
        audio=AudioClipRef(id=f"a{rng.randint(0, 99)}", duration_s=rng.uniform(1, 30)),
        caption=CaptionCandidate(id=f"c{rng.randint(0, 99)}", text=_rand_text(rng)),
        human_rating=rng.uniform(0, 5),
        extra=_rand_extra(rng),
    )


# --- end-to-end fixture -----------------------------------------------------
#
# Two clips, four preference items, one file-backed embedding model and one
# file-backed judge.  Embeddings are unit vectors in the plane so every
# cosine below is exact by hand:
#
#   a1 (12 s, 3 windows): w0=(1,0)  w1=(0,1)  w2=(0.6,0.8)
#   a2 (5 s, short-clip window): (0,1)
#
# item  subset type choice  caption A            caption B
#   1    S1    HM     A     (1,0)   fleur .876   (0.8,0.6)  fleur .85   raw ties 0.85
#   2    S1    HH     B     (0.6,0.8) fleur .3   (-1,0)     fleur .9
#   3    S2    MM     A     (0.96,0.28) fleur .9 (0.6,0.8)  fleur .2
#   4    S2    HM     B     (1,0)   fleur .5     (0.8,0.6)  fleur .55
#
# max-pooled s_clap:  A: 1.0 / 1.0 / 0.96 / 0.0    B: 0.96 / 0.0 / 1.0 / 0.6
# hand-derived accuracy (zero credit): s_clap 50.00, raw 75.00, fleur 100.00,
# caf@0.8 75.00; sweep 0.0->100, 0.2->100, 0.5->75, 0.8->75, 1.0->50,
# adaptive->100.

E2E_CAPTIONS = {
    "c1a": "A dog barks in the yard.",
    "c1b": "A dog is barking.",
    "c2a": "Rain falls on a tin roof.",
    "c2b": "A man speaks loudly.",
    "c3a": "An engine idles nearby.",
    "c3b": "Music plays softly.",
    "c4a": "Birds chirp at dawn.",
    "c4b": "A bird sings in the morning.",
}

E2E_TEXT_VECTORS = {
    "c1a": (1.0, 0.0),
    "c1b": (0.8, 0.6),
    "c2a": (0.6, 0.8),
    "c2b": (-1.0, 0.0),
    "c3a": (0.96, 0.28),
    "c3b": (0.6, 0.8),
    "c4a": (1.0, 0.0),
    "c4b": (0.8, 0.6),
}


def _lp(p: float) -> float:
    return math.log(p)


def _trace(caption_id: str, greedy: str, steps: list[TokenStep]) -> GenerationTrace:
    prompt = build_caption_prompt(E2E_CAPTIONS[caption_id])
    return GenerationTrace(
        model_id="toy-lalm",
        prompt_hash=prompt_hash(prompt),
        greedy_text=greedy,
        token_steps=tuple(steps),
    )


def _point(tok: str) -> TokenStep:
    return TokenStep(chosen_token_text=tok, top_logprobs={tok: 0.0})


def e2e_traces() -> list[GenerationTrace]:
    return [
        _trace(
            "c1a",
            "0.85",
            [
                _point("0"),
                _point("."),
                TokenStep("8", {"8": _lp(0.7), "9": _lp(0.3)}),
                TokenStep("5", {"5": _lp(0.6), "4": _lp(0.4)}),
            ],
        ),
        _trace("c1b", "0.85", [_point("0"), _point("."), _point("8"), _point("5")]),
        _trace("c2a", "0.3", [_point("0"), _point("."), _point("3")]),
        _trace("c2b", "0.9", [_point("0"), _point("."), _point("9")]),
        # multi-char first token plus a second place that runs past the text
        _trace("c3a", "0.9", [_point("0."), _point("9")]),
        _trace("c3b", "0.2", [_point("0"), _point("."), _point("2")]),
        _trace("c4a", "0.5", [_point("0"), _point("."), _point("5")]),
        _trace("c4b", "0.55", [_point("0"), _point("."), _point("5"), _point("5")]),
    ]


def e2e_embeddings() -> list[EmbeddingRecord]:
    def emb(subject, vec):
        return EmbeddingRecord(subject=subject, model_id="toy-clap", dim=2, vector=vec)

    windows = [
        ("a1", WindowSpec(0.0, 10.0), (1.0, 0.0)),
        ("a1", WindowSpec(1.0, 10.0), (0.0, 1.0)),
        ("a1", WindowSpec(2.0, 10.0), (0.6, 0.8)),
        ("a2", WindowSpec(0.0, 5.0), (0.0, 1.0)),
    ]
    out = [
        emb(AudioWindowSubject(audio_id=aid, window=w), vec) for aid, w, vec in windows
    ]
    out.extend(
        emb(CaptionSubject(caption_id=cid), vec) for cid, vec in E2E_TEXT_VECTORS.items()
    )
    return out


def e2e_items() -> list[PreferenceItem]:
    a1 = AudioClipRef(id="a1", duration_s=12.0)
    a2 = AudioClipRef(id="a2", duration_s=5.0)

    def cap(cid: str, origin: str) -> CaptionCandidate:
        return CaptionCandidate(id=cid, text=E2E_CAPTIONS[cid], origin=origin)

    return [
        PreferenceItem(a1, cap("c1a", "human"), cap("c1b", "machine"), "A", "HM", "S1"),
        PreferenceItem(a1, cap("c2a", "human"), cap("c2b", "human"), "B", "HH", "S1"),
        PreferenceItem(a1, cap("c3a", "machine"), cap("c3b", "machine"), "A", "MM", "S2"),
        PreferenceItem(a2, cap("c4a", "human"), cap("c4b", "machine"), "B", "HM", "S2"),
    ]


def build_e2e_fixture(root: Path, cache_dir: Path | None = None) -> dict[str, Path]:
    """Write the dataset, backend files, and a config under ``root``."""

    root.mkdir(parents=True, exist_ok=True)
    dataset = root / "dataset.jsonl"
    clap_file = root / "clap_records.jsonl"
    lalm_file = root / "lalm_records.jsonl"
    config = root / "config.toml"
    cache = cache_dir or (root / "cache")

    write_records(dataset, e2e_items())
    write_records(clap_file, e2e_embeddings())
    write_records(lalm_file, e2e_traces())

    config.write_text(
        "\n".join(
            [
                "[run]",
                "alpha = 0.8",
                'pooling = "max"',
                'tie_policy = "zero_credit"',
                f"output_dir = {json.dumps(str(root / 'out'))}",
                f"cache_dir = {json.dumps(str(cache))}",
                "",
                "[dataset]",
                f"path = {json.dumps(str(dataset))}",
                "",
                "[backends.clapfile]",
                'kind = "file"',
                'model_id = "toy-clap"',
                f"path = {json.dumps(str(clap_file))}",
                "",
                "[backends.lalmfile]",
                'kind = "file"',
                'model_id = "toy-lalm"',
                f"path = {json.dumps(str(lalm_file))}",
                "",
                "[clap_models.toyclap]",
                'model_id = "toy-clap"',
                'backend = "clapfile"',
                "window_len_s = 10.0",
                "hop_s = 1.0",
                "",
                "[lalm_models.toylalm]",
                'model_id = "toy-lalm"',
                'backend = "lalmfile"',
                'prompt = "caption"',
                "top_logprobs_k = 20",
                "",
            ]
        ),
        encoding="utf-8",
    )
    return {
        "root": root,
        "dataset": dataset,
        "clap_file": clap_file,
        "lalm_file": lalm_file,
        "config": config,
        "cache": cache,
    }
