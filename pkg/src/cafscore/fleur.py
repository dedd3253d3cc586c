"""Distribution-aware numeric rating from language-model token probabilities.

A judge model is prompted to print a score in [0.0, 1.0].  Instead of trusting
the printed text alone, the score is recomputed from the token probability
mass over the first two decimal places:

    score = sum_{j=1,2} 10^-j * sum_{i=1..9} i * p(i, j)

where p(i, j) is the probability of digit i at decimal place j.  The printed
text still matters as the tie-prone "raw" baseline, parsed as the last decimal
literal in [0, 1].
"""

from __future__ import annotations

import math
import re
from importlib import resources

from .errors import DomainError, ExtractionError
from .records import DigitDistribution, GenerationTrace, Provenance, RawScore

CAPTION_PROMPT_VERSION = "caption_v1"
TTA_PROMPT_VERSION = "tta_v1"

ENTROPY_MODES = ("normalized_first_place", "unnormalized", "both_places")
_DIGITS = "0123456789"
_LN10 = math.log(10.0)


def _load_template(name: str) -> str:
    return (
        resources.files("cafscore").joinpath(f"templates/{name}.txt").read_text(encoding="utf-8")
    )


def build_caption_prompt(caption: str) -> str:
    """Render the caption-judging prompt; byte-stable for a given caption."""

    if not isinstance(caption, str) or not caption.strip():
        raise DomainError("caption must be non-empty after trimming")
    return _load_template(f"prompt_{CAPTION_PROMPT_VERSION}").replace("{pred_caption}", caption)


def build_tta_prompt(caption: str) -> str:
    """Render the generated-audio-judging prompt for a reference caption."""

    if not isinstance(caption, str) or not caption.strip():
        raise DomainError("caption must be non-empty after trimming")
    return _load_template(f"prompt_{TTA_PROMPT_VERSION}").replace("{caption}", caption)


def _digit_mass(top_logprobs: dict[str, float], char_idx: int) -> dict[int, float]:
    # Mass for digit d = sum of exp(logprob) over candidate tokens whose
    # text has d at the aligned in-token character position.
    out: dict[int, float] = {}
    for tok, lp in top_logprobs.items():
        if len(tok) > char_idx and tok[char_idx] in _DIGITS:
            d = int(tok[char_idx])
            out[d] = out.get(d, 0.0) + math.exp(lp)
    return out


def extract_digit_distributions(trace: GenerationTrace) -> DigitDistribution:
    """Read per-place digit probabilities out of a greedy generation trace.

    The first '.' in the concatenated step texts anchors the two decimal
    places at character offsets +1 and +2.  Each offset is mapped back to the
    step that produced the covering character, and that step's top-logprob
    candidates vote for digits at the aligned in-token position.  An offset
    past the end of the text falls through to the step after the last
    consumed one (aligned at position 0) when it exists, else to zero mass.
    """

    if not trace.token_steps:
        raise DomainError("trace has no token steps")
    texts = [step.chosen_token_text for step in trace.token_steps]
    concat = "".join(texts)
    dot = concat.find(".")
    if dot < 0:
        raise ExtractionError("no_decimal_point", f"no '.' in {concat!r}")

    # spans[i] = (start, end) of step i's text in the concatenation
    spans: list[tuple[int, int]] = []
    pos = 0
    for t in texts:
        spans.append((pos, pos + len(t)))
        pos += len(t)

    def covering_step(offset: int) -> int:
        for i, (a, b) in enumerate(spans):
            if a <= offset < b:
                return i
        raise DomainError(f"offset {offset} outside trace text")

    places: list[dict[int, float]] = []
    for offset in (dot + 1, dot + 2):
        if offset < len(concat):
            i = covering_step(offset)
            places.append(_digit_mass(trace.token_steps[i].top_logprobs, offset - spans[i][0]))
        else:
            last = covering_step(len(concat) - 1)
            if last + 1 < len(trace.token_steps):
                places.append(_digit_mass(trace.token_steps[last + 1].top_logprobs, 0))
            else:
                places.append({})
    return DigitDistribution(
        places=(places[0], places[1]),
        provenance=Provenance(greedy_text=trace.greedy_text, model_id=trace.model_id),
    )


def fleur_score(dist: DigitDistribution) -> float:
    """Expected value of the two-decimal-place digit distribution; in [0, 0.99]."""

    total = 0.0
    for j, place in enumerate(dist.places, start=1):
        acc = 0.0
        for i in range(1, 10):
            p = place.get(i, 0.0)
            if p:
                acc += i * p
        total += (10.0**-j) * acc
    return total


_NUMBER = re.compile(r"\d+\.\d+|\.\d+|\d+")


def parse_raw_score(text: str) -> RawScore:
    """The last decimal literal in [0, 1] appearing in ``text``."""

    best: float | None = None
    for m in _NUMBER.finditer(text):
        v = float(m.group())
        if 0.0 <= v <= 1.0:
            best = v
    if best is None:
        return RawScore(value=None, parse_status="unparseable")
    return RawScore(value=best, parse_status="parsed")


def distribution_entropy(dist: DigitDistribution, mode: str = "normalized_first_place") -> float:
    """Uncertainty of the digit distribution, for confidence-adaptive fusion.

    normalized_first_place: first place renormalized, entropy / ln(10), in [0, 1].
    both_places: mean of the two normalized per-place entropies.
    unnormalized: raw nat entropy of the first place (not rescaled).
    A zero-mass place counts as maximal uncertainty.
    """

    if mode not in ENTROPY_MODES:
        raise DomainError(f"unknown entropy mode: {mode!r}")

    def place_entropy(place: dict[int, float], normalize: bool) -> float:
        probs = [place.get(d, 0.0) for d in range(10)]
        mass = math.fsum(probs)
        if mass <= 0.0:
            return 1.0 if normalize else _LN10
        h = -math.fsum(p / mass * math.log(p / mass) for p in probs if p > 0.0)
        if not normalize:
            return max(0.0, h)
        return min(1.0, max(0.0, h / _LN10))

    if mode == "unnormalized":
        return place_entropy(dist.places[0], normalize=False)
    if mode == "both_places":
        return (
            place_entropy(dist.places[0], True) + place_entropy(dist.places[1], True)
        ) / 2.0
    return place_entropy(dist.places[0], True)
