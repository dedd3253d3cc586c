"""Convex fusion of the acoustic-similarity and judge scores."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .fleur import distribution_entropy
from .records import DigitDistribution

DEFAULT_ALPHA = 0.8
DEFAULT_ALPHA_GRID = (0.0, 0.2, 0.5, 0.8, 1.0)


@dataclass(frozen=True)
class AlphaPolicy:
    """Either a fixed mixing weight or per-sample entropy-adaptive weighting."""

    kind: str  # "fixed" | "adaptive"
    alpha: float | None = None

    @classmethod
    def fixed(cls, alpha: float) -> "AlphaPolicy":
        if not (isinstance(alpha, (int, float)) and 0.0 <= alpha <= 1.0):
            raise DomainError(f"alpha must be in [0, 1], got {alpha!r}")
        return cls(kind="fixed", alpha=float(alpha))

    @classmethod
    def adaptive(cls) -> "AlphaPolicy":
        return cls(kind="adaptive")

    @classmethod
    def parse(cls, text: str | float) -> "AlphaPolicy":
        if isinstance(text, (int, float)):
            return cls.fixed(float(text))
        if text.strip().lower() == "adaptive":
            return cls.adaptive()
        try:
            return cls.fixed(float(text))
        except ValueError as exc:
            raise DomainError(f"alpha must be a number in [0, 1] or 'adaptive': {text!r}") from exc


def caf_score(s_clap: float, fleur: float, alpha: float) -> float:
    """alpha * s_clap + (1 - alpha) * fleur, kept inside [min, max] of the two.

    The endpoints reproduce the components exactly: alpha=1 returns s_clap,
    alpha=0 returns fleur.
    """

    for name, v in (("s_clap", s_clap), ("fleur", fleur), ("alpha", alpha)):
        if not (isinstance(v, (int, float)) and math.isfinite(v)):
            raise DomainError(f"{name} must be a finite real, got {v!r}")
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must be in [0, 1], got {alpha!r}")
    lo, hi = (s_clap, fleur) if s_clap <= fleur else (fleur, s_clap)
    mixed = alpha * s_clap + (1.0 - alpha) * fleur
    return min(hi, max(lo, mixed))


def resolve_alpha(
    policy: AlphaPolicy,
    dist: DigitDistribution | None = None,
    entropy_mode: str = "normalized_first_place",
) -> float:
    """Concrete mixing weight for one sample under ``policy``.

    Adaptive weighting leans on the acoustic score exactly as much as the
    judge is uncertain: alpha = entropy of its digit distribution.
    """

    if policy.kind == "fixed":
        if policy.alpha is None or not 0.0 <= policy.alpha <= 1.0:
            raise DomainError(f"fixed alpha must be in [0, 1], got {policy.alpha!r}")
        return float(policy.alpha)
    if policy.kind == "adaptive":
        if dist is None:
            raise DomainError("adaptive alpha needs a digit distribution")
        h = distribution_entropy(dist, mode=entropy_mode)
        return min(1.0, max(0.0, h))
    raise DomainError(f"unknown alpha policy: {policy.kind!r}")
