"""Sliding-window audio/text similarity.

A clip is cut into fixed-length windows on a regular hop grid; each window's
embedding is compared against the caption embedding by cosine similarity and
the per-window scores are pooled (max by default) into one S-CLAP score.
Clips shorter than the window length fall back to a single whole-clip window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import DomainError
from .records import EmbeddingRecord, WindowSpec

POOLING_STRATEGIES = ("none", "avg", "max")
DEFAULT_HOP_S = 1.0
DEFAULT_WINDOW_S = 10.0
# Models in this family embed at most 7 s of audio; all others take 10 s.
SHORT_WINDOW_S = 7.0
_SHORT_WINDOW_MARKERS = ("ms-clap", "ms_clap", "msclap")


def default_window_len(model_id: str) -> float:
    low = model_id.lower()
    if any(marker in low for marker in _SHORT_WINDOW_MARKERS):
        return SHORT_WINDOW_S
    return DEFAULT_WINDOW_S


@dataclass(frozen=True)
class WindowingConfig:
    window_len_s: float
    hop_s: float = DEFAULT_HOP_S

    def __post_init__(self) -> None:
        if not (isinstance(self.window_len_s, (int, float)) and self.window_len_s > 0):
            raise DomainError(f"window_len_s must be > 0, got {self.window_len_s!r}")
        if not (isinstance(self.hop_s, (int, float)) and self.hop_s > 0):
            raise DomainError(f"hop_s must be > 0, got {self.hop_s!r}")


def window_count(duration_s: float, cfg: WindowingConfig) -> int:
    """Number of windows for a clip; short clips always yield one."""

    if duration_s < cfg.window_len_s:
        return 1
    return int(math.floor((duration_s - cfg.window_len_s) / cfg.hop_s)) + 1


def generate_windows(duration_s: float, cfg: WindowingConfig) -> list[WindowSpec]:
    """Enumerate window specs for a clip of ``duration_s`` seconds.

    Full-length windows start at i*hop while they fit; a clip shorter than
    the window length yields the single window [0, duration_s).  No trailing
    partial window is emitted for long clips.
    """

    if not (isinstance(duration_s, (int, float)) and math.isfinite(duration_s)):
        raise DomainError(f"duration_s must be a finite real, got {duration_s!r}")
    if duration_s <= 0:
        raise DomainError(f"duration_s must be > 0, got {duration_s!r}")
    if duration_s < cfg.window_len_s:
        return [WindowSpec(start_s=0.0, len_s=float(duration_s))]
    count = window_count(duration_s, cfg)
    return [WindowSpec(start_s=i * cfg.hop_s, len_s=cfg.window_len_s) for i in range(count)]


def truncated_window(duration_s: float, window_len_s: float) -> WindowSpec:
    """The single window used without sliding: the clip head up to one window."""

    if duration_s <= 0:
        raise DomainError(f"duration_s must be > 0, got {duration_s!r}")
    if window_len_s <= 0:
        raise DomainError(f"window_len_s must be > 0, got {window_len_s!r}")
    return WindowSpec(start_s=0.0, len_s=float(min(duration_s, window_len_s)))


def _as_unit(vec: Sequence[float] | np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(vec, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError(f"{what}: expected a non-empty 1-d vector")
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise DomainError(f"{what}: zero vector has no direction")
    return arr / norm


def cosine_similarity(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1]."""

    ua = _as_unit(a, "a")
    ub = _as_unit(b, "b")
    if ua.shape != ub.shape:
        raise DomainError(f"dimension mismatch: {ua.shape[0]} vs {ub.shape[0]}")
    # One code path for single and batched dots keeps results bit-identical.
    val = float(_kernels.dot_products(ua[None, :], ub)[0])
    return max(-1.0, min(1.0, val))


def clap_score(text_emb: EmbeddingRecord, audio_emb: EmbeddingRecord) -> float:
    """Cosine similarity of a caption embedding and one audio-window embedding."""

    if text_emb.model_id != audio_emb.model_id:
        raise DomainError(
            f"embedding model mismatch: {text_emb.model_id!r} vs {audio_emb.model_id!r}"
        )
    return cosine_similarity(text_emb.vector, audio_emb.vector)


def window_scores(
    text_emb: EmbeddingRecord, window_embs: Sequence[EmbeddingRecord]
) -> np.ndarray:
    """Per-window cosine scores, in window order."""

    if not window_embs:
        raise DomainError("window_embs must be non-empty")
    for i, emb in enumerate(window_embs):
        if emb.model_id != text_emb.model_id:
            raise DomainError(
                f"embedding model mismatch at window {i}: "
                f"{emb.model_id!r} vs {text_emb.model_id!r}"
            )
    ut = _as_unit(text_emb.vector, "text embedding")
    mat = np.asarray([e.vector for e in window_embs], dtype=np.float64)
    if mat.ndim != 2 or mat.shape[1] != ut.shape[0]:
        raise DomainError(
            f"dimension mismatch: windows {mat.shape} vs text ({ut.shape[0]},)"
        )
    norms = np.linalg.norm(mat, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.nonzero(norms == 0.0)[0][0])
        raise DomainError(f"window {bad}: zero vector has no direction")
    vals = _kernels.dot_products(mat / norms[:, None], ut)
    return np.clip(vals, -1.0, 1.0)


def pool(scores: Sequence[float] | np.ndarray, strategy: str) -> float:
    """Pool per-window scores: max, arithmetic mean, or pass-through.

    ``none`` requires exactly one score.  The mean uses exact summation so
    the result does not depend on window order.
    """

    vals = [float(s) for s in scores]
    if not vals:
        raise DomainError("cannot pool an empty score list")
    if strategy == "max":
        return max(vals)
    if strategy == "avg":
        return math.fsum(vals) / len(vals)
    if strategy == "none":
        if len(vals) != 1:
            raise DomainError(f"'none' pooling expects exactly one score, got {len(vals)}")
        return vals[0]
    raise DomainError(f"unknown pooling strategy: {strategy!r}")


def s_clap_score(
    text_emb: EmbeddingRecord,
    window_embs: Sequence[EmbeddingRecord],
    strategy: str = "max",
) -> float:
    """Sliding-window CLAP score: pooled per-window cosine similarity."""

    return pool(window_scores(text_emb, window_embs), strategy)
