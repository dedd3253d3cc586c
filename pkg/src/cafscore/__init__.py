"""Reference-free evaluation of audio captions and generated audio.

Three scores per (audio, caption) pair: S-CLAP (pooled sliding-window
embedding similarity), FLEUR (expected value of a judge model's digit
probabilities), and CAF (their convex fusion).  A harness measures agreement
with human preferences and ratings, backed by file or HTTP model adapters
and a content-addressed inference cache.
"""

from __future__ import annotations

__version__ = "0.1.0"

from ._kernels import KERNEL_BACKEND
from .errors import (
    BackendError,
    ConfigError,
    DataError,
    DomainError,
    EngineError,
    ExtractionError,
    PartialEvaluationError,
    RecordAbsentError,
    TransportError,
    UndefinedCorrelationError,
    ValidationFailure,
)
from .fleur import (
    build_caption_prompt,
    build_tta_prompt,
    distribution_entropy,
    extract_digit_distributions,
    fleur_score,
    parse_raw_score,
)
from .fusion import DEFAULT_ALPHA, DEFAULT_ALPHA_GRID, AlphaPolicy, caf_score, resolve_alpha
from .records import (
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
    RawScore,
    ScoreBundle,
    TokenStep,
    WindowSpec,
    decode_record,
    encode_record,
    iter_records,
    read_records,
    validate_record,
    write_records,
)
from .stats import average_ranks, kendall_tau, pearson, spearman
from .windowing import (
    WindowingConfig,
    clap_score,
    cosine_similarity,
    default_window_len,
    generate_windows,
    pool,
    s_clap_score,
    truncated_window,
    window_count,
    window_scores,
)

__all__ = [
    "AlphaPolicy",
    "AudioClipRef",
    "AudioWindowSubject",
    "BackendError",
    "CaptionCandidate",
    "CaptionSubject",
    "ConfigError",
    "DEFAULT_ALPHA",
    "DEFAULT_ALPHA_GRID",
    "DataError",
    "DigitDistribution",
    "DomainError",
    "EmbeddingRecord",
    "EngineError",
    "ExtractionError",
    "GenerationTrace",
    "KERNEL_BACKEND",
    "PartialEvaluationError",
    "PreferenceItem",
    "Provenance",
    "RatingItem",
    "RawScore",
    "RecordAbsentError",
    "ScoreBundle",
    "TokenStep",
    "TransportError",
    "UndefinedCorrelationError",
    "ValidationFailure",
    "WindowSpec",
    "WindowingConfig",
    "average_ranks",
    "build_caption_prompt",
    "build_tta_prompt",
    "caf_score",
    "clap_score",
    "cosine_similarity",
    "decode_record",
    "default_window_len",
    "distribution_entropy",
    "encode_record",
    "extract_digit_distributions",
    "fleur_score",
    "generate_windows",
    "iter_records",
    "kendall_tau",
    "parse_raw_score",
    "pearson",
    "pool",
    "read_records",
    "resolve_alpha",
    "s_clap_score",
    "spearman",
    "truncated_window",
    "validate_record",
    "window_count",
    "window_scores",
    "write_records",
    "__version__",
]
