"""TOML run configuration: models, backends, fusion, dataset, output."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

try:  # 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - version dependent
    import tomli as tomllib

from .backends import BackendSpec
from .errors import ConfigError
from .fleur import CAPTION_PROMPT_VERSION, ENTROPY_MODES, TTA_PROMPT_VERSION
from .fusion import DEFAULT_ALPHA, DEFAULT_ALPHA_GRID, AlphaPolicy
from .harness import TIE_POLICIES
from .windowing import DEFAULT_HOP_S, POOLING_STRATEGIES, default_window_len

_TIE_ALIASES = {"zero": "zero_credit", "half": "half_credit"}


@dataclass(frozen=True)
class ClapModelConfig:
    name: str
    model_id: str
    backend: str
    window_len_s: float
    hop_s: float = DEFAULT_HOP_S


@dataclass(frozen=True)
class LalmModelConfig:
    name: str
    model_id: str
    backend: str
    prompt: str = "caption"  # "caption" | "tta"
    top_logprobs_k: int = 20

    @property
    def template_version(self) -> str:
        return CAPTION_PROMPT_VERSION if self.prompt == "caption" else TTA_PROMPT_VERSION


@dataclass(frozen=True)
class RunConfig:
    backends: dict[str, BackendSpec] = field(default_factory=dict)
    clap_models: dict[str, ClapModelConfig] = field(default_factory=dict)
    lalm_models: dict[str, LalmModelConfig] = field(default_factory=dict)
    alpha: AlphaPolicy = field(default_factory=lambda: AlphaPolicy.fixed(DEFAULT_ALPHA))
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHA_GRID
    pooling: str = "max"
    tie_policy: str = "zero_credit"
    entropy_mode: str = "normalized_first_place"
    dataset_path: str | None = None
    output_dir: str = "out"
    cache_dir: str | None = None

    def alpha_label(self) -> str:
        return "adaptive" if self.alpha.kind == "adaptive" else repr(self.alpha.alpha)

    def resolved_fields(self) -> dict[str, Any]:
        """The settings that identify a run, for fingerprints and reports."""

        return {
            "clap_models": {
                name: {
                    "model_id": m.model_id,
                    "window_len_s": m.window_len_s,
                    "hop_s": m.hop_s,
                }
                for name, m in sorted(self.clap_models.items())
            },
            "lalm_models": {
                name: {
                    "model_id": m.model_id,
                    "prompt_template": m.template_version,
                    "top_logprobs_k": m.top_logprobs_k,
                }
                for name, m in sorted(self.lalm_models.items())
            },
            "alpha": self.alpha_label(),
            "alpha_grid": list(self.alpha_grid),
            "pooling": self.pooling,
            "tie_policy": self.tie_policy,
            "entropy_mode": self.entropy_mode,
        }


def _expect_table(obj: Any, where: str) -> dict[str, Any]:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected a table")
    return obj


def _backend_spec(name: str, tab: dict[str, Any]) -> BackendSpec:
    kind = tab.get("kind")
    if kind not in ("file", "http"):
        raise ConfigError(f"backends.{name}: kind must be 'file' or 'http', got {kind!r}")
    model_id = tab.get("model_id")
    if not isinstance(model_id, str) or not model_id:
        raise ConfigError(f"backends.{name}: model_id must be a non-empty string")
    auth_token = None
    auth_env = tab.get("auth_env")
    if auth_env is not None:
        if not isinstance(auth_env, str) or not auth_env:
            raise ConfigError(f"backends.{name}: auth_env must be a non-empty string")
        auth_token = os.environ.get(auth_env)
    try:
        return BackendSpec(
            name=name,
            model_id=model_id,
            kind=kind,
            path=tab.get("path"),
            base_url=tab.get("base_url"),
            auth_token=auth_token,
            timeout_s=float(tab.get("timeout_s", 30.0)),
            max_parallel=int(tab.get("max_parallel", 4)),
            retries=int(tab.get("retries", 2)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"backends.{name}: {exc}") from exc


def _clap_model(name: str, tab: dict[str, Any], backends: dict[str, BackendSpec]) -> ClapModelConfig:
    model_id = tab.get("model_id")
    if not isinstance(model_id, str) or not model_id:
        raise ConfigError(f"clap_models.{name}: model_id must be a non-empty string")
    backend = tab.get("backend")
    if backend not in backends:
        raise ConfigError(f"clap_models.{name}: unknown backend {backend!r}")
    window = tab.get("window_len_s", default_window_len(model_id))
    hop = tab.get("hop_s", DEFAULT_HOP_S)
    if not isinstance(window, (int, float)) or window <= 0:
        raise ConfigError(f"clap_models.{name}: window_len_s must be > 0")
    if not isinstance(hop, (int, float)) or hop <= 0:
        raise ConfigError(f"clap_models.{name}: hop_s must be > 0")
    return ClapModelConfig(
        name=name,
        model_id=model_id,
        backend=backend,
        window_len_s=float(window),
        hop_s=float(hop),
    )


def _lalm_model(name: str, tab: dict[str, Any], backends: dict[str, BackendSpec]) -> LalmModelConfig:
    model_id = tab.get("model_id")
    if not isinstance(model_id, str) or not model_id:
        raise ConfigError(f"lalm_models.{name}: model_id must be a non-empty string")
    backend = tab.get("backend")
    if backend not in backends:
        raise ConfigError(f"lalm_models.{name}: unknown backend {backend!r}")
    prompt = tab.get("prompt", "caption")
    if prompt not in ("caption", "tta"):
        raise ConfigError(f"lalm_models.{name}: prompt must be 'caption' or 'tta'")
    k = tab.get("top_logprobs_k", 20)
    if not isinstance(k, int) or k < 1:
        raise ConfigError(f"lalm_models.{name}: top_logprobs_k must be a positive integer")
    return LalmModelConfig(
        name=name, model_id=model_id, backend=backend, prompt=prompt, top_logprobs_k=k
    )


def normalize_tie_policy(text: str) -> str:
    policy = _TIE_ALIASES.get(text, text)
    if policy not in TIE_POLICIES:
        raise ConfigError(f"tie_policy must be one of {TIE_POLICIES} (or zero/half)")
    return policy


def load_config(path: str | Path) -> RunConfig:
    """Parse and cross-check a TOML run configuration."""

    p = Path(path)
    try:
        with open(p, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: invalid TOML: {exc}") from exc

    backends = {
        name: _backend_spec(name, _expect_table(tab, f"backends.{name}"))
        for name, tab in _expect_table(doc.get("backends", {}), "backends").items()
    }
    clap_models = {
        name: _clap_model(name, _expect_table(tab, f"clap_models.{name}"), backends)
        for name, tab in _expect_table(doc.get("clap_models", {}), "clap_models").items()
    }
    lalm_models = {
        name: _lalm_model(name, _expect_table(tab, f"lalm_models.{name}"), backends)
        for name, tab in _expect_table(doc.get("lalm_models", {}), "lalm_models").items()
    }
    if not clap_models and not lalm_models:
        raise ConfigError("configure at least one model under [clap_models] or [lalm_models]")

    run = _expect_table(doc.get("run", {}), "run")
    try:
        alpha = AlphaPolicy.parse(run.get("alpha", DEFAULT_ALPHA))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    grid_raw = run.get("alpha_grid", list(DEFAULT_ALPHA_GRID))
    if not isinstance(grid_raw, list) or not grid_raw:
        raise ConfigError("run.alpha_grid must be a non-empty array of reals in [0, 1]")
    grid: list[float] = []
    for v in grid_raw:
        if not isinstance(v, (int, float)) or not 0.0 <= float(v) <= 1.0:
            raise ConfigError(f"run.alpha_grid: value {v!r} outside [0, 1]")
        grid.append(float(v))
    pooling = run.get("pooling", "max")
    if pooling not in POOLING_STRATEGIES:
        raise ConfigError(f"run.pooling must be one of {POOLING_STRATEGIES}")
    tie_policy = normalize_tie_policy(run.get("tie_policy", "zero_credit"))
    entropy_mode = run.get("entropy_mode", "normalized_first_place")
    if entropy_mode not in ENTROPY_MODES:
        raise ConfigError(f"run.entropy_mode must be one of {ENTROPY_MODES}")

    dataset_path: str | None = None
    ds = doc.get("dataset")
    if ds is not None:
        ds = _expect_table(ds, "dataset")
        dp = ds.get("path")
        if not isinstance(dp, str) or not dp:
            raise ConfigError("dataset.path must be a non-empty string")
        dataset_path = dp

    output_dir = run.get("output_dir", "out")
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("run.output_dir must be a non-empty string")
    cache_dir = run.get("cache_dir")
    if cache_dir is not None and (not isinstance(cache_dir, str) or not cache_dir):
        raise ConfigError("run.cache_dir must be a non-empty string when set")

    return RunConfig(
        backends=backends,
        clap_models=clap_models,
        lalm_models=lalm_models,
        alpha=alpha,
        alpha_grid=tuple(grid),
        pooling=pooling,
        tie_policy=tie_policy,
        entropy_mode=entropy_mode,
        dataset_path=dataset_path,
        output_dir=output_dir,
        cache_dir=cache_dir,
    )


def apply_overrides(
    cfg: RunConfig,
    dataset: str | None = None,
    out: str | None = None,
    alpha: str | None = None,
    pooling: str | None = None,
    tie_policy: str | None = None,
    cache: str | None = None,
) -> RunConfig:
    """Fold CLI flags over a loaded configuration."""

    if dataset is not None:
        cfg = replace(cfg, dataset_path=dataset)
    if out is not None:
        cfg = replace(cfg, output_dir=out)
    if alpha is not None:
        try:
            cfg = replace(cfg, alpha=AlphaPolicy.parse(alpha))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if pooling is not None:
        if pooling not in POOLING_STRATEGIES:
            raise ConfigError(f"--pooling must be one of {POOLING_STRATEGIES}")
        cfg = replace(cfg, pooling=pooling)
    if tie_policy is not None:
        cfg = replace(cfg, tie_policy=normalize_tie_policy(tie_policy))
    if cache is not None:
        cfg = replace(cfg, cache_dir=cache)
    return cfg
