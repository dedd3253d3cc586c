"""Model backends and the content-addressed inference cache.

Backends produce interchange records for two request kinds: caption/window
embeddings and greedy generation traces.  A file backend replays records
exported ahead of time; an HTTP backend talks to a live adapter process.
Every fetch goes through the cache first, so a warm run touches no backend
at all.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable
from urllib.parse import urlparse

import requests

from .errors import (
    BackendError,
    ConfigError,
    RecordAbsentError,
    TransportError,
    ValidationFailure,
)
from .records import (
    AudioWindowSubject,
    CaptionSubject,
    EmbeddingRecord,
    GenerationTrace,
    decode_record,
    dumps_record,
    encode_record,
    loads_record,
    validate_record,
)

DEFAULT_CACHE_DIR = "~/.cache/cafscore"
CACHE_ENV_VAR = "CAF_CACHE_DIR"


def resolve_cache_dir(explicit: str | None = None) -> Path:
    """Cache location: explicit flag/config wins, then $CAF_CACHE_DIR, then default."""

    if explicit:
        return Path(explicit).expanduser()
    env = os.environ.get(CACHE_ENV_VAR)
    if env:
        return Path(env).expanduser()
    return Path(DEFAULT_CACHE_DIR).expanduser()


def canonical_json(obj: Any) -> str:
    """Canonical form hashed for cache keys: sorted keys, no whitespace."""

    return json.dumps(obj, ensure_ascii=True, sort_keys=True, separators=(",", ":"))


def subject_payload(subject: AudioWindowSubject | CaptionSubject) -> dict[str, Any]:
    if isinstance(subject, AudioWindowSubject):
        return {
            "audio_id": subject.audio_id,
            "window": {"start_s": subject.window.start_s, "len_s": subject.window.len_s},
        }
    if isinstance(subject, CaptionSubject):
        out: dict[str, Any] = {"caption_id": subject.caption_id}
        if subject.text is not None:
            out["text"] = subject.text
        return out
    raise BackendError(f"unsupported subject: {subject!r}")


def cache_key(
    model_id: str, request_kind: str, payload: dict[str, Any], template_version: str = ""
) -> str:
    """Content address of one inference request."""

    blob = canonical_json(
        {
            "model_id": model_id,
            "request_kind": request_kind,
            "payload": payload,
            "template_version": template_version,
        }
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class EvictionSummary:
    evicted: int
    evicted_bytes: int
    kept: int
    remaining_bytes: int


class RecordCache:
    """Two-level content-addressed store of interchange records on disk."""

    def __init__(self, root: str | Path):
        self.root = Path(root).expanduser()

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / key[2:4] / f"{key}.json"

    def get(self, key: str):
        path = self._path(key)
        try:
            line = path.read_text(encoding="utf-8")
        except OSError:
            return None
        try:
            rec = loads_record(line)
        except Exception:
            return None  # a corrupt entry is a miss, not a crash
        try:
            os.utime(path)  # recency for LRU eviction
        except OSError:
            pass
        return rec

    def put(self, key: str, record) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(f".{path.name}.{os.getpid()}.{threading.get_ident()}.tmp")
        data = dumps_record(record)
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)  # readers see the old entry or the new, never a torn write

    def keys(self) -> list[str]:
        if not self.root.exists():
            return []
        return sorted(p.stem for p in self.root.glob("*/*/*.json"))

    def total_bytes(self) -> int:
        if not self.root.exists():
            return 0
        return sum(p.stat().st_size for p in self.root.glob("*/*/*.json"))

    def gc(self, max_bytes: int, pinned: frozenset[str] | set[str] = frozenset()) -> EvictionSummary:
        """Evict least-recently-used entries until total size fits ``max_bytes``.

        Pinned keys (in-flight work) are never evicted even when the budget
        stays unmet.
        """

        if max_bytes < 0:
            raise ValueError(f"max_bytes must be >= 0, got {max_bytes}")
        entries = []
        total = 0
        if self.root.exists():
            for p in self.root.glob("*/*/*.json"):
                st = p.stat()
                entries.append((st.st_mtime_ns, st.st_size, p))
                total += st.st_size
        # oldest first; path as deterministic tiebreak
        entries.sort(key=lambda e: (e[0], str(e[2])))
        evicted = 0
        evicted_bytes = 0
        for _, size, p in entries:
            if total <= max_bytes:
                break
            if p.stem in pinned:
                continue
            try:
                p.unlink()
            except OSError:
                continue
            total -= size
            evicted += 1
            evicted_bytes += size
        return EvictionSummary(
            evicted=evicted,
            evicted_bytes=evicted_bytes,
            kept=len(entries) - evicted,
            remaining_bytes=total,
        )


@dataclass(frozen=True)
class BackendSpec:
    """Declarative backend description from the run configuration."""

    name: str
    model_id: str
    kind: str  # "file" | "http"
    path: str | None = None
    base_url: str | None = None
    auth_token: str | None = None
    timeout_s: float = 30.0
    max_parallel: int = 4
    retries: int = 2

    def __post_init__(self) -> None:
        if self.kind not in ("file", "http"):
            raise ConfigError(f"backend {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == "file":
            if not self.path:
                raise ConfigError(f"backend {self.name!r}: file backends need a path")
        else:
            url = urlparse(self.base_url or "")
            if url.scheme not in ("http", "https") or not url.netloc:
                raise ConfigError(
                    f"backend {self.name!r}: base_url must be an http(s) URL,"
                    f" got {self.base_url!r}"
                )
        if self.max_parallel < 1:
            raise ConfigError(f"backend {self.name!r}: max_parallel must be >= 1")
        if self.retries < 0:
            raise ConfigError(f"backend {self.name!r}: retries must be >= 0")
        if self.timeout_s <= 0:
            raise ConfigError(f"backend {self.name!r}: timeout_s must be > 0")


class Backend:
    """Shared concurrency bound; subclasses implement the two fetch kinds."""

    def __init__(self, spec: BackendSpec):
        self.spec = spec
        self.limiter = threading.BoundedSemaphore(spec.max_parallel)

    def get_embedding(self, subject: AudioWindowSubject | CaptionSubject) -> EmbeddingRecord:
        raise NotImplementedError

    def get_trace(self, prompt: str, top_logprobs_k: int) -> GenerationTrace:
        raise NotImplementedError


def _window_key(start_s: float, len_s: float) -> tuple[str, str]:
    return (repr(float(start_s)), repr(float(len_s)))


class FileBackend(Backend):
    """Replays embeddings and traces exported to a JSON Lines file.

    Records of other kinds in the same file are ignored, so one export can
    carry e.g. traces and digit distributions side by side.
    """

    def __init__(self, spec: BackendSpec):
        super().__init__(spec)
        self._lock = threading.Lock()
        self._loaded = False
        self._embeddings: dict[tuple, EmbeddingRecord] = {}
        self._traces: dict[str, GenerationTrace] = {}

    def _ensure_loaded(self) -> None:
        with self._lock:
            if self._loaded:
                return
            path = Path(self.spec.path).expanduser()
            if not path.exists():
                raise BackendError(f"backend {self.spec.name!r}: no such file: {path}")
            from .records import iter_records

            for _, rec in iter_records(path):
                if isinstance(rec, EmbeddingRecord):
                    if rec.model_id != self.spec.model_id:
                        continue
                    subj = rec.subject
                    if isinstance(subj, AudioWindowSubject):
                        key = ("audio", subj.audio_id, *_window_key(subj.window.start_s, subj.window.len_s))
                    elif isinstance(subj, CaptionSubject):
                        key = ("caption", subj.caption_id)
                    else:
                        continue
                    self._embeddings[key] = rec
                elif isinstance(rec, GenerationTrace):
                    if rec.model_id != self.spec.model_id:
                        continue
                    self._traces[rec.prompt_hash] = rec
            self._loaded = True

    def get_embedding(self, subject: AudioWindowSubject | CaptionSubject) -> EmbeddingRecord:
        self._ensure_loaded()
        if isinstance(subject, AudioWindowSubject):
            key = (
                "audio",
                subject.audio_id,
                *_window_key(subject.window.start_s, subject.window.len_s),
            )
            desc = (
                f"embedding for audio {subject.audio_id!r} window"
                f" [{subject.window.start_s}, +{subject.window.len_s})"
                f" from {self.spec.model_id!r}"
            )
        else:
            key = ("caption", subject.caption_id)
            desc = f"embedding for caption {subject.caption_id!r} from {self.spec.model_id!r}"
        rec = self._embeddings.get(key)
        if rec is None:
            raise RecordAbsentError(desc)
        return rec

    def get_trace(self, prompt: str, top_logprobs_k: int) -> GenerationTrace:
        self._ensure_loaded()
        h = prompt_hash(prompt)
        rec = self._traces.get(h)
        if rec is None:
            raise RecordAbsentError(f"trace for prompt {h[:12]}... from {self.spec.model_id!r}")
        return rec


class HttpBackend(Backend):
    """Talks to a live adapter over the POST /v1/embed | /v1/generate protocol."""

    def __init__(self, spec: BackendSpec, session: Any | None = None):
        super().__init__(spec)
        if session is None:
            session = requests.Session()
            # Local adapters must not be routed through proxy environments.
            session.trust_env = False
        self.session = session

    def _post(self, route: str, body: dict[str, Any]) -> dict[str, Any]:
        url = self.spec.base_url.rstrip("/") + route
        headers = {}
        if self.spec.auth_token:
            headers["Authorization"] = f"Bearer {self.spec.auth_token}"
        try:
            resp = self.session.post(url, json=body, headers=headers, timeout=self.spec.timeout_s)
        except requests.RequestException as exc:
            raise TransportError(f"backend {self.spec.name!r}: {exc}") from exc
        if resp.status_code >= 500:
            raise TransportError(
                f"backend {self.spec.name!r}: server error {resp.status_code} on {route}"
            )
        if resp.status_code != 200:
            raise BackendError(
                f"backend {self.spec.name!r}: HTTP {resp.status_code} on {route}"
            )
        try:
            obj = resp.json()
        except ValueError as exc:
            raise TransportError(f"backend {self.spec.name!r}: non-JSON response") from exc
        if not isinstance(obj, dict):
            raise BackendError(f"backend {self.spec.name!r}: response is not an object")
        return obj

    def get_embedding(self, subject: AudioWindowSubject | CaptionSubject) -> EmbeddingRecord:
        obj = self._post(
            "/v1/embed", {"model_id": self.spec.model_id, "subject": subject_payload(subject)}
        )
        rec = decode_record(obj)
        if not isinstance(rec, EmbeddingRecord):
            raise BackendError(f"backend {self.spec.name!r}: expected an embedding record")
        return rec

    def get_trace(self, prompt: str, top_logprobs_k: int) -> GenerationTrace:
        obj = self._post(
            "/v1/generate",
            {
                "model_id": self.spec.model_id,
                "prompt": prompt,
                "prompt_hash": prompt_hash(prompt),
                "temperature": 0.0,
                "top_logprobs": top_logprobs_k,
            },
        )
        rec = decode_record(obj)
        if not isinstance(rec, GenerationTrace):
            raise BackendError(f"backend {self.spec.name!r}: expected a raw_gen record")
        return rec

    def health(self) -> dict[str, Any]:
        url = self.spec.base_url.rstrip("/") + "/v1/health"
        try:
            resp = self.session.get(url, timeout=self.spec.timeout_s)
        except requests.RequestException as exc:
            raise TransportError(f"backend {self.spec.name!r}: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(f"backend {self.spec.name!r}: health {resp.status_code}")
        return resp.json()


def build_backend(spec: BackendSpec) -> Backend:
    if spec.kind == "file":
        return FileBackend(spec)
    return HttpBackend(spec)


class Fetcher:
    """Cache-first record fetching with retries and per-backend concurrency bounds.

    ``sleep`` and ``rng`` are injectable so retry behavior is testable without
    real waiting.
    """

    def __init__(
        self,
        cache: RecordCache | None,
        sleep: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
        backoff_base_s: float = 0.2,
    ):
        self.cache = cache
        self._sleep = sleep
        self._rng = rng or random.Random(0)
        self._backoff_base_s = backoff_base_s
        self._pin_lock = threading.Lock()
        self._pinned: dict[str, int] = {}
        self.used_keys: set[str] = set()

    def pinned_keys(self) -> frozenset[str]:
        with self._pin_lock:
            return frozenset(self._pinned)

    def _pin(self, key: str) -> None:
        with self._pin_lock:
            self._pinned[key] = self._pinned.get(key, 0) + 1

    def _unpin(self, key: str) -> None:
        with self._pin_lock:
            n = self._pinned.get(key, 0) - 1
            if n <= 0:
                self._pinned.pop(key, None)
            else:
                self._pinned[key] = n

    def _with_retries(self, call: Callable[[], Any], retries: int) -> Any:
        attempt = 0
        while True:
            try:
                return call()
            except TransportError:
                if attempt >= retries:
                    raise
                delay = self._backoff_base_s * (2.0**attempt)
                self._sleep(delay * (1.0 + self._rng.random()))
                attempt += 1

    def _fetch(self, backend: Backend, key: str, call: Callable[[], Any], check) -> Any:
        self._pin(key)
        try:
            if self.cache is not None:
                hit = self.cache.get(key)
                if hit is not None:
                    self.used_keys.add(key)
                    return hit
            with backend.limiter:
                rec = self._with_retries(call, backend.spec.retries)
            check(rec)
            violations = validate_record(rec)
            if violations:
                raise ValidationFailure(violations)
            if self.cache is not None:
                self.cache.put(key, rec)
            self.used_keys.add(key)
            return rec
        finally:
            self._unpin(key)

    def fetch_embedding(
        self, backend: Backend, subject: AudioWindowSubject | CaptionSubject
    ) -> EmbeddingRecord:
        payload = subject_payload(subject)
        # the caption text is identified by its id in the address; the text
        # itself travels to the backend but does not widen the key
        addr = {k: v for k, v in payload.items() if k != "text"}
        key = cache_key(backend.spec.model_id, "embed", addr)

        def check(rec) -> None:
            if not isinstance(rec, EmbeddingRecord):
                raise ValidationFailure(["not an embedding record"])
            if rec.model_id != backend.spec.model_id:
                raise ValidationFailure(
                    [f"model_id mismatch: {rec.model_id!r} != {backend.spec.model_id!r}"]
                )

        return self._fetch(backend, key, lambda: backend.get_embedding(subject), check)

    def fetch_trace(
        self,
        backend: Backend,
        prompt: str,
        template_version: str,
        top_logprobs_k: int = 20,
        require_logprobs: bool = True,
    ) -> GenerationTrace:
        key = cache_key(
            backend.spec.model_id,
            "generate",
            {"prompt_hash": prompt_hash(prompt)},
            template_version=template_version,
        )

        def check(rec) -> None:
            if not isinstance(rec, GenerationTrace):
                raise ValidationFailure(["not a raw_gen record"])
            if rec.model_id != backend.spec.model_id:
                raise ValidationFailure(
                    [f"model_id mismatch: {rec.model_id!r} != {backend.spec.model_id!r}"]
                )
            if require_logprobs and not any(s.top_logprobs for s in rec.token_steps):
                raise ValidationFailure(["trace carries no top_logprobs"])

        return self._fetch(
            backend, key, lambda: backend.get_trace(prompt, top_logprobs_k), check
        )


def cache_digest(keys: set[str] | frozenset[str]) -> str:
    """Order-independent digest of the cache keys a run consumed."""

    h = hashlib.sha256()
    for key in sorted(keys):
        h.update(key.encode("ascii"))
        h.update(b"\n")
    return h.hexdigest()


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


__all__ = [
    "Backend",
    "BackendSpec",
    "CACHE_ENV_VAR",
    "EvictionSummary",
    "Fetcher",
    "FileBackend",
    "HttpBackend",
    "RecordCache",
    "build_backend",
    "cache_digest",
    "cache_key",
    "canonical_json",
    "encode_record",
    "file_sha256",
    "prompt_hash",
    "resolve_cache_dir",
    "subject_payload",
]
