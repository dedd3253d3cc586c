from __future__ import annotations

import hashlib
import json
import os
import threading

import pytest

from cafscore.backends import (
    BackendSpec,
    Fetcher,
    FileBackend,
    HttpBackend,
    RecordCache,
    build_backend,
    cache_digest,
    cache_key,
    canonical_json,
    file_sha256,
    prompt_hash,
    resolve_cache_dir,
)
from cafscore.errors import (
    BackendError,
    ConfigError,
    RecordAbsentError,
    TransportError,
    ValidationFailure,
)
from cafscore.records import (
    AudioWindowSubject,
    CaptionSubject,
    EmbeddingRecord,
    GenerationTrace,
    TokenStep,
    WindowSpec,
    dumps_record,
    encode_record,
    write_records,
)


def _embedding(model_id="toy-clap", caption_id="c1", dim=3, vec=(1.0, 0.0, 0.0)):
    return EmbeddingRecord(
        subject=CaptionSubject(caption_id=caption_id),
        model_id=model_id,
        dim=dim,
        vector=tuple(vec),
    )


def _audio_embedding(model_id="toy-clap", audio_id="a1", start=0.0, length=10.0):
    return EmbeddingRecord(
        subject=AudioWindowSubject(audio_id=audio_id, window=WindowSpec(start, length)),
        model_id=model_id,
        dim=3,
        vector=(0.0, 1.0, 0.0),
    )


def _trace(model_id="toy-lalm", prompt="rate this"):
    return GenerationTrace(
        model_id=model_id,
        prompt_hash=prompt_hash(prompt),
        greedy_text="0.85",
        token_steps=(
            TokenStep("0", {"0": -0.01}),
            TokenStep(".", {".": -0.01}),
            TokenStep("85", {"85": -0.2, "9": -1.9}),
        ),
    )


def _file_spec(path, model_id="toy-clap", **kw):
    return BackendSpec(name="toy", model_id=model_id, kind="file", path=str(path), **kw)


def _http_spec(**kw):
    kw.setdefault("base_url", "http://127.0.0.1:9")
    return BackendSpec(name="live", model_id="toy-clap", kind="http", **kw)


def test_canonical_json_is_sorted_and_compact() -> None:
    assert canonical_json({"b": 1, "a": [1.5, None]}) == '{"a":[1.5,null],"b":1}'


def test_cache_key_matches_hand_built_digest() -> None:
    payload = {"caption_id": "c1"}
    key = cache_key("toy-clap", "embed", payload)
    blob = '{"model_id":"toy-clap","payload":{"caption_id":"c1"},"request_kind":"embed","template_version":""}'
    assert key == hashlib.sha256(blob.encode()).hexdigest()
    # pinned: any change to the key layout breaks warm caches in the field
    frozen = cache_key(
        "toy-clap", "embed", {"audio_id": "a1", "window": {"start_s": "0.0", "len_s": "10.0"}}
    )
    assert frozen == "6cf625bddb4a594473928d814d899c0edb2d768fb254195618858f480152e999"
    assert cache_key("toy-clap", "embed", payload) != cache_key(
        "toy-clap", "embed", payload, template_version="caption_v1"
    )


def test_resolve_cache_dir_precedence(monkeypatch, tmp_path) -> None:
    monkeypatch.setenv("CAF_CACHE_DIR", str(tmp_path / "envdir"))
    assert resolve_cache_dir(str(tmp_path / "flag")) == tmp_path / "flag"
    assert resolve_cache_dir(None) == tmp_path / "envdir"
    monkeypatch.delenv("CAF_CACHE_DIR")
    assert resolve_cache_dir(None).name == "cafscore"


def test_cache_roundtrip_and_fanout(tmp_path) -> None:
    cache = RecordCache(tmp_path)
    rec = _embedding()
    key = "ab" * 32
    assert cache.get(key) is None
    cache.put(key, rec)
    assert cache.get(key) == rec
    stored = tmp_path / key[:2] / key[2:4] / f"{key}.json"
    assert stored.is_file()
    assert not list(tmp_path.rglob("*.tmp"))  # writes land via rename
    assert cache.keys() == [key]
    assert cache.total_bytes() == stored.stat().st_size


def test_cache_corrupt_entry_is_a_miss(tmp_path) -> None:
    cache = RecordCache(tmp_path)
    key = "cd" * 32
    cache.put(key, _embedding())
    path = tmp_path / key[:2] / key[2:4] / f"{key}.json"
    path.write_text("{not json", encoding="utf-8")
    assert cache.get(key) is None


def test_cache_gc_is_lru_and_respects_pins(tmp_path) -> None:
    cache = RecordCache(tmp_path)
    keys = [format(i, "x").zfill(64) for i in range(4)]
    for i, key in enumerate(keys):
        cache.put(key, _embedding(caption_id=f"c{i}"))
        p = tmp_path / key[:2] / key[2:4] / f"{key}.json"
        os.utime(p, ns=(i * 10**9, i * 10**9))  # deterministic recency order
    size = cache.total_bytes() // 4

    summary = cache.gc(max_bytes=2 * size + 1, pinned={keys[0]})
    # oldest-first eviction would drop keys[0] and keys[1]; the pin saves keys[0]
    remaining = set(cache.keys())
    assert keys[0] in remaining
    assert keys[1] not in remaining and keys[2] not in remaining
    assert keys[3] in remaining
    assert summary.evicted == 2
    assert summary.kept == 2
    assert summary.remaining_bytes == cache.total_bytes()

    assert cache.gc(max_bytes=10**9).evicted == 0
    with pytest.raises(ValueError):
        cache.gc(max_bytes=-1)


def test_backend_spec_validation(tmp_path) -> None:
    with pytest.raises(ConfigError, match="unknown kind"):
        BackendSpec(name="x", model_id="m", kind="grpc")
    with pytest.raises(ConfigError, match="need a path"):
        BackendSpec(name="x", model_id="m", kind="file")
    with pytest.raises(ConfigError, match="http\\(s\\) URL"):
        BackendSpec(name="x", model_id="m", kind="http", base_url="ftp://host")
    with pytest.raises(ConfigError, match="http\\(s\\) URL"):
        BackendSpec(name="x", model_id="m", kind="http", base_url=None)
    with pytest.raises(ConfigError, match="max_parallel"):
        _file_spec(tmp_path / "f.jsonl", max_parallel=0)
    with pytest.raises(ConfigError, match="retries"):
        _file_spec(tmp_path / "f.jsonl", retries=-1)
    with pytest.raises(ConfigError, match="timeout"):
        _http_spec(timeout_s=0)
    assert isinstance(build_backend(_file_spec(tmp_path / "f.jsonl")), FileBackend)
    assert isinstance(build_backend(_http_spec()), HttpBackend)


def test_file_backend_replays_records(tmp_path) -> None:
    path = tmp_path / "records.jsonl"
    write_records(
        path,
        [
            _embedding(caption_id="c1"),
            _audio_embedding(audio_id="a1", start=0.0, length=10.0),
            _embedding(model_id="other-model", caption_id="c2"),
            _trace(model_id="toy-clap", prompt="p"),
        ],
    )
    backend = FileBackend(_file_spec(path))
    assert backend.get_embedding(CaptionSubject(caption_id="c1")).vector == (1.0, 0.0, 0.0)
    got = backend.get_embedding(
        AudioWindowSubject(audio_id="a1", window=WindowSpec(0.0, 10.0))
    )
    assert got.vector == (0.0, 1.0, 0.0)
    # records for other models do not leak in
    with pytest.raises(RecordAbsentError):
        backend.get_embedding(CaptionSubject(caption_id="c2"))
    assert backend.get_trace("p", top_logprobs_k=20).greedy_text == "0.85"
    with pytest.raises(RecordAbsentError, match="c9"):
        backend.get_embedding(CaptionSubject(caption_id="c9"))
    with pytest.raises(RecordAbsentError):
        backend.get_trace("unknown prompt", top_logprobs_k=20)


def test_file_backend_missing_file(tmp_path) -> None:
    backend = FileBackend(_file_spec(tmp_path / "absent.jsonl"))
    with pytest.raises(BackendError, match="no such file"):
        backend.get_embedding(CaptionSubject(caption_id="c1"))


class _Resp:
    def __init__(self, status_code=200, body=None, text=False):
        self.status_code = status_code
        self._body = body
        self._text = text

    def json(self):
        if self._text:
            raise ValueError("not json")
        return self._body


class _StubSession:
    """Scripted responses; records every request for assertions."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls.append({"url": url, "json": json, "headers": headers, "timeout": timeout})
        return self.responses.pop(0)

    def get(self, url, timeout=None):
        self.calls.append({"url": url, "timeout": timeout})
        return self.responses.pop(0)


def test_http_backend_embedding_and_auth() -> None:
    rec = _embedding()
    session = _StubSession([_Resp(200, encode_record(rec))])
    backend = HttpBackend(_http_spec(auth_token="sekrit"), session=session)
    got = backend.get_embedding(CaptionSubject(caption_id="c1", text="hello"))
    assert got == rec
    call = session.calls[0]
    assert call["url"] == "http://127.0.0.1:9/v1/embed"
    assert call["headers"] == {"Authorization": "Bearer sekrit"}
    assert call["json"]["subject"] == {"caption_id": "c1", "text": "hello"}
    assert call["json"]["model_id"] == "toy-clap"


def test_http_backend_generate_request_shape() -> None:
    trace = _trace()
    session = _StubSession([_Resp(200, encode_record(trace))])
    backend = HttpBackend(_http_spec(), session=session)
    got = backend.get_trace("rate this", top_logprobs_k=12)
    assert got == trace
    body = session.calls[0]["json"]
    assert body["prompt"] == "rate this"
    assert body["prompt_hash"] == prompt_hash("rate this")
    assert body["temperature"] == 0.0
    assert body["top_logprobs"] == 12
    assert session.calls[0]["headers"] == {}  # no token configured


def test_http_backend_error_mapping() -> None:
    spec = _http_spec()
    with pytest.raises(TransportError, match="server error 503"):
        HttpBackend(spec, session=_StubSession([_Resp(503)])).get_embedding(
            CaptionSubject(caption_id="c")
        )
    with pytest.raises(BackendError, match="HTTP 404"):
        HttpBackend(spec, session=_StubSession([_Resp(404)])).get_embedding(
            CaptionSubject(caption_id="c")
        )
    with pytest.raises(TransportError, match="non-JSON"):
        HttpBackend(spec, session=_StubSession([_Resp(200, text=True)])).get_embedding(
            CaptionSubject(caption_id="c")
        )
    with pytest.raises(BackendError, match="expected an embedding"):
        HttpBackend(spec, session=_StubSession([_Resp(200, encode_record(_trace()))])).get_embedding(
            CaptionSubject(caption_id="c")
        )
    health = HttpBackend(spec, session=_StubSession([_Resp(200, {"status": "ok"})]))
    assert health.health() == {"status": "ok"}


class _FlakyBackend(FileBackend):
    """Fails with a transport error a set number of times, then delegates."""

    def __init__(self, spec, failures):
        super().__init__(spec)
        self.failures = failures
        self.attempts = 0

    def get_embedding(self, subject):
        self.attempts += 1
        if self.attempts <= self.failures:
            raise TransportError("synthetic outage")
        return super().get_embedding(subject)


def test_fetcher_cache_first(tmp_path) -> None:
    path = tmp_path / "records.jsonl"
    write_records(path, [_embedding()])
    backend = _FlakyBackend(_file_spec(path, retries=0), failures=0)
    fetcher = Fetcher(RecordCache(tmp_path / "cache"), sleep=lambda s: None)
    subject = CaptionSubject(caption_id="c1")

    first = fetcher.fetch_embedding(backend, subject)
    assert backend.attempts == 1
    second = fetcher.fetch_embedding(backend, subject)
    assert second == first
    assert backend.attempts == 1  # warm hit never touches the backend
    assert len(fetcher.used_keys) == 1
    assert fetcher.pinned_keys() == frozenset()


def test_fetcher_retries_transport_errors(tmp_path) -> None:
    path = tmp_path / "records.jsonl"
    write_records(path, [_embedding()])
    delays: list[float] = []
    import random as _random

    fetcher = Fetcher(None, sleep=delays.append, rng=_random.Random(7))
    backend = _FlakyBackend(_file_spec(path, retries=3), failures=2)
    rec = fetcher.fetch_embedding(backend, CaptionSubject(caption_id="c1"))
    assert rec.model_id == "toy-clap"
    assert backend.attempts == 3
    assert len(delays) == 2
    # exponential base with jitter in [1, 2)
    assert 0.2 <= delays[0] < 0.4
    assert 0.4 <= delays[1] < 0.8
    assert delays[1] > delays[0]

    exhausted = _FlakyBackend(_file_spec(path, retries=1), failures=5)
    with pytest.raises(TransportError):
        fetcher.fetch_embedding(exhausted, CaptionSubject(caption_id="c1"))
    assert exhausted.attempts == 2  # initial try + one retry


def test_fetcher_rejects_wrong_model_and_bad_records(tmp_path) -> None:
    path = tmp_path / "records.jsonl"
    write_records(path, [_embedding(model_id="imposter")])
    backend = FileBackend(_file_spec(path, model_id="imposter"))
    fetcher = Fetcher(None)
    expected = FileBackend(_file_spec(path, model_id="toy-clap"))
    with pytest.raises(RecordAbsentError):
        fetcher.fetch_embedding(expected, CaptionSubject(caption_id="c1"))

    # a dim/vector mismatch must be caught before the record enters the cache
    bad = tmp_path / "bad.jsonl"
    rec = _embedding(dim=5)  # vector only has 3 entries
    bad.write_text(dumps_record(rec) + "\n", encoding="utf-8")
    cache = RecordCache(tmp_path / "cache")
    fetcher2 = Fetcher(cache)
    with pytest.raises(ValidationFailure) as err:
        fetcher2.fetch_embedding(
            FileBackend(_file_spec(bad)), CaptionSubject(caption_id="c1")
        )
    assert any("length" in v for v in err.value.violations)
    assert cache.keys() == []


def test_fetcher_requires_logprobs(tmp_path) -> None:
    path = tmp_path / "records.jsonl"
    bare = GenerationTrace(
        model_id="toy-lalm",
        prompt_hash=prompt_hash("p"),
        greedy_text="0.5",
        token_steps=(TokenStep("0.5", {}),),
    )
    write_records(path, [bare])
    backend = FileBackend(_file_spec(path, model_id="toy-lalm"))
    fetcher = Fetcher(None)
    with pytest.raises(ValidationFailure, match="top_logprobs"):
        fetcher.fetch_trace(backend, "p", template_version="caption_v1")
    got = fetcher.fetch_trace(backend, "p", template_version="caption_v1", require_logprobs=False)
    assert got.greedy_text == "0.5"


def test_fetcher_pins_inflight_keys(tmp_path) -> None:
    path = tmp_path / "records.jsonl"
    write_records(path, [_embedding()])
    seen: list[frozenset] = []

    class _Spy(FileBackend):
        def __init__(self, spec, fetcher_ref):
            super().__init__(spec)
            self.fetcher_ref = fetcher_ref

        def get_embedding(self, subject):
            seen.append(self.fetcher_ref["f"].pinned_keys())
            return super().get_embedding(subject)

    ref: dict = {}
    fetcher = Fetcher(None)
    ref["f"] = fetcher
    backend = _Spy(_file_spec(path), ref)
    fetcher.fetch_embedding(backend, CaptionSubject(caption_id="c1"))
    assert len(seen) == 1 and len(seen[0]) == 1  # pinned while the call ran
    assert fetcher.pinned_keys() == frozenset()  # released afterwards


def test_fetcher_bounds_parallelism(tmp_path) -> None:
    path = tmp_path / "records.jsonl"
    write_records(path, [_embedding()])
    spec = _file_spec(path, max_parallel=2)
    active = []
    peak = []
    lock = threading.Lock()
    go = threading.Event()

    class _Slow(FileBackend):
        def get_embedding(self, subject):
            with lock:
                active.append(1)
                peak.append(len(active))
            go.wait(0.5)
            with lock:
                active.pop()
            return super().get_embedding(subject)

    backend = _Slow(spec)
    fetcher = Fetcher(None)

    def work():
        fetcher.fetch_embedding(backend, CaptionSubject(caption_id="c1"))

    threads = [threading.Thread(target=work) for _ in range(6)]
    for t in threads:
        t.start()
    import time

    time.sleep(0.1)
    go.set()
    for t in threads:
        t.join()
    assert max(peak) <= 2


def test_cache_digest_order_independent() -> None:
    a = cache_digest({"k1", "k2", "k3"})
    b = cache_digest({"k3", "k1", "k2"})
    assert a == b
    assert a != cache_digest({"k1", "k2"})
    h = hashlib.sha256()
    for key in ["k1", "k2", "k3"]:
        h.update(key.encode())
        h.update(b"\n")
    assert a == h.hexdigest()


def test_file_sha256(tmp_path) -> None:
    p = tmp_path / "blob.bin"
    p.write_bytes(b"abc" * 40000)
    assert file_sha256(p) == hashlib.sha256(b"abc" * 40000).hexdigest()


def test_prompt_hash_matches_plain_sha() -> None:
    assert prompt_hash("xyz") == hashlib.sha256(b"xyz").hexdigest()
    assert json.loads('"\\u00e9"') == "é"  # sanity: the suite runs under utf-8
