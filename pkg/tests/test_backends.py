import json

import numpy as np
import pytest

from conftest import minimal_trace, write_trace

from ipiagent.backends import ScriptedBackend, load_trace, unit_normalize
from ipiagent.backends.base import DimensionGuard, EmbeddingCache
from ipiagent.backends.http import OpenAIChatBackend, OpenAIEmbeddingBackend
from ipiagent.errors import (
    BackendConfigError,
    BackendUnavailable,
    CausalityError,
    ConfigError,
    TraceCoverageError,
    TraceParseError,
)
from ipiagent.timeline import Frame


# -- scripted trace loading -----------------------------------------------------

def test_minimal_trace_loads(tmp_path):
    path = write_trace(tmp_path / "t.json", minimal_trace())
    trace = load_trace(path)
    assert trace.dim == 3
    backend = ScriptedBackend(trace)
    assert backend.raw_trigger("the light turns on", 2) == 1
    np.testing.assert_allclose(
        np.linalg.norm(backend.window_vector(1)), 1.0, atol=1e-6)


def test_duplicate_key_is_a_parse_error(tmp_path):
    raw = json.dumps(minimal_trace())
    raw = raw.replace('"answers": {}',
                      '"answers": {"q": "a", "q": "b"}')
    path = tmp_path / "dup.json"
    path.write_text(raw)
    with pytest.raises(TraceParseError, match="duplicate"):
        load_trace(path)


def test_unnormalized_vector_rejected_naming_the_key(tmp_path):
    data = minimal_trace()
    data["window_vectors"]["1"] = [0.5, 0.5, 0.5]
    path = write_trace(tmp_path / "bad.json", data)
    with pytest.raises(TraceParseError, match="window_vectors"):
        load_trace(path)


def test_bad_raw_trigger_value(tmp_path):
    data = minimal_trace()
    data["raw_triggers"]["the light turns on"]["2"] = 3
    with pytest.raises(TraceParseError, match="raw_triggers"):
        load_trace(write_trace(tmp_path / "bad.json", data))


def test_missing_lookup_is_fatal_and_names_the_key(tmp_path):
    backend = ScriptedBackend(load_trace(
        write_trace(tmp_path / "t.json", minimal_trace())))
    with pytest.raises(TraceCoverageError, match=r"raw_triggers\['the light turns on'\] at tick 9"):
        backend.raw_trigger("the light turns on", 9)
    with pytest.raises(TraceCoverageError, match="window_vectors"):
        backend.window_vector(99)
    with pytest.raises(TraceCoverageError, match="answers"):
        backend.answer("nope")
    with pytest.raises(TraceCoverageError, match="classifications"):
        backend.classification("nope")
    # the ablation-only soft lookup is the documented exception
    assert backend.optional_answer("nope") is None
    # enhancements default to identity by schema
    assert backend.enhancement("the light turns on") is None


def test_response_default_and_by_tick(tmp_path):
    data = minimal_trace()
    data["responses"]["the light turns on"]["by_tick"] = {"2": "specific"}
    backend = ScriptedBackend(load_trace(write_trace(tmp_path / "t.json", data)))
    assert backend.response("the light turns on", 2) == "specific"
    assert backend.response("the light turns on", 5) == "The light is on."


# -- live client plumbing ----------------------------------------------------------

class FakeResponse:
    def __init__(self, status_code, payload):
        self.status_code = status_code
        self._payload = payload
        self.text = json.dumps(payload)

    def json(self):
        return self._payload


class FakeSession:
    """Scripted stand-in for requests.Session."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls.append({"url": url, "json": json})
        item = self.responses.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


def chat_payload(text):
    return {"choices": [{"message": {"content": text}}]}


def test_chat_retries_transient_then_succeeds():
    session = FakeSession([FakeResponse(429, {}), FakeResponse(200, chat_payload("ok"))])
    backend = OpenAIChatBackend("http://x/v1", "m", api_key_env=None,
                                retry_attempts=3, retry_base_delay=0.0,
                                session=session)
    assert backend.chat([{"role": "user", "content": "hi"}]) == "ok"
    assert len(session.calls) == 2


def test_chat_exhausted_retries():
    session = FakeSession([FakeResponse(500, {})] * 3)
    backend = OpenAIChatBackend("http://x/v1", "m", api_key_env=None,
                                retry_attempts=3, retry_base_delay=0.0,
                                session=session)
    with pytest.raises(BackendUnavailable):
        backend.chat([{"role": "user", "content": "hi"}])


def test_chat_4xx_is_a_config_error():
    session = FakeSession([FakeResponse(401, {"error": "bad key"})])
    backend = OpenAIChatBackend("http://x/v1", "m", api_key_env=None,
                                session=session)
    with pytest.raises(BackendConfigError):
        backend.chat([{"role": "user", "content": "hi"}])


def test_attachment_beyond_tick_fails_before_any_network_call():
    session = FakeSession([])
    backend = OpenAIChatBackend("http://x/v1", "m", api_key_env=None,
                                session=session)
    frames = [Frame(5, "synthetic:5"), Frame(6, "synthetic:6")]
    with pytest.raises(CausalityError):
        backend.chat([{"role": "user", "content": "hi"}], frames=frames,
                     current_tick=5)
    assert session.calls == []


def embed_payload(vector):
    return {"data": [{"embedding": vector}]}


def test_embed_normalizes_and_caches():
    session = FakeSession([FakeResponse(200, embed_payload([3.0, 4.0]))])
    backend = OpenAIEmbeddingBackend("http://x/v1", "m", api_key_env=None,
                                     session=session)
    first = backend.embed_text("hello")
    assert np.linalg.norm(first) == pytest.approx(1.0, abs=1e-9)
    second = backend.embed_text("hello")  # served from the cache
    np.testing.assert_array_equal(first, second)
    assert len(session.calls) == 1


def test_embed_dimension_drift_rejected():
    session = FakeSession([FakeResponse(200, embed_payload([1.0, 0.0])),
                           FakeResponse(200, embed_payload([1.0, 0.0, 0.0]))])
    backend = OpenAIEmbeddingBackend("http://x/v1", "m", api_key_env=None,
                                     session=session)
    backend.embed_text("a")
    with pytest.raises(ConfigError):
        backend.embed_text("b")


def test_unit_normalize_and_cache_helpers():
    vec = unit_normalize([0.0, 2.0])
    np.testing.assert_allclose(vec, [0.0, 1.0])
    cache = EmbeddingCache()
    key = EmbeddingCache.key("text", "payload")
    assert cache.get(key) is None
    cache.put(key, vec)
    assert cache.get(key) is vec
    guard = DimensionGuard(expected=2)
    guard.check(vec)
    with pytest.raises(ConfigError):
        guard.check(np.zeros(3))
