"""Live clients speaking the OpenAI-compatible chat-completions and
embeddings HTTP contract.

Request shapes (documented here because they are part of the artifact's
external surface):

  POST {base_url}/chat/completions
    {"model": ..., "messages": [{"role": ..., "content": ...}],
     "temperature": ..., "max_tokens": ...}
  -> {"choices": [{"message": {"content": "..."}}], ...}

  POST {base_url}/embeddings
    {"model": ..., "input": "..."}
  -> {"data": [{"embedding": [...]}], ...}

Frame attachments ride as base64 data-URI image parts inside message
content, one part per frame in the current window. Any endpoint honoring
this contract (including locally served open models) plugs in via config.
"""

from __future__ import annotations

import logging
import os
import threading
import time

import requests

from ..errors import BackendConfigError, BackendUnavailable, CausalityError
from ..timeline import FrameWindow, encode_frame_payload
from .base import ChatBackend, DimensionGuard, EmbeddingBackend, EmbeddingCache, unit_normalize

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 60.0


class RequestLimiter:
    """Bounds concurrent in-flight calls across all backends of a session."""

    def __init__(self, width: int = 4):
        self._sem = threading.Semaphore(max(1, width))

    def __enter__(self):
        self._sem.acquire()
        return self

    def __exit__(self, *exc):
        self._sem.release()
        return False


def _resolve_api_key(env_var: str | None) -> str | None:
    if not env_var:
        return None
    value = os.environ.get(env_var)
    if value is None:
        logger.warning("API key env var %s is not set", env_var)
    return value


class _HttpClient:
    def __init__(self, base_url: str, api_key_env: str | None, retry_attempts: int,
                 retry_base_delay: float, limiter: RequestLimiter | None,
                 timeout: float = DEFAULT_TIMEOUT, session=None):
        self.base_url = base_url.rstrip("/")
        self.api_key = _resolve_api_key(api_key_env)
        self.retry_attempts = max(1, retry_attempts)
        self.retry_base_delay = retry_base_delay
        self.limiter = limiter or RequestLimiter()
        self.timeout = timeout
        self.session = session or requests.Session()

    def post(self, path: str, payload: dict) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = f"{self.base_url}{path}"
        last_error: Exception | None = None
        for attempt in range(self.retry_attempts):
            if attempt:
                delay = self.retry_base_delay * (2 ** (attempt - 1))
                time.sleep(delay)
            try:
                with self.limiter:
                    resp = self.session.post(url, json=payload, headers=headers,
                                             timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = exc
                logger.warning("request to %s failed (%s), attempt %d/%d",
                               url, exc, attempt + 1, self.retry_attempts)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = BackendUnavailable(
                    f"{url} returned {resp.status_code}")
                logger.warning("transient %d from %s, attempt %d/%d",
                               resp.status_code, url, attempt + 1,
                               self.retry_attempts)
                continue
            if resp.status_code >= 400:
                raise BackendConfigError(
                    f"{url} rejected the request: {resp.status_code} {resp.text[:200]}")
            return resp.json()
        raise BackendUnavailable(
            f"{url} unavailable after {self.retry_attempts} attempts: {last_error}")


def frame_message_parts(window: FrameWindow) -> list[dict]:
    parts = []
    for frame in window.frames:
        payload = encode_frame_payload(frame)
        parts.append({
            "type": "image_url",
            "image_url": {"url": f"data:image/jpeg;base64,{payload}"},
        })
    return parts


class OpenAIChatBackend(ChatBackend):
    def __init__(self, base_url: str, model: str, api_key_env: str | None = "IPI_CHAT_API_KEY",
                 retry_attempts: int = 3, retry_base_delay: float = 0.5,
                 limiter: RequestLimiter | None = None, session=None):
        self.model = model
        self._client = _HttpClient(base_url, api_key_env, retry_attempts,
                                   retry_base_delay, limiter, session=session)

    def chat(self, messages, *, frames=None, current_tick=None,
             max_tokens=None, temperature=0.0) -> str:
        if frames and current_tick is not None:
            beyond = [f.index for f in frames if f.index > current_tick]
            if beyond:
                raise CausalityError(
                    f"attachment frames {beyond} are beyond tick {current_tick}")
        payload = {"model": self.model, "messages": messages,
                   "temperature": temperature}
        if max_tokens is not None:
            payload["max_tokens"] = max_tokens
        data = self._client.post("/chat/completions", payload)
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable(
                f"malformed chat-completions response: {exc}") from exc


class OpenAIEmbeddingBackend(EmbeddingBackend):
    def __init__(self, base_url: str, model: str, api_key_env: str | None = "IPI_EMBED_API_KEY",
                 retry_attempts: int = 3, retry_base_delay: float = 0.5,
                 limiter: RequestLimiter | None = None, expected_dim: int | None = None,
                 session=None):
        self.model = model
        self._client = _HttpClient(base_url, api_key_env, retry_attempts,
                                   retry_base_delay, limiter, session=session)
        self._cache = EmbeddingCache()
        self._guard = DimensionGuard(expected_dim)

    def _embed(self, kind: str, cache_payload: str, request_input) -> "np.ndarray":
        key = EmbeddingCache.key(kind, cache_payload)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        data = self._client.post("/embeddings",
                                 {"model": self.model, "input": request_input})
        try:
            vector = data["data"][0]["embedding"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable(
                f"malformed embeddings response: {exc}") from exc
        vec = self._guard.check(unit_normalize(vector))
        return self._cache.put(key, vec)

    def embed_text(self, text: str):
        return self._embed("text", text, text)

    def embed_window(self, window: FrameWindow):
        payloads = [encode_frame_payload(f) for f in window.frames]
        return self._embed("window", window.cache_key(), payloads)
