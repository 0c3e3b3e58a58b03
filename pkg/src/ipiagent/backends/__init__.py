"""Pluggable client layer: live chat/embedding backends and the scripted
deterministic oracle. The runtime consumes a Backends bundle and branches on
`is_scripted`: scripted runs bypass prompts entirely."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigError
from .base import ChatBackend, EmbeddingBackend, unit_normalize
from .http import OpenAIChatBackend, OpenAIEmbeddingBackend, RequestLimiter
from .scripted import ScriptedBackend, ScriptedTrace, load_trace


@dataclass
class Backends:
    scripted: ScriptedBackend | None = None
    chat: ChatBackend | None = None
    embed: EmbeddingBackend | None = None

    @property
    def is_scripted(self) -> bool:
        return self.scripted is not None


def build_backends(config, *, trace_path=None) -> Backends:
    """Construct the bundle for one session.

    `config` is a BackendConfig; for scripted mode `trace_path` (when given)
    overrides the config-level trace, which is how the harness points each
    instance at its own trace file.
    """
    if config.mode == "scripted":
        path = trace_path or config.trace
        if path is None:
            raise ConfigError("scripted mode requires a trace path")
        return Backends(scripted=ScriptedBackend(load_trace(path)))
    if config.mode != "live":
        raise ConfigError(f"unknown backend mode {config.mode!r}")
    if config.chat is None:
        raise ConfigError("live mode requires a chat endpoint")
    limiter = RequestLimiter(config.max_inflight)
    chat = OpenAIChatBackend(
        base_url=config.chat.base_url, model=config.chat.model,
        api_key_env=config.chat.api_key_env,
        retry_attempts=config.retry_attempts,
        retry_base_delay=config.retry_base_delay, limiter=limiter)
    embed = None
    if config.embed is not None:
        embed = OpenAIEmbeddingBackend(
            base_url=config.embed.base_url, model=config.embed.model,
            api_key_env=config.embed.api_key_env,
            retry_attempts=config.retry_attempts,
            retry_base_delay=config.retry_base_delay, limiter=limiter,
            expected_dim=config.embed_dim)
    return Backends(chat=chat, embed=embed)


__all__ = [
    "Backends",
    "ChatBackend",
    "EmbeddingBackend",
    "OpenAIChatBackend",
    "OpenAIEmbeddingBackend",
    "RequestLimiter",
    "ScriptedBackend",
    "ScriptedTrace",
    "build_backends",
    "load_trace",
    "unit_normalize",
]
