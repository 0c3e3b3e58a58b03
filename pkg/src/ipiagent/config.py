"""Config file schemas: backend endpoints and evaluation run options.

Backend config (JSON):

    {
      "mode": "scripted" | "live",
      "trace": "path/to/trace.json",            // scripted mode
      "chat":  {"base_url": "...", "model": "...",
                "api_key_env": "IPI_CHAT_API_KEY"},
      "embed": {"base_url": "...", "model": "...",
                "api_key_env": "IPI_EMBED_API_KEY"},
      "embed_dim": 1024,
      "retry": {"attempts": 3, "base_delay": 0.5},
      "max_inflight": 4
    }
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .gating import GateThresholds

ABLATION_MODES = ("full", "no_interaction_control", "no_gating", "embedding_only")


@dataclass
class EndpointConfig:
    base_url: str
    model: str
    api_key_env: str | None = None


@dataclass
class BackendConfig:
    mode: str = "scripted"
    trace: str | None = None
    chat: EndpointConfig | None = None
    embed: EndpointConfig | None = None
    embed_dim: int | None = None
    retry_attempts: int = 3
    retry_base_delay: float = 0.5
    max_inflight: int = 4


def backend_config_from_dict(data: dict, *, base_dir: Path | None = None) -> BackendConfig:
    mode = data.get("mode", "scripted")
    if mode not in ("scripted", "live"):
        raise ConfigError(f"backend mode must be 'scripted' or 'live', got {mode!r}")

    def endpoint(key):
        entry = data.get(key)
        if entry is None:
            return None
        try:
            return EndpointConfig(base_url=entry["base_url"], model=entry["model"],
                                  api_key_env=entry.get("api_key_env"))
        except KeyError as exc:
            raise ConfigError(f"backend config {key!r} is missing {exc}") from exc

    trace = data.get("trace")
    if trace is not None and base_dir is not None and not Path(trace).is_absolute():
        trace = str(base_dir / trace)
    retry = data.get("retry", {})
    cfg = BackendConfig(
        mode=mode,
        trace=trace,
        chat=endpoint("chat"),
        embed=endpoint("embed"),
        embed_dim=data.get("embed_dim"),
        retry_attempts=int(retry.get("attempts", 3)),
        retry_base_delay=float(retry.get("base_delay", 0.5)),
        max_inflight=int(data.get("max_inflight", 4)),
    )
    if cfg.mode == "live" and cfg.chat is None:
        raise ConfigError("live backend config requires a 'chat' endpoint")
    return cfg


def load_backend_config(path: str | Path) -> BackendConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read backend config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return backend_config_from_dict(data, base_dir=path.parent)


@dataclass
class RuntimeOptions:
    """Per-session behavior switches, including the ablation variants."""

    thresholds: GateThresholds = field(default_factory=GateThresholds)
    proposal_count: int = 4
    context_limit: int = 8
    window_capacity: int = 16
    interaction_control: bool = True
    gating: bool = True
    embedding_only: bool = False
    with_reminder: bool = False

    @classmethod
    def for_ablation(cls, mode: str, thresholds: GateThresholds | None = None,
                     **overrides) -> "RuntimeOptions":
        if mode not in ABLATION_MODES:
            raise ConfigError(
                f"unknown ablation mode {mode!r}; expected one of {ABLATION_MODES}")
        opts = cls(thresholds=thresholds or GateThresholds(), **overrides)
        if mode == "no_interaction_control":
            opts.interaction_control = False
        elif mode == "no_gating":
            opts.gating = False
        elif mode == "embedding_only":
            opts.embedding_only = True
        return opts


@dataclass
class RunConfig:
    """One evaluation run: manifest in, report + transcripts out."""

    manifest: str
    backend: BackendConfig
    ablation: str = "full"
    thresholds: GateThresholds = field(default_factory=GateThresholds)
    parallelism: int = 1
    out_dir: str | None = None
    seed: int = 0
    with_reminder: bool = False
    tripwire: bool = True
    exclude_eval_errors: bool = False

    def runtime_options(self) -> RuntimeOptions:
        return RuntimeOptions.for_ablation(
            self.ablation, thresholds=self.thresholds,
            with_reminder=self.with_reminder)
