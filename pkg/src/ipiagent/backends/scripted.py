"""Deterministic trace-driven oracle backend.

A scripted trace pins down every model decision a session would otherwise
ask a live backend for, so whole runs replay bit-identically with zero
network. Every lookup performed during a scripted run must resolve; a
missing key is a fatal coverage error, never a silent default. The one
documented exception is `enhancements`, whose schema defines a missing
task key as "identity" (no reference to resolve).

Trace file schema (JSON, version 1):

    {
      "version": 1,
      "dim": 4,
      "classifications": {
        "<event_id>": {"kind": "...", "targets": ["..."], "task_reference": null}
      },
      "proposals":      {"<task_key>": {"texts": [...], "vectors": [[...], ...]}},
      "window_vectors": {"<tick>": [...]},
      "raw_triggers":   {"<task_key>": {"<tick>": 0 or 1}},
      "responses":      {"<task_key>": {"by_tick": {"<tick>": "..."}, "default": "..."}},
      "answers":        {"<event_id>": "..."},
      "enhancements":   {"<task_key>": "..."}
    }

A task_key is the task's current target text, exactly as carried by the
classification entry that created it (or the modification that renamed it).
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from ..errors import TraceCoverageError, TraceParseError

logger = logging.getLogger(__name__)

TRACE_VERSION = 1

INTENT_KINDS = (
    "reactive_query",
    "proactive_instruction",
    "management_modify",
    "management_cancel",
)

_SECTIONS = ("classifications", "proposals", "window_vectors", "raw_triggers",
             "responses", "answers", "enhancements")


def _reject_duplicate_keys(pairs):
    seen = set()
    for key, _ in pairs:
        if key in seen:
            raise TraceParseError(f"duplicate key {key!r} in trace object")
        seen.add(key)
    return dict(pairs)


def _parse_tick_map(section: str, key: str, mapping: dict) -> dict[int, object]:
    out = {}
    for raw_tick, value in mapping.items():
        try:
            tick = int(raw_tick)
        except (TypeError, ValueError):
            raise TraceParseError(
                f"{section}[{key!r}]: tick key {raw_tick!r} is not an integer")
        if tick < 1:
            raise TraceParseError(f"{section}[{key!r}]: tick {tick} must be >= 1")
        out[tick] = value
    return out


def _check_vector(section: str, key: str, vec, dim: int) -> np.ndarray:
    arr = np.asarray(vec, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != dim:
        raise TraceParseError(
            f"{section}[{key!r}]: vector must have dimension {dim}")
    norm = float(np.linalg.norm(arr))
    if abs(norm - 1.0) > 1e-6:
        raise TraceParseError(
            f"{section}[{key!r}]: vector is not unit-normalized (norm={norm:.8f})")
    return arr


class ScriptedTrace:
    """Validated, coverage-checked view over one trace file."""

    def __init__(self, data: dict, *, path: str = "<inline>"):
        self.path = path
        if data.get("version") != TRACE_VERSION:
            raise TraceParseError(
                f"{path}: unsupported trace version {data.get('version')!r}")
        dim = data.get("dim")
        if not isinstance(dim, int) or dim < 1:
            raise TraceParseError(f"{path}: 'dim' must be a positive integer")
        self.dim = dim

        for section in _SECTIONS:
            if section in data and not isinstance(data[section], dict):
                raise TraceParseError(f"{path}: section {section!r} must be an object")

        self.classifications: dict[str, dict] = {}
        for event_id, entry in data.get("classifications", {}).items():
            kind = entry.get("kind")
            if kind not in INTENT_KINDS:
                raise TraceParseError(
                    f"classifications[{event_id!r}]: unknown kind {kind!r}")
            targets = entry.get("targets", [])
            if kind == "proactive_instruction" and not targets:
                raise TraceParseError(
                    f"classifications[{event_id!r}]: proactive entry needs >= 1 target")
            self.classifications[event_id] = {
                "kind": kind,
                "targets": list(targets),
                "task_reference": entry.get("task_reference"),
            }

        self.proposals: dict[str, tuple[list[str], np.ndarray]] = {}
        for task_key, entry in data.get("proposals", {}).items():
            texts = entry.get("texts", [])
            vectors = entry.get("vectors", [])
            if not texts or len(texts) != len(vectors):
                raise TraceParseError(
                    f"proposals[{task_key!r}]: texts/vectors must be non-empty "
                    "and the same length")
            matrix = np.stack([
                _check_vector("proposals", task_key, v, dim) for v in vectors])
            self.proposals[task_key] = (list(texts), matrix)

        self.window_vectors: dict[int, np.ndarray] = {
            tick: _check_vector("window_vectors", str(tick), vec, dim)
            for tick, vec in _parse_tick_map(
                "window_vectors", "*", data.get("window_vectors", {})).items()
        }

        self.raw_triggers: dict[str, dict[int, int]] = {}
        for task_key, by_tick in data.get("raw_triggers", {}).items():
            parsed = _parse_tick_map("raw_triggers", task_key, by_tick)
            for tick, value in parsed.items():
                if value not in (0, 1):
                    raise TraceParseError(
                        f"raw_triggers[{task_key!r}][{tick}]: must be 0 or 1")
            self.raw_triggers[task_key] = {t: int(v) for t, v in parsed.items()}

        self.responses: dict[str, dict] = {}
        for task_key, entry in data.get("responses", {}).items():
            by_tick = _parse_tick_map("responses", task_key,
                                      entry.get("by_tick", {}))
            self.responses[task_key] = {
                "by_tick": {t: str(v) for t, v in by_tick.items()},
                "default": entry.get("default"),
            }

        self.answers: dict[str, str] = {
            event_id: str(text) for event_id, text in data.get("answers", {}).items()
        }
        self.enhancements: dict[str, str] = {
            task_key: str(text)
            for task_key, text in data.get("enhancements", {}).items()
        }


def load_trace(path: str | Path) -> ScriptedTrace:
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise TraceParseError(f"cannot read trace {path}: {exc}") from exc
    try:
        data = json.loads(raw, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise TraceParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise TraceParseError(f"{path}: trace root must be an object")
    return ScriptedTrace(data, path=str(path))


class ScriptedBackend:
    """Oracle lookups over one ScriptedTrace.

    The runtime's routing/response/gating layers call these instead of
    composing prompts; that keeps scripted runs prompt-free and byte-stable.
    """

    def __init__(self, trace: ScriptedTrace):
        self.trace = trace

    @property
    def dim(self) -> int:
        return self.trace.dim

    def _missing(self, section: str, key: str) -> TraceCoverageError:
        return TraceCoverageError(
            f"trace {self.trace.path} does not cover {section}[{key!r}]")

    def classification(self, event_id: str) -> dict:
        entry = self.trace.classifications.get(event_id)
        if entry is None:
            raise self._missing("classifications", event_id)
        return entry

    def proposal_texts(self, task_key: str) -> list[str]:
        return self._proposals(task_key)[0]

    def proposal_vectors(self, task_key: str) -> np.ndarray:
        return self._proposals(task_key)[1]

    def _proposals(self, task_key: str):
        entry = self.trace.proposals.get(task_key)
        if entry is None:
            raise self._missing("proposals", task_key)
        return entry

    def window_vector(self, tick: int) -> np.ndarray:
        vec = self.trace.window_vectors.get(tick)
        if vec is None:
            raise TraceCoverageError(
                f"trace {self.trace.path} does not cover window_vectors[{tick}]")
        return vec

    def raw_trigger(self, task_key: str, tick: int) -> int:
        by_tick = self.trace.raw_triggers.get(task_key)
        if by_tick is None or tick not in by_tick:
            raise TraceCoverageError(
                f"trace {self.trace.path} does not cover "
                f"raw_triggers[{task_key!r}] at tick {tick}")
        return by_tick[tick]

    def response(self, task_key: str, tick: int) -> str:
        entry = self.trace.responses.get(task_key)
        if entry is None:
            raise self._missing("responses", task_key)
        text = entry["by_tick"].get(tick, entry["default"])
        if text is None:
            raise TraceCoverageError(
                f"trace {self.trace.path} has no response for "
                f"{task_key!r} at tick {tick} and no default")
        return text

    def answer(self, event_id: str) -> str:
        text = self.trace.answers.get(event_id)
        if text is None:
            raise self._missing("answers", event_id)
        return text

    def optional_answer(self, event_id: str) -> str | None:
        """Soft lookup used only by the interaction-control ablation, whose
        pass-through branch is defined to degrade rather than fail."""
        return self.trace.answers.get(event_id)

    def enhancement(self, task_key: str) -> str | None:
        return self.trace.enhancements.get(task_key)
