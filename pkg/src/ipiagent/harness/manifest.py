"""Evaluation manifest: instances, ground truth, and validation.

Manifest file schema (JSON, version 1):

    {
      "version": 1,
      "instances": [
        {
          "instance_id": "timing-001",
          "category": "timing",
          "frame_source": {"kind": "synthetic", "length": 24},
          "trace": "traces/timing-001.json",
          "events": [{"event_id": "e1", "at_tick": 1, "utterance": "..."}],
          "trigger_truths": [{"task_key": "...", "t_star": 12,
                              "occurrence_index": 1}],
          "answer_truths": [{"query_event_id": "e2", "candidates": ["..."]}]
        }
      ]
    }

frame_source kinds: "synthetic" (length), "directory" (path), "refs"
(list of per-tick payload references). `trace` is required for scripted
runs and resolved relative to the manifest file.

An answer truth names either the query event it checks (query_event_id) or,
for trigger-response checks, the task whose trigger text it checks
(task_key); exactly one of the two.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ManifestError
from ..timeline import (
    DirectoryFrameSource,
    FrameSource,
    ManifestFrameSource,
    ScheduledEvent,
    SyntheticFrameSource,
)

MANIFEST_VERSION = 1

CATEGORY_TIMING = "timing"
CATEGORY_UNDERSTANDING = "understanding"
CATEGORY_REPEATED = "repeated"
CATEGORY_CANCEL = "cancel"
CATEGORY_MODIFY = "modify"
CATEGORY_MULTI = "multi"
CATEGORY_R2P = "r2p"
CATEGORY_RUP = "rup"
CATEGORY_RAP = "rap"

CATEGORIES = (
    CATEGORY_TIMING, CATEGORY_UNDERSTANDING, CATEGORY_REPEATED,
    CATEGORY_CANCEL, CATEGORY_MODIFY, CATEGORY_MULTI,
    CATEGORY_R2P, CATEGORY_RUP, CATEGORY_RAP,
)

ASPECTS = {
    "monitoring": (CATEGORY_TIMING, CATEGORY_UNDERSTANDING, CATEGORY_REPEATED),
    "management": (CATEGORY_CANCEL, CATEGORY_MODIFY, CATEGORY_MULTI),
    "interleaved": (CATEGORY_R2P, CATEGORY_RUP, CATEGORY_RAP),
}

# Single-turn monitoring categories replay only the +/-4 s neighborhoods of
# their ground-truth triggers; everything multi-turn replays the full span.
SINGLE_TURN_CATEGORIES = (CATEGORY_TIMING, CATEGORY_UNDERSTANDING,
                          CATEGORY_REPEATED)

MAX_ANSWER_CANDIDATES = 20
EVAL_INTERVAL = 4     # replay [t*-4, t*+4] around each ground-truth trigger
CORRECT_WINDOW = 1    # a first trigger within [t*-1, t*+1] is timing-correct


@dataclass(frozen=True)
class TriggerTruth:
    task_key: str
    t_star: int
    occurrence_index: int = 1


@dataclass(frozen=True)
class AnswerTruth:
    candidates: tuple[str, ...]
    query_event_id: str | None = None
    task_key: str | None = None


@dataclass
class EvalInstance:
    instance_id: str
    category: str
    frame_source_spec: dict
    events: list[ScheduledEvent] = field(default_factory=list)
    trigger_truths: list[TriggerTruth] = field(default_factory=list)
    answer_truths: list[AnswerTruth] = field(default_factory=list)
    trace_path: str | None = None
    # cancel/modify instances name their management event here so scoring
    # knows the intended control tick even when a run ignored the instruction
    control_event_id: str | None = None

    def build_frame_source(self) -> FrameSource:
        spec = self.frame_source_spec
        kind = spec.get("kind")
        if kind == "synthetic":
            return SyntheticFrameSource(length=int(spec["length"]))
        if kind == "directory":
            return DirectoryFrameSource(spec["path"])
        if kind == "refs":
            return ManifestFrameSource(list(spec["refs"]))
        raise ManifestError(
            f"{self.instance_id}: unknown frame_source kind {kind!r}")

    @property
    def stream_length(self) -> int | None:
        if self.frame_source_spec.get("kind") == "synthetic":
            return int(self.frame_source_spec["length"])
        return None


def _require(entry: dict, key: str, instance_id: str):
    if key not in entry:
        raise ManifestError(f"{instance_id}: missing field {key!r}")
    return entry[key]


def _parse_instance(entry: dict, base_dir: Path) -> EvalInstance:
    instance_id = entry.get("instance_id")
    if not instance_id:
        raise ManifestError("an instance is missing its instance_id")
    category = _require(entry, "category", instance_id)
    if category not in CATEGORIES:
        raise ManifestError(f"{instance_id}: unknown category {category!r}")

    events = []
    seen_events = set()
    for raw in entry.get("events", []):
        event = ScheduledEvent(at_tick=int(_require(raw, "at_tick", instance_id)),
                               utterance=_require(raw, "utterance", instance_id),
                               event_id=_require(raw, "event_id", instance_id))
        if event.event_id in seen_events:
            raise ManifestError(
                f"{instance_id}: duplicate event_id {event.event_id!r}")
        seen_events.add(event.event_id)
        events.append(event)

    trigger_truths = []
    per_task_last: dict[str, int] = {}
    for raw in entry.get("trigger_truths", []):
        truth = TriggerTruth(task_key=_require(raw, "task_key", instance_id),
                             t_star=int(_require(raw, "t_star", instance_id)),
                             occurrence_index=int(raw.get("occurrence_index", 1)))
        if truth.t_star < 1:
            raise ManifestError(f"{instance_id}: t_star must be >= 1")
        last = per_task_last.get(truth.task_key)
        if last is not None and truth.occurrence_index <= last:
            raise ManifestError(
                f"{instance_id}: occurrences of {truth.task_key!r} must be "
                "strictly increasing")
        per_task_last[truth.task_key] = truth.occurrence_index
        trigger_truths.append(truth)

    answer_truths = []
    for raw in entry.get("answer_truths", []):
        candidates = tuple(str(c) for c in _require(raw, "candidates", instance_id))
        if not 1 <= len(candidates) <= MAX_ANSWER_CANDIDATES:
            raise ManifestError(
                f"{instance_id}: answer candidates must number 1..{MAX_ANSWER_CANDIDATES}, "
                f"got {len(candidates)}")
        if any(not c.strip() for c in candidates):
            raise ManifestError(f"{instance_id}: empty answer candidate")
        query_event_id = raw.get("query_event_id")
        task_key = raw.get("task_key")
        if (query_event_id is None) == (task_key is None):
            raise ManifestError(
                f"{instance_id}: an answer truth needs exactly one of "
                "query_event_id or task_key")
        if query_event_id is not None and query_event_id not in seen_events:
            raise ManifestError(
                f"{instance_id}: answer truth references unknown event "
                f"{query_event_id!r}")
        answer_truths.append(AnswerTruth(candidates=candidates,
                                         query_event_id=query_event_id,
                                         task_key=task_key))

    trace = entry.get("trace")
    if trace is not None and not Path(trace).is_absolute():
        trace = str(base_dir / trace)

    control_event_id = entry.get("control_event_id")
    if category in (CATEGORY_CANCEL, CATEGORY_MODIFY):
        if control_event_id is None:
            raise ManifestError(
                f"{instance_id}: {category} instances need control_event_id")
        if control_event_id not in seen_events:
            raise ManifestError(
                f"{instance_id}: control_event_id {control_event_id!r} "
                "references no event")

    return EvalInstance(
        instance_id=instance_id,
        category=category,
        frame_source_spec=_require(entry, "frame_source", instance_id),
        events=events,
        trigger_truths=trigger_truths,
        answer_truths=answer_truths,
        trace_path=trace,
        control_event_id=control_event_id,
    )


def load_manifest(path: str | Path) -> list[EvalInstance]:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON ({exc})") from exc
    if data.get("version") != MANIFEST_VERSION:
        raise ManifestError(f"{path}: unsupported manifest version "
                            f"{data.get('version')!r}")
    instances = []
    seen_ids = set()
    for entry in data.get("instances", []):
        instance = _parse_instance(entry, path.parent)
        if instance.instance_id in seen_ids:
            raise ManifestError(f"duplicate instance_id {instance.instance_id!r}")
        seen_ids.add(instance.instance_id)
        instances.append(instance)
    return instances
