"""Streaming replay of evaluation instances into transcripts.

A transcript is the complete, re-scoreable record of one instance run:
every agent output with its tick, the task lifecycle events, the per-tick
gate telemetry, and the causality-tripwire summary. Transcripts serialize
to JSON lines; scoring is a pure function of the transcript, so rescoring
stored transcripts reproduces the report byte-exactly.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..backends import build_backends
from ..config import RunConfig
from ..errors import BackendConfigError, BackendUnavailable, ManifestError
from ..router import AgentRuntime, OutputRecord
from ..timeline import Timeline, TripwireFrameSource
from .manifest import EVAL_INTERVAL, SINGLE_TURN_CATEGORIES, EvalInstance

logger = logging.getLogger(__name__)


@dataclass
class InstanceTranscript:
    instance_id: str
    category: str
    ablation: str
    theta_low: float
    theta_high: float
    monitored_ticks: list[int] = field(default_factory=list)
    outputs: list[dict] = field(default_factory=list)
    task_events: list[dict] = field(default_factory=list)
    telemetry: list[dict] = field(default_factory=list)
    tripwire: dict | None = None
    evaluation_error: str | None = None

    def triggers(self) -> list[dict]:
        return [o for o in self.outputs if o["kind"] == "proactive_trigger"]

    def answers(self) -> list[dict]:
        return [o for o in self.outputs if o["kind"] == "immediate_response"]

    def answer_for(self, event_id: str) -> dict | None:
        for entry in self.answers():
            if entry.get("event_id") == event_id:
                return entry
        return None

    # -- JSON lines ----------------------------------------------------------

    def to_lines(self) -> list[str]:
        def dump(obj):
            return json.dumps(obj, sort_keys=True, separators=(",", ":"))

        lines = [dump({
            "type": "header", "instance_id": self.instance_id,
            "category": self.category, "ablation": self.ablation,
            "theta_low": self.theta_low, "theta_high": self.theta_high,
            "monitored_ticks": self.monitored_ticks,
            "evaluation_error": self.evaluation_error,
        })]
        lines += [dump({"type": "output", **o}) for o in self.outputs]
        lines += [dump({"type": "task_event", **e}) for e in self.task_events]
        lines += [dump({"type": "telemetry", **t}) for t in self.telemetry]
        if self.tripwire is not None:
            lines.append(dump({"type": "tripwire", **self.tripwire}))
        return lines

    def write(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"{self.instance_id}.jsonl"
        path.write_text("\n".join(self.to_lines()) + "\n", encoding="utf-8")
        return path

    @classmethod
    def from_lines(cls, lines) -> "InstanceTranscript":
        header = None
        outputs, task_events, telemetry = [], [], []
        tripwire = None
        for line in lines:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            kind = entry.pop("type")
            if kind == "header":
                header = entry
            elif kind == "output":
                outputs.append(entry)
            elif kind == "task_event":
                task_events.append(entry)
            elif kind == "telemetry":
                telemetry.append(entry)
            elif kind == "tripwire":
                tripwire = entry
        if header is None:
            raise ManifestError("transcript has no header line")
        return cls(instance_id=header["instance_id"], category=header["category"],
                   ablation=header["ablation"], theta_low=header["theta_low"],
                   theta_high=header["theta_high"],
                   monitored_ticks=header["monitored_ticks"],
                   outputs=outputs, task_events=task_events, telemetry=telemetry,
                   tripwire=tripwire,
                   evaluation_error=header.get("evaluation_error"))

    @classmethod
    def read(cls, path: str | Path) -> "InstanceTranscript":
        return cls.from_lines(Path(path).read_text(encoding="utf-8").splitlines())


def monitored_ticks_for(instance: EvalInstance) -> list[int]:
    """Ticks where continuous monitoring runs.

    Single-turn monitoring instances are evaluated only in the +/-4 s
    neighborhood of each ground-truth trigger (clipped at the stream start);
    multi-turn instances replay their full scripted span so late effects
    (e.g. a spurious post-cancel trigger) stay observable.
    """
    length = instance.stream_length
    if instance.category in SINGLE_TURN_CATEGORIES:
        ticks: set[int] = set()
        for truth in instance.trigger_truths:
            low = max(1, truth.t_star - EVAL_INTERVAL)
            high = truth.t_star + EVAL_INTERVAL
            if length is not None:
                high = min(high, length)
            ticks.update(range(low, high + 1))
        return sorted(ticks)
    end = length
    if end is None:
        candidates = [t.t_star + EVAL_INTERVAL for t in instance.trigger_truths]
        candidates += [e.at_tick for e in instance.events]
        end = max(candidates)
    return list(range(1, end + 1))


def _record_to_entry(record: OutputRecord) -> dict:
    output = record.output
    return {
        "tick": output.at_tick,
        "kind": output.kind,
        "task_id": output.task_id,
        "task_key": record.task_key,
        "revision": record.revision,
        "text": output.text,
        "event_id": record.event_id,
        "reason": record.reason,
        "error": record.error,
        "created_task_ids": list(record.created_task_ids),
    }


def run_instance(instance: EvalInstance, config: RunConfig) -> InstanceTranscript:
    """Replay one instance tick by tick and collect the transcript."""
    options = config.runtime_options()
    transcript = InstanceTranscript(
        instance_id=instance.instance_id, category=instance.category,
        ablation=config.ablation, theta_low=options.thresholds.theta_low,
        theta_high=options.thresholds.theta_high)

    monitored = monitored_ticks_for(instance)
    transcript.monitored_ticks = monitored
    monitored_set = set(monitored)
    event_ticks = [e.at_tick for e in instance.events]
    end_tick = max([*monitored, *event_ticks], default=0)
    if instance.stream_length is not None:
        end_tick = min(end_tick, instance.stream_length)
    if end_tick < 1:
        raise ManifestError(f"{instance.instance_id}: nothing to replay")

    backends = build_backends(config.backend, trace_path=instance.trace_path)
    source = instance.build_frame_source()
    timeline = Timeline(source=source, events=list(instance.events),
                        capacity=options.window_capacity)
    if config.tripwire:
        source = TripwireFrameSource(source, lambda: timeline.current_tick)
        timeline.source = source
    runtime = AgentRuntime(backends, options)

    try:
        for tick in range(1, end_tick + 1):
            window, due = timeline.advance(tick)
            records = runtime.process_tick(tick, window, due,
                                           monitor=tick in monitored_set)
            transcript.outputs.extend(_record_to_entry(r) for r in records)
    except (BackendUnavailable, BackendConfigError) as exc:
        logger.error("instance %s aborted: %s", instance.instance_id, exc)
        transcript.evaluation_error = str(exc)

    transcript.task_events = list(runtime.task_events)
    transcript.telemetry = [
        {"tick": t.tick, "task_id": t.task_id, "raw": t.raw, "delta": t.delta,
         "final": t.final, "reason": t.reason}
        for t in runtime.telemetry
    ]
    if isinstance(source, TripwireFrameSource):
        transcript.tripwire = {
            "accesses": len(source.accesses),
            "violations": len(source.violations),
        }
    return transcript


def run_manifest(instances: list[EvalInstance],
                 config: RunConfig) -> list[InstanceTranscript]:
    """Run every instance; results merge in manifest order regardless of
    the worker count."""
    if config.parallelism > 1 and len(instances) > 1:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            return list(pool.map(lambda i: run_instance(i, config), instances))
    return [run_instance(instance, config) for instance in instances]
