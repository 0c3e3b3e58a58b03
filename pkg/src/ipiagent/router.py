"""Interaction control: intent classification and the per-tick agent loop.

Every utterance is routed down exactly one branch (reactive answer,
proactive task creation, or task management), and continuous monitoring
evaluates every active task against the current window. Within a tick,
instruction events are dispatched before monitoring runs, so a same-tick
cancel beats a would-be trigger; reactive queries are dispatched after
monitoring, so a same-tick trigger lands in memory before the answer is
produced.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .backends import Backends
from .config import RuntimeOptions
from .errors import BackendUnavailable, IPIError, TraceCoverageError, ValidationError
from .gating import (
    GateState,
    GateTelemetry,
    ProposalSet,
    embed_window,
    gate,
    generate_proposals,
    update_delta,
)
from .memory import (
    SPEAKER_AGENT,
    SPEAKER_USER,
    InteractionTurn,
    MemoryStore,
    ProactiveTask,
)
from .prompts import load_prompt, render_prompt
from .responder import EnhancedInstruction, Responder, format_context
from .timeline import FrameWindow, ScheduledEvent

logger = logging.getLogger(__name__)

INTENT_REACTIVE = "reactive_query"
INTENT_PROACTIVE = "proactive_instruction"
INTENT_MODIFY = "management_modify"
INTENT_CANCEL = "management_cancel"
INTENT_KINDS = (INTENT_REACTIVE, INTENT_PROACTIVE, INTENT_MODIFY, INTENT_CANCEL)

OUTPUT_TRIGGER = "proactive_trigger"
OUTPUT_TASK_UPDATE = "task_update"
OUTPUT_RESPONSE = "immediate_response"
OUTPUT_NO_ACTION = "no_action"

REMINDER_TEXT = ("Reminder: based on the conversation so far, check whether any "
                 "standing monitoring task should produce a proactive response.")


@dataclass(frozen=True)
class IntentClass:
    kind: str
    targets: tuple[str, ...] = ()
    task_reference: str | None = None

    def __post_init__(self):
        if self.kind not in INTENT_KINDS:
            raise ValidationError(f"unknown intent kind {self.kind!r}")
        if self.kind == INTENT_PROACTIVE and not self.targets:
            raise ValidationError("a proactive instruction needs >= 1 target")


@dataclass(frozen=True)
class AgentOutput:
    """One per-tick runtime output: a trigger, a task update, an immediate
    response, or no action."""

    at_tick: int
    kind: str
    task_id: str | None = None
    text: str | None = None

    def __post_init__(self):
        if self.kind in (OUTPUT_TRIGGER, OUTPUT_RESPONSE) and not self.text:
            raise ValidationError(f"{self.kind} outputs must carry text")
        if self.kind == OUTPUT_NO_ACTION and (self.task_id or self.text):
            raise ValidationError("no_action outputs carry neither task nor text")


@dataclass(frozen=True)
class OutputRecord:
    """An AgentOutput plus the bookkeeping the harness and the session
    service need (which event produced it, task target and revision at
    emission time, gate reason, error diagnostics)."""

    output: AgentOutput
    event_id: str | None = None
    task_key: str | None = None
    revision: int | None = None
    reason: str | None = None
    error: str | None = None
    created_task_ids: tuple[str, ...] = ()


# -- intent classification ----------------------------------------------------

_CANCEL_MARKERS = ("cancel", "never mind", "nevermind", "stop watching",
                   "stop monitoring", "stop telling", "forget about",
                   "don't tell me", "do not tell me", "stop that")
_MODIFY_MARKERS = ("instead", "change", "update the task", "modify",
                   "switch to", "rather than", "make it", "actually watch")
_PROACTIVE_MARKERS = ("tell me when", "tell me if", "tell me whenever",
                      "remind me", "let me know when", "let me know if",
                      "let me know whenever", "notify me", "alert me",
                      "watch for", "warn me", "every time")

_TARGET_SPLIT = re.compile(r"\s*(?:,\s*)?\bor\b\s+|\s*;\s*", re.IGNORECASE)


def _extract_targets(utterance: str) -> tuple[str, ...]:
    """Best-effort target extraction for the keyword fallback: strip the
    trigger phrase, then split coordinated alternatives."""
    text = utterance.strip()
    lowered = text.lower()
    for marker in sorted(_PROACTIVE_MARKERS, key=len, reverse=True):
        pos = lowered.find(marker)
        if pos < 0:
            continue
        rest = text[pos + len(marker):].strip(" ,:")
        for lead in ("when ", "whenever ", "if ", "once "):
            if rest.lower().startswith(lead):
                rest = rest[len(lead):]
                break
        parts = [p.strip(" .,!?") for p in _TARGET_SPLIT.split(rest)]
        parts = [p for p in parts if p]
        if parts:
            return tuple(parts)
    return (text.rstrip(" .!?"),)


def keyword_classify(utterance: str) -> IntentClass:
    """Deterministic rule-based classification, used as the fallback when a
    live backend returns something unparseable."""
    lowered = utterance.lower()
    if any(marker in lowered for marker in _CANCEL_MARKERS):
        return IntentClass(INTENT_CANCEL)
    if any(marker in lowered for marker in _MODIFY_MARKERS):
        targets = _extract_targets(utterance)
        return IntentClass(INTENT_MODIFY, targets=targets)
    if any(marker in lowered for marker in _PROACTIVE_MARKERS):
        return IntentClass(INTENT_PROACTIVE, targets=_extract_targets(utterance))
    return IntentClass(INTENT_REACTIVE)


class IntentRouter:
    """Classifies utterances; scripted runs bypass the prompt entirely."""

    def __init__(self, backends: Backends, context_limit: int = 8):
        self.backends = backends
        self.context_limit = context_limit

    def classify(self, utterance: str, context: list[InteractionTurn],
                 event_id: str | None = None) -> IntentClass:
        if not utterance or not utterance.strip():
            raise ValidationError("cannot classify an empty utterance")
        if self.backends.is_scripted:
            if event_id is None:
                raise ValidationError("scripted classification needs an event id")
            entry = self.backends.scripted.classification(event_id)
            return IntentClass(kind=entry["kind"],
                               targets=tuple(entry["targets"]),
                               task_reference=entry["task_reference"])
        if self.backends.chat is None:
            return keyword_classify(utterance)
        prompt = render_prompt(load_prompt("classify"), utterance=utterance,
                               context=format_context(context))
        reply = self.backends.chat.chat(
            [{"role": "user", "content": prompt}], max_tokens=150)
        parsed = self._parse_reply(reply)
        if parsed is not None:
            return parsed
        logger.warning("unparseable classification %r; using keyword fallback",
                       reply[:80])
        return keyword_classify(utterance)

    @staticmethod
    def _parse_reply(reply: str) -> IntentClass | None:
        match = re.search(r"\{.*\}", reply, re.DOTALL)
        if not match:
            return None
        try:
            data = json.loads(match.group(0))
            return IntentClass(
                kind=data["kind"],
                targets=tuple(str(t) for t in data.get("targets") or ()),
                task_reference=data.get("task_reference"),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValidationError):
            return None


# -- the per-tick runtime ------------------------------------------------------

@dataclass
class _TaskEvaluation:
    task: ProactiveTask
    raw: int
    delta: float | None
    final: int
    reason: str
    response_text: str | None
    new_state: GateState | None


class AgentRuntime:
    """One session's orchestrator: memory, gating state, and the three-way
    routing policy, driven tick by tick by a harness or the session service."""

    def __init__(self, backends: Backends, options: RuntimeOptions | None = None,
                 monitor_workers: int = 1):
        self.backends = backends
        self.options = options or RuntimeOptions()
        self.memory = MemoryStore()
        self.router = IntentRouter(backends, self.options.context_limit)
        self.responder = Responder(backends)
        self.monitor_workers = max(1, monitor_workers)
        self.proposal_sets: dict[str, ProposalSet | None] = {}
        self.gate_states: dict[str, GateState] = {}
        self.telemetry: list[GateTelemetry] = []
        self.task_events: list[dict] = []  # add/cancel/modify audit trail

    # -- dispatch -------------------------------------------------------------

    def classify(self, utterance: str, at: int,
                 event_id: str | None = None) -> IntentClass:
        context = self.memory.retrieve_context(utterance, at,
                                               self.options.context_limit)
        try:
            return self.router.classify(utterance, context, event_id=event_id)
        except BackendUnavailable as exc:
            raise BackendUnavailable(
                f"classification failed for {utterance!r}: {exc}") from exc

    def dispatch(self, intent: IntentClass, utterance: str, at: int,
                 window: FrameWindow, event_id: str | None = None) -> AgentOutput:
        """Route one classified utterance down its branch."""
        return self.dispatch_record(intent, utterance, at, window,
                                    event_id=event_id).output

    def dispatch_record(self, intent: IntentClass, utterance: str, at: int,
                        window: FrameWindow,
                        event_id: str | None = None) -> OutputRecord:
        try:
            if intent.kind == INTENT_REACTIVE:
                return self._dispatch_reactive(utterance, at, window, event_id)
            if intent.kind == INTENT_PROACTIVE:
                return self._dispatch_proactive(intent, utterance, at, event_id)
            return self._dispatch_management(intent, utterance, at, window, event_id)
        except IPIError as exc:
            exc.args = (f"{exc} (utterance: {utterance!r})",)
            raise

    def _dispatch_reactive(self, utterance, at, window, event_id) -> OutputRecord:
        if not self.options.interaction_control:
            text = self.responder.passthrough_answer(utterance, window, event_id)
            output = AgentOutput(at, OUTPUT_RESPONSE, text=text)
            return OutputRecord(output, event_id=event_id)
        context = self.memory.retrieve_context(utterance, at,
                                               self.options.context_limit)
        self.memory.record_turn(at, SPEAKER_USER, utterance, "reactive_query")
        answer = self.responder.reactive_answer(utterance, window, context,
                                                event_id=event_id)
        self.memory.record_turn(at, SPEAKER_AGENT, answer, "answer")
        if self.options.with_reminder and self.memory.active_tasks(at):
            self.memory.record_turn(at, SPEAKER_USER, REMINDER_TEXT,
                                    "management_instruction")
        return OutputRecord(AgentOutput(at, OUTPUT_RESPONSE, text=answer),
                            event_id=event_id)

    def _dispatch_proactive(self, intent, utterance, at, event_id) -> OutputRecord:
        self.memory.record_turn(at, SPEAKER_USER, utterance, "proactive_instruction")
        created = []
        for target in intent.targets:
            task = self.memory.add_task(target, target, at)
            self._refresh_proposals(task)
            task.proposals = list(self.proposal_sets[task.task_id].proposals) \
                if self.proposal_sets.get(task.task_id) else []
            self.task_events.append({
                "action": "add", "tick": at, "task_id": task.task_id,
                "task_key": task.target, "revision": task.revision,
            })
            created.append(task)
        summary = "; ".join(f"{t.task_id}: {t.target}" for t in created)
        output = AgentOutput(
            at, OUTPUT_TASK_UPDATE,
            task_id=created[0].task_id if len(created) == 1 else None,
            text=f"monitoring {summary}")
        return OutputRecord(output, event_id=event_id,
                            created_task_ids=tuple(t.task_id for t in created))

    def _dispatch_management(self, intent, utterance, at, window, event_id) -> OutputRecord:
        if not self.options.interaction_control:
            # Degraded variant: pass-through prompting, no memory access.
            text = self.responder.passthrough_answer(utterance, window, event_id)
            return OutputRecord(AgentOutput(at, OUTPUT_RESPONSE, text=text),
                                event_id=event_id)
        self.memory.record_turn(at, SPEAKER_USER, utterance,
                                "management_instruction")
        task = self.memory.resolve_task(intent.task_reference, at)
        if intent.kind == INTENT_CANCEL:
            self.memory.cancel_task(task.task_id, at)
            self.task_events.append({
                "action": "cancel", "tick": at, "task_id": task.task_id,
                "task_key": task.target, "revision": task.revision,
            })
            text = f"cancelled {task.task_id}: {task.target}"
        else:
            new_target = intent.targets[0] if intent.targets else utterance
            self.memory.modify_task(task.task_id, new_target, at)
            self.gate_states.pop(task.task_id, None)  # no delta across revisions
            self._refresh_proposals(task)
            task.proposals = list(self.proposal_sets[task.task_id].proposals) \
                if self.proposal_sets.get(task.task_id) else []
            self.task_events.append({
                "action": "modify", "tick": at, "task_id": task.task_id,
                "task_key": task.target, "revision": task.revision,
            })
            text = f"updated {task.task_id} to: {task.target} (rev {task.revision})"
        output = AgentOutput(at, OUTPUT_TASK_UPDATE, task_id=task.task_id, text=text)
        return OutputRecord(output, event_id=event_id, task_key=task.target,
                            revision=task.revision)

    # -- continuous monitoring --------------------------------------------------

    def monitor_tick(self, at: int, window: FrameWindow) -> list[AgentOutput]:
        return [record.output for record in self.monitor_records(at, window)]

    def monitor_records(self, at: int, window: FrameWindow) -> list[OutputRecord]:
        tasks = self.memory.active_tasks(at)
        if not tasks:
            return []
        needs_embedding = self.options.gating or self.options.embedding_only
        window_vector = embed_window(window, self.backends) if needs_embedding else None

        def evaluate(task):
            return self._evaluate_task(task, at, window, window_vector)

        if self.monitor_workers > 1 and len(tasks) > 1:
            with ThreadPoolExecutor(max_workers=self.monitor_workers) as pool:
                evaluations = list(pool.map(evaluate, tasks))
        else:
            evaluations = [evaluate(task) for task in tasks]

        # Commit phase: single-writer mutations, in stable task order.
        records = []
        for evaluation in evaluations:
            if evaluation is None:
                continue
            task = evaluation.task
            if evaluation.new_state is not None:
                self.gate_states[task.task_id] = evaluation.new_state
            self.telemetry.append(GateTelemetry(
                tick=at, task_id=task.task_id, raw=evaluation.raw,
                delta=evaluation.delta, final=evaluation.final,
                reason=evaluation.reason))
            if evaluation.final == 1:
                text = evaluation.response_text
                self.memory.record_trigger(task.task_id, at, text)
                self.memory.record_turn(at, SPEAKER_AGENT, text, "trigger")
                records.append(OutputRecord(
                    AgentOutput(at, OUTPUT_TRIGGER, task_id=task.task_id, text=text),
                    task_key=task.target, revision=task.revision,
                    reason=evaluation.reason))
        return records

    def _evaluate_task(self, task: ProactiveTask, at: int, window: FrameWindow,
                       window_vector) -> _TaskEvaluation | None:
        try:
            proposal_set = self._refresh_proposals(task)
            delta = None
            new_state = None
            if window_vector is not None and proposal_set is not None:
                state = self.gate_states.get(task.task_id) or GateState(
                    task.task_id, task.revision)
                delta, new_state = update_delta(state, proposal_set,
                                                window_vector, at)

            enhanced = None
            if self.options.embedding_only:
                raw = 0
                decision = gate(raw, delta, self.options.thresholds, task.task_id)
            else:
                context = self.memory.retrieve_context(task.target, at,
                                                       self.options.context_limit)
                enhanced = self.responder.enhance_instruction(task, context)
                raw = self.responder.raw_trigger(task, window, enhanced, at)
                gate_delta = delta if self.options.gating else None
                decision = gate(raw, gate_delta, self.options.thresholds,
                                task.task_id)

            text = None
            if decision.final == 1:
                if enhanced is None:
                    enhanced = EnhancedInstruction(
                        task.task_id, task.structured_target, task.structured_target)
                text = self.responder.proactive_response(task, window, enhanced, at)
            return _TaskEvaluation(task=task, raw=raw, delta=delta,
                                   final=decision.final, reason=decision.reason,
                                   response_text=text, new_state=new_state)
        except TraceCoverageError:
            raise  # a trace hole is a broken oracle, never isolate it
        except Exception as exc:  # noqa: BLE001 - per-task isolation
            logger.error("monitoring failed for %s at tick %d: %s",
                         task.task_id, at, exc)
            return None

    def _refresh_proposals(self, task: ProactiveTask) -> ProposalSet | None:
        if not (self.options.gating or self.options.embedding_only):
            return None
        current = self.proposal_sets.get(task.task_id)
        if current is not None and current.revision == task.revision:
            return current
        proposal_set = generate_proposals(task, self.options.proposal_count,
                                          self.backends)
        self.proposal_sets[task.task_id] = proposal_set
        return proposal_set

    # -- tick driver ------------------------------------------------------------

    def process_tick(self, at: int, window: FrameWindow,
                     due_events: list[ScheduledEvent],
                     monitor: bool = True) -> list[OutputRecord]:
        """One full tick: instruction events, then monitoring, then reactive
        queries. Classification and dispatch failures surface as diagnostic
        records instead of killing the stream. `monitor=False` delivers the
        events but skips continuous monitoring (used by the harness outside
        the evaluated neighborhoods)."""
        classified: list[tuple[ScheduledEvent, IntentClass | None, str | None]] = []
        for event in due_events:
            try:
                intent = self.classify(event.utterance, at, event_id=event.event_id)
                classified.append((event, intent, None))
            except TraceCoverageError:
                raise
            except IPIError as exc:
                classified.append((event, None, str(exc)))

        records: list[OutputRecord] = []

        def run_dispatch(event, intent):
            try:
                records.append(self.dispatch_record(
                    intent, event.utterance, at, window, event_id=event.event_id))
            except TraceCoverageError:
                raise
            except IPIError as exc:
                records.append(OutputRecord(
                    AgentOutput(at, OUTPUT_NO_ACTION), event_id=event.event_id,
                    error=str(exc)))

        for event, intent, error in classified:
            if error is not None:
                records.append(OutputRecord(
                    AgentOutput(at, OUTPUT_NO_ACTION), event_id=event.event_id,
                    error=error))
            elif intent.kind != INTENT_REACTIVE:
                run_dispatch(event, intent)
        if monitor:
            records.extend(self.monitor_records(at, window))
        for event, intent, error in classified:
            if error is None and intent.kind == INTENT_REACTIVE:
                run_dispatch(event, intent)
        return records

    # -- snapshots ----------------------------------------------------------------

    def snapshot(self) -> dict:
        return {
            "memory": self.memory.snapshot(),
            "gate_states": {
                task_id: {
                    "revision": state.revision,
                    "prev_scores": None if state.prev_scores is None
                    else [float(x) for x in state.prev_scores],
                    "last_tick": state.last_tick,
                }
                for task_id, state in sorted(self.gate_states.items())
            },
            "telemetry": [
                {"tick": t.tick, "task_id": t.task_id, "raw": t.raw,
                 "delta": t.delta, "final": t.final, "reason": t.reason}
                for t in self.telemetry
            ],
            "task_events": list(self.task_events),
        }

    def restore_state(self, data: dict) -> None:
        import numpy as np

        self.memory = MemoryStore.restore(data["memory"])
        self.gate_states = {
            task_id: GateState(
                task_id=task_id, revision=entry["revision"],
                prev_scores=None if entry["prev_scores"] is None
                else np.asarray(entry["prev_scores"], dtype=np.float64),
                last_tick=entry["last_tick"])
            for task_id, entry in data["gate_states"].items()
        }
        self.telemetry = [GateTelemetry(**entry) for entry in data["telemetry"]]
        self.task_events = list(data["task_events"])
        self.proposal_sets = {}  # regenerated on demand from the task set
