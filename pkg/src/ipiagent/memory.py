"""Proactive and interaction memory.

Proactive memory holds the set of standing monitoring tasks; interaction
memory is the append-only turn history used to enrich later queries. All
mutations go through a single MemoryStore so a session snapshot can be
serialized and replayed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .errors import AmbiguousTaskError, TaskNotFoundError, ValidationError

logger = logging.getLogger(__name__)

STATUS_ACTIVE = "active"
STATUS_CANCELLED = "cancelled"

SPEAKER_USER = "user"
SPEAKER_AGENT = "agent"

TURN_KINDS = (
    "reactive_query",
    "proactive_instruction",
    "management_instruction",
    "answer",
    "trigger",
)

DEFAULT_CONTEXT_LIMIT = 8


@dataclass(frozen=True)
class TriggerRecord:
    tick: int
    text: str
    revision: int


@dataclass
class ProactiveTask:
    """A standing monitoring objective over the stream.

    `target` is the natural-language condition being watched for; `proposals`
    are the paraphrase texts tracked by the gating layer (cleared on every
    modification so they get regenerated for the new target).
    """

    task_id: str
    target: str
    structured_target: str
    created_at: int
    proposals: list[str] = field(default_factory=list)
    status: str = STATUS_ACTIVE
    revision: int = 1
    cancelled_at: int | None = None
    trigger_log: list[TriggerRecord] = field(default_factory=list)
    single_shot: bool = False  # default-off; kept active after triggering

    def is_active_at(self, tick: int) -> bool:
        if self.created_at > tick:
            return False
        if self.status == STATUS_CANCELLED and self.cancelled_at is not None:
            return tick < self.cancelled_at
        return self.status == STATUS_ACTIVE


@dataclass(frozen=True)
class InteractionTurn:
    at_tick: int
    speaker: str
    text: str
    kind: str
    turn_id: int

    def __post_init__(self):
        if self.kind not in TURN_KINDS:
            raise ValidationError(f"unknown turn kind {self.kind!r}")


class MemoryStore:
    """Single-writer store for the task set and the interaction history.

    Reads return tuples (immutable snapshots); per-task gating workers may
    consume them concurrently while the session loop keeps writing.
    """

    def __init__(self):
        self._tasks: dict[str, ProactiveTask] = {}
        self._turns: list[InteractionTurn] = []
        self._task_counter = 0

    # -- proactive memory ---------------------------------------------------

    def add_task(self, instruction: str, structured_target: str | None,
                 at: int) -> ProactiveTask:
        if not instruction or not instruction.strip():
            raise ValidationError("proactive instruction must be non-empty")
        self._task_counter += 1
        task = ProactiveTask(
            task_id=f"task-{self._task_counter}",
            target=instruction.strip(),
            structured_target=(structured_target or instruction).strip(),
            created_at=at,
        )
        self._tasks[task.task_id] = task
        return task

    def cancel_task(self, ref: str, at: int) -> ProactiveTask:
        task = self._get(ref)
        if task.status == STATUS_CANCELLED:
            logger.warning("cancel of already-cancelled task %s ignored", ref)
            return task
        task.status = STATUS_CANCELLED
        task.cancelled_at = at
        return task

    def modify_task(self, ref: str, new_instruction: str, at: int,
                    structured_target: str | None = None) -> ProactiveTask:
        if not new_instruction or not new_instruction.strip():
            raise ValidationError("modified instruction must be non-empty")
        task = self._get(ref)
        if task.status != STATUS_ACTIVE:
            raise ValidationError(f"cannot modify cancelled task {ref}")
        task.target = new_instruction.strip()
        task.structured_target = (structured_target or new_instruction).strip()
        task.revision += 1
        task.proposals = []  # gating regenerates for the new revision
        return task

    def active_tasks(self, at: int) -> tuple[ProactiveTask, ...]:
        """Tasks active at the given tick, ordered by (created_at, task_id)."""
        tasks = [t for t in self._tasks.values() if t.is_active_at(at)]
        tasks.sort(key=lambda t: (t.created_at, t.task_id))
        return tuple(tasks)

    def get_task(self, task_id: str) -> ProactiveTask:
        return self._get(task_id)

    def all_tasks(self) -> tuple[ProactiveTask, ...]:
        tasks = sorted(self._tasks.values(), key=lambda t: (t.created_at, t.task_id))
        return tuple(tasks)

    def resolve_task(self, ref: str | None, at: int) -> ProactiveTask:
        """Resolve an explicit id, or fall back to the most recently created
        active task. Two or more equally recent candidates are an error."""
        if ref is not None:
            return self._get(ref)
        candidates = [t for t in self._tasks.values() if t.is_active_at(at)]
        if not candidates:
            raise TaskNotFoundError("no active task to resolve the instruction against")
        newest = max(t.created_at for t in candidates)
        tied = [t for t in candidates if t.created_at == newest]
        if len(tied) > 1:
            ids = ", ".join(sorted(t.task_id for t in tied))
            raise AmbiguousTaskError(
                f"instruction names no task and {len(tied)} tasks were created "
                f"at tick {newest}: {ids}")
        return tied[0]

    def record_trigger(self, task_id: str, tick: int, text: str) -> TriggerRecord:
        task = self._get(task_id)
        if task.trigger_log and task.trigger_log[-1].tick >= tick:
            raise ValidationError(
                f"trigger ticks must be strictly increasing for {task_id}")
        record = TriggerRecord(tick=tick, text=text, revision=task.revision)
        task.trigger_log.append(record)
        return record

    def _get(self, ref: str) -> ProactiveTask:
        task = self._tasks.get(ref)
        if task is None:
            raise TaskNotFoundError(f"unknown task {ref!r}")
        return task

    # -- interaction memory -------------------------------------------------

    def record_turn(self, at: int, speaker: str, text: str, kind: str) -> InteractionTurn:
        turn = InteractionTurn(
            at_tick=at, speaker=speaker, text=text, kind=kind,
            turn_id=len(self._turns))
        self._turns.append(turn)
        return turn

    def retrieve_context(self, query: str, at: int,
                         limit: int = DEFAULT_CONTEXT_LIMIT) -> list[InteractionTurn]:
        """The most recent `limit` turns at or before `at`, oldest first.

        Recency retrieval; `query` is accepted so a semantic retriever can
        slot in behind the same call, but this implementation ignores it.
        """
        if limit < 0:
            raise ValidationError(f"context limit must be >= 0, got {limit}")
        if limit == 0:
            return []
        eligible = [t for t in self._turns if t.at_tick <= at]
        return eligible[-limit:]

    @property
    def turn_count(self) -> int:
        return len(self._turns)

    # -- snapshots ----------------------------------------------------------

    def snapshot(self) -> dict:
        return {
            "task_counter": self._task_counter,
            "tasks": [
                {
                    "task_id": t.task_id,
                    "target": t.target,
                    "structured_target": t.structured_target,
                    "created_at": t.created_at,
                    "proposals": list(t.proposals),
                    "status": t.status,
                    "revision": t.revision,
                    "cancelled_at": t.cancelled_at,
                    "trigger_log": [
                        {"tick": r.tick, "text": r.text, "revision": r.revision}
                        for r in t.trigger_log
                    ],
                    "single_shot": t.single_shot,
                }
                for t in self.all_tasks()
            ],
            "turns": [
                {
                    "at_tick": turn.at_tick,
                    "speaker": turn.speaker,
                    "text": turn.text,
                    "kind": turn.kind,
                    "turn_id": turn.turn_id,
                }
                for turn in self._turns
            ],
        }

    @classmethod
    def restore(cls, data: dict) -> "MemoryStore":
        store = cls()
        store._task_counter = data["task_counter"]
        for entry in data["tasks"]:
            task = ProactiveTask(
                task_id=entry["task_id"],
                target=entry["target"],
                structured_target=entry["structured_target"],
                created_at=entry["created_at"],
                proposals=list(entry["proposals"]),
                status=entry["status"],
                revision=entry["revision"],
                cancelled_at=entry["cancelled_at"],
                trigger_log=[
                    TriggerRecord(r["tick"], r["text"], r["revision"])
                    for r in entry["trigger_log"]
                ],
                single_shot=entry.get("single_shot", False),
            )
            store._tasks[task.task_id] = task
        for entry in data["turns"]:
            store._turns.append(InteractionTurn(
                at_tick=entry["at_tick"], speaker=entry["speaker"],
                text=entry["text"], kind=entry["kind"], turn_id=entry["turn_id"]))
        return store
