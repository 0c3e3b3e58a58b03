import pytest

from ipiagent.errors import AmbiguousTaskError, TaskNotFoundError, ValidationError
from ipiagent.memory import (
    STATUS_CANCELLED,
    MemoryStore,
    SPEAKER_AGENT,
    SPEAKER_USER,
)


def test_add_task_immediately_visible():
    store = MemoryStore()
    task = store.add_task("the cyclist appears", None, at=3)
    assert task.revision == 1
    assert task.status == "active"
    assert [t.task_id for t in store.active_tasks(3)] == [task.task_id]
    assert store.active_tasks(2) == ()


def test_add_task_rejects_empty_instruction():
    store = MemoryStore()
    with pytest.raises(ValidationError):
        store.add_task("", None, at=1)
    with pytest.raises(ValidationError):
        store.add_task("   ", None, at=1)


def test_cancel_boundary_semantics():
    store = MemoryStore()
    task = store.add_task("watch the door", None, at=2)
    store.cancel_task(task.task_id, at=10)
    assert [t.task_id for t in store.active_tasks(9)] == [task.task_id]
    assert store.active_tasks(10) == ()
    assert task.status == STATUS_CANCELLED


def test_cancel_unknown_and_idempotent(caplog):
    store = MemoryStore()
    with pytest.raises(TaskNotFoundError):
        store.cancel_task("task-999", at=1)
    task = store.add_task("watch the door", None, at=1)
    store.cancel_task(task.task_id, at=5)
    with caplog.at_level("WARNING"):
        again = store.cancel_task(task.task_id, at=6)
    assert again.cancelled_at == 5  # second call is a no-op
    assert "already-cancelled" in caplog.text


def test_modify_increments_revision_and_clears_proposals():
    store = MemoryStore()
    task = store.add_task("the red car leaves", None, at=1)
    task.proposals = ["a", "b"]
    store.record_trigger(task.task_id, 4, "gone")
    updated = store.modify_task(task.task_id, "the blue truck arrives", at=6)
    assert updated.revision == 2
    assert updated.proposals == []
    assert updated.target == "the blue truck arrives"
    # history is retained with its revision tag
    assert [(r.tick, r.revision) for r in updated.trigger_log] == [(4, 1)]
    store.record_trigger(task.task_id, 9, "arrived")
    assert updated.trigger_log[-1].revision == 2


def test_modify_cancelled_task_is_an_error():
    store = MemoryStore()
    task = store.add_task("x happens", None, at=1)
    store.cancel_task(task.task_id, at=2)
    with pytest.raises(ValidationError):
        store.modify_task(task.task_id, "y happens", at=3)


def test_active_tasks_ordering_and_counts():
    store = MemoryStore()
    a = store.add_task("first", None, at=1)
    b = store.add_task("second", None, at=2)
    c = store.add_task("third", None, at=3)
    store.cancel_task(b.task_id, at=4)
    active = store.active_tasks(5)
    assert [t.task_id for t in active] == [a.task_id, c.task_id]


def test_resolve_task_most_recent_and_ambiguity():
    store = MemoryStore()
    store.add_task("first", None, at=1)
    newest = store.add_task("second", None, at=4)
    assert store.resolve_task(None, at=5).task_id == newest.task_id
    # two tasks created on the same tick: implicit reference is ambiguous
    store.add_task("third", None, at=4)
    with pytest.raises(AmbiguousTaskError):
        store.resolve_task(None, at=5)
    with pytest.raises(TaskNotFoundError):
        MemoryStore().resolve_task(None, at=1)


def test_trigger_log_strictly_increasing():
    store = MemoryStore()
    task = store.add_task("watch", None, at=1)
    store.record_trigger(task.task_id, 5, "a")
    with pytest.raises(ValidationError):
        store.record_trigger(task.task_id, 5, "b")


def test_retrieve_context_recency():
    store = MemoryStore()
    for i in range(10):
        store.record_turn(i + 1, SPEAKER_USER, f"turn {i}", "reactive_query")
    got = store.retrieve_context("anything", at=10, limit=8)
    assert [t.text for t in got] == [f"turn {i}" for i in range(2, 10)]
    assert store.retrieve_context("x", at=10, limit=0) == []
    assert MemoryStore().retrieve_context("x", at=5, limit=4) == []
    # turns after `at` are invisible
    only_early = store.retrieve_context("x", at=3, limit=8)
    assert all(t.at_tick <= 3 for t in only_early)


def test_turn_count_is_nondecreasing_and_append_only():
    store = MemoryStore()
    counts = []
    for i in range(5):
        store.record_turn(i + 1, SPEAKER_AGENT, "t", "answer")
        counts.append(store.turn_count)
    assert counts == sorted(counts)


def test_snapshot_roundtrip():
    store = MemoryStore()
    task = store.add_task("watch the gate", None, at=1)
    store.record_turn(1, SPEAKER_USER, "watch the gate", "proactive_instruction")
    store.record_trigger(task.task_id, 4, "opened")
    store.modify_task(task.task_id, "watch the fence", at=6)
    restored = MemoryStore.restore(store.snapshot())
    assert restored.snapshot() == store.snapshot()
    assert restored.get_task(task.task_id).revision == 2
