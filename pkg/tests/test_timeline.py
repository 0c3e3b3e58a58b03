import random

import pytest

from ipiagent.errors import ProtocolViolation, ValidationError, WindowBoundsError
from ipiagent.timeline import (
    DirectoryFrameSource,
    Frame,
    ScheduledEvent,
    SyntheticFrameSource,
    Timeline,
    TripwireFrameSource,
    window_at,
)


def make_timeline(length=30, events=None, capacity=16):
    return Timeline(source=SyntheticFrameSource(length), events=events or [],
                    capacity=capacity)


def test_partial_window_at_stream_start():
    tl = make_timeline()
    for t in range(1, 5):
        tl.advance(t)
    window, _ = tl.advance(5)
    assert [f.index for f in window.frames] == [1, 2, 3, 4, 5]


def test_full_window_slides():
    tl = make_timeline()
    for t in range(1, 20):
        tl.advance(t)
    window, _ = tl.advance(20)
    assert [f.index for f in window.frames] == list(range(5, 21))


def test_tick_skip_is_a_protocol_violation():
    tl = make_timeline()
    for t in range(1, 6):
        tl.advance(t)
    with pytest.raises(ProtocolViolation):
        tl.advance(7)
    with pytest.raises(ProtocolViolation):
        tl.advance(5)


def test_window_at_examples():
    source = SyntheticFrameSource(120)
    assert [f.index for f in window_at(source, 16, 16).frames] == list(range(1, 17))
    assert [f.index for f in window_at(source, 1, 16).frames] == [1]
    assert [f.index for f in window_at(source, 100, 16).frames] == list(range(85, 101))


def test_window_at_bounds():
    source = SyntheticFrameSource(10)
    with pytest.raises(WindowBoundsError):
        window_at(source, 0, 16)
    with pytest.raises(WindowBoundsError):
        window_at(source, 11, 16)
    with pytest.raises(ValidationError):
        window_at(source, 5, 0)


def test_window_algebra_property():
    # last(window).index == t and |window| == min(K, t), over random t, K
    rng = random.Random(23)
    source = SyntheticFrameSource(200)
    for _ in range(200):
        t = rng.randint(1, 200)
        capacity = rng.randint(1, 40)
        window = window_at(source, t, capacity)
        assert window.frames[-1].index == t
        assert len(window) == min(capacity, t)
        indices = [f.index for f in window.frames]
        assert indices == list(range(t - len(window) + 1, t + 1))


def test_events_delivered_exactly_once_in_declaration_order():
    events = [
        ScheduledEvent(3, "first", "a"),
        ScheduledEvent(3, "second", "b"),
        ScheduledEvent(7, "third", "c"),
    ]
    tl = make_timeline(events=events)
    seen = []
    for t in range(1, 11):
        _, due = tl.advance(t)
        seen.extend(e.event_id for e in due)
    assert seen == ["a", "b", "c"]


def test_duplicate_event_ids_rejected():
    with pytest.raises(ValidationError):
        make_timeline(events=[ScheduledEvent(1, "x", "a"),
                              ScheduledEvent(2, "y", "a")])


def test_frame_index_validation():
    with pytest.raises(ValidationError):
        Frame(0, "synthetic:0")


def test_tripwire_records_and_flags_future_access():
    tl = make_timeline()
    tripwire = TripwireFrameSource(tl.source, lambda: tl.current_tick)
    tl.source = tripwire
    for t in range(1, 6):
        tl.advance(t)
    assert tripwire.violations == []
    # a consumer peeking one frame ahead must be caught
    tripwire.frame(6)
    assert tripwire.violations == [(5, 6)]


def test_directory_source(tmp_path):
    for i in (1, 2, 3):
        (tmp_path / f"{i}.jpg").write_bytes(b"frame")
    source = DirectoryFrameSource(tmp_path)
    assert source.length == 3
    assert source.frame(2).index == 2
    with pytest.raises(WindowBoundsError):
        source.frame(4)
