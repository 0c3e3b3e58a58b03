"""Streaming clock, frame windows, and scheduled user events.

The stream runs at a fixed one-frame-per-second rate; a "tick" is one second
of stream time, 1-based. The timeline owns the only clock: consumers receive
immutable window snapshots and can never observe frames beyond the current
tick (enforceable with TripwireFrameSource).
"""

from __future__ import annotations

import base64
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CausalityError, ProtocolViolation, ValidationError, WindowBoundsError

logger = logging.getLogger(__name__)

DEFAULT_WINDOW_CAPACITY = 16


@dataclass(frozen=True)
class Frame:
    """One second of stream content. `source` is an opaque reference
    (file path, data URI, or synthetic tag); decoding is a backend concern."""

    index: int
    source: str

    def __post_init__(self):
        if self.index < 1:
            raise ValidationError(f"frame index must be >= 1, got {self.index}")


@dataclass(frozen=True)
class FrameWindow:
    """The last min(capacity, end_tick) frames ending at end_tick."""

    end_tick: int
    frames: tuple[Frame, ...]
    capacity: int = DEFAULT_WINDOW_CAPACITY

    def __post_init__(self):
        if not self.frames:
            raise ValidationError("frame window must contain at least one frame")
        if len(self.frames) > self.capacity:
            raise ValidationError("frame window exceeds its capacity")
        if self.frames[-1].index != self.end_tick:
            raise ValidationError("frame window must end at end_tick")

    def __len__(self):
        return len(self.frames)

    @property
    def start_tick(self) -> int:
        return self.frames[0].index

    def cache_key(self) -> str:
        """Stable identity of the window content, used by embedding caches."""
        return f"{self.start_tick}:{self.end_tick}:" + "|".join(
            f.source for f in self.frames)


@dataclass(frozen=True)
class ScheduledEvent:
    """A user utterance scheduled at a fixed tick of the replayed stream."""

    at_tick: int
    utterance: str
    event_id: str

    def __post_init__(self):
        if self.at_tick < 1:
            raise ValidationError(
                f"event {self.event_id!r}: at_tick must be >= 1, got {self.at_tick}")


class FrameSource:
    """Provides frames by 1-based tick index. `length` is None for unbounded
    sources (e.g. a live session fed by frame_push)."""

    length: int | None = None

    def frame(self, index: int) -> Frame:
        raise NotImplementedError


class SyntheticFrameSource(FrameSource):
    """Pixel-free source for scripted runs; payloads are opaque tags."""

    def __init__(self, length: int | None = None):
        self.length = length

    def frame(self, index: int) -> Frame:
        if index < 1 or (self.length is not None and index > self.length):
            raise WindowBoundsError(f"frame index {index} out of range")
        return Frame(index, f"synthetic:{index}")


class DirectoryFrameSource(FrameSource):
    """A directory of image files named by tick index (e.g. 12.jpg or
    000012.png). This presumes the stream was pre-sampled to 1 FPS."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._by_index: dict[int, Path] = {}
        for path in sorted(self.root.iterdir()):
            if not path.is_file():
                continue
            try:
                idx = int(path.stem)
            except ValueError:
                continue
            if idx >= 1 and idx not in self._by_index:
                self._by_index[idx] = path
        if not self._by_index:
            raise ValidationError(f"no tick-indexed frames found under {self.root}")
        self.length = max(self._by_index)

    def frame(self, index: int) -> Frame:
        path = self._by_index.get(index)
        if path is None:
            raise WindowBoundsError(f"no frame file for tick {index} under {self.root}")
        return Frame(index, str(path))

    def read_bytes(self, index: int) -> bytes:
        return Path(self.frame(index).source).read_bytes()


class ManifestFrameSource(FrameSource):
    """Per-tick payload references listed explicitly (position = tick - 1)."""

    def __init__(self, refs: list[str]):
        if not refs:
            raise ValidationError("frame reference list is empty")
        self._refs = list(refs)
        self.length = len(refs)

    def frame(self, index: int) -> Frame:
        if index < 1 or index > self.length:
            raise WindowBoundsError(f"frame index {index} out of range")
        return Frame(index, self._refs[index - 1])


class PushableFrameSource(FrameSource):
    """Client-pushed frames for live sessions; falls back to synthetic tags
    for ticks nothing was pushed for, so the clock can always advance."""

    def __init__(self):
        self._pushed: dict[int, str] = {}
        self.length = None

    def push(self, index: int, source: str) -> None:
        if index < 1:
            raise ValidationError(f"frame index must be >= 1, got {index}")
        self._pushed[index] = source

    def frame(self, index: int) -> Frame:
        return Frame(index, self._pushed.get(index, f"synthetic:{index}"))


class TripwireFrameSource(FrameSource):
    """Records every frame access against the clock's current tick.

    Wraps another source; `violations` lists accesses to frames beyond the
    tick that was current at access time. A clean run reports zero.
    """

    def __init__(self, inner: FrameSource, current_tick):
        self.inner = inner
        self.length = inner.length
        self._current_tick = current_tick
        self.accesses: list[tuple[int, int]] = []  # (tick at access, index)

    def frame(self, index: int) -> Frame:
        now = self._current_tick()
        self.accesses.append((now, index))
        return self.inner.frame(index)

    @property
    def violations(self) -> list[tuple[int, int]]:
        return [(now, idx) for now, idx in self.accesses if idx > now]


def window_at(source: FrameSource, t: int, capacity: int = DEFAULT_WINDOW_CAPACITY) -> FrameWindow:
    """The sliding window of the last min(capacity, t) frames ending at t."""
    if capacity < 1:
        raise ValidationError(f"window capacity must be >= 1, got {capacity}")
    if t < 1 or (source.length is not None and t > source.length):
        raise WindowBoundsError(f"tick {t} out of stream range")
    start = max(1, t - capacity + 1)
    frames = tuple(source.frame(i) for i in range(start, t + 1))
    return FrameWindow(end_tick=t, frames=frames, capacity=capacity)


def encode_frame_payload(frame: Frame) -> str:
    """Resolve a frame reference to a base64 payload for chat attachments."""
    if frame.source.startswith("synthetic:"):
        return base64.b64encode(frame.source.encode()).decode()
    if frame.source.startswith("base64:"):
        return frame.source[len("base64:"):]
    return base64.b64encode(Path(frame.source).read_bytes()).decode()


@dataclass
class Timeline:
    """Single-writer stream clock with scheduled user events.

    Tick advancement is strictly sequential (current -> current + 1); the
    windows it hands out are frozen snapshots safe to share across
    concurrent per-task evaluations within a tick.
    """

    source: FrameSource
    events: list[ScheduledEvent] = field(default_factory=list)
    capacity: int = DEFAULT_WINDOW_CAPACITY
    current_tick: int = 0

    def __post_init__(self):
        seen = set()
        for event in self.events:
            if event.event_id in seen:
                raise ValidationError(f"duplicate event_id {event.event_id!r}")
            seen.add(event.event_id)
        self._delivered: set[str] = set()

    def advance(self, to_tick: int) -> tuple[FrameWindow, list[ScheduledEvent]]:
        """Advance the clock by exactly one second and collect due events.

        Events due at to_tick are returned exactly once, in declaration
        order. Skipping or rewinding the clock is a protocol violation.
        """
        if to_tick != self.current_tick + 1:
            raise ProtocolViolation(
                f"ticks advance one second at a time: current={self.current_tick}, "
                f"requested={to_tick}")
        self.current_tick = to_tick
        window = window_at(self.source, to_tick, self.capacity)
        due = []
        for event in self.events:
            if event.at_tick == to_tick:
                if event.event_id in self._delivered:
                    raise ProtocolViolation(
                        f"event {event.event_id!r} already delivered")
                self._delivered.add(event.event_id)
                due.append(event)
        return window, due

    def window(self) -> FrameWindow:
        if self.current_tick < 1:
            raise CausalityError("no window before the first tick")
        return window_at(self.source, self.current_tick, self.capacity)
