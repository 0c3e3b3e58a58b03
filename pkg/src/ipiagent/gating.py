"""Temporal gating over embedding-similarity changes.

Each monitored task carries a set of proposal texts (paraphrases of its
target condition). Every tick, the similarity between each proposal
embedding and the current frame-window embedding is tracked; the pooled
one-tick increase (max over proposals) is the gate's evidence signal. The
gate then overrides the raw per-tick trigger decision with two thresholds:
a raw trigger with too little similarity change is suppressed as premature,
and a missing trigger with a large change is forced to recover the miss.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .backends import Backends, unit_normalize
from .errors import ConfigError, TraceParseError, ValidationError
from .memory import ProactiveTask
from .prompts import load_prompt, render_prompt
from .timeline import FrameWindow

logger = logging.getLogger(__name__)

DEFAULT_PROPOSAL_COUNT = 4
DEFAULT_THETA_LOW = 0.02
DEFAULT_THETA_HIGH = 0.08

REASON_PASS_THROUGH = "pass_through"
REASON_SUPPRESSED = "suppressed"
REASON_FORCED = "forced"
REASON_UNCHANGED = "unchanged"

_REASON_FROM_CODE = {
    _kernels.REASON_UNCHANGED: REASON_UNCHANGED,
    _kernels.REASON_PASS_THROUGH: REASON_PASS_THROUGH,
    _kernels.REASON_SUPPRESSED: REASON_SUPPRESSED,
    _kernels.REASON_FORCED: REASON_FORCED,
}


@dataclass(frozen=True)
class GateThresholds:
    """Suppression threshold (low) and recovery threshold (high).

    There is no published pair of values; the defaults here are repository
    defaults meant to be tuned empirically per base model (see the sweep
    tool and the live-adjustment path in the session service).
    """

    theta_low: float = DEFAULT_THETA_LOW
    theta_high: float = DEFAULT_THETA_HIGH

    def __post_init__(self):
        if math.isnan(self.theta_low) or math.isnan(self.theta_high):
            raise ValidationError("thresholds must not be NaN")
        if self.theta_low > self.theta_high:
            raise ValidationError(
                f"theta_low ({self.theta_low}) must be <= theta_high ({self.theta_high})")

    @classmethod
    def unbounded(cls) -> "GateThresholds":
        """Identity limit: never suppresses, never forces."""
        return cls(theta_low=-math.inf, theta_high=math.inf)


@dataclass(frozen=True)
class ProposalSet:
    """The M paraphrase texts for one task revision, with their embeddings
    (rows of `embeddings`, unit-normalized)."""

    task_id: str
    revision: int
    proposals: tuple[str, ...]
    embeddings: np.ndarray

    def __post_init__(self):
        if len(self.proposals) < 1:
            raise ValidationError("a proposal set needs at least one proposal")
        if self.embeddings.ndim != 2 or self.embeddings.shape[0] != len(self.proposals):
            raise ValidationError("one embedding row per proposal is required")
        norms = np.linalg.norm(self.embeddings, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValidationError("proposal embeddings must be unit-normalized")

    @property
    def count(self) -> int:
        return len(self.proposals)


@dataclass
class GateState:
    """Per-task similarity history: the previous tick's per-proposal scores.

    `prev_scores` is None exactly when this task revision has not been
    scored yet (first observation, or right after a modification).
    """

    task_id: str
    revision: int
    prev_scores: np.ndarray | None = None
    last_tick: int | None = None


@dataclass(frozen=True)
class GateDecision:
    task_id: str
    raw: int
    delta: float | None
    final: int
    reason: str


@dataclass(frozen=True)
class GateTelemetry:
    """One gate evaluation as exported per tick (session service and UI
    render these unmodified)."""

    tick: int
    task_id: str
    raw: int
    delta: float | None
    final: int
    reason: str


def gate(raw: int, delta: float | None, thresholds: GateThresholds,
         task_id: str = "") -> GateDecision:
    """The dual-threshold gate; total and pure.

    No delta yet -> the raw decision passes through. A raw trigger with
    delta below theta_low is suppressed; a silent tick with delta above
    theta_high is forced to trigger. Equality with either threshold leaves
    the raw decision unchanged.
    """
    if raw not in (0, 1):
        raise ValidationError(f"raw decision must be 0 or 1, got {raw!r}")
    if delta is None:
        return GateDecision(task_id, raw, None, raw, REASON_PASS_THROUGH)
    if raw == 1 and delta < thresholds.theta_low:
        return GateDecision(task_id, raw, delta, 0, REASON_SUPPRESSED)
    if raw == 0 and delta > thresholds.theta_high:
        return GateDecision(task_id, raw, delta, 1, REASON_FORCED)
    return GateDecision(task_id, raw, delta, raw, REASON_UNCHANGED)


def update_delta(state: GateState, proposal_set: ProposalSet,
                 window_vector: np.ndarray, tick: int) -> tuple[float | None, GateState]:
    """Score the window against every proposal and pool the one-tick change.

    Returns (delta, new_state). delta is None on the first observation of a
    task revision; a revision mismatch between state and proposals resets
    the history (no change is ever computed across a revision boundary).
    """
    if proposal_set.embeddings.shape[1] != window_vector.shape[0]:
        raise ConfigError(
            f"embedding dimension mismatch: proposals are "
            f"{proposal_set.embeddings.shape[1]}-d, window is "
            f"{window_vector.shape[0]}-d")
    scores = proposal_set.embeddings @ window_vector
    if state.revision != proposal_set.revision or state.prev_scores is None:
        new_state = GateState(task_id=proposal_set.task_id,
                              revision=proposal_set.revision,
                              prev_scores=scores, last_tick=tick)
        return None, new_state
    delta = float(np.max(scores - state.prev_scores))
    new_state = GateState(task_id=proposal_set.task_id,
                          revision=proposal_set.revision,
                          prev_scores=scores, last_tick=tick)
    return delta, new_state


def generate_proposals(task: ProactiveTask, count: int,
                       backends: Backends) -> ProposalSet | None:
    """Produce the paraphrase set for a task revision and embed it.

    Scripted runs read texts and vectors verbatim from the trace. Live runs
    ask the chat backend for `count` paraphrases and degrade to a single
    proposal (the raw target text) if that fails; if embedding is impossible
    altogether, returns None and the gate falls back to pass-through.
    """
    if count < 1:
        raise ValidationError(f"proposal count must be >= 1, got {count}")
    if backends.is_scripted:
        texts = backends.scripted.proposal_texts(task.target)
        vectors = backends.scripted.proposal_vectors(task.target)
        return ProposalSet(task_id=task.task_id, revision=task.revision,
                           proposals=tuple(texts), embeddings=vectors)
    if backends.embed is None:
        return None

    texts: list[str] = []
    if backends.chat is not None:
        prompt = render_prompt(load_prompt("proposals"), count=count,
                               target=task.structured_target)
        try:
            reply = backends.chat.chat(
                [{"role": "user", "content": prompt}], max_tokens=400)
            texts = [line.strip(" -*\t") for line in reply.splitlines() if line.strip()]
            texts = texts[:count]
        except Exception as exc:  # noqa: BLE001 - degrade per contract
            logger.warning("proposal generation failed for %s (%s); "
                           "degrading to the raw target", task.task_id, exc)
    if not texts:
        texts = [task.target]
    try:
        rows = [unit_normalize(backends.embed.embed_text(t)) for t in texts]
    except Exception as exc:  # noqa: BLE001
        logger.warning("proposal embedding failed for %s (%s); gating will "
                       "pass through", task.task_id, exc)
        return None
    return ProposalSet(task_id=task.task_id, revision=task.revision,
                       proposals=tuple(texts), embeddings=np.stack(rows))


def embed_window(window: FrameWindow, backends: Backends) -> np.ndarray | None:
    """Embed the current frame window.

    Scripted runs return the stored vector bit-exactly (a missing tick is a
    fatal coverage error). Live failures degrade to None so the raw decision
    stands (availability over gating fidelity).
    """
    if backends.is_scripted:
        return backends.scripted.window_vector(window.end_tick)
    if backends.embed is None:
        return None
    try:
        return backends.embed.embed_window(window)
    except Exception as exc:  # noqa: BLE001
        logger.warning("window embedding failed at tick %d (%s); gate passes "
                       "through", window.end_tick, exc)
        return None


# -- threshold sweeps over synthetic traces ----------------------------------

@dataclass
class SyntheticTrace:
    """One task's synthetic similarity history for offline threshold tuning.

    JSON schema (version 1):
        {"version": 1, "name": "...", "start_tick": 1,
         "proposal_scores": [[s_m ...] per tick],
         "raw": [0/1 per tick], "truth_ticks": [..], "seed": 0}
    """

    name: str
    scores: np.ndarray  # (T, M) per-tick per-proposal similarities
    raw: np.ndarray  # (T,) raw trigger decisions
    truth_ticks: list[int]
    start_tick: int = 1
    seed: int | None = None

    def __post_init__(self):
        if self.scores.ndim != 2:
            raise ValidationError("proposal_scores must be a (T, M) matrix")
        if self.raw.shape[0] != self.scores.shape[0]:
            raise ValidationError("raw and proposal_scores lengths differ")
        if not self.truth_ticks:
            raise ValidationError("a sweep trace needs at least one truth tick")

    @property
    def ticks(self) -> int:
        return self.scores.shape[0]


def load_synthetic_trace(path: str | Path) -> SyntheticTrace:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise TraceParseError(f"cannot load sweep trace {path}: {exc}") from exc
    if data.get("version") != 1:
        raise TraceParseError(f"{path}: unsupported sweep trace version")
    try:
        return SyntheticTrace(
            name=data.get("name", path.stem),
            scores=np.asarray(data["proposal_scores"], dtype=np.float64),
            raw=np.asarray(data["raw"], dtype=np.uint8),
            truth_ticks=[int(t) for t in data["truth_ticks"]],
            start_tick=int(data.get("start_tick", 1)),
            seed=data.get("seed"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise TraceParseError(f"{path}: malformed sweep trace ({exc})") from exc


@dataclass(frozen=True)
class SweepRow:
    theta_low: float
    theta_high: float
    correct: int
    early: int
    late: int
    forced: int
    suppressed: int


def sweep(traces: list[SyntheticTrace],
          grid: list[GateThresholds]) -> list[SweepRow]:
    """Evaluate the gate over every threshold pair on every trace.

    Per grid point: each trace's first final trigger is classified against
    the trace's first truth tick (correct within +/-1 second, early before,
    late after or never), and suppression/forcing tick counts are summed.
    Deterministic given the traces.
    """
    if not grid:
        raise ValidationError("threshold grid must not be empty")
    if not traces:
        raise ValidationError("no sweep traces given")
    lows = np.array([g.theta_low for g in grid], dtype=np.float64)
    highs = np.array([g.theta_high for g in grid], dtype=np.float64)

    correct = np.zeros(len(grid), dtype=np.int64)
    early = np.zeros(len(grid), dtype=np.int64)
    late = np.zeros(len(grid), dtype=np.int64)
    forced = np.zeros(len(grid), dtype=np.int64)
    suppressed = np.zeros(len(grid), dtype=np.int64)

    for trace in traces:
        delta, defined = _kernels.max_pool_delta(trace.scores)
        first, n_sup, n_for = _kernels.sweep_grid(trace.raw, delta, defined,
                                                  lows, highs)
        t_star = trace.truth_ticks[0]
        for g in range(len(grid)):
            if first[g] < 0:
                late[g] += 1
                continue
            fire_tick = trace.start_tick + int(first[g])
            if abs(fire_tick - t_star) <= 1:
                correct[g] += 1
            elif fire_tick < t_star - 1:
                early[g] += 1
            else:
                late[g] += 1
        suppressed += n_sup
        forced += n_for

    return [
        SweepRow(theta_low=float(lows[g]), theta_high=float(highs[g]),
                 correct=int(correct[g]), early=int(early[g]), late=int(late[g]),
                 forced=int(forced[g]), suppressed=int(suppressed[g]))
        for g in range(len(grid))
    ]
