"""Deterministic builder for the bundled fixture set.

Everything here is authored arithmetic, not sampled: window vectors are
constructed so each task's proposal similarities follow explicit step
curves (proposal embeddings are one-hot, so the cosine score at a tick IS
the authored curve value, bit-exactly). That makes every similarity delta,
gate decision, and verdict in the fixtures hand-checkable.

Outputs (under --out, default fixtures/):
  manifest.json + traces/*.json      30-instance suite, all nine categories
  repair/manifest.json + traces/     timing suite with corrupted raw
                                     decisions the gate can repair, plus
                                     expected.json from an independent
                                     brute-force oracle
  sweep/*.json                       synthetic traces for the sweep command
  demo/trace.json + demo/session.json  scripted live-session recording for
                                     the service and the console UI
  backend-scripted.json              backend config for scripted runs

Regenerate with: python3 -m ipiagent.fixturegen
"""

from __future__ import annotations

import argparse
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

BASE_S1 = 0.20
BASE_S2 = 0.15
STEP_PASS = 0.05   # lands between the default thresholds: passes the gate
STEP_FORCE = 0.12  # exceeds the default theta_high: forces a recovery
THETA_LOW = 0.02
THETA_HIGH = 0.08


@dataclass
class TaskScript:
    """One task's authored behavior inside a trace."""

    key: str
    axes: tuple[int, int]
    steps: dict[int, float] = field(default_factory=dict)  # tick -> new s1
    raws: set[int] = field(default_factory=set)  # ticks with raw = 1
    created_tick: int = 1
    responses_by_tick: dict[int, str] = field(default_factory=dict)

    def s1_at(self, tick: int) -> float:
        value = BASE_S1
        for step_tick in sorted(self.steps):
            if step_tick <= tick:
                value = self.steps[step_tick]
        return value


def window_vector(tasks: list[TaskScript], tick: int, dim: int) -> list[float]:
    vec = [0.0] * dim
    for task in tasks:
        vec[task.axes[0]] = task.s1_at(tick)
        vec[task.axes[1]] = BASE_S2
    residual = 1.0 - sum(x * x for x in vec)
    assert residual > 0, f"curve values too large at tick {tick}"
    vec[dim - 1] = math.sqrt(residual)
    return vec


def one_hot(axis: int, dim: int) -> list[float]:
    vec = [0.0] * dim
    vec[axis] = 1.0
    return vec


def make_trace(tasks: list[TaskScript], *, classifications: dict,
               vector_ticks: range, raw_ticks: dict[str, range],
               answers: dict | None = None,
               enhancements: dict | None = None) -> dict:
    dim = 2 * len(tasks) + 1
    trace = {
        "version": 1,
        "dim": dim,
        "classifications": classifications,
        "proposals": {},
        "window_vectors": {},
        "raw_triggers": {},
        "responses": {},
        "answers": answers or {},
        "enhancements": enhancements or {},
    }
    for task in tasks:
        trace["proposals"][task.key] = {
            "texts": [task.key, f"the moment {task.key}"],
            "vectors": [one_hot(task.axes[0], dim), one_hot(task.axes[1], dim)],
        }
        ticks = raw_ticks[task.key]
        trace["raw_triggers"][task.key] = {
            str(t): (1 if t in task.raws else 0) for t in ticks}
        trace["responses"][task.key] = {
            "by_tick": {str(t): text for t, text in task.responses_by_tick.items()},
            "default": f"Noticed it: {task.key}.",
        }
    for tick in vector_ticks:
        trace["window_vectors"][str(tick)] = window_vector(tasks, tick, dim)
    return trace


def proactive_event(event_id: str, tick: int, targets: list[str]) -> tuple[dict, dict]:
    utterance = "Tell me when " + " or ".join(targets) + "."
    event = {"event_id": event_id, "at_tick": tick, "utterance": utterance}
    cls = {"kind": "proactive_instruction", "targets": targets,
           "task_reference": None}
    return event, cls


def monitored_span(t_stars: list[int], length: int) -> tuple[int, int]:
    low = max(1, min(t_stars) - 4)
    high = min(length, max(t_stars) + 4)
    return low, high


# -- category builders ---------------------------------------------------------

def build_single_trigger(instance_id: str, category: str, target: str,
                         t_star: int, raw_at: list[int], step_at: dict[int, float],
                         length: int, response_truth: tuple[str, list[str]] | None = None):
    """timing/understanding instances: one task, one ground-truth trigger."""
    task = TaskScript(key=target, axes=(0, 1), steps=dict(step_at),
                      raws=set(raw_at))
    event, cls = proactive_event("e1", 1, [target])
    low, high = monitored_span([t_star], length)
    answer_truths = []
    if response_truth is not None:
        text, candidates = response_truth
        for tick in raw_at:
            task.responses_by_tick[tick] = text
        answer_truths.append({"task_key": target, "candidates": candidates})
    trace = make_trace([task], classifications={"e1": cls},
                       vector_ticks=range(low, high + 1),
                       raw_ticks={target: range(low, high + 1)})
    entry = {
        "instance_id": instance_id,
        "category": category,
        "frame_source": {"kind": "synthetic", "length": length},
        "trace": f"traces/{instance_id}.json",
        "events": [event],
        "trigger_truths": [{"task_key": target, "t_star": t_star,
                            "occurrence_index": 1}],
        "answer_truths": answer_truths,
    }
    return entry, trace


def build_repeated(instance_id: str, target: str, t_stars: list[int],
                   raw_at: list[int], step_at: dict[int, float], length: int):
    task = TaskScript(key=target, axes=(0, 1), steps=dict(step_at),
                      raws=set(raw_at))
    event, cls = proactive_event("e1", 1, [target])
    ticks: set[int] = set()
    for t_star in t_stars:
        low, high = monitored_span([t_star], length)
        ticks.update(range(low, high + 1))
    # raw/vector coverage over the union of the per-occurrence neighborhoods
    ordered = sorted(ticks)
    trace = make_trace([task], classifications={"e1": cls},
                       vector_ticks=range(ordered[0], ordered[-1] + 1),
                       raw_ticks={target: range(ordered[0], ordered[-1] + 1)})
    entry = {
        "instance_id": instance_id,
        "category": "repeated",
        "frame_source": {"kind": "synthetic", "length": length},
        "trace": f"traces/{instance_id}.json",
        "events": [event],
        "trigger_truths": [
            {"task_key": target, "t_star": t, "occurrence_index": i + 1}
            for i, t in enumerate(t_stars)
        ],
        "answer_truths": [],
    }
    return entry, trace


def build_cancel(instance_id: str, target: str, cancel_tick: int,
                 raw_at: list[int], step_at: dict[int, float], length: int,
                 pre_truth: int | None = None, double_cancel: bool = False):
    task = TaskScript(key=target, axes=(0, 1), steps=dict(step_at),
                      raws=set(raw_at))
    e1, cls1 = proactive_event("e1", 1, [target])
    events = [e1, {"event_id": "e2", "at_tick": cancel_tick,
                   "utterance": "Never mind, stop watching for that."}]
    classifications = {
        "e1": cls1,
        "e2": {"kind": "management_cancel", "targets": [], "task_reference": None},
    }
    if double_cancel:
        events.append({"event_id": "e3", "at_tick": cancel_tick + 1,
                       "utterance": "Cancel that task."})
        classifications["e3"] = {"kind": "management_cancel", "targets": [],
                                 "task_reference": None}
    trace = make_trace([task], classifications=classifications,
                       vector_ticks=range(1, length + 1),
                       raw_ticks={target: range(1, length + 1)})
    truths = []
    if pre_truth is not None:
        truths.append({"task_key": target, "t_star": pre_truth,
                       "occurrence_index": 1})
    entry = {
        "instance_id": instance_id,
        "category": "cancel",
        "frame_source": {"kind": "synthetic", "length": length},
        "trace": f"traces/{instance_id}.json",
        "events": events,
        "control_event_id": "e2",
        "trigger_truths": truths,
        "answer_truths": [],
    }
    return entry, trace


def build_modify(instance_id: str, old_target: str, new_target: str,
                 modify_tick: int, t_star: int, raw_at: list[int],
                 step_at: dict[int, float], length: int):
    old_task = TaskScript(key=old_target, axes=(0, 1))
    new_task = TaskScript(key=new_target, axes=(2, 3), steps=dict(step_at),
                          raws=set(raw_at), created_tick=modify_tick)
    e1, cls1 = proactive_event("e1", 1, [old_target])
    events = [e1, {"event_id": "e2", "at_tick": modify_tick,
                   "utterance": f"Actually watch for {new_target} instead."}]
    classifications = {
        "e1": cls1,
        "e2": {"kind": "management_modify", "targets": [new_target],
               "task_reference": None},
    }
    trace = make_trace([old_task, new_task], classifications=classifications,
                       vector_ticks=range(1, length + 1),
                       raw_ticks={old_target: range(1, length + 1),
                                  new_target: range(modify_tick, length + 1)})
    entry = {
        "instance_id": instance_id,
        "category": "modify",
        "frame_source": {"kind": "synthetic", "length": length},
        "trace": f"traces/{instance_id}.json",
        "events": events,
        "control_event_id": "e2",
        "trigger_truths": [{"task_key": new_target, "t_star": t_star,
                            "occurrence_index": 1}],
        "answer_truths": [],
    }
    return entry, trace


def build_multi(instance_id: str, targets: list[str], t_stars: list[int],
                raws: list[list[int]], steps: list[dict[int, float]], length: int):
    tasks = [
        TaskScript(key=target, axes=(2 * i, 2 * i + 1), steps=dict(steps[i]),
                   raws=set(raws[i]))
        for i, target in enumerate(targets)
    ]
    event, cls = proactive_event("e1", 1, targets)
    trace = make_trace(tasks, classifications={"e1": cls},
                       vector_ticks=range(1, length + 1),
                       raw_ticks={t: range(1, length + 1) for t in targets})
    entry = {
        "instance_id": instance_id,
        "category": "multi",
        "frame_source": {"kind": "synthetic", "length": length},
        "trace": f"traces/{instance_id}.json",
        "events": [event],
        "trigger_truths": [
            {"task_key": target, "t_star": t_star, "occurrence_index": 1}
            for target, t_star in zip(targets, t_stars)
        ],
        "answer_truths": [],
    }
    return entry, trace


def build_interleaved(instance_id: str, category: str, target: str,
                      t_star: int, raw_at: list[int], step_at: dict[int, float],
                      length: int, query_tick: int, query: str, answer: str,
                      candidates: list[str], instruction_tick: int = 1,
                      enhancement: str | None = None):
    """r2p / rup / rap instances: one task plus one scripted reactive query."""
    task = TaskScript(key=target, axes=(0, 1), steps=dict(step_at),
                      raws=set(raw_at), created_tick=instruction_tick)
    instr_event, instr_cls = proactive_event("instr", instruction_tick, [target])
    query_event = {"event_id": "query", "at_tick": query_tick, "utterance": query}
    events = sorted([instr_event, query_event], key=lambda e: e["at_tick"])
    classifications = {
        "instr": instr_cls,
        "query": {"kind": "reactive_query", "targets": [], "task_reference": None},
    }
    enhancements = {target: enhancement} if enhancement else {}
    trace = make_trace([task], classifications=classifications,
                       vector_ticks=range(1, length + 1),
                       raw_ticks={target: range(instruction_tick, length + 1)},
                       answers={"query": answer}, enhancements=enhancements)
    entry = {
        "instance_id": instance_id,
        "category": category,
        "frame_source": {"kind": "synthetic", "length": length},
        "trace": f"traces/{instance_id}.json",
        "events": events,
        "trigger_truths": [{"task_key": target, "t_star": t_star,
                            "occurrence_index": 1}],
        "answer_truths": [{"query_event_id": "query", "candidates": candidates}],
    }
    return entry, trace


# -- the bundled 30-instance suite ----------------------------------------------

def main_suite() -> list[tuple[dict, dict]]:
    items = []

    items.append(build_single_trigger(
        "timing-001", "timing", "the cyclist appears", 10, [10],
        {10: BASE_S1 + STEP_PASS}, 15))
    items.append(build_single_trigger(
        "timing-002", "timing", "the garage door opens", 10, [9],
        {9: BASE_S1 + STEP_PASS}, 15))
    items.append(build_single_trigger(
        "timing-003", "timing", "the bus arrives at the stop", 10, [7],
        {7: BASE_S1 + STEP_PASS}, 15))
    items.append(build_single_trigger(
        "timing-004", "timing", "the kettle starts boiling", 10, [13],
        {13: BASE_S1 + STEP_PASS}, 15))

    items.append(build_single_trigger(
        "und-001", "understanding", "a dog enters the yard", 8, [8],
        {8: BASE_S1 + STEP_PASS}, 13,
        response_truth=("The dog is brown.", ["brown", "a brown dog"])))
    items.append(build_single_trigger(
        "und-002", "understanding", "someone picks up the phone", 12, [11],
        {11: BASE_S1 + STEP_PASS}, 17,
        response_truth=("A woman in a red coat picks up the phone.",
                        ["red coat", "woman in red"])))
    items.append(build_single_trigger(
        "und-003", "understanding", "the traffic light changes", 9, [9],
        {9: BASE_S1 + STEP_PASS}, 14,
        response_truth=("The light turned blue.",
                        ["green", "the light is green"])))

    items.append(build_repeated(
        "rep-001", "the ball crosses the line", [8, 14, 20], [8, 14, 20],
        {8: 0.25, 14: 0.30, 20: 0.35}, 25))
    items.append(build_repeated(
        "rep-002", "a customer enters the shop", [7, 15], [7, 11, 15],
        {7: 0.25, 11: 0.30, 15: 0.35}, 20))
    items.append(build_repeated(
        "rep-003", "the printer jams", [6, 12, 18], [6, 12],
        {6: 0.25, 12: 0.30}, 23))

    items.append(build_cancel(
        "can-001", "the delivery van stops outside", 8, [11], {11: 0.25}, 14))
    items.append(build_cancel(
        "can-002", "the oven timer goes off", 9, [5, 12, 13],
        {5: 0.25, 12: 0.30}, 15, pre_truth=5))
    items.append(build_cancel(
        "can-003", "the cat jumps on the counter", 6, [9, 10], {9: 0.25}, 12))
    items.append(build_cancel(
        "can-004", "the gate swings open", 10, [12], {12: 0.25}, 14,
        double_cancel=True))

    items.append(build_modify(
        "mod-001", "the red car leaves", "the blue truck arrives", 6, 11,
        [11], {11: 0.25}, 16))
    items.append(build_modify(
        "mod-002", "the runner passes the bench", "the dog catches the frisbee",
        8, 13, [12], {12: 0.25}, 18))
    items.append(build_modify(
        "mod-003", "someone opens the fridge", "someone uses the stove", 5, 10,
        [10], {10: 0.25}, 15))

    items.append(build_multi(
        "mul-001", ["the kettle boils", "the toaster pops"], [7, 12],
        [[7], [12]], [{7: 0.27}, {12: 0.27}], 17))
    items.append(build_multi(
        "mul-002", ["a truck passes", "a bicycle passes"], [9, 14],
        [[8], [15]], [{8: 0.27}, {15: 0.27}], 19))
    items.append(build_multi(
        "mul-003", ["the door opens", "the window closes"], [6, 11],
        [[6], []], [{6: 0.27}, {}], 16))

    items.append(build_interleaved(
        "r2p-001", "r2p", "the mechanic closes the hood", 11, [11], {11: 0.25},
        16, 3, "What color is the car on the lift?", "A red sedan.",
        ["red sedan", "a red car"], instruction_tick=5))
    items.append(build_interleaved(
        "r2p-002", "r2p", "the barista calls the order", 12, [12], {12: 0.25},
        17, 2, "How many people are waiting in line?", "Three people.",
        ["three", "3 people"], instruction_tick=4))
    items.append(build_interleaved(
        "r2p-003", "r2p", "the crane lifts the beam", 10, [10], {10: 0.25},
        15, 3, "What is painted on the container?", "A blue van.",
        ["red stripes", "a red stripe"], instruction_tick=5))

    items.append(build_interleaved(
        "rup-001", "rup", "the goalkeeper leaves the box", 9, [9], {9: 0.25},
        14, 5, "Which team is wearing white?", "The home team wears white.",
        ["home team", "the home side"],
        enhancement="the goalkeeper in green leaves the penalty box"))
    items.append(build_interleaved(
        "rup-002", "rup", "the baker opens the oven", 12, [11], {11: 0.25},
        17, 6, "Is the bakery busy right now?", "Yes, it is crowded.",
        ["crowded", "yes it is crowded"]))
    items.append(build_interleaved(
        "rup-003", "rup", "the ferry docks", 8, [8], {8: 0.25},
        13, 4, "How is the weather at the harbor?", "It is foggy.",
        ["foggy", "fog"]))

    items.append(build_interleaved(
        "rap-001", "rap", "someone rings the doorbell", 7, [7], {7: 0.25},
        13, 8, "Who was at the door?", "It was the mail carrier at the door.",
        ["mail carrier", "the mail carrier"]))
    items.append(build_interleaved(
        "rap-002", "rap", "the forklift drops a pallet", 10, [10], {10: 0.25},
        16, 11, "Was anyone standing nearby?", "No, the aisle was empty.",
        ["the aisle was empty", "no one"]))
    items.append(build_interleaved(
        "rap-003", "rap", "the kite gets stuck in the tree", 6, [6], {6: 0.25},
        12, 8, "How high up is it?", "About ten meters up.",
        ["ten meters", "10 meters"]))
    items.append(build_interleaved(
        "rap-004", "rap", "the train doors close", 9, [9], {9: 0.25},
        15, 10, "Did everyone make it aboard?", "Yes, everyone boarded in time.",
        ["everyone boarded", "yes everyone"]))

    return items


# -- gating-repair suite ---------------------------------------------------------

def repair_suite() -> tuple[list[tuple[dict, dict]], dict]:
    """Timing instances with known early/late raw noise plus delta curves
    built so the gate can repair them, and the brute-force expected verdicts
    for both the full and the gate-less runs."""
    specs = []
    for i, t_star in enumerate((9, 10, 11, 12, 10, 11)):
        specs.append((f"repair-early-{i + 1:02d}", t_star,
                      [t_star - 3, t_star], {t_star: BASE_S1 + STEP_PASS}))
    for i, t_star in enumerate((10, 11, 9, 12)):
        specs.append((f"repair-miss-{i + 1:02d}", t_star,
                      [], {t_star: BASE_S1 + STEP_FORCE}))
    for i, t_star in enumerate((10, 12)):
        specs.append((f"repair-clean-{i + 1:02d}", t_star,
                      [t_star], {t_star: BASE_S1 + STEP_PASS}))

    items = []
    expected = {}
    for instance_id, t_star, raw_at, step_at in specs:
        length = t_star + 5
        target = f"the marked event for {instance_id}"
        items.append(build_single_trigger(
            instance_id, "timing", target, t_star, raw_at, step_at, length))
        expected[instance_id] = {
            "full": _oracle_verdict(t_star, raw_at, step_at, length, gated=True),
            "no_gating": _oracle_verdict(t_star, raw_at, step_at, length,
                                         gated=False),
        }
    return items, expected


def _oracle_verdict(t_star: int, raw_at: list[int], step_at: dict[int, float],
                    length: int, *, gated: bool) -> str:
    """Brute-force expected verdict, written from the gate's rule text and
    kept independent of the runtime implementation."""
    low, high = monitored_span([t_star], length)

    def s1(tick: int) -> float:
        value = BASE_S1
        for step_tick in sorted(step_at):
            if step_tick <= tick:
                value = step_at[step_tick]
        return value

    first_fire = None
    prev = None
    for tick in range(low, high + 1):
        raw = 1 if tick in raw_at else 0
        # second proposal's score is the constant BASE_S2, so its delta is 0
        delta = None if prev is None else max(s1(tick) - prev, 0.0)
        prev = s1(tick)
        if not gated or delta is None:
            final = raw
        elif raw == 1 and delta < THETA_LOW:
            final = 0
        elif raw == 0 and delta > THETA_HIGH:
            final = 1
        else:
            final = raw
        if final == 1 and first_fire is None:
            first_fire = tick
    if first_fire is None:
        return "late"
    if abs(first_fire - t_star) <= 1:
        return "correct"
    return "early" if first_fire < t_star - 1 else "late"


# -- sweep traces -----------------------------------------------------------------

def sweep_traces() -> dict[str, dict]:
    def scores(length: int, steps: dict[int, float]) -> list[list[float]]:
        value = BASE_S1
        rows = []
        for tick in range(1, length + 1):
            if tick in steps:
                value = steps[tick]
            rows.append([value, BASE_S2])
        return rows

    traces = {}
    traces["sweep-early-noise"] = {
        "version": 1, "name": "sweep-early-noise", "start_tick": 1, "seed": 1,
        "proposal_scores": scores(40, {13: 0.25}),
        "raw": [1 if t in (10, 13) else 0 for t in range(1, 41)],
        "truth_ticks": [13],
    }
    traces["sweep-missed"] = {
        "version": 1, "name": "sweep-missed", "start_tick": 1, "seed": 2,
        "proposal_scores": scores(40, {20: 0.32}),
        "raw": [0] * 40,
        "truth_ticks": [20],
    }
    traces["sweep-clean"] = {
        "version": 1, "name": "sweep-clean", "start_tick": 1, "seed": 3,
        "proposal_scores": scores(40, {25: 0.24}),
        "raw": [1 if t == 25 else 0 for t in range(1, 41)],
        "truth_ticks": [25],
    }
    return traces


# -- demo session -----------------------------------------------------------------

DEMO_TARGET = "the delivery truck arriving"


def demo_trace() -> dict:
    task = TaskScript(key=DEMO_TARGET, axes=(0, 1), steps={7: 0.25},
                      raws={4, 7, 11})
    classifications = {
        "live-1": {"kind": "proactive_instruction", "targets": [DEMO_TARGET],
                   "task_reference": None},
        "live-2": {"kind": "reactive_query", "targets": [],
                   "task_reference": None},
        "live-3": {"kind": "management_cancel", "targets": [],
                   "task_reference": None},
    }
    trace = make_trace(
        [task], classifications=classifications, vector_ticks=range(1, 13),
        raw_ticks={DEMO_TARGET: range(1, 13)},
        answers={"live-2": "The truck is yellow."})
    trace["responses"][DEMO_TARGET]["by_tick"]["7"] = \
        "The delivery truck is pulling up at the curb."
    return trace


def demo_session(trace_path: Path) -> dict:
    """Drive a scripted session end to end and record every exchange; the
    console UI's headless test replays the server side of this recording."""
    from .service import SessionHost

    config_payload = {
        "backend": {"mode": "scripted", "trace": str(trace_path)},
        "thresholds": {"theta_low": THETA_LOW, "theta_high": THETA_HIGH},
        "frame_source": {"kind": "synthetic", "length": 12},
    }
    host = SessionHost(session_id="demo", config_payload=config_payload)
    steps = []
    # Mirror the websocket layer's open handshake so the recording is a
    # complete client's-eye view of the session.
    handshake = {"type": "session_config", "seq": 1, "payload": config_payload}
    host._last_client_seq = 1
    steps.append({"client": handshake, "server": [host._reply(
        "session_config", {
            "session_id": "demo", "accepted": True,
            "theta_low": THETA_LOW, "theta_high": THETA_HIGH,
        }, 1)]})
    seq = 1

    def send(msg_type: str, payload: dict | None = None):
        nonlocal seq
        seq += 1
        message = {"type": msg_type, "seq": seq, "payload": payload or {}}
        responses = host.handle(message)
        steps.append({"client": message, "server": responses})

    send("tick")
    send("utterance", {"text": f"Watch for {DEMO_TARGET}."})
    for _ in range(6):  # ticks 2..7: suppressed noise at 4, trigger at 7
        send("tick")
    send("utterance", {"text": "What color is the truck?"})
    send("tick")  # tick 8
    send("utterance", {"text": "Never mind, cancel the truck task."})
    for _ in range(4):  # ticks 9..12: raw noise at 11 must stay silent
        send("tick")
    return {"session_id": "demo", "steps": steps}


# -- writing ----------------------------------------------------------------------

def _dump(path: Path, data: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=1) + "\n",
                    encoding="utf-8")


def write_fixtures(out_dir: Path) -> None:
    main_items = main_suite()
    _dump(out_dir / "manifest.json", {
        "version": 1,
        "instances": [entry for entry, _ in main_items],
    })
    for entry, trace in main_items:
        _dump(out_dir / entry["trace"], trace)

    repair_items, expected = repair_suite()
    _dump(out_dir / "repair" / "manifest.json", {
        "version": 1,
        "instances": [entry for entry, _ in repair_items],
    })
    for entry, trace in repair_items:
        _dump(out_dir / "repair" / entry["trace"], trace)
    _dump(out_dir / "repair" / "expected.json", expected)

    for name, trace in sweep_traces().items():
        _dump(out_dir / "sweep" / f"{name}.json", trace)

    trace_path = out_dir / "demo" / "trace.json"
    _dump(trace_path, demo_trace())
    _dump(out_dir / "demo" / "session.json", demo_session(trace_path))

    _dump(out_dir / "backend-scripted.json", {"mode": "scripted"})


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fixtures", help="output directory")
    args = parser.parse_args(argv)
    write_fixtures(Path(args.out))
    print(f"fixtures written under {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
