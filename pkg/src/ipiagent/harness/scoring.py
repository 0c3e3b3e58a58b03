"""Verdict rules: trigger timing, answer matching, and the all-correct
conjunctions for repeated and multi-turn instances.

Scoring is a pure function of (transcript, instance): no backend, no clock,
no randomness. Binary correctness throughout, no partial credit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .manifest import (
    CATEGORY_CANCEL,
    CATEGORY_MODIFY,
    CATEGORY_MULTI,
    CATEGORY_R2P,
    CATEGORY_RAP,
    CATEGORY_REPEATED,
    CATEGORY_RUP,
    CATEGORY_TIMING,
    CATEGORY_UNDERSTANDING,
    CORRECT_WINDOW,
    EVAL_INTERVAL,
    AnswerTruth,
    EvalInstance,
    TriggerTruth,
)
from .runner import InstanceTranscript

VERDICT_CORRECT = "correct"
VERDICT_EARLY = "early"
VERDICT_LATE = "late"

_PUNCTUATION = re.compile(r"[^\w\s]", re.UNICODE)
_WHITESPACE = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    """Lowercase, strip punctuation, collapse whitespace."""
    text = _PUNCTUATION.sub(" ", text.lower())
    return _WHITESPACE.sub(" ", text).strip()


def match_answer(prediction: str | None, truth: AnswerTruth) -> bool:
    """Bidirectional substring match against any candidate, after
    normalization. A missing prediction (error sentinel) never matches."""
    if not prediction:
        return False
    pred = normalize_text(prediction)
    if not pred:
        return False
    for candidate in truth.candidates:
        cand = normalize_text(candidate)
        if not cand:
            continue
        if cand in pred or pred in cand:
            return True
    return False


@dataclass
class InstanceVerdict:
    instance_id: str
    category: str
    correct: bool
    timing: str | None = None  # correct/early/late for single-trigger checks
    missed: bool = False  # timing "late" because no trigger fired at all
    spurious: int = 0  # unconsumed extra triggers (diagnostic, not penalized)
    components: dict = field(default_factory=dict)
    evaluation_error: str | None = None

    def to_json(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "category": self.category,
            "correct": self.correct,
            "timing": self.timing,
            "missed": self.missed,
            "spurious": self.spurious,
            "components": dict(sorted(self.components.items())),
            "evaluation_error": self.evaluation_error,
        }


def _task_triggers(transcript: InstanceTranscript, task_key: str) -> list[dict]:
    return [t for t in transcript.triggers() if t.get("task_key") == task_key]


def score_trigger(transcript: InstanceTranscript,
                  truth: TriggerTruth) -> tuple[str, bool, dict | None]:
    """Classify the first trigger for the task inside [t*-4, t*+4].

    Returns (verdict, missed, trigger_entry). Within one second of t* is
    correct; strictly before that window is early; after it is late. No
    trigger at all inside the interval counts as late (an extreme delay)
    with the missed flag set so the report can surface it separately.
    """
    low = max(1, truth.t_star - EVAL_INTERVAL)
    high = truth.t_star + EVAL_INTERVAL
    in_interval = [t for t in _task_triggers(transcript, truth.task_key)
                   if low <= t["tick"] <= high]
    if not in_interval:
        return VERDICT_LATE, True, None
    first = min(in_interval, key=lambda t: t["tick"])
    tick = first["tick"]
    if abs(tick - truth.t_star) <= CORRECT_WINDOW:
        return VERDICT_CORRECT, False, first
    if tick < truth.t_star - CORRECT_WINDOW:
        return VERDICT_EARLY, False, first
    return VERDICT_LATE, False, first


def score_repeated(transcript: InstanceTranscript,
                   truths: list[TriggerTruth]) -> tuple[bool, int]:
    """All-correct matching for recurring events.

    Occurrences are matched greedily in time order: each consumes the
    earliest unconsumed trigger within its own +/-1 s window. Correct iff
    every occurrence is matched; leftover triggers are reported as spurious
    but do not fail the instance.
    """
    ordered = sorted(truths, key=lambda t: (t.occurrence_index, t.t_star))
    task_keys = {t.task_key for t in ordered}
    all_triggers = sorted(
        (t for key in sorted(task_keys) for t in _task_triggers(transcript, key)),
        key=lambda t: t["tick"])
    consumed = [False] * len(all_triggers)
    matched = 0
    for truth in ordered:
        for i, trig in enumerate(all_triggers):
            if consumed[i] or trig.get("task_key") != truth.task_key:
                continue
            if abs(trig["tick"] - truth.t_star) <= CORRECT_WINDOW:
                consumed[i] = True
                matched += 1
                break
    spurious = len(all_triggers) - sum(consumed)
    return matched == len(ordered), spurious


def _score_answers(transcript: InstanceTranscript,
                   instance: EvalInstance) -> dict[str, bool]:
    """Check every query-bound answer truth against the recorded response."""
    results = {}
    for truth in instance.answer_truths:
        if truth.query_event_id is None:
            continue
        entry = transcript.answer_for(truth.query_event_id)
        results[f"answer:{truth.query_event_id}"] = match_answer(
            entry["text"] if entry else None, truth)
    return results


def _trigger_text_truths(instance: EvalInstance) -> list[AnswerTruth]:
    return [t for t in instance.answer_truths if t.task_key is not None]


def _control_tick(instance: EvalInstance) -> int:
    for event in instance.events:
        if event.event_id == instance.control_event_id:
            return event.at_tick
    raise ValueError(
        f"{instance.instance_id}: control event not found in the script")


def score_instance(transcript: InstanceTranscript,
                   instance: EvalInstance) -> InstanceVerdict:
    verdict = InstanceVerdict(instance_id=instance.instance_id,
                              category=instance.category, correct=False)
    if transcript.evaluation_error:
        verdict.evaluation_error = transcript.evaluation_error
        return verdict

    category = instance.category
    components: dict[str, bool] = {}

    if category in (CATEGORY_TIMING, CATEGORY_UNDERSTANDING):
        truth = instance.trigger_truths[0]
        timing, missed, trigger = score_trigger(transcript, truth)
        verdict.timing = timing
        verdict.missed = missed
        components["trigger"] = timing == VERDICT_CORRECT
        if category == CATEGORY_UNDERSTANDING:
            for answer_truth in _trigger_text_truths(instance):
                components["trigger_text"] = match_answer(
                    trigger["text"] if trigger else None, answer_truth)

    elif category == CATEGORY_REPEATED:
        all_matched, spurious = score_repeated(transcript, instance.trigger_truths)
        components["all_occurrences"] = all_matched
        verdict.spurious = spurious

    elif category == CATEGORY_CANCEL:
        cancel_tick = _control_tick(instance)
        post_cancel = [t for t in transcript.triggers()
                       if t["tick"] >= cancel_tick]
        components["no_post_cancel_trigger"] = not post_cancel
        for i, truth in enumerate(instance.trigger_truths):
            timing, _, _ = score_trigger(transcript, truth)
            components[f"pre_cancel_trigger:{i}"] = timing == VERDICT_CORRECT

    elif category == CATEGORY_MODIFY:
        truth_keys = {t.task_key for t in instance.trigger_truths}
        for i, truth in enumerate(instance.trigger_truths):
            timing, _, trigger = score_trigger(transcript, truth)
            components[f"new_target_trigger:{i}"] = timing == VERDICT_CORRECT
            if trigger is not None:
                components[f"new_target_revision:{i}"] = (
                    (trigger.get("revision") or 0) >= 2)
        obsolete = [t for t in transcript.triggers()
                    if t.get("task_key") not in truth_keys]
        components["no_obsolete_target_trigger"] = not obsolete

    elif category == CATEGORY_MULTI:
        for i, truth in enumerate(instance.trigger_truths):
            timing, _, _ = score_trigger(transcript, truth)
            components[f"target_trigger:{i}"] = timing == VERDICT_CORRECT

    elif category in (CATEGORY_R2P, CATEGORY_RUP, CATEGORY_RAP):
        for i, truth in enumerate(instance.trigger_truths):
            timing, missed, _ = score_trigger(transcript, truth)
            components[f"trigger:{i}"] = timing == VERDICT_CORRECT
            if i == 0:
                verdict.timing = timing
                verdict.missed = missed
        components.update(_score_answers(transcript, instance))

    else:  # pragma: no cover - manifest validation forbids this
        raise ValueError(f"unknown category {category!r}")

    # Reactive-only sub-checks reuse the same matcher everywhere.
    if category not in (CATEGORY_R2P, CATEGORY_RUP, CATEGORY_RAP):
        components.update(_score_answers(transcript, instance))

    verdict.components = components
    verdict.correct = all(components.values()) if components else False
    return verdict


def score_all(transcripts: list[InstanceTranscript],
              instances: list[EvalInstance]) -> list[InstanceVerdict]:
    by_id = {i.instance_id: i for i in instances}
    verdicts = []
    for transcript in transcripts:
        instance = by_id.get(transcript.instance_id)
        if instance is None:
            raise ValueError(
                f"transcript {transcript.instance_id!r} has no manifest instance")
        verdicts.append(score_instance(transcript, instance))
    return verdicts
