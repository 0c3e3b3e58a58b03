"""Streaming evaluation harness: manifest ingestion, replay, scoring,
aggregation, failure analysis, and the ablation configurations."""

from __future__ import annotations

from dataclasses import replace

from ..config import ABLATION_MODES, RunConfig
from .manifest import (
    ASPECTS,
    CATEGORIES,
    AnswerTruth,
    EvalInstance,
    TriggerTruth,
    load_manifest,
)
from .report import FailureBreakdown, Report, aggregate, render_failure_table, render_table
from .runner import InstanceTranscript, monitored_ticks_for, run_instance, run_manifest
from .scoring import (
    InstanceVerdict,
    match_answer,
    normalize_text,
    score_all,
    score_instance,
    score_repeated,
    score_trigger,
)


def evaluate(instances: list[EvalInstance], config: RunConfig,
             *, label: str | None = None) -> tuple[Report, list[InstanceTranscript]]:
    """Run a manifest end to end and aggregate the verdicts."""
    transcripts = run_manifest(instances, config)
    verdicts = score_all(transcripts, instances)
    report = aggregate(
        verdicts,
        label=label or config.ablation,
        ablation=config.ablation,
        theta_low=config.thresholds.theta_low,
        theta_high=config.thresholds.theta_high,
        exclude_eval_errors=config.exclude_eval_errors,
        meta={"manifest": config.manifest, "seed": config.seed,
              "with_reminder": config.with_reminder},
    )
    return report, transcripts


def run_ablation(instances: list[EvalInstance], base_config: RunConfig,
                 mode: str) -> tuple[Report, list[InstanceTranscript]]:
    """Evaluate one ablation variant of the same manifest."""
    if mode not in ABLATION_MODES:
        raise ValueError(f"unknown ablation mode {mode!r}")
    config = replace(base_config, ablation=mode)
    return evaluate(instances, config, label=mode)


__all__ = [
    "ASPECTS",
    "CATEGORIES",
    "AnswerTruth",
    "EvalInstance",
    "FailureBreakdown",
    "InstanceTranscript",
    "InstanceVerdict",
    "Report",
    "TriggerTruth",
    "aggregate",
    "evaluate",
    "load_manifest",
    "match_answer",
    "monitored_ticks_for",
    "normalize_text",
    "render_failure_table",
    "render_table",
    "run_ablation",
    "run_instance",
    "run_manifest",
    "score_all",
    "score_instance",
    "score_repeated",
    "score_trigger",
]
