"""Aggregation and report rendering.

Subcategory accuracy is correct/total x 100 rendered to two decimals; each
aspect average is the unweighted arithmetic mean of its three subcategory
scores. The failure decomposition splits incorrect timing cases into early
and late shares (never-triggered cases count as late, and are additionally
surfaced in a separate missed column so the convention is auditable).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .manifest import ASPECTS, CATEGORIES, CATEGORY_TIMING
from .scoring import VERDICT_EARLY, VERDICT_LATE, InstanceVerdict

ASPECT_TITLES = {
    "monitoring": "Proactive Monitoring",
    "management": "Proactive Task Management",
    "interleaved": "Interleaved Reactive-Proactive",
}

CATEGORY_TITLES = {
    "timing": "Timing", "understanding": "Under.", "repeated": "Repeat.",
    "cancel": "Cancel", "modify": "Modify", "multi": "Multi",
    "r2p": "R2P", "rup": "RuP", "rap": "RaP",
}


def fmt_score(value: float | None) -> str:
    return "-" if value is None else f"{value:.2f}"


def aspect_average(scores: list[float | None]) -> float | None:
    """Unweighted mean of the subcategory scores; undefined if any is."""
    if any(s is None for s in scores):
        return None
    return sum(scores) / len(scores)


@dataclass
class FailureBreakdown:
    early: int
    late: int
    missed: int

    @property
    def classified(self) -> int:
        return self.early + self.late

    @property
    def early_pct(self) -> float | None:
        if self.classified == 0:
            return None
        return self.early / self.classified * 100.0

    @property
    def late_pct(self) -> float | None:
        if self.classified == 0:
            return None
        return 100.0 - self.early_pct

    def to_json(self) -> dict:
        return {
            "early": self.early, "late": self.late, "missed": self.missed,
            "early_pct": self.early_pct, "late_pct": self.late_pct,
        }


@dataclass
class Report:
    label: str
    ablation: str
    theta_low: float
    theta_high: float
    categories: dict = field(default_factory=dict)
    aspects: dict = field(default_factory=dict)
    failure: FailureBreakdown | None = None
    spurious_triggers: int = 0
    evaluation_errors: int = 0
    verdicts: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def accuracy(self, category: str) -> float | None:
        entry = self.categories.get(category)
        return entry["accuracy"] if entry else None

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "ablation": self.ablation,
            "theta_low": self.theta_low,
            "theta_high": self.theta_high,
            "categories": self.categories,
            "aspects": self.aspects,
            "failure": self.failure.to_json() if self.failure else None,
            "spurious_triggers": self.spurious_triggers,
            "evaluation_errors": self.evaluation_errors,
            "verdicts": [v.to_json() for v in self.verdicts],
            "meta": self.meta,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"


def aggregate(verdicts: list[InstanceVerdict], *, label: str = "run",
              ablation: str = "full", theta_low: float = 0.0,
              theta_high: float = 0.0, exclude_eval_errors: bool = False,
              meta: dict | None = None) -> Report:
    """Fold per-instance verdicts into the report. Instance order never
    matters: everything is grouped by category before any arithmetic."""
    report = Report(label=label, ablation=ablation, theta_low=theta_low,
                    theta_high=theta_high, meta=meta or {})
    report.verdicts = sorted(verdicts, key=lambda v: v.instance_id)

    for category in CATEGORIES:
        members = [v for v in report.verdicts if v.category == category]
        if exclude_eval_errors:
            members = [v for v in members if v.evaluation_error is None]
        total = len(members)
        correct = sum(1 for v in members if v.correct)
        report.categories[category] = {
            "total": total,
            "correct": correct,
            "accuracy": None if total == 0 else correct / total * 100.0,
        }

    for aspect, members in ASPECTS.items():
        report.aspects[aspect] = aspect_average(
            [report.categories[c]["accuracy"] for c in members])

    timing_incorrect = [
        v for v in report.verdicts
        if v.category == CATEGORY_TIMING and not v.correct
        and v.timing in (VERDICT_EARLY, VERDICT_LATE)
    ]
    early = sum(1 for v in timing_incorrect if v.timing == VERDICT_EARLY)
    late = sum(1 for v in timing_incorrect if v.timing == VERDICT_LATE)
    missed = sum(1 for v in timing_incorrect if v.missed)
    report.failure = FailureBreakdown(early=early, late=late, missed=missed) \
        if timing_incorrect else None

    report.spurious_triggers = sum(v.spurious for v in report.verdicts)
    report.evaluation_errors = sum(
        1 for v in report.verdicts if v.evaluation_error is not None)
    return report


def render_table(report: Report) -> str:
    """One-row score table in the benchmark's three-aspect column layout."""
    header_groups = []
    columns = []
    for aspect, members in ASPECTS.items():
        names = [CATEGORY_TITLES[c] for c in members] + ["Avg."]
        header_groups.append((ASPECT_TITLES[aspect], names))
        columns.extend([report.accuracy(c) for c in members]
                       + [report.aspects[aspect]])

    col_width = 8
    label_width = max(18, len(report.label) + 2)
    group_line = " " * label_width
    name_line = f"{'Run':<{label_width}}"
    for title, names in header_groups:
        span = col_width * len(names)
        group_line += f"| {title:<{span - 2}} "
        name_line += "| " + "".join(f"{n:<{col_width}}" for n in names)[:span - 2] + " "
    value_line = f"{report.label:<{label_width}}"
    index = 0
    for _, names in header_groups:
        cells = ""
        for _ in names:
            cells += f"{fmt_score(columns[index]):<{col_width}}"
            index += 1
        value_line += "| " + cells[:col_width * len(names) - 2] + " "
    rule = "-" * len(name_line)
    return "\n".join([group_line.rstrip(), name_line.rstrip(), rule,
                      value_line.rstrip()]) + "\n"


def render_failure_table(report: Report) -> str:
    """Early/late split among incorrect timing cases, plus the missed count
    (cases the late share absorbs by convention)."""
    lines = [f"{'Run':<18}{'Early':>10}{'Late':>10}{'Missed':>10}"]
    lines.append("-" * len(lines[0]))
    if report.failure is None:
        lines.append(f"{report.label:<18}{'n/a':>10}{'n/a':>10}{'n/a':>10}")
    else:
        lines.append(
            f"{report.label:<18}"
            f"{fmt_score(report.failure.early_pct):>10}"
            f"{fmt_score(report.failure.late_pct):>10}"
            f"{report.failure.missed:>10}")
    return "\n".join(lines) + "\n"
