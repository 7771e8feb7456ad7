"""Aggregate session metrics across subjects and run the two-stage analysis.

Stage one is per-session metric extraction (see metrics.py); stage two is a
repeated-measures ANOVA per metric plus post-hoc paired t-tests: baseline
versus each heuristic condition, and within each heuristic condition the
observed error rate versus the would-be (unaltered) rate. The error-reduction
ANOVA spans only the heuristic conditions, since the baseline's reduction is
identically zero. p-values are reported without correction.

Output is plot-ready CSV tables plus a plain-text summary; numbers are written
with full (shortest round-trip) precision so reports are byte-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .metrics import SessionMetrics
from .stats import DegenerateDataError, StatResult, paired_t, rm_anova
from .task import Condition

METRIC_FIELDS = (
    "throughput_bps",
    "error_rate_pct",
    "late_rate_pct",
    "early_rate_pct",
    "mean_selection_time_ms",
    "error_reduction",
)

_SESSION_COLUMNS = (
    "throughput_bps",
    "error_rate_pct",
    "would_be_error_rate_pct",
    "late_rate_pct",
    "early_rate_pct",
    "other_rate_pct",
    "late_of_selections_pct",
    "early_of_selections_pct",
    "other_of_selections_pct",
    "mean_selection_time_ms",
    "errors_observed",
    "errors_would_be",
    "error_reduction",
    "n_selections",
    "throughput_excluded_trials",
)


class UnbalancedDesignError(ValueError):
    def __init__(self, missing: list[tuple[str, str]]):
        self.missing = missing
        cells = ", ".join(f"(subject={s}, condition={c})" for s, c in missing)
        super().__init__(f"unbalanced design; missing cells: {cells}")


@dataclass(frozen=True)
class SessionEntry:
    subject_id: str
    condition: Condition
    block_index: int
    metrics: SessionMetrics


@dataclass(frozen=True)
class AnovaRow:
    metric: str
    conditions: tuple[str, ...]
    result: StatResult | None
    note: str = ""


@dataclass(frozen=True)
class TTestRow:
    kind: str  # "baseline_vs_heuristic" | "observed_vs_would_be"
    metric: str
    condition: str
    result: StatResult | None
    note: str = ""


@dataclass(frozen=True)
class Report:
    subjects: tuple[str, ...]
    conditions: tuple[Condition, ...]
    entries: tuple[SessionEntry, ...]
    condition_means: dict[str, dict[str, tuple[float, float]]]  # condition -> metric -> (mean, sd)
    composition: dict[str, dict[str, float]]
    anova: tuple[AnovaRow, ...]
    ttests: tuple[TTestRow, ...]


def _session_values(e: SessionEntry) -> dict[str, float]:
    m = e.metrics
    n = m.n_selections
    return {
        "throughput_bps": m.throughput_bps,
        "error_rate_pct": m.error_rate_pct,
        "would_be_error_rate_pct": 100.0 * m.errors_would_be / n,
        "late_rate_pct": m.late_rate_pct,
        "early_rate_pct": m.early_rate_pct,
        "other_rate_pct": m.other_rate_pct,
        "late_of_selections_pct": 100.0 * m.n_late / n,
        "early_of_selections_pct": 100.0 * m.n_early / n,
        "other_of_selections_pct": 100.0 * m.n_other / n,
        "mean_selection_time_ms": m.mean_selection_time_ms,
        "errors_observed": float(m.errors_observed),
        "errors_would_be": float(m.errors_would_be),
        "error_reduction": float(m.error_reduction),
        "n_selections": float(n),
        "throughput_excluded_trials": float(m.throughput_excluded_trials),
    }


def _subject_condition_value(entries: Sequence[SessionEntry], subject: str, cond: Condition, column: str) -> float:
    vals = [
        _session_values(e)[column]
        for e in entries
        if e.subject_id == subject and e.condition is cond
    ]
    return sum(vals) / len(vals)


def _paired_row(kind: str, metric: str, cond: str, x: list[float], y: list[float]) -> TTestRow:
    diffs = [a - b for a, b in zip(x, y)]
    if all(d == 0.0 for d in diffs):
        # A true null difference; by convention t = 0, p = 1.
        return TTestRow(
            kind,
            metric,
            cond,
            StatResult(statistic=0.0, df1=float(len(x) - 1), df2=None, p_value=1.0, effect=0.0),
            note="zero difference everywhere",
        )
    try:
        return TTestRow(kind, metric, cond, paired_t(x, y))
    except DegenerateDataError as e:
        return TTestRow(kind, metric, cond, None, note=str(e))


def build_report(entries: Sequence[SessionEntry]) -> Report:
    if not entries:
        raise ValueError("no sessions to report on")
    subjects = tuple(sorted({e.subject_id for e in entries}))
    conditions = tuple(c for c in Condition if any(e.condition is c for e in entries))

    missing = [
        (s, c.value)
        for s in subjects
        for c in conditions
        if not any(e.subject_id == s and e.condition is c for e in entries)
    ]
    if missing:
        raise UnbalancedDesignError(missing)

    cell: dict[tuple[str, str], dict[str, float]] = {}
    for s in subjects:
        for c in conditions:
            cell[(s, c.value)] = {
                col: _subject_condition_value(entries, s, c, col) for col in _SESSION_COLUMNS
            }

    condition_means: dict[str, dict[str, tuple[float, float]]] = {}
    composition: dict[str, dict[str, float]] = {}
    for c in conditions:
        per_metric: dict[str, tuple[float, float]] = {}
        for col in _SESSION_COLUMNS:
            vals = np.array([cell[(s, c.value)][col] for s in subjects])
            sd = float(vals.std(ddof=1)) if len(vals) >= 2 else 0.0
            per_metric[col] = (float(vals.mean()), sd)
        condition_means[c.value] = per_metric
        composition[c.value] = {
            "mean_error_rate_pct": per_metric["error_rate_pct"][0],
            "late_share_pct": per_metric["late_rate_pct"][0],
            "early_share_pct": per_metric["early_rate_pct"][0],
            "other_share_pct": per_metric["other_rate_pct"][0],
            "late_of_selections_pct": per_metric["late_of_selections_pct"][0],
            "early_of_selections_pct": per_metric["early_of_selections_pct"][0],
            "other_of_selections_pct": per_metric["other_of_selections_pct"][0],
        }

    anova_rows: list[AnovaRow] = []
    for metric in METRIC_FIELDS:
        if metric == "error_reduction":
            conds = [c for c in conditions if c is not Condition.NONE]
        else:
            conds = list(conditions)
        names = tuple(c.value for c in conds)
        if len(conds) < 2 or len(subjects) < 2:
            anova_rows.append(AnovaRow(metric, names, None, note="needs >= 2 conditions and subjects"))
            continue
        matrix = [[cell[(s, c.value)][metric] for c in conds] for s in subjects]
        try:
            anova_rows.append(AnovaRow(metric, names, rm_anova(matrix)))
        except DegenerateDataError as e:
            anova_rows.append(AnovaRow(metric, names, None, note=str(e)))

    ttest_rows: list[TTestRow] = []
    heuristics = [c for c in conditions if c is not Condition.NONE]
    if Condition.NONE in conditions:
        for metric in METRIC_FIELDS:
            if metric == "error_reduction":
                continue  # identically zero at baseline; covered by observed-vs-would-be
            base = [cell[(s, Condition.NONE.value)][metric] for s in subjects]
            for c in heuristics:
                vals = [cell[(s, c.value)][metric] for s in subjects]
                ttest_rows.append(_paired_row("baseline_vs_heuristic", metric, c.value, base, vals))
    for c in heuristics:
        observed = [cell[(s, c.value)]["error_rate_pct"] for s in subjects]
        would_be = [cell[(s, c.value)]["would_be_error_rate_pct"] for s in subjects]
        ttest_rows.append(_paired_row("observed_vs_would_be", "error_rate_pct", c.value, observed, would_be))

    return Report(
        subjects=subjects,
        conditions=conditions,
        entries=tuple(entries),
        condition_means=condition_means,
        composition=composition,
        anova=tuple(anova_rows),
        ttests=tuple(ttest_rows),
    )


# --- rendering ----------------------------------------------------------------


def _num(v: float) -> str:
    if isinstance(v, float) and v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _csv_line(cells: Sequence[str]) -> str:
    return ",".join(cells) + "\n"


def render_entries_csv(entries: Sequence[SessionEntry]) -> str:
    out = [_csv_line(("subject", "condition", "block") + _SESSION_COLUMNS)]
    for e in sorted(entries, key=lambda e: (e.subject_id, e.condition.value, e.block_index)):
        vals = _session_values(e)
        out.append(
            _csv_line(
                (e.subject_id, e.condition.value, str(e.block_index))
                + tuple(_num(vals[c]) for c in _SESSION_COLUMNS)
            )
        )
    return "".join(out)


def render_sessions_csv(report: Report) -> str:
    return render_entries_csv(report.entries)


def render_condition_summary_csv(report: Report) -> str:
    out = [_csv_line(("condition", "metric", "mean", "sd"))]
    for c in report.conditions:
        for col in _SESSION_COLUMNS:
            mean, sd = report.condition_means[c.value][col]
            out.append(_csv_line((c.value, col, _num(mean), _num(sd))))
    return "".join(out)


def render_composition_csv(report: Report) -> str:
    cols = (
        "mean_error_rate_pct",
        "late_share_pct",
        "early_share_pct",
        "other_share_pct",
        "late_of_selections_pct",
        "early_of_selections_pct",
        "other_of_selections_pct",
    )
    out = [_csv_line(("condition",) + cols)]
    for c in report.conditions:
        comp = report.composition[c.value]
        out.append(_csv_line((c.value,) + tuple(_num(comp[k]) for k in cols)))
    return "".join(out)


def render_anova_csv(report: Report) -> str:
    out = [_csv_line(("metric", "conditions", "df1", "df2", "F", "p", "eta_sq_g", "note"))]
    for row in report.anova:
        if row.result is None:
            out.append(_csv_line((row.metric, "+".join(row.conditions), "", "", "", "", "", row.note)))
        else:
            r = row.result
            out.append(
                _csv_line(
                    (
                        row.metric,
                        "+".join(row.conditions),
                        _num(r.df1),
                        _num(r.df2),
                        _num(r.statistic),
                        _num(r.p_value),
                        _num(r.effect),
                        row.note,
                    )
                )
            )
    return "".join(out)


def render_ttests_csv(report: Report) -> str:
    out = [_csv_line(("kind", "metric", "condition", "df", "t", "p", "mean_diff", "note"))]
    for row in report.ttests:
        if row.result is None:
            out.append(_csv_line((row.kind, row.metric, row.condition, "", "", "", "", row.note)))
        else:
            r = row.result
            out.append(
                _csv_line(
                    (
                        row.kind,
                        row.metric,
                        row.condition,
                        _num(r.df1),
                        _num(r.statistic),
                        _num(r.p_value),
                        _num(r.effect),
                        row.note,
                    )
                )
            )
    return "".join(out)


def _fmt_p(p: float) -> str:
    return "< .001" if p < 0.001 else f"= {p:.3f}"


def render_text_summary(report: Report) -> str:
    lines = []
    lines.append("Session analysis summary")
    lines.append("========================")
    lines.append(f"subjects: {len(report.subjects)}; conditions: {', '.join(c.value for c in report.conditions)}")
    lines.append("")
    lines.append("Per-condition means (SD):")
    for c in report.conditions:
        m = report.condition_means[c.value]
        lines.append(
            f"  {c.value:16s} throughput {m['throughput_bps'][0]:.3f} ({m['throughput_bps'][1]:.3f}) bits/s | "
            f"error rate {m['error_rate_pct'][0]:.2f}% ({m['error_rate_pct'][1]:.2f}) | "
            f"selection time {m['mean_selection_time_ms'][0]:.1f} ms ({m['mean_selection_time_ms'][1]:.1f}) | "
            f"error reduction {m['error_reduction'][0]:.2f} ({m['error_reduction'][1]:.2f})"
        )
    lines.append("")
    lines.append("Error composition (share of errors):")
    for c in report.conditions:
        comp = report.composition[c.value]
        lines.append(
            f"  {c.value:16s} rate {comp['mean_error_rate_pct']:.2f}% | late {comp['late_share_pct']:.1f}% | "
            f"early {comp['early_share_pct']:.1f}% | other {comp['other_share_pct']:.1f}%"
        )
    lines.append("")
    lines.append("Repeated-measures ANOVA per metric:")
    for row in report.anova:
        if row.result is None:
            lines.append(f"  {row.metric:24s} [{'+'.join(row.conditions)}] {row.note}")
        else:
            r = row.result
            lines.append(
                f"  {row.metric:24s} F({r.df1:.0f}, {r.df2:.0f}) = {r.statistic:.2f}, "
                f"p {_fmt_p(r.p_value)}, eta_sq_g = {r.effect:.3f}"
            )
    lines.append("")
    lines.append("Post-hoc paired t-tests:")
    for row in report.ttests:
        label = (
            f"none vs {row.condition}" if row.kind == "baseline_vs_heuristic" else f"{row.condition}: observed vs would-be"
        )
        if row.result is None:
            lines.append(f"  {row.metric:24s} {label}: {row.note}")
        else:
            r = row.result
            note = f" ({row.note})" if row.note else ""
            lines.append(
                f"  {row.metric:24s} {label}: t({r.df1:.0f}) = {r.statistic:.2f}, "
                f"p {_fmt_p(r.p_value)}, mean diff = {r.effect:.3f}{note}"
            )
    lines.append("")
    return "\n".join(lines)


REPORT_FILES = {
    "sessions.csv": render_sessions_csv,
    "condition_summary.csv": render_condition_summary_csv,
    "error_composition.csv": render_composition_csv,
    "anova.csv": render_anova_csv,
    "ttests.csv": render_ttests_csv,
    "report.txt": render_text_summary,
}


def write_report(report: Report, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, renderer in REPORT_FILES.items():
        p = out / name
        p.write_text(renderer(report), encoding="utf-8", newline="\n")
        written.append(p)
    return written
