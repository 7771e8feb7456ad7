"""Per-session selection metrics.

Six headline metrics per session: throughput (bits/s), error rate (% of
selections), late/early trigger rates (% of errors), mean selection time (ms),
and error reduction (would-be errors minus observed errors).

Throughput uses the Shannon index of difficulty ID = log2(A/W + 1), where A is
the center distance from the previous trial's target (ring center for the very
first trial) and W is the target diameter of the trial's round. Movement time
is highlight onset to first raw gaze entry; trials without a usable entry are
excluded from throughput and counted. Selection time is onset to pinch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .classify import OutcomeClass, SelectionRecord
from .geometry import PlanePoint
from .session_io import SessionManifest
from .task import RingSpec, highlight_order


class EmptyMetricError(ValueError):
    """No usable data for the requested metric."""


@dataclass(frozen=True)
class SessionMetrics:
    throughput_bps: float
    error_rate_pct: float
    late_rate_pct: float
    early_rate_pct: float
    other_rate_pct: float
    mean_selection_time_ms: float
    errors_observed: int
    errors_would_be: int
    error_reduction: int
    n_selections: int
    n_late: int
    n_early: int
    n_other: int
    throughput_excluded_trials: int


def trial_amplitude_m(ring: RingSpec, round_index: int, trial_index: int) -> float:
    """Center-to-center movement distance for one trial of the ring task."""
    layout = ring.layout_for_round(round_index)
    order = highlight_order(ring.n_targets)
    cur = layout.target(order[trial_index]).center
    if round_index == 0 and trial_index == 0:
        prev = PlanePoint(0.0, 0.0)  # the session starts with gaze at the ring center
    elif trial_index == 0:
        prev = layout.target(order[-1]).center
    else:
        prev = layout.target(order[trial_index - 1]).center
    return cur.distance_to(prev)


def index_of_difficulty_bits(amplitude_m: float, width_m: float) -> float:
    if width_m <= 0:
        raise ValueError(f"target width must be positive, got {width_m}")
    return math.log2(amplitude_m / width_m + 1.0)


def throughput(records: Sequence[SelectionRecord], ring: RingSpec) -> tuple[float, int]:
    """Mean per-trial ID/MT in bits per second, plus the excluded-trial count."""
    if not records:
        raise EmptyMetricError("no selections")
    ratios = []
    excluded = 0
    for r in records:
        if r.first_entry_t is None:
            excluded += 1
            continue
        mt_ms = r.first_entry_t - r.highlight_onset_t
        if mt_ms <= 0:
            excluded += 1
            continue
        width_m = 2.0 * ring.layout_for_round(r.round).target(r.highlighted).radius
        amp_m = trial_amplitude_m(ring, r.round, r.trial)
        ratios.append(index_of_difficulty_bits(amp_m, width_m) / (mt_ms / 1000.0))
    if not ratios:
        raise EmptyMetricError("no trial has a usable movement time")
    return sum(ratios) / len(ratios), excluded


def error_composition(records: Sequence[SelectionRecord]) -> tuple[float, float, float, float]:
    """(error_rate_pct, late_pct, early_pct, other_pct) of effective outcomes.

    Late/early/other are shares of the errors, not of all selections. With no
    errors the composition is undefined and reported as zeros.
    """
    if not records:
        raise EmptyMetricError("no selections")
    errors = [r.outcome_effective for r in records if r.outcome_effective is not OutcomeClass.CORRECT]
    rate = 100.0 * len(errors) / len(records)
    if not errors:
        return rate, 0.0, 0.0, 0.0
    late = 100.0 * sum(1 for o in errors if o is OutcomeClass.LATE_TRIGGER) / len(errors)
    early = 100.0 * sum(1 for o in errors if o is OutcomeClass.EARLY_TRIGGER) / len(errors)
    other = 100.0 * sum(1 for o in errors if o is OutcomeClass.OTHER_ERROR) / len(errors)
    return rate, late, early, other


def session_metrics(manifest: SessionManifest, records: Sequence[SelectionRecord]) -> SessionMetrics:
    if not records:
        raise EmptyMetricError("session has no selections")
    n = len(records)
    errors_observed = sum(1 for r in records if r.outcome_effective is not OutcomeClass.CORRECT)
    errors_would_be = sum(1 for r in records if r.outcome_raw is not OutcomeClass.CORRECT)
    n_late = sum(1 for r in records if r.outcome_effective is OutcomeClass.LATE_TRIGGER)
    n_early = sum(1 for r in records if r.outcome_effective is OutcomeClass.EARLY_TRIGGER)
    n_other = sum(1 for r in records if r.outcome_effective is OutcomeClass.OTHER_ERROR)

    if errors_observed > 0:
        late_pct = 100.0 * n_late / errors_observed
        early_pct = 100.0 * n_early / errors_observed
        other_pct = 100.0 * n_other / errors_observed
    else:
        # No errors: the composition is undefined; reported as zeros.
        late_pct = early_pct = other_pct = 0.0

    tput, excluded = throughput(records, manifest.ring)
    selection_time = sum(r.pinch_t - r.highlight_onset_t for r in records) / n

    return SessionMetrics(
        throughput_bps=tput,
        error_rate_pct=100.0 * errors_observed / n,
        late_rate_pct=late_pct,
        early_rate_pct=early_pct,
        other_rate_pct=other_pct,
        mean_selection_time_ms=selection_time,
        errors_observed=errors_observed,
        errors_would_be=errors_would_be,
        error_reduction=errors_would_be - errors_observed,
        n_selections=n,
        n_late=n_late,
        n_early=n_early,
        n_other=n_other,
        throughput_excluded_trials=excluded,
    )
