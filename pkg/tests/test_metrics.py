from __future__ import annotations

import math

import pytest

import gazekit as gz
from gazekit.classify import OutcomeClass, SelectionRecord
from gazekit.metrics import (
    EmptyMetricError,
    error_composition,
    index_of_difficulty_bits,
    session_metrics,
    throughput,
    trial_amplitude_m,
)
from gazekit.task import Condition, highlight_order

from conftest import flat_ring, quiet_sim


def record(
    round=0,
    trial=0,
    highlighted=0,
    onset=0.0,
    entry=None,
    pinch=500.0,
    eff=OutcomeClass.CORRECT,
    raw=None,
):
    raw = raw if raw is not None else eff
    sel = highlighted if eff is OutcomeClass.CORRECT else None
    return SelectionRecord(
        round=round,
        trial=trial,
        condition=Condition.NONE,
        highlighted=highlighted,
        selected_effective=sel,
        selected_raw=highlighted if raw is OutcomeClass.CORRECT else None,
        highlight_onset_t=onset,
        first_entry_t=entry,
        last_exit_before_pinch_t=None,
        first_entry_after_pinch_t=None,
        pinch_t=pinch,
        outcome_effective=eff,
        outcome_raw=raw,
        corrected_by_heuristic=(eff is OutcomeClass.CORRECT and raw is not OutcomeClass.CORRECT),
    )


def test_single_trial_definitional_throughput():
    # Pick a ring whose first movement has ID = 2 bits: A/W + 1 = 4.
    # Trial 0 moves from the ring center, so A = ring radius = 3 W.
    ring = flat_ring(rounds=1)
    layout = ring.layout_for_round(0)
    w = 2 * layout.target(0).radius
    # Hand-derived oracle, independent of the library path:
    a = ring.inter_target_m / (2 * math.sin(math.pi / 9))
    id_bits = math.log2(a / w + 1)
    recs = [record(highlighted=highlight_order(9)[0], entry=1000.0, pinch=1200.0)]
    bps, excluded = throughput(recs, ring)
    assert excluded == 0
    assert bps == pytest.approx(id_bits / 1.0, rel=1e-12)  # MT = 1000 ms = 1 s


def test_throughput_halves_when_mt_doubles():
    ring = flat_ring(rounds=1)
    order = highlight_order(9)
    recs1 = [
        record(trial=i, highlighted=order[i], onset=1000.0 * i, entry=1000.0 * i + 250.0, pinch=1000.0 * (i + 1))
        for i in range(3)
    ]
    recs2 = [
        record(trial=i, highlighted=order[i], onset=1000.0 * i, entry=1000.0 * i + 500.0, pinch=1000.0 * (i + 1))
        for i in range(3)
    ]
    t1, _ = throughput(recs1, ring)
    t2, _ = throughput(recs2, ring)
    assert t1 == pytest.approx(2 * t2, rel=1e-12)


def test_three_trial_hand_computed_fixture():
    ring = flat_ring(rounds=1)
    order = highlight_order(9)
    mts = [200.0, 350.0, 275.0]
    recs = [
        record(trial=i, highlighted=order[i], onset=1000.0 * i, entry=1000.0 * i + mts[i], pinch=1000.0 * (i + 1))
        for i in range(3)
    ]
    # Spreadsheet-style oracle: chord geometry by hand per trial.
    r_ring = ring.inter_target_m / (2 * math.sin(math.pi / 9))
    w = 2 * ring.layout_for_round(0).target(0).radius
    amps = [r_ring]
    centers = []
    for i in range(9):
        th = math.radians(90 - i * 40)
        centers.append((r_ring * math.cos(th), r_ring * math.sin(th)))
    for i in (1, 2):
        ax, ay = centers[order[i - 1]]
        bx, by = centers[order[i]]
        amps.append(math.hypot(ax - bx, ay - by))
    expect = sum(math.log2(a / w + 1) / (mt / 1000) for a, mt in zip(amps, mts)) / 3
    bps, _ = throughput(recs, ring)
    assert bps == pytest.approx(expect, rel=1e-12)


def test_throughput_excludes_and_counts_missing_entries():
    ring = flat_ring(rounds=1)
    order = highlight_order(9)
    recs = [
        record(trial=0, highlighted=order[0], entry=200.0, pinch=300.0),
        record(trial=1, highlighted=order[1], onset=300.0, entry=None, pinch=900.0, eff=OutcomeClass.OTHER_ERROR),
    ]
    bps, excluded = throughput(recs, ring)
    assert excluded == 1
    with pytest.raises(EmptyMetricError):
        throughput([record(entry=None)], ring)


def test_error_composition_shares():
    recs = []
    order = highlight_order(9)
    kinds = (
        [OutcomeClass.LATE_TRIGGER] * 2 + [OutcomeClass.EARLY_TRIGGER] * 1 + [OutcomeClass.OTHER_ERROR] * 7
    )
    for i, k in enumerate(kinds):
        recs.append(record(round=i // 9, trial=i % 9, highlighted=order[i % 9], eff=k))
    for i in range(10, 90):
        recs.append(record(round=i // 9, trial=i % 9, highlighted=order[i % 9]))
    rate, late, early, other = error_composition(recs)
    assert rate == pytest.approx(100.0 * 10 / 90)
    assert late == pytest.approx(20.0)
    assert early == pytest.approx(10.0)
    assert other == pytest.approx(70.0)
    assert late + early + other == pytest.approx(100.0, abs=0.01)


def test_error_composition_zero_errors_reports_zeros():
    recs = [record(trial=i, highlighted=highlight_order(9)[i], entry=100.0) for i in range(9)]
    rate, late, early, other = error_composition(recs)
    assert (rate, late, early, other) == (0.0, 0.0, 0.0, 0.0)
    with pytest.raises(EmptyMetricError):
        error_composition([])


def test_session_metrics_against_simulated_ground_truth():
    # Injected labels are known, so the composition must match construction.
    ring = flat_ring(rounds=1)
    inj = {
        0: gz.Injection("late", offset_ms=100.0),
        1: gz.Injection("late", offset_ms=120.0),
        2: gz.Injection("early", offset_ms=100.0),
        3: gz.Injection("late", offset_ms=500.0),  # beyond window: other
    }
    data, _ = gz.simulate_session(gz.BlockConfig(ring=ring, condition=gz.Condition.NONE), quiet_sim(), injections=inj)
    m = session_metrics(data.manifest, data.selections)
    assert m.n_selections == 9
    assert m.errors_observed == 4
    assert m.error_rate_pct == pytest.approx(100.0 * 4 / 9)
    assert m.n_late == 2 and m.n_early == 1 and m.n_other == 1
    assert m.late_rate_pct == pytest.approx(50.0)
    assert m.early_rate_pct == pytest.approx(25.0)
    assert m.other_rate_pct == pytest.approx(25.0)
    assert m.error_reduction == 0  # no heuristic active
    assert m.mean_selection_time_ms == pytest.approx(
        sum(r.pinch_t - r.highlight_onset_t for r in data.selections) / 9
    )


def test_amplitude_uses_previous_target_center():
    ring = flat_ring(rounds=2)
    layout = ring.layout_for_round(0)
    order = highlight_order(9)
    # Round 0 trial 0 starts at the ring center.
    assert trial_amplitude_m(ring, 0, 0) == pytest.approx(layout.ring_radius)
    # Later trials hop between sequence neighbors.
    a = layout.target(order[3]).center
    b = layout.target(order[4]).center
    assert trial_amplitude_m(ring, 0, 4) == pytest.approx(a.distance_to(b))
    # A new round starts from the last target of the previous round.
    last = layout.target(order[-1]).center
    first = layout.target(order[0]).center
    assert trial_amplitude_m(ring, 1, 0) == pytest.approx(last.distance_to(first))


def test_index_of_difficulty():
    assert index_of_difficulty_bits(0.3, 0.1) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        index_of_difficulty_bits(0.3, 0.0)
