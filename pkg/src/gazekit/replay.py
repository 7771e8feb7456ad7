"""Replay session streams through the reticle engine and rebuild records.

The simulator, the live service, and the offline tools all funnel through
`annotate_stream` + `build_records`, so a persisted frame log replayed here
reproduces every hover and selection resolution bit-exactly.

The active layout for a frame follows the trial in progress: trial k covers
(pinch[k-1], pinch[k]], frames after the last pinch keep the last trial's
round. Highlight onsets equal the previous pinch time, so this rule matches
live sequencing exactly.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Sequence

from .classify import (
    ClassifierConfig,
    OutcomeClass,
    SelectionRecord,
    classify,
    contact_times,
)
from .reticle import GazeSample, HeuristicConfig, PinchEvent, ReticleState, step
from .session_io import FrameRow, SessionManifest


@dataclass(frozen=True, slots=True)
class TrialMeta:
    """Generative facts about one trial (task sequence, not derived data)."""

    round: int
    trial: int
    highlighted: int
    onset_t: float
    pinch_t: float


def trial_meta_from_records(selections: Sequence[SelectionRecord]) -> list[TrialMeta]:
    return [
        TrialMeta(
            round=r.round,
            trial=r.trial,
            highlighted=r.highlighted,
            onset_t=r.highlight_onset_t,
            pinch_t=r.pinch_t,
        )
        for r in selections
    ]


def annotate_stream(
    manifest: SessionManifest,
    samples: Sequence[GazeSample],
    meta: Sequence[TrialMeta],
) -> list[FrameRow]:
    """Run the engine over raw samples, producing persisted frame rows."""
    cfg = manifest.heuristics
    layouts = {r: manifest.ring.layout_for_round(r) for r in {m.round for m in meta} | {0}}
    pinch_times = [m.pinch_t for m in meta]

    rows: list[FrameRow] = []
    state = ReticleState()
    k = 0
    pi = 0
    for s in samples:
        while k < len(pinch_times) and s.t > pinch_times[k]:
            k += 1
        trial = min(k, len(meta) - 1) if meta else 0
        layout = layouts[meta[trial].round] if meta else layouts[0]
        state, res = step(state, s, layout, cfg)
        pinch_down = False
        while pi < len(pinch_times) and pinch_times[pi] <= s.t:
            pinch_down = True
            pi += 1
        rows.append(
            FrameRow(
                t_ms=s.t,
                gaze_x_m=s.pos.x,
                gaze_y_m=s.pos.y,
                valid=s.valid,
                raw_target=-1 if res.raw_target is None else res.raw_target,
                effective_target=-1 if res.effective_target is None else res.effective_target,
                snapped=res.snapped,
                stuck=res.stuck,
                pinch_down=pinch_down,
            )
        )
    return rows


def pinch_resolution(rows: Sequence[FrameRow], times: Sequence[float], pinch_t: float) -> tuple[int | None, int | None]:
    """(effective, raw) resolution at a pinch: the latest row at or before it."""
    j = bisect_right(times, pinch_t) - 1
    if j < 0:
        return None, None
    row = rows[j]
    eff = None if row.effective_target == -1 else row.effective_target
    raw = None if row.raw_target == -1 else row.raw_target
    return eff, raw


def build_records(
    manifest: SessionManifest,
    samples: Sequence[GazeSample],
    rows: Sequence[FrameRow],
    meta: Sequence[TrialMeta],
    cfg: ClassifierConfig = ClassifierConfig(),
    *,
    allow_truncated: bool = False,
) -> list[SelectionRecord]:
    """Build one SelectionRecord per trial from the annotated stream.

    Silent on how the stream was produced: the simulator, the live service,
    and the offline classifier all call this with identical inputs and so get
    identical records.
    """
    times = [s.t for s in samples]
    if len(times) != len(rows):
        raise ValueError("samples and rows must describe the same stream")
    step_ms = 0.0
    if len(times) >= 2:
        step_ms = times[1] - times[0]
    layouts = {m.round: manifest.ring.layout_for_round(m.round) for m in meta}

    records: list[SelectionRecord] = []
    for m in meta:
        layout = layouts[m.round]
        highlighted = layout.target(m.highlighted)
        lo = bisect_left(times, m.onset_t)
        hi = bisect_right(times, m.pinch_t + cfg.window_ms + 2.0 * step_ms)
        window = samples[lo:hi]
        pinch = PinchEvent(t=m.pinch_t)
        sel_eff, sel_raw = pinch_resolution(rows, times, m.pinch_t)
        contact = contact_times(window, highlighted, m.pinch_t)
        outcome_eff = classify(
            window, pinch, highlighted, sel_eff, cfg, allow_truncated=allow_truncated
        )
        outcome_raw = classify(
            window, pinch, highlighted, sel_raw, cfg, allow_truncated=allow_truncated
        )
        records.append(
            SelectionRecord(
                round=m.round,
                trial=m.trial,
                condition=manifest.condition,
                highlighted=m.highlighted,
                selected_effective=sel_eff,
                selected_raw=sel_raw,
                highlight_onset_t=m.onset_t,
                first_entry_t=contact.first_entry_t,
                last_exit_before_pinch_t=contact.last_exit_before_pinch_t,
                first_entry_after_pinch_t=contact.first_entry_after_pinch_t,
                pinch_t=m.pinch_t,
                outcome_effective=outcome_eff,
                outcome_raw=outcome_raw,
                corrected_by_heuristic=(
                    outcome_eff is OutcomeClass.CORRECT and outcome_raw is not OutcomeClass.CORRECT
                ),
            )
        )
    return records


def classify_session(
    log: tuple[SessionManifest, Sequence[FrameRow], Sequence[SelectionRecord]],
    cfg: ClassifierConfig = ClassifierConfig(),
    *,
    allow_truncated: bool = False,
) -> list[SelectionRecord]:
    """Recompute every SelectionRecord of a session purely from its log.

    Only the generative fields of the stored selections (round/trial/
    highlighted/onset/pinch) are trusted; resolutions, contact times, and
    outcomes are rebuilt from the frame rows.
    """
    manifest, frames, selections = log
    samples = [f.to_sample() for f in frames]
    rows = list(frames)
    meta = trial_meta_from_records(selections)
    return build_records(manifest, samples, rows, meta, cfg, allow_truncated=allow_truncated)


def replay_session(
    manifest: SessionManifest,
    frames: Sequence[FrameRow],
    selections: Sequence[SelectionRecord],
    cfg: ClassifierConfig = ClassifierConfig(),
    *,
    allow_truncated: bool = False,
) -> tuple[list[FrameRow], list[SelectionRecord]]:
    """Recompute engine annotations and records from raw gaze data alone."""
    samples = [f.to_sample() for f in frames]
    meta = trial_meta_from_records(selections)
    rows = annotate_stream(manifest, samples, meta)
    records = build_records(manifest, samples, rows, meta, cfg, allow_truncated=allow_truncated)
    return rows, records


def verify_replay(
    manifest: SessionManifest,
    frames: Sequence[FrameRow],
    selections: Sequence[SelectionRecord],
    cfg: ClassifierConfig = ClassifierConfig(),
    *,
    allow_truncated: bool = False,
) -> list[str]:
    """Describe every divergence between a stored log and its replay."""
    rows, records = replay_session(
        manifest, frames, selections, cfg, allow_truncated=allow_truncated
    )
    problems: list[str] = []
    for i, (got, want) in enumerate(zip(rows, frames)):
        if got != want:
            problems.append(f"frame {i} (t={want.t_ms}): replay {got} != log {want}")
    for i, (got, want) in enumerate(zip(records, selections)):
        if got != want:
            problems.append(f"selection {i} (round {want.round} trial {want.trial}): replay differs")
    if len(rows) != len(frames):
        problems.append(f"frame count: replay {len(rows)} != log {len(frames)}")
    if len(records) != len(selections):
        problems.append(f"selection count: replay {len(records)} != log {len(selections)}")
    return problems


def counterfactual_resolution(
    manifest: SessionManifest,
    samples: Sequence[GazeSample],
    meta: Sequence[TrialMeta],
) -> list[tuple[int | None, int | None]]:
    """Engine resolutions per pinch with all heuristics disabled.

    Cross-check used by tests: the raw side must equal the raw column of the
    active run, whatever heuristic produced the stream.
    """
    from dataclasses import replace

    baseline = replace(manifest, heuristics=HeuristicConfig())
    rows = annotate_stream(baseline, samples, meta)
    times = [s.t for s in samples]
    return [pinch_resolution(rows, times, m.pinch_t) for m in meta]
