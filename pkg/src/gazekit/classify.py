"""Coordination-error classification for gaze-and-pinch selections.

A selection is Correct when the resolved target equals the highlighted one.
Otherwise it is a LateTrigger when the pinch falls within the temporal window
after gaze last left the highlighted target, an EarlyTrigger when gaze first
lands on it within the window after the pinch, and OtherError when neither
temporal condition holds. Entry and exit times are frame-quantized: an entry
is stamped at the first sample inside the target disc, an exit at the first
sample off it.

Classification is defined offline over complete logs; early detection needs
frames past the pinch, so a selection whose stream ends inside the undecided
part of the window raises IndeterminateEarlyError rather than guessing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from .geometry import Target, TargetLayout
from .reticle import (
    GazeSample,
    HeuristicConfig,
    PinchEvent,
    ReticleState,
    resolve_selection,
    step,
)
from .task import Condition


class OutcomeClass(enum.Enum):
    CORRECT = "correct"
    LATE_TRIGGER = "late_trigger"
    EARLY_TRIGGER = "early_trigger"
    OTHER_ERROR = "other_error"


@dataclass(frozen=True)
class ClassifierConfig:
    window_ms: float = 350.0

    def __post_init__(self) -> None:
        if self.window_ms <= 0:
            raise ValueError(f"window_ms must be positive, got {self.window_ms}")


class IndeterminateEarlyError(ValueError):
    """Raised when the frame stream ends before the early-trigger window is decided."""


@dataclass(frozen=True)
class ContactTimes:
    """Frame-derived contact of gaze with one target, relative to a pinch."""

    first_entry_t: float | None
    last_exit_before_pinch_t: float | None
    first_entry_after_pinch_t: float | None
    last_frame_t: float | None


@dataclass(frozen=True)
class SelectionRecord:
    round: int
    trial: int
    condition: Condition
    highlighted: int
    selected_effective: int | None
    selected_raw: int | None
    highlight_onset_t: float
    first_entry_t: float | None
    last_exit_before_pinch_t: float | None
    first_entry_after_pinch_t: float | None
    pinch_t: float
    outcome_effective: OutcomeClass
    outcome_raw: OutcomeClass
    corrected_by_heuristic: bool


def contact_times(frames: Sequence[GazeSample], target: Target, pinch_t: float) -> ContactTimes:
    """Scan frames for entries/exits of `target`, split around `pinch_t`.

    Invalid frames count as off-target. The first frame's on-state counts as
    an entry, so a stream that starts on the target still yields an entry time.
    """
    first_entry: float | None = None
    last_exit: float | None = None
    first_entry_after: float | None = None
    last_t: float | None = None
    prev_on = False
    for f in frames:
        on = f.valid and target.contains(f.pos)
        if on and not prev_on:
            if first_entry is None:
                first_entry = f.t
            if f.t > pinch_t and first_entry_after is None:
                first_entry_after = f.t
        elif prev_on and not on and f.t <= pinch_t:
            last_exit = f.t
        prev_on = on
        last_t = f.t
    return ContactTimes(
        first_entry_t=first_entry,
        last_exit_before_pinch_t=last_exit,
        first_entry_after_pinch_t=first_entry_after,
        last_frame_t=last_t,
    )


def classify(
    frames: Sequence[GazeSample],
    pinch: PinchEvent,
    highlighted: Target,
    selected: int | None,
    cfg: ClassifierConfig = ClassifierConfig(),
    *,
    allow_truncated: bool = False,
) -> OutcomeClass:
    """Label one selection from raw frames.

    `frames` must cover [highlight onset, pinch + window]; pass
    allow_truncated=True only for aborted sessions where no further frames can
    exist, in which case an undecided early window counts as no entry.
    """
    if selected == highlighted.id:
        return OutcomeClass.CORRECT
    c = contact_times(frames, highlighted, pinch.t)
    return _label_error(c, pinch.t, cfg.window_ms, allow_truncated=allow_truncated)


def _label_error(
    c: ContactTimes,
    pinch_t: float,
    window_ms: float,
    *,
    allow_truncated: bool = False,
) -> OutcomeClass:
    d_late: float | None = None
    if c.last_exit_before_pinch_t is not None:
        d = pinch_t - c.last_exit_before_pinch_t
        if 0.0 < d <= window_ms:
            d_late = d

    d_early: float | None = None
    if c.first_entry_after_pinch_t is not None:
        d = c.first_entry_after_pinch_t - pinch_t
        if d <= window_ms:
            d_early = d

    if c.first_entry_after_pinch_t is None:
        # Early side undecided until frames cover the part of the window that
        # could still beat the late candidate (or the whole window if none).
        needed = d_late if d_late is not None else window_ms
        horizon = (c.last_frame_t - pinch_t) if c.last_frame_t is not None else 0.0
        if horizon < needed and not allow_truncated:
            raise IndeterminateEarlyError(
                f"frames end {horizon:.1f} ms after pinch but {needed:.1f} ms are"
                " needed to decide the early-trigger window"
            )

    if d_late is not None and d_early is not None:
        return OutcomeClass.LATE_TRIGGER if d_late <= d_early else OutcomeClass.EARLY_TRIGGER
    if d_late is not None:
        return OutcomeClass.LATE_TRIGGER
    if d_early is not None:
        return OutcomeClass.EARLY_TRIGGER
    return OutcomeClass.OTHER_ERROR


def counterfactual(
    frames: Sequence[GazeSample],
    pinch: PinchEvent,
    layout: TargetLayout,
    highlighted: Target,
    outcome_effective: OutcomeClass,
    cfg: ClassifierConfig = ClassifierConfig(),
    *,
    allow_truncated: bool = False,
) -> tuple[OutcomeClass, bool]:
    """Replay frames with all heuristics off and label the raw outcome.

    Returns (outcome_raw, corrected) where corrected means the active
    heuristic turned a would-be error into a correct selection.
    """
    baseline = HeuristicConfig()
    state = ReticleState()
    for f in frames:
        if f.t > pinch.t:
            break
        state, _ = step(state, f, layout, baseline)
    raw_selected = resolve_selection(state, pinch).selected
    outcome_raw = classify(
        frames, pinch, highlighted, raw_selected, cfg, allow_truncated=allow_truncated
    )
    corrected = outcome_effective is OutcomeClass.CORRECT and outcome_raw is not OutcomeClass.CORRECT
    return outcome_raw, corrected
