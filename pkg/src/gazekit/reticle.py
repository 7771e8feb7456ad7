"""Frame-stepped reticle state machine for gaze-and-pinch selection.

Resolves raw gaze positions to an effective hovered target under two optional
heuristics:

* sticky: after gaze validly leaves a target, the reticle stays held on it for
  a short window (default 50 ms).
* magnetic: each target's hover area is expanded by an additive margin
  (default 20 dmm) beyond its edge; the nearest target center wins when
  expanded areas overlap.

Resolution order per frame: raw disc hit, then magnetic expansion, then sticky
hold. Stepping is a pure function of (state, sample, layout, config), which is
what makes offline replay bit-exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import PlanePoint, TargetLayout, dmm_to_meters


@dataclass(frozen=True, slots=True)
class HeuristicConfig:
    sticky_enabled: bool = False
    sticky_hold_ms: float = 50.0
    magnetic_enabled: bool = False
    magnetic_margin_dmm: float = 20.0

    def __post_init__(self) -> None:
        if self.sticky_hold_ms < 0:
            raise ValueError(f"sticky_hold_ms must be >= 0, got {self.sticky_hold_ms}")
        if self.magnetic_margin_dmm < 0:
            raise ValueError(f"magnetic_margin_dmm must be >= 0, got {self.magnetic_margin_dmm}")


@dataclass(frozen=True, slots=True)
class GazeSample:
    t: float
    pos: PlanePoint
    valid: bool = True


@dataclass(frozen=True, slots=True)
class PinchEvent:
    t: float


@dataclass(frozen=True, slots=True)
class ReticleState:
    """Engine state after the most recent gaze sample.

    `stick_source` is the target last hovered (raw or magnetic). While that
    hover is live, or while a tracker dropout immediately follows it,
    `stick_expiry` is None; the expiry is armed only when a *valid* no-hover
    sample ends the hover. Dropouts therefore never consume the hold window.
    """

    raw_target: int | None = None
    effective_target: int | None = None
    stick_source: int | None = None
    stick_expiry: float | None = None
    last_t: float = -math.inf


@dataclass(frozen=True, slots=True)
class HoverResolution:
    raw_target: int | None
    effective_target: int | None
    snapped: bool
    stuck: bool


@dataclass(frozen=True, slots=True)
class SelectionResolution:
    selected: int | None
    raw_selected: int | None


def hit_test(layout: TargetLayout, pos: PlanePoint, margin_m: float = 0.0) -> int | None:
    """Nearest target whose (optionally expanded) disc contains `pos`.

    Ties on distance break toward the lower target id, so resolution is
    deterministic even for degenerate layouts.
    """
    best_id: int | None = None
    best_d = math.inf
    for t in layout.targets:
        d = pos.distance_to(t.center)
        if d <= t.radius + margin_m and d < best_d:
            best_d = d
            best_id = t.id
    return best_id


def step(
    state: ReticleState,
    sample: GazeSample,
    layout: TargetLayout,
    cfg: HeuristicConfig,
) -> tuple[ReticleState, HoverResolution]:
    """Advance the reticle by one gaze sample."""
    if sample.t < state.last_t:
        raise ValueError(f"time regression: sample at {sample.t} ms after state at {state.last_t} ms")

    raw = hit_test(layout, sample.pos) if sample.valid else None

    live = raw
    snapped = False
    if live is None and cfg.magnetic_enabled and sample.valid:
        margin_m = dmm_to_meters(cfg.magnetic_margin_dmm, layout.plane_distance)
        live = hit_test(layout, sample.pos, margin_m)
        snapped = live is not None

    stuck = False
    if live is not None:
        # A live hover (raw or magnetic) re-arms the stick and cancels any
        # pending hold, including a hold on a different target.
        effective = live
        source: int | None = live if cfg.sticky_enabled else None
        expiry: float | None = None
    else:
        effective = None
        source = state.stick_source
        expiry = state.stick_expiry
        if cfg.sticky_enabled and source is not None:
            if expiry is None and sample.valid:
                # Gaze validly exited: hold window starts at this sample.
                expiry = sample.t + cfg.sticky_hold_ms
            if expiry is None or sample.t <= expiry:
                effective = source
                stuck = True
            else:
                source = None
                expiry = None
        else:
            source = None
            expiry = None

    new_state = ReticleState(
        raw_target=raw,
        effective_target=effective,
        stick_source=source,
        stick_expiry=expiry,
        last_t=sample.t,
    )
    return new_state, HoverResolution(raw_target=raw, effective_target=effective, snapped=snapped, stuck=stuck)


def resolve_selection(state: ReticleState, pinch: PinchEvent) -> SelectionResolution:
    """Resolve a pinch against the state of the latest gaze sample at or before it.

    The caller must have stepped the state through every sample with
    t <= pinch.t. A pinch with no hovered target is a valid miss, not an
    error. Both the effective and the raw resolution are reported so would-be
    errors can be accounted for later.
    """
    if pinch.t < state.last_t:
        raise ValueError(f"pinch at {pinch.t} ms precedes latest gaze sample at {state.last_t} ms")
    return SelectionResolution(selected=state.effective_target, raw_selected=state.raw_target)
