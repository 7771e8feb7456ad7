"""Deterministic, seedable generator of synthetic gaze/pinch sessions.

The gaze path is a piecewise-linear narrative: fixate, saccade (duration =
slope * amplitude_deg + intercept, linearly interpolated), fixate at a landing
point drawn around the target center. Frames are sampled from the narrative on
an exact clock grid (i * 1000/frame_rate_hz ms), then annotated by the same
engine pass offline replay uses, so generation and replay cannot diverge.

Pinch placement is anchored to the *measured* raw entry of gaze into the
intended target (first in-disc frame), matching the classifier's reference
point, so injected coordination offsets are exact in frame time:

* normal trials: pinch = entry + Normal(pinch_offset_mean, pinch_offset_sd)
* early injection: pinch = entry - offset_ms
* late injection: gaze departs to the ring center after a dwell and
  pinch = (first off-target frame) + offset_ms
* spatial-miss injection: the landing point sits `miss_dmm` beyond the target
  edge, radially outward from the ring, and the pinch lands mid-fixation

Ground truth is computed from the emitted frames, never from the intent, so
classifier-versus-truth comparisons stay honest.

RNG scheme (numpy PCG64; stream order is part of the log contract):

* session seed: SeedSequence((base_seed, subject_index, condition_index,
  block_index)), first uint64 word.
* frame-noise stream: SeedSequence((seed, 0)); per frame, in frame order:
  jitter dx, jitter dy (only when jitter sd > 0), dropout uniform (only when
  dropout_rate > 0).
* per-trial stream k: SeedSequence((seed, 1, k)); in order: landing dx,
  landing dy (only when landing sd > 0 and the trial is not a spatial-miss
  injection), pinch offset (only for non-injected trials with sd > 0).
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import asdict, dataclass

import numpy as np

from .classify import ClassifierConfig, SelectionRecord, contact_times
from .geometry import PlanePoint, Target, dmm_to_meters, visual_angle_deg
from .replay import TrialMeta, annotate_stream, build_records
from .reticle import GazeSample, PinchEvent
from .session_io import FrameRow, SessionManifest
from .task import BlockConfig, Condition, highlight_order

_EARLY_PAD_MS = 150.0  # extra pre-saccade fixation so early pinches stay inside the trial
_SEARCH_PAD_FRAMES = 3
_TAIL_PAD_FRAMES = 3

_CONDITION_INDEX = {c: i for i, c in enumerate(Condition)}


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    frame_rate_hz: float = 90.0
    fixation_jitter_sd_dmm: float = 3.0
    landing_error_sd_dmm: float = 5.0
    saccade_dur_slope_ms_per_deg: float = 2.2
    saccade_dur_intercept_ms: float = 21.0
    saccade_latency_ms: float = 120.0
    pinch_offset_mean_ms: float = 60.0
    pinch_offset_sd_ms: float = 90.0
    dropout_rate: float = 0.0

    def __post_init__(self) -> None:
        if self.frame_rate_hz <= 0:
            raise ValueError("frame_rate_hz must be positive")
        for name in ("fixation_jitter_sd_dmm", "landing_error_sd_dmm", "pinch_offset_sd_ms"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.saccade_latency_ms < 0:
            raise ValueError("saccade_latency_ms must be >= 0")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")


@dataclass(frozen=True)
class GroundTruthTrial:
    trial_index: int
    intended_target: int
    gaze_entry_t: float | None
    gaze_exit_t: float | None
    pinch_t: float
    true_offset_ms: float | None


@dataclass(frozen=True)
class Injection:
    """Per-trial coordination override used by verification runs."""

    kind: str  # "early" | "late" | "spatial_miss"
    offset_ms: float = 0.0
    miss_dmm: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("early", "late", "spatial_miss"):
            raise ValueError(f"unknown injection kind {self.kind!r}")
        if self.kind in ("early", "late") and self.offset_ms <= 0:
            raise ValueError("temporal injections need offset_ms > 0")
        if self.kind == "spatial_miss" and self.miss_dmm <= 0:
            raise ValueError("spatial_miss needs miss_dmm > 0")


@dataclass(frozen=True)
class SessionData:
    manifest: SessionManifest
    frames: list[FrameRow]
    selections: list[SelectionRecord]


def saccade_duration_ms(amplitude_deg: float, sim: SimConfig) -> float:
    """Linear main-sequence approximation of saccade duration."""
    return sim.saccade_dur_slope_ms_per_deg * amplitude_deg + sim.saccade_dur_intercept_ms


def derive_session_seed(
    base_seed: int, subject_index: int, condition: Condition, block_index: int
) -> int:
    ss = np.random.SeedSequence(
        (base_seed, subject_index, _CONDITION_INDEX[condition], block_index)
    )
    return int(ss.generate_state(1, np.uint64)[0])


class _Narrative:
    """Piecewise-linear gaze path; the last segment is an open-ended fixation."""

    __slots__ = ("ts", "ps")

    def __init__(self, start: PlanePoint, t0: float = 0.0):
        self.ts = [t0]
        self.ps = [start]

    @property
    def end_t(self) -> float:
        return self.ts[-1]

    @property
    def end_pos(self) -> PlanePoint:
        return self.ps[-1]

    def saccade(self, start_t: float, duration_ms: float, to: PlanePoint) -> None:
        if start_t < self.ts[-1]:
            raise ValueError("saccade would rewrite an already-final part of the path")
        if duration_ms <= 0:
            raise ValueError("saccade duration must be positive")
        if start_t > self.ts[-1]:
            self.ts.append(start_t)
            self.ps.append(self.ps[-1])
        self.ts.append(start_t + duration_ms)
        self.ps.append(to)

    def pos_at(self, t: float) -> PlanePoint:
        ts = self.ts
        if t >= ts[-1]:
            return self.ps[-1]
        i = bisect_right(ts, t) - 1
        if i < 0:
            return self.ps[0]
        p0, p1 = self.ps[i], self.ps[i + 1]
        if p0.x == p1.x and p0.y == p1.y:
            return p0
        u = (t - ts[i]) / (ts[i + 1] - ts[i])
        return PlanePoint(p0.x + u * (p1.x - p0.x), p0.y + u * (p1.y - p0.y))


class _SessionGen:
    def __init__(
        self,
        block: BlockConfig,
        sim: SimConfig,
        injections: dict[int, Injection] | None,
        ccfg: ClassifierConfig,
    ):
        self.block = block
        self.sim = sim
        self.injections = injections or {}
        self.ccfg = ccfg
        ring = block.ring
        self.layouts = [ring.layout_for_round(r) for r in range(ring.rounds)]
        self.step_ms = 1000.0 / sim.frame_rate_hz
        self.jitter_m = dmm_to_meters(sim.fixation_jitter_sd_dmm, ring.plane_distance_m)
        self.landing_m = dmm_to_meters(sim.landing_error_sd_dmm, ring.plane_distance_m)
        self.rng_frames = np.random.Generator(np.random.PCG64(np.random.SeedSequence((sim.seed, 0))))
        self.narrative = _Narrative(PlanePoint(0.0, 0.0))
        self.samples: list[GazeSample] = []
        self.times: list[float] = []

    def _trial_rng(self, k: int) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence((self.sim.seed, 1, k))))

    def _frame_t(self, i: int) -> float:
        return i * self.step_ms

    def _emitted_t(self) -> float:
        return self.times[-1] if self.times else -math.inf

    def _emit_one(self) -> None:
        t = self._frame_t(len(self.samples))
        p = self.narrative.pos_at(t)
        if self.jitter_m > 0.0:
            dx, dy = self.rng_frames.normal(0.0, self.jitter_m, 2)
            p = PlanePoint(p.x + dx, p.y + dy)
        valid = True
        if self.sim.dropout_rate > 0.0:
            valid = self.rng_frames.random() >= self.sim.dropout_rate
        self.samples.append(GazeSample(t=t, pos=p, valid=valid))
        self.times.append(t)

    def _emit_until(self, t: float) -> None:
        while self._frame_t(len(self.samples)) <= t:
            self._emit_one()

    def _find_entry(self, target: Target, start_t: float, horizon_t: float) -> float | None:
        """First valid in-disc frame in [start_t, horizon_t], emitting as needed."""
        horizon_t += _SEARCH_PAD_FRAMES * self.step_ms
        self._emit_until(horizon_t)
        i = bisect_left(self.times, start_t)
        while i < len(self.samples):
            s = self.samples[i]
            if s.t > horizon_t:
                return None
            if s.valid and target.contains(s.pos):
                return s.t
            i += 1
        return None

    def _find_exit(self, target: Target, after_t: float, horizon_t: float) -> float:
        """First frame after `after_t` that is not a valid in-disc sample."""
        horizon_t += _SEARCH_PAD_FRAMES * self.step_ms
        self._emit_until(horizon_t)
        i = bisect_right(self.times, after_t)
        while True:
            if i >= len(self.samples):
                self._emit_one()
            s = self.samples[i]
            if not (s.valid and target.contains(s.pos)):
                return s.t
            i += 1

    def _landing_for(self, intended: Target, rng: np.random.Generator, inj: Injection | None) -> PlanePoint:
        c = intended.center
        if inj is not None and inj.kind == "spatial_miss":
            # Radially outward from the ring center keeps the point nearer to
            # the intended target than to any other target's field.
            ring_r = math.hypot(c.x, c.y)
            miss_m = dmm_to_meters(inj.miss_dmm, self.block.ring.plane_distance_m)
            scale = (ring_r + intended.radius + miss_m) / ring_r
            return PlanePoint(c.x * scale, c.y * scale)
        if self.landing_m > 0.0:
            dx, dy = rng.normal(0.0, self.landing_m, 2)
            return PlanePoint(c.x + dx, c.y + dy)
        return c

    def run(self) -> tuple[SessionData, list[GroundTruthTrial]]:
        sim = self.sim
        ring = self.block.ring
        order = highlight_order(ring.n_targets)
        plane_d = ring.plane_distance_m
        center = PlanePoint(0.0, 0.0)

        meta: list[TrialMeta] = []
        measured_entries: list[float | None] = []
        prev_pinch = 0.0

        for k in range(ring.trials):
            r = k // ring.n_targets
            layout = self.layouts[r]
            intended = layout.target(order[k % ring.n_targets])
            onset = prev_pinch
            inj = self.injections.get(k)
            rng = self._trial_rng(k)

            landing = self._landing_for(intended, rng, inj)
            pinch_draw: float | None = None
            if inj is None:
                if sim.pinch_offset_sd_ms > 0.0:
                    pinch_draw = float(rng.normal(sim.pinch_offset_mean_ms, sim.pinch_offset_sd_ms))
                else:
                    pinch_draw = sim.pinch_offset_mean_ms

            latency = sim.saccade_latency_ms
            if inj is not None and inj.kind == "early":
                latency = max(latency, inj.offset_ms + _EARLY_PAD_MS)
            sacc_start = max(onset + latency, self.narrative.end_t, self._emitted_t())
            amp = visual_angle_deg(self.narrative.end_pos.distance_to(landing), plane_d)
            self.narrative.saccade(sacc_start, saccade_duration_ms(amp, sim), landing)
            arrival = self.narrative.end_t

            entry = self._find_entry(intended, onset, arrival)
            anchor = entry if entry is not None else arrival

            if inj is not None and inj.kind == "early":
                pinch_t = anchor - inj.offset_ms
            elif inj is not None and inj.kind == "late":
                depart = max(arrival + sim.saccade_latency_ms, self._emitted_t())
                amp_out = visual_angle_deg(landing.distance_to(center), plane_d)
                self.narrative.saccade(depart, saccade_duration_ms(amp_out, sim), center)
                exit_t = self._find_exit(intended, depart, self.narrative.end_t)
                pinch_t = exit_t + inj.offset_ms
            elif inj is not None and inj.kind == "spatial_miss":
                pinch_t = arrival + sim.saccade_latency_ms
            else:
                pinch_t = anchor + pinch_draw

            pinch_t = max(pinch_t, onset + 0.5 * self.step_ms)
            self._emit_until(pinch_t)
            meta.append(
                TrialMeta(round=r, trial=k % ring.n_targets, highlighted=intended.id, onset_t=onset, pinch_t=pinch_t)
            )
            measured_entries.append(entry)
            prev_pinch = pinch_t

        self._emit_until(prev_pinch + self.ccfg.window_ms + _TAIL_PAD_FRAMES * self.step_ms)

        manifest = SessionManifest(
            session_id=self.block.session_id,
            subject_id=self.block.subject_id,
            condition=self.block.condition,
            block_index=self.block.block_index,
            ring=ring,
            heuristics=self.block.heuristics,
            sim=asdict(sim),
            seed=sim.seed,
        )
        rows = annotate_stream(manifest, self.samples, meta)
        records = build_records(manifest, self.samples, rows, meta, self.ccfg)

        truths: list[GroundTruthTrial] = []
        for k, m in enumerate(meta):
            intended = self.layouts[m.round].target(m.highlighted)
            lo = bisect_left(self.times, m.onset_t)
            hi = bisect_right(self.times, m.pinch_t)
            contact = contact_times(self.samples[lo:hi], intended, m.pinch_t)
            entry = measured_entries[k]
            truths.append(
                GroundTruthTrial(
                    trial_index=k,
                    intended_target=m.highlighted,
                    gaze_entry_t=entry,
                    gaze_exit_t=contact.last_exit_before_pinch_t,
                    pinch_t=m.pinch_t,
                    true_offset_ms=None if entry is None else m.pinch_t - entry,
                )
            )

        return SessionData(manifest=manifest, frames=rows, selections=records), truths


def simulate_session(
    block: BlockConfig,
    sim: SimConfig,
    injections: dict[int, Injection] | None = None,
    classifier_cfg: ClassifierConfig = ClassifierConfig(),
) -> tuple[SessionData, list[GroundTruthTrial]]:
    """Generate one block of selections; deterministic for a fixed config."""
    return _SessionGen(block, sim, injections, classifier_cfg).run()


def simulate_trial(
    start: PlanePoint,
    target: Target,
    sim: SimConfig,
    rng: np.random.Generator | int,
    plane_distance_m: float = 1.3,
    window_ms: float = 350.0,
) -> tuple[list[GazeSample], PinchEvent, GroundTruthTrial]:
    """Generate a single trial's raw gaze stream, pinch, and ground truth.

    Stream order on `rng`: landing dx, dy (when landing sd > 0), pinch offset
    (when sd > 0), then per-frame jitter dx, dy and dropout in frame order.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(rng))))
    step_ms = 1000.0 / sim.frame_rate_hz
    jitter_m = dmm_to_meters(sim.fixation_jitter_sd_dmm, plane_distance_m)
    landing_m = dmm_to_meters(sim.landing_error_sd_dmm, plane_distance_m)

    c = target.center
    if landing_m > 0.0:
        dx, dy = rng.normal(0.0, landing_m, 2)
        landing = PlanePoint(c.x + dx, c.y + dy)
    else:
        landing = c
    if sim.pinch_offset_sd_ms > 0.0:
        pinch_draw = float(rng.normal(sim.pinch_offset_mean_ms, sim.pinch_offset_sd_ms))
    else:
        pinch_draw = sim.pinch_offset_mean_ms

    narrative = _Narrative(start)
    amp = visual_angle_deg(start.distance_to(landing), plane_distance_m)
    narrative.saccade(sim.saccade_latency_ms, saccade_duration_ms(amp, sim), landing)
    arrival = narrative.end_t

    samples: list[GazeSample] = []

    def emit_until(t: float) -> None:
        while len(samples) * step_ms <= t:
            ft = len(samples) * step_ms
            p = narrative.pos_at(ft)
            if jitter_m > 0.0:
                jx, jy = rng.normal(0.0, jitter_m, 2)
                p = PlanePoint(p.x + jx, p.y + jy)
            valid = True
            if sim.dropout_rate > 0.0:
                valid = rng.random() >= sim.dropout_rate
            samples.append(GazeSample(t=ft, pos=p, valid=valid))

    emit_until(arrival + _SEARCH_PAD_FRAMES * step_ms)
    entry = next((s.t for s in samples if s.valid and target.contains(s.pos)), None)
    anchor = entry if entry is not None else arrival
    pinch_t = max(anchor + pinch_draw, 0.5 * step_ms)
    emit_until(pinch_t + window_ms + _TAIL_PAD_FRAMES * step_ms)

    contact = contact_times(samples, target, pinch_t)
    truth = GroundTruthTrial(
        trial_index=0,
        intended_target=target.id,
        gaze_entry_t=contact.first_entry_t,
        gaze_exit_t=contact.last_exit_before_pinch_t,
        pinch_t=pinch_t,
        true_offset_ms=None if contact.first_entry_t is None else pinch_t - contact.first_entry_t,
    )
    return samples, PinchEvent(t=pinch_t), truth
