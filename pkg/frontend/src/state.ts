// Harness view state: a reducer over server messages plus the local cursor.
// Nothing here computes hover or outcomes; it only mirrors what the service
// said, so disabling rendering cannot change any logged value.

import type { DerivedGeometry, Manifest, ServerMessage } from "./protocol.js";

export interface Tallies {
  selections: number;
  correct: number;
  errors: number;
  late: number;
  early: number;
  other: number;
  corrected: number;
  classified: number;
}

export interface Flash {
  target: number;
  correct: boolean;
  untilMs: number; // local clock deadline; visual only, never delays a trial
}

export type Phase = "idle" | "connecting" | "running" | "done" | "aborted" | "error";

export interface HarnessState {
  phase: Phase;
  statusText: string;
  manifest: Manifest | null;
  derived: DerivedGeometry | null;
  highlight: { target: number; round: number; trial: number } | null;
  hover: { raw: number | null; effective: number | null; snapped: boolean; stuck: boolean };
  tallies: Tallies;
  flash: Flash | null;
  sessionPath: string | null;
  showField: boolean; // render the magnetic field boundary (default off)
}

export const FLASH_MS = 150;

export function initialState(): HarnessState {
  return {
    phase: "idle",
    statusText: "not connected",
    manifest: null,
    derived: null,
    highlight: null,
    hover: { raw: null, effective: null, snapped: false, stuck: false },
    tallies: { selections: 0, correct: 0, errors: 0, late: 0, early: 0, other: 0, corrected: 0, classified: 0 },
    flash: null,
    sessionPath: null,
    showField: false,
  };
}

export function reduce(state: HarnessState, msg: ServerMessage, nowMs: number): HarnessState {
  switch (msg.type) {
    case "config":
      return {
        ...state,
        phase: "running",
        statusText: `session ${msg.manifest.session_id}`,
        manifest: msg.manifest,
        derived: msg.derived,
      };
    case "highlight":
      return { ...state, highlight: { target: msg.target, round: msg.round, trial: msg.trial } };
    case "hover":
      return { ...state, hover: { raw: msg.raw, effective: msg.effective, snapped: msg.snapped, stuck: msg.stuck } };
    case "outcome": {
      const t = state.tallies;
      const flashTarget = state.highlight ? state.highlight.target : -1;
      return {
        ...state,
        tallies: {
          ...t,
          selections: t.selections + 1,
          correct: t.correct + (msg.correct ? 1 : 0),
          errors: t.errors + (msg.correct ? 0 : 1),
        },
        flash: { target: flashTarget, correct: msg.correct, untilMs: nowMs + FLASH_MS },
      };
    }
    case "classified": {
      const t = state.tallies;
      return {
        ...state,
        tallies: {
          ...t,
          classified: t.classified + 1,
          late: t.late + (msg.effective === "late_trigger" ? 1 : 0),
          early: t.early + (msg.effective === "early_trigger" ? 1 : 0),
          other: t.other + (msg.effective === "other_error" ? 1 : 0),
          corrected: t.corrected + (msg.corrected ? 1 : 0),
        },
      };
    }
    case "done":
      return { ...state, phase: "done", statusText: `saved ${msg.session_path}`, sessionPath: msg.session_path };
    case "error":
      return { ...state, phase: "error", statusText: `server error: ${msg.msg}` };
  }
}

export function markAborted(state: HarnessState, why: string): HarnessState {
  if (state.phase === "done" || state.phase === "error") return state;
  return { ...state, phase: "aborted", statusText: why };
}

export function expireFlash(state: HarnessState, nowMs: number): HarnessState {
  if (state.flash && nowMs >= state.flash.untilMs) {
    return { ...state, flash: null };
  }
  return state;
}

/** Target radius (m) for the round currently in play. */
export function currentTargetRadiusM(state: HarnessState): number {
  if (!state.derived) return 0;
  const round = state.highlight ? state.highlight.round : 0;
  const radii = state.derived.target_radius_m_by_round;
  return radii[Math.min(round, radii.length - 1)];
}
