// Wire protocol types for the gazekit live task service (see docs/protocol.md).
// One JSON object per WebSocket text frame. The UI is display-only: hover,
// selection, and classification all come from the server.

export type Condition = "none" | "sticky" | "magnetic" | "sticky_magnetic";

export const CONDITIONS: Condition[] = ["none", "sticky", "magnetic", "sticky_magnetic"];

export interface Manifest {
  schema_version: number;
  session_id: string;
  subject_id: string;
  condition: Condition;
  block_index: number;
  layout: {
    n_targets: number;
    inter_target_m: number;
    plane_distance_m: number;
    size_schedule_deg: number[];
  };
  heuristics: {
    sticky_enabled: boolean;
    sticky_hold_ms: number;
    magnetic_enabled: boolean;
    magnetic_margin_dmm: number;
  };
}

export interface DerivedGeometry {
  ring_radius_m: number;
  target_centers_m: [number, number][];
  target_radius_m_by_round: number[];
  rounds: number;
  trials_per_round: number;
  highlight_order: number[];
}

export type ServerMessage =
  | { type: "config"; manifest: Manifest; derived: DerivedGeometry }
  | { type: "highlight"; target: number; round: number; trial: number }
  | { type: "hover"; raw: number | null; effective: number | null; snapped: boolean; stuck: boolean }
  | { type: "outcome"; selected: number | null; correct: boolean }
  | { type: "classified"; round: number; trial: number; effective: string; raw: string; corrected: boolean }
  | { type: "done"; session_path: string }
  | { type: "error"; msg: string };

export type ClientMessage =
  | { type: "hello"; subject_id: string; condition: Condition }
  | { type: "frame"; t_ms: number; x_m: number; y_m: number; valid: boolean }
  | { type: "pinch"; t_ms: number }
  | { type: "end" };

const SERVER_TYPES = new Set(["config", "highlight", "hover", "outcome", "classified", "done", "error"]);

/** Parse one incoming frame; returns null for anything malformed. */
export function parseServerMessage(data: string): ServerMessage | null {
  let obj: unknown;
  try {
    obj = JSON.parse(data);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const type = (obj as { type?: unknown }).type;
  if (typeof type !== "string" || !SERVER_TYPES.has(type)) return null;
  return obj as ServerMessage;
}

export function frameMessage(t_ms: number, x_m: number, y_m: number, valid = true): ClientMessage {
  return { type: "frame", t_ms, x_m, y_m, valid };
}

export function pinchMessage(t_ms: number): ClientMessage {
  return { type: "pinch", t_ms };
}

export function helloMessage(subject_id: string, condition: Condition): ClientMessage {
  return { type: "hello", subject_id, condition };
}
