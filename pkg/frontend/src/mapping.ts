// Screen <-> plane mapping. The ring is drawn at a fixed fraction of the
// canvas, so the scale follows the window while logged coordinates stay in
// plane meters. Plane +y is up, screen +y is down.

export interface Mapping {
  cx: number; // canvas center, px
  cy: number;
  pxPerMeter: number;
}

export const RING_CANVAS_FRACTION = 0.36;

export function makeMapping(width: number, height: number, ringRadiusM: number): Mapping {
  const ringPx = RING_CANVAS_FRACTION * Math.min(width, height);
  return { cx: width / 2, cy: height / 2, pxPerMeter: ringPx / ringRadiusM };
}

export function screenToPlane(m: Mapping, px: number, py: number): { x: number; y: number } {
  return { x: (px - m.cx) / m.pxPerMeter, y: (m.cy - py) / m.pxPerMeter };
}

export function planeToScreen(m: Mapping, x: number, y: number): { px: number; py: number } {
  return { px: m.cx + x * m.pxPerMeter, py: m.cy - y * m.pxPerMeter };
}

export function metersToPx(m: Mapping, meters: number): number {
  return meters * m.pxPerMeter;
}

/** dmm scale linearly with viewing distance: 1 dmm is 1 mm at 1 m. */
export function dmmToMeters(dmm: number, planeDistanceM: number): number {
  return (dmm / 1000) * planeDistanceM;
}
