/** Pure studio-state helpers shared by the UI shell and the tests. */

export type ViewMode = "refocused" | "disparity" | "input";
export type MaskMode = "hard" | "smooth";

export interface StudioState {
  sessionId: string | null;
  width: number;
  height: number;
  focus: number;
  aperture: number;
  mode: MaskMode;
  view: ViewMode;
  sweepCount: number;
  pending: boolean;
}

export function initialState(): StudioState {
  return {
    sessionId: null,
    width: 0,
    height: 0,
    focus: 0,
    aperture: 0.25,
    mode: "hard",
    view: "refocused",
    sweepCount: 10,
    pending: false,
  };
}

/** Frame picked when scrubbing a cached n-frame sweep: round-half-up of
 * position*(n-1), clamped so positions outside [0,1] stick to the ends. */
export function sweepIndex(position: number, frameCount: number): number {
  if (frameCount < 1) throw new Error("sweep is empty");
  const p = Math.min(1, Math.max(0, position));
  return Math.min(frameCount - 1, Math.floor(p * (frameCount - 1) + 0.5));
}

export function inBounds(x: number, y: number, width: number, height: number): boolean {
  return Number.isFinite(x) && Number.isFinite(y) && x >= 0 && y >= 0 && x < width && y < height;
}

export function clamp(value: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, value));
}
