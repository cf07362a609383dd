// Replay document model: validation, the time color ramp and scrubbing.
// Rendering is a pure function of (document, scrub time).

export interface TrajectoryPoint {
  t_ms: number;
  x: number;
  y: number;
  z: number;
}

export interface ReplayDocument {
  participant_id: string;
  fixture_hash: string;
  fixture_name: string;
  floors: Array<{ id: number; z_cm: number }>;
  walls: Record<string, Array<[number, number, number, number]>>;
  trajectory: TrajectoryPoint[];
  gaze: TrajectoryPoint[];
  events: Array<{ t_ms: number; event: string; detail: string }>;
}

export function parseReplayDocument(raw: unknown): ReplayDocument {
  const doc = raw as ReplayDocument;
  if (!Array.isArray(doc.trajectory) || doc.trajectory.length === 0) {
    throw new Error("replay document has no trajectory");
  }
  if (!Array.isArray(doc.floors) || doc.floors.length === 0) {
    throw new Error("replay document has no floors");
  }
  let prev = -Infinity;
  for (const p of doc.trajectory) {
    if (typeof p.t_ms !== "number" || p.t_ms <= prev) {
      throw new Error(`non-monotone trajectory timestamp at t=${p.t_ms}`);
    }
    prev = p.t_ms;
  }
  if (!Array.isArray(doc.events)) throw new Error("replay document has no events");
  return doc;
}

// blue (start) -> green -> yellow -> red (end), via linear hue 240 -> 0
export function timeColor(tMs: number, t0Ms: number, t1Ms: number): string {
  const f = t1Ms > t0Ms ? Math.min(1, Math.max(0, (tMs - t0Ms) / (t1Ms - t0Ms))) : 0;
  const hue = 240 * (1 - f);
  return `hsl(${hue.toFixed(1)}, 90%, 50%)`;
}

export function floorOfPoint(doc: ReplayDocument, p: TrajectoryPoint, eyeCm: number): number {
  const support = p.z - eyeCm;
  let best = doc.floors[0];
  for (const f of doc.floors) {
    if (Math.abs(f.z_cm - support) < Math.abs(best.z_cm - support)) best = f;
  }
  return best.id;
}

// participant eye height: first sample is on the first floor visited,
// whose elevation is the closest floor below it
export function inferEyeHeight(doc: ReplayDocument): number {
  const z0 = doc.trajectory[0].z;
  const below = doc.floors
    .map((f) => f.z_cm)
    .filter((z) => z <= z0)
    .sort((a, b) => b - a);
  return z0 - (below.length ? below[0] : 0);
}

export interface TrajectoryVertex {
  x: number;
  y: number;
  t_ms: number;
  floor: number;
  color: string;
}

// every log row becomes exactly one rendered vertex, tagged by floor
export function trajectoryVertices(doc: ReplayDocument): TrajectoryVertex[] {
  const eye = inferEyeHeight(doc);
  const t0 = doc.trajectory[0].t_ms;
  const t1 = doc.trajectory[doc.trajectory.length - 1].t_ms;
  return doc.trajectory.map((p) => ({
    x: p.x,
    y: p.y,
    t_ms: p.t_ms,
    floor: floorOfPoint(doc, p, eye),
    color: timeColor(p.t_ms, t0, t1),
  }));
}

export function eventsAt(doc: ReplayDocument, tMs: number, windowMs = 500): string[] {
  return doc.events
    .filter((e) => Math.abs(e.t_ms - tMs) <= windowMs)
    .map((e) => e.event);
}

export interface ScrubState {
  tMs: number;
  floor: number; // floor selector
}

export function clampScrub(doc: ReplayDocument, tMs: number): number {
  const t0 = doc.trajectory[0].t_ms;
  const t1 = doc.trajectory[doc.trajectory.length - 1].t_ms;
  return Math.min(t1, Math.max(t0, tMs));
}
