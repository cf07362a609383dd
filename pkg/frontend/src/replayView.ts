// Top-down replay rendering: per-floor plan with the time-colored
// trajectory, gaze dots and the avatar position at the scrub time.
// Drawing goes through a small surface interface so tests can count
// primitives without a DOM canvas.

import {
  ReplayDocument,
  TrajectoryVertex,
  inferEyeHeight,
  floorOfPoint,
  timeColor,
  trajectoryVertices,
} from "./replay.js";

export interface DrawSurface {
  width: number;
  height: number;
  line(x1: number, y1: number, x2: number, y2: number, color: string, w: number): void;
  dot(x: number, y: number, r: number, color: string): void;
  text(x: number, y: number, s: string, color: string): void;
}

export interface PlanTransform {
  sx: (x: number) => number;
  sy: (y: number) => number;
}

export function planTransform(
  doc: ReplayDocument,
  floor: number,
  surface: { width: number; height: number },
  margin = 20,
): PlanTransform {
  const walls = doc.walls[String(floor)] ?? [];
  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;
  for (const [x1, y1, x2, y2] of walls) {
    minX = Math.min(minX, x1, x2);
    maxX = Math.max(maxX, x1, x2);
    minY = Math.min(minY, y1, y2);
    maxY = Math.max(maxY, y1, y2);
  }
  if (!isFinite(minX)) {
    minX = 0;
    minY = 0;
    maxX = 1;
    maxY = 1;
  }
  const scale = Math.min(
    (surface.width - 2 * margin) / (maxX - minX || 1),
    (surface.height - 2 * margin) / (maxY - minY || 1),
  );
  return {
    sx: (x) => margin + (x - minX) * scale,
    // plan view keeps y pointing up
    sy: (y) => surface.height - margin - (y - minY) * scale,
  };
}

export interface RenderStats {
  wallSegments: number;
  trajectoryVertices: number; // across all floors (equals source rows)
  drawnVertices: number; // on the selected floor
  gazeDots: number;
}

export function renderReplay(
  doc: ReplayDocument,
  surface: DrawSurface,
  floor: number,
  scrubTMs: number,
): RenderStats {
  const tr = planTransform(doc, floor, surface);
  const walls = doc.walls[String(floor)] ?? [];
  for (const [x1, y1, x2, y2] of walls) {
    surface.line(tr.sx(x1), tr.sy(y1), tr.sx(x2), tr.sy(y2), "#888", 1);
  }

  const vertices: TrajectoryVertex[] = trajectoryVertices(doc);
  let drawn = 0;
  let prev: TrajectoryVertex | null = null;
  for (const v of vertices) {
    if (v.t_ms > scrubTMs) break;
    if (v.floor === floor) {
      if (prev && prev.floor === floor && v.t_ms - prev.t_ms <= 200) {
        surface.line(tr.sx(prev.x), tr.sy(prev.y), tr.sx(v.x), tr.sy(v.y), v.color, 2);
      }
      surface.dot(tr.sx(v.x), tr.sy(v.y), 1.2, v.color);
      drawn += 1;
    }
    prev = v;
  }

  const eye = inferEyeHeight(doc);
  let gazeDots = 0;
  const t0 = doc.trajectory[0].t_ms;
  const t1 = doc.trajectory[doc.trajectory.length - 1].t_ms;
  for (const g of doc.gaze) {
    if (g.t_ms > scrubTMs) break;
    if (floorOfPoint(doc, { ...g, z: g.z + eye }, eye) !== floor) continue;
    surface.dot(tr.sx(g.x), tr.sy(g.y), 0.8, timeColor(g.t_ms, t0, t1));
    gazeDots += 1;
  }

  const current = [...vertices].reverse().find((v) => v.t_ms <= scrubTMs);
  if (current && current.floor === floor) {
    surface.dot(tr.sx(current.x), tr.sy(current.y), 5, "#fff");
  }

  return {
    wallSegments: walls.length,
    trajectoryVertices: vertices.length,
    drawnVertices: drawn,
    gazeDots,
  };
}
