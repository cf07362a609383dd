// Column raycaster over 2D wall segments: the egocentric corridor view.
// Geometry is separated from canvas work so tests can assert on columns.

import { Segment, Decal } from "./walls.js";

export const FOV_DEG = 70;
export const WALL_HEIGHT_CM = 400;
export const MAX_VIEW_CM = 6000;
export const LABEL_RANGE_CM = 1500;

export interface Column {
  dist: number; // perpendicular (fisheye-corrected) distance, cm
  shade: number; // 0..1, near -> bright
}

export interface LabelHit {
  column: number;
  dist: number;
  label: string;
  kind: string;
}

function raySegment(
  ox: number,
  oy: number,
  dx: number,
  dy: number,
  s: Segment,
): number | null {
  const ex = s.x2 - s.x1;
  const ey = s.y2 - s.y1;
  const den = dx * ey - dy * ex;
  if (Math.abs(den) < 1e-12) return null;
  const t = ((s.x1 - ox) * ey - (s.y1 - oy) * ex) / den;
  if (t <= 1e-9) return null;
  const u = ((s.x1 - ox) * dy - (s.y1 - oy) * dx) / den;
  if (u < 0 || u > 1) return null;
  return t;
}

export function castColumns(
  walls: Segment[],
  x: number,
  y: number,
  yawDeg: number,
  width: number,
): Column[] {
  const out: Column[] = new Array(width);
  const yaw = (yawDeg * Math.PI) / 180;
  const half = ((FOV_DEG / 2) * Math.PI) / 180;
  const focal = width / 2 / Math.tan(half);
  for (let c = 0; c < width; c++) {
    const offset = Math.atan((c - width / 2) / focal);
    const a = yaw + offset;
    const dx = Math.cos(a);
    const dy = Math.sin(a);
    let best = Infinity;
    for (const s of walls) {
      const t = raySegment(x, y, dx, dy, s);
      if (t !== null && t < best) best = t;
    }
    const corrected = best * Math.cos(offset); // fisheye correction
    const dist = Math.min(corrected, MAX_VIEW_CM);
    out[c] = { dist, shade: Math.max(0, 1 - dist / MAX_VIEW_CM) };
  }
  return out;
}

// project decals into view: returns screen column + distance for labels
// within range and inside the frustum, depth-tested against the walls
export function projectLabels(
  decals: Decal[],
  columns: Column[],
  x: number,
  y: number,
  yawDeg: number,
  width: number,
): LabelHit[] {
  const yaw = (yawDeg * Math.PI) / 180;
  const half = ((FOV_DEG / 2) * Math.PI) / 180;
  const focal = width / 2 / Math.tan(half);
  const hits: LabelHit[] = [];
  for (const d of decals) {
    const rx = d.x - x;
    const ry = d.y - y;
    const dist = Math.hypot(rx, ry);
    if (dist > LABEL_RANGE_CM || dist < 1) continue;
    let ang = Math.atan2(ry, rx) - yaw;
    while (ang > Math.PI) ang -= 2 * Math.PI;
    while (ang < -Math.PI) ang += 2 * Math.PI;
    if (Math.abs(ang) > half) continue;
    const column = Math.round(width / 2 + Math.tan(ang) * focal);
    if (column < 0 || column >= width) continue;
    if (columns[column].dist + 30 < dist) continue; // occluded by a wall
    hits.push({ column, dist, label: d.label, kind: d.kind });
  }
  return hits;
}

export function columnHeightPx(dist: number, width: number, height: number): number {
  const half = ((FOV_DEG / 2) * Math.PI) / 180;
  const focal = width / 2 / Math.tan(half);
  if (!isFinite(dist) || dist <= 0) return height;
  return Math.min(height, (WALL_HEIGHT_CM * focal) / dist);
}
