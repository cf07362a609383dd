// Per-floor wall segments and label decals derived from a building
// document (see docs/building-schema.md). Mirrors the server's notion of
// walls: walkable polygon edges minus shared stretches (openings), minus
// stair-strip contacts, plus obstacle outlines inside walkable space.

export interface Segment {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface Decal {
  x: number;
  y: number;
  label: string;
  kind: string; // room_number | exit_sign | ... | room_door
}

export interface FloorGeometry {
  id: number;
  z: number;
  walls: Segment[];
  decals: Decal[];
}

type Pt = [number, number];

interface BuildingDoc {
  name: string;
  floors: Array<{
    id: number;
    z_cm: number;
    walkable: Array<{ id: string; kind: string; points: Pt[] }>;
    obstacles: Array<{ id: string; kind: string; points: Pt[] }>;
    rooms: Array<{ label: string; door: Pt }>;
    signs: Array<{ kind: string; position: number[]; target?: string | null }>;
  }>;
  staircases: Array<{ lower_floor: number; upper_floor: number; strip: Pt[] }>;
  exits: Array<{ label: string; floor: number; position: Pt }>;
}

const EPS = 1e-6;

function edges(points: Pt[]): Array<[Pt, Pt]> {
  return points.map((p, i) => [p, points[(i + 1) % points.length]]);
}

// shared stretch of two collinear segments, or null
function collinearOverlap(a0: Pt, a1: Pt, b0: Pt, b1: Pt): [number, number] | null {
  const ux = a1[0] - a0[0];
  const uy = a1[1] - a0[1];
  const len = Math.hypot(ux, uy);
  if (len < EPS) return null;
  const nx = ux / len;
  const ny = uy / len;
  for (const p of [b0, b1]) {
    const off = Math.abs((p[0] - a0[0]) * ny - (p[1] - a0[1]) * nx);
    if (off > EPS) return null;
  }
  const s0 = (b0[0] - a0[0]) * nx + (b0[1] - a0[1]) * ny;
  const s1 = (b1[0] - a0[0]) * nx + (b1[1] - a0[1]) * ny;
  const lo = Math.max(0, Math.min(s0, s1));
  const hi = Math.min(len, Math.max(s0, s1));
  if (hi - lo <= EPS) return null;
  return [lo, hi];
}

function subtract(pieces: Array<[number, number]>, cut: [number, number]) {
  const out: Array<[number, number]> = [];
  for (const [a, b] of pieces) {
    const lo = Math.max(a, cut[0]);
    const hi = Math.min(b, cut[1]);
    if (hi - lo <= EPS) {
      out.push([a, b]);
      continue;
    }
    if (lo - a > EPS) out.push([a, lo]);
    if (b - hi > EPS) out.push([hi, b]);
  }
  return out;
}

function centroidInside(points: Pt[], ring: Pt[]): boolean {
  const cx = points.reduce((s, p) => s + p[0], 0) / points.length;
  const cy = points.reduce((s, p) => s + p[1], 0) / points.length;
  let inside = false;
  for (let i = 0; i < ring.length; i++) {
    const [x0, y0] = ring[i];
    const [x1, y1] = ring[(i + 1) % ring.length];
    if (y0 > cy !== y1 > cy) {
      const t = (cy - y0) / (y1 - y0);
      if (cx < x0 + t * (x1 - x0)) inside = !inside;
    }
  }
  return inside;
}

export function floorGeometry(doc: unknown, floorId: number): FloorGeometry {
  const b = doc as BuildingDoc;
  const floor = b.floors.find((f) => f.id === floorId);
  if (!floor) throw new Error(`unknown floor ${floorId}`);

  const openings: Array<[Pt, Pt]> = [];
  for (const s of b.staircases) {
    if (s.lower_floor === floorId || s.upper_floor === floorId) {
      openings.push(...edges(s.strip));
    }
  }

  const walls: Segment[] = [];
  for (const poly of floor.walkable) {
    for (const [a0, a1] of edges(poly.points)) {
      const len = Math.hypot(a1[0] - a0[0], a1[1] - a0[1]);
      let pieces: Array<[number, number]> = [[0, len]];
      for (const other of floor.walkable) {
        if (other.id === poly.id) continue;
        for (const [b0, b1] of edges(other.points)) {
          const ov = collinearOverlap(a0, a1, b0, b1);
          if (ov) pieces = subtract(pieces, ov);
        }
      }
      for (const [b0, b1] of openings) {
        const ov = collinearOverlap(a0, a1, b0, b1);
        if (ov) pieces = subtract(pieces, ov);
      }
      const nx = (a1[0] - a0[0]) / len;
      const ny = (a1[1] - a0[1]) / len;
      for (const [lo, hi] of pieces) {
        walls.push({
          x1: a0[0] + nx * lo,
          y1: a0[1] + ny * lo,
          x2: a0[0] + nx * hi,
          y2: a0[1] + ny * hi,
        });
      }
    }
  }

  for (const obs of floor.obstacles) {
    const carves = floor.walkable.some((w) => centroidInside(obs.points, w.points));
    if (!carves) continue;
    for (const [a0, a1] of edges(obs.points)) {
      walls.push({ x1: a0[0], y1: a0[1], x2: a1[0], y2: a1[1] });
    }
  }

  const decals: Decal[] = [];
  for (const room of floor.rooms) {
    decals.push({ x: room.door[0], y: room.door[1], label: room.label, kind: "room_door" });
  }
  for (const sign of floor.signs) {
    decals.push({
      x: sign.position[0],
      y: sign.position[1],
      label: sign.target ? `${sign.kind}:${sign.target}` : sign.kind,
      kind: sign.kind,
    });
  }
  for (const exit of b.exits) {
    if (exit.floor === floorId) {
      decals.push({
        x: exit.position[0],
        y: exit.position[1],
        label: `EXIT ${exit.label}`,
        kind: "exit_door",
      });
    }
  }

  return { id: floor.id, z: floor.z_cm, walls, decals };
}

export function allFloors(doc: unknown): FloorGeometry[] {
  const b = doc as BuildingDoc;
  return b.floors.map((f) => floorGeometry(doc, f.id));
}

export function floorForZ(doc: unknown, z: number, eyeHeight: number): number {
  const b = doc as BuildingDoc;
  const support = z - eyeHeight;
  let best = b.floors[0];
  for (const f of b.floors) {
    if (Math.abs(f.z_cm - support) < Math.abs(best.z_cm - support)) best = f;
  }
  return best.id;
}
