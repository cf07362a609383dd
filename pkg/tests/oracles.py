"""Independent oracles used by the tests.

Everything here deliberately avoids the package's navmesh/funnel code:
walkable regions come from shapely booleans, path lengths from Dijkstra
on a dense grid, wall inventories from 1D interval arithmetic on the raw
fixture polygons.
"""

from __future__ import annotations

import math

import numpy as np
from shapely.geometry import Point as ShPoint
from shapely.geometry import Polygon as ShPolygon
from shapely.ops import unary_union
from shapely.prepared import prep

CELL = 25.0

# 16-neighbourhood: axis, diagonal and knight moves keep the grid metric
# within ~1.3% of Euclidean on mostly axis-aligned layouts
OFFSETS = [
    (1, 0), (-1, 0), (0, 1), (0, -1),
    (1, 1), (1, -1), (-1, 1), (-1, -1),
    (1, 2), (1, -2), (-1, 2), (-1, -2),
    (2, 1), (2, -1), (-2, 1), (-2, -1),
]


def floor_region(spec, floor_id):
    """Shapely region: union of walkable polygons minus obstacles."""
    f = spec.floor(floor_id)
    walk = unary_union([ShPolygon(w.points) for w in f.walkable])
    if f.obstacles:
        walk = walk.difference(unary_union([ShPolygon(o.points) for o in f.obstacles]))
    return walk


class GridPathOracle:
    """Multi-floor 25 cm grid Dijkstra, ramps included as sloped surfaces."""

    def __init__(self, spec):
        self.spec = spec
        self.nodes: list[tuple] = []  # (surface_key, ix, iy)
        self.pos3: list[tuple[float, float, float]] = []
        self.index: dict[tuple, int] = {}
        self.cells: dict[tuple, dict[tuple, int]] = {}
        self.floor_z = {f.id: f.z_cm for f in spec.floors}

        for f in spec.floors:
            region = prep(floor_region(spec, f.id))
            xs = [p[0] for w in f.walkable for p in w.points]
            ys = [p[1] for w in f.walkable for p in w.points]
            x0, x1 = min(xs), max(xs)
            y0, y1 = min(ys), max(ys)
            cells = {}
            nx = int((x1 - x0) / CELL) + 1
            ny = int((y1 - y0) / CELL) + 1
            for ix in range(nx):
                cx = x0 + (ix + 0.5) * CELL
                for iy in range(ny):
                    cy = y0 + (iy + 0.5) * CELL
                    if region.contains(ShPoint(cx, cy)):
                        key = ("f", f.id)
                        node = (key, ix, iy)
                        self.index[node] = len(self.nodes)
                        self.nodes.append(node)
                        self.pos3.append((cx, cy, f.z_cm))
                        cells[(ix, iy)] = self.index[node]
            self.cells[("f", f.id)] = cells
            self._origin = getattr(self, "_origin", {})
            self._origin[("f", f.id)] = (x0, y0)

        # ramps: straight sloped strips keyed by staircase record order
        for si, s in enumerate(spec.staircases):
            sx = [p[0] for p in s.strip]
            sy = [p[1] for p in s.strip]
            x0, x1 = min(sx), max(sx)
            y0, y1 = min(sy), max(sy)
            knots = sorted((p[0], p[2]) for p in s.ramp)

            def z_at(x):
                if x <= knots[0][0]:
                    return knots[0][1]
                for (k0, z0), (k1, z1) in zip(knots, knots[1:]):
                    if x <= k1:
                        if k1 - k0 <= 0:
                            return z1
                        return z0 + (x - k0) / (k1 - k0) * (z1 - z0)
                return knots[-1][1]

            key = ("r", si)
            cells = {}
            nx = int((x1 - x0) / CELL) + 1
            ny = int((y1 - y0) / CELL) + 1
            for ix in range(nx):
                cx = x0 + (ix + 0.5) * CELL
                if cx > x1:
                    continue
                for iy in range(ny):
                    cy = y0 + (iy + 0.5) * CELL
                    if cy > y1:
                        continue
                    node = (key, ix, iy)
                    self.index[node] = len(self.nodes)
                    self.nodes.append(node)
                    self.pos3.append((cx, cy, z_at(cx)))
                    cells[(ix, iy)] = self.index[node]
            self.cells[key] = cells
            self._origin[key] = (x0, y0)

        self._build_graph()

    def _build_graph(self):
        from scipy.sparse import coo_matrix
        from scipy.sparse.csgraph import dijkstra

        self._dijkstra = dijkstra
        rows = []
        cols = []
        data = []
        n = len(self.nodes)

        def passable(cells, ix, iy, dx, dy):
            # diagonal and knight hops must not thread through wall corners
            if abs(dx) == 1 and abs(dy) == 1:
                return (ix + dx, iy) in cells and (ix, iy + dy) in cells
            if abs(dx) == 1 and abs(dy) == 2:
                my = iy + dy // 2
                return (ix, my) in cells and (ix + dx, my) in cells and (ix, iy + dy) in cells
            if abs(dx) == 2 and abs(dy) == 1:
                mx = ix + dx // 2
                return (mx, iy) in cells and (mx, iy + dy) in cells and (ix + dx, iy) in cells
            return True

        for key, cells in self.cells.items():
            for (ix, iy), i in cells.items():
                for dx, dy in OFFSETS:
                    j = cells.get((ix + dx, iy + dy))
                    if j is None or j <= i:
                        continue
                    if not passable(cells, ix, iy, dx, dy):
                        continue
                    d = _d3(self.pos3[i], self.pos3[j])
                    rows.append(i)
                    cols.append(j)
                    data.append(d)

        # stitch ramp cells to nearby floor cells at matching heights
        for key, cells in self.cells.items():
            if key[0] != "r":
                continue
            for (ix, iy), i in cells.items():
                x, y, z = self.pos3[i]
                for f in self.spec.floors:
                    if abs(self.floor_z[f.id] - z) > 60.0:
                        continue
                    fcells = self.cells.get(("f", f.id))
                    ox, oy = self._origin[("f", f.id)]
                    fx = int((x - ox) / CELL)
                    fy = int((y - oy) / CELL)
                    for dx in (-2, -1, 0, 1, 2):
                        for dy in (-2, -1, 0, 1, 2):
                            j = fcells.get((fx + dx, fy + dy))
                            if j is None:
                                continue
                            d = _d3(self.pos3[i], self.pos3[j])
                            if d <= 2.5 * CELL:
                                rows.append(min(i, j))
                                cols.append(max(i, j))
                                data.append(d)

        m = coo_matrix((data, (rows, cols)), shape=(n, n))
        self.graph = m + m.T

    def _los(self, key, i, j) -> bool:
        """Segment i-j stays within the surface's walkable cells (sampled)."""
        cells = self.cells[key]
        ox, oy = self._origin[key]
        ax, ay, _ = self.pos3[i]
        bx, by, _ = self.pos3[j]
        length = math.hypot(bx - ax, by - ay)
        steps = max(2, int(length / 5.0))
        for k in range(steps + 1):
            t = k / steps
            x = ax + (bx - ax) * t
            y = ay + (by - ay) * t
            if (int((x - ox) / CELL), int((y - oy) / CELL)) not in cells:
                return False
        return True

    def _smooth_length(self, nodes: list[int]) -> float:
        """String-pull each same-surface run of the grid path."""
        total = 0.0
        i = 0
        while i < len(nodes) - 1:
            key = self.nodes[nodes[i]][0]
            run_end = i
            while run_end + 1 < len(nodes) and self.nodes[nodes[run_end + 1]][0] == key:
                run_end += 1
            j = i
            while j < run_end:
                k = run_end
                while k > j + 1 and not self._los(key, nodes[j], nodes[k]):
                    k -= 1
                total += _d3(self.pos3[nodes[j]], self.pos3[nodes[k]])
                j = k
            if run_end + 1 < len(nodes):
                total += _d3(self.pos3[nodes[run_end]], self.pos3[nodes[run_end + 1]])
            i = run_end + 1
        return total

    def snap(self, floor_id, p) -> int:
        cells = self.cells[("f", floor_id)]
        ox, oy = self._origin[("f", floor_id)]
        ix = int((p[0] - ox) / CELL)
        iy = int((p[1] - oy) / CELL)
        best = None
        best_d = math.inf
        for r in range(0, 6):
            for dx in range(-r, r + 1):
                for dy in range(-r, r + 1):
                    if max(abs(dx), abs(dy)) != r:
                        continue
                    j = cells.get((ix + dx, iy + dy))
                    if j is None:
                        continue
                    d = _d3(self.pos3[j], (p[0], p[1], self.floor_z[floor_id]))
                    if d < best_d:
                        best_d = d
                        best = j
            if best is not None and r >= 1:
                break
        if best is None:
            raise ValueError(f"no grid cell near {p} on floor {floor_id}")
        return best

    def distances_from(self, floor_id, p):
        src = self.snap(floor_id, p)
        dist, pred = self._dijkstra(self.graph, indices=src, return_predecessors=True)
        return dist, pred

    def path_length(self, a_floor, a_pt, b_floor, b_pt) -> float:
        """Smoothed grid-path length (line-of-sight shortcut per surface)."""
        dist, pred = self.distances_from(a_floor, a_pt)
        goal = self.snap(b_floor, b_pt)
        if not math.isfinite(dist[goal]):
            return math.inf
        chain = [goal]
        while pred[chain[-1]] >= 0:
            chain.append(int(pred[chain[-1]]))
        chain.reverse()
        return self._smooth_length(chain)

    def raw_path_length(self, a_floor, a_pt, b_floor, b_pt) -> float:
        dist, _ = self.distances_from(a_floor, a_pt)
        return float(dist[self.snap(b_floor, b_pt)])


def _d3(a, b):
    return math.sqrt((b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2 + (b[2] - a[2]) ** 2)


def axis_wall_pieces(spec, floor_id) -> int:
    """Independent wall-segment count for axis-aligned fixtures.

    Groups edges by carrier line and subtracts shared intervals with 1D
    arithmetic; obstacle edges count whole.
    """
    f = spec.floor(floor_id)
    edges = []  # (axis, coord, lo, hi, poly_idx)
    polys = [w.points for w in f.walkable]
    for pi, points in enumerate(polys):
        n = len(points)
        for i in range(n):
            (x0, y0), (x1, y1) = points[i], points[(i + 1) % n]
            if abs(x0 - x1) < 1e-9:
                edges.append(("v", x0, min(y0, y1), max(y0, y1), pi))
            elif abs(y0 - y1) < 1e-9:
                edges.append(("h", y0, min(x0, x1), max(x0, x1), pi))
            else:
                raise AssertionError("fixture expected to be axis-aligned")

    count = 0
    for axis, coord, lo, hi, pi in edges:
        intervals = [(lo, hi)]
        for axis2, coord2, lo2, hi2, pj in edges:
            if pj == pi or axis2 != axis or abs(coord2 - coord) > 1e-6:
                continue
            nxt = []
            for a, b in intervals:
                s, e = max(a, lo2), min(b, hi2)
                if e - s <= 1e-6:
                    nxt.append((a, b))
                    continue
                if s - a > 1e-6:
                    nxt.append((a, s))
                if b - e > 1e-6:
                    nxt.append((e, b))
            intervals = nxt
        # stair strips carve openings out of landing edges
        for s in spec.staircases:
            if floor_id not in (s.lower_floor, s.upper_floor):
                continue
            pts = s.strip
            m = len(pts)
            for i in range(m):
                (x0, y0), (x1, y1) = pts[i], pts[(i + 1) % m]
                if axis == "v" and abs(x0 - x1) < 1e-9 and abs(x0 - coord) < 1e-6:
                    lo2, hi2 = min(y0, y1), max(y0, y1)
                elif axis == "h" and abs(y0 - y1) < 1e-9 and abs(y0 - coord) < 1e-6:
                    lo2, hi2 = min(x0, x1), max(x0, x1)
                else:
                    continue
                nxt = []
                for a, b in intervals:
                    s2, e2 = max(a, lo2), min(b, hi2)
                    if e2 - s2 <= 1e-6:
                        nxt.append((a, b))
                        continue
                    if s2 - a > 1e-6:
                        nxt.append((a, s2))
                    if b - e2 > 1e-6:
                        nxt.append((e2, b))
                intervals = nxt
        count += len(intervals)

    for o in f.obstacles:
        poly = ShPolygon(o.points)
        if any(ShPolygon(w.points).contains(poly.centroid) for w in f.walkable):
            count += len(o.points)
    return count
