"""Walkable navigation mesh: triangulation, containment, projection, paths.

The mesh is a per-floor triangle soup with portal adjacency (full shared
edges inside a polygon, collinear partial overlaps between neighbouring
polygons) plus stair links that connect floors along 3D ramp polylines.
Rectangular walkable polygons are tiled before triangulation so the
portal graph tracks true path lengths closely; arbitrary simple polygons
(with obstacle holes) go through ear clipping.

A NavMesh is immutable after build; all queries are pure.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .building import BuildingSpec, Staircase, WalkablePoly
from .geometry import (
    Point,
    closest_point_on_segment,
    collinear_overlap,
    cross2,
    dist,
    point_in_triangle,
    polygon_area,
    polyline_length,
    segment_distance,
)

CONTAIN_EPS_CM = 1e-6
PROJECT_EPS_CM = 1e-3
ENDPOINT_SNAP_CM = 25.0  # path endpoints may be at most this far off the mesh
TILE_CM = 600.0
GRID_CELL_CM = 500.0


class NavmeshError(ValueError):
    pass


class Unreachable(NavmeshError):
    pass


Tri = tuple[Point, Point, Point]


@dataclass(frozen=True)
class Portal:
    tri_a: int
    tri_b: int
    seg: tuple[Point, Point]
    mid: Point


@dataclass(frozen=True)
class StairLink:
    label: str
    lower_floor: int
    upper_floor: int
    lower_node: Point
    upper_node: Point
    ramp: tuple[tuple[float, float, float], ...]
    length_cm: float
    lower_tri: int
    upper_tri: int


@dataclass(frozen=True)
class RampRegion:
    """Plan-rectangle stair run with a height field along the x axis."""

    label: str
    lower_floor: int
    upper_floor: int
    x0: float
    y0: float
    x1: float
    y1: float
    knots: tuple[tuple[float, float], ...]  # (x, z) along the run

    def contains_plan(self, p: Point) -> bool:
        return self.x0 <= p[0] <= self.x1 and self.y0 <= p[1] <= self.y1

    def z_at(self, x: float) -> float:
        ks = self.knots
        if x <= ks[0][0]:
            return ks[0][1]
        for (x0, z0), (x1, z1) in zip(ks, ks[1:]):
            if x <= x1:
                if x1 - x0 <= 0:
                    return z1
                t = (x - x0) / (x1 - x0)
                return z0 + t * (z1 - z0)
        return ks[-1][1]

    @property
    def low_floor_at_min_x(self) -> bool:
        return self.knots[0][1] <= self.knots[-1][1]


class FloorMesh:
    def __init__(self, floor_id: int, z_cm: float):
        self.floor_id = floor_id
        self.z_cm = z_cm
        self.triangles: list[Tri] = []
        self.neighbors: list[list[tuple[int, tuple[Point, Point]]]] = []
        self.grid: dict[tuple[int, int], list[int]] = {}
        # per-triangle edge lengths, so hot containment tests skip sqrts
        self.edge_lens: list[tuple[float, float, float]] = []
        # triangle edges without an exact twin; used for wall-slide tangents
        self.boundary_edges: list[tuple[Point, Point]] = []
        # convex-region id per triangle: straight segments between any two
        # points of one group are walkable, which path search exploits
        self.group_of: list[int] = []

    def add_triangle(self, tri: Tri) -> int:
        idx = len(self.triangles)
        self.triangles.append(tri)
        self.neighbors.append([])
        a, b, c = tri
        self.edge_lens.append((dist(a, b) or 1.0, dist(b, c) or 1.0, dist(c, a) or 1.0))
        return idx

    def build_grid(self):
        self.grid.clear()
        for i, (a, b, c) in enumerate(self.triangles):
            xs = (a[0], b[0], c[0])
            ys = (a[1], b[1], c[1])
            gx0 = int(min(xs) // GRID_CELL_CM)
            gx1 = int(max(xs) // GRID_CELL_CM)
            gy0 = int(min(ys) // GRID_CELL_CM)
            gy1 = int(max(ys) // GRID_CELL_CM)
            for gx in range(gx0, gx1 + 1):
                for gy in range(gy0, gy1 + 1):
                    self.grid.setdefault((gx, gy), []).append(i)

    def candidates(self, p: Point) -> list[int]:
        return self.grid.get((int(p[0] // GRID_CELL_CM), int(p[1] // GRID_CELL_CM)), [])

    def contains_idx(self, i: int, p: Point, eps: float = CONTAIN_EPS_CM) -> bool:
        (ax, ay), (bx, by), (cx, cy) = self.triangles[i]
        la, lb, lc = self.edge_lens[i]
        px, py = p
        d1 = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        d2 = (cx - bx) * (py - by) - (cy - by) * (px - bx)
        d3 = (ax - cx) * (py - cy) - (ay - cy) * (px - cx)
        if d1 >= -eps * la and d2 >= -eps * lb and d3 >= -eps * lc:
            return True
        return d1 <= eps * la and d2 <= eps * lb and d3 <= eps * lc

    def locate(self, p: Point, eps: float = CONTAIN_EPS_CM) -> int | None:
        for i in self.candidates(p):
            if self.contains_idx(i, p, eps):
                return i
        return None

    def area(self) -> float:
        return sum(abs(cross2(a, b, c)) / 2.0 for a, b, c in self.triangles)


@dataclass
class NavMesh:
    floors: dict[int, FloorMesh]
    stair_links: list[StairLink]
    ramps: list[RampRegion]
    portals: dict[int, list[Portal]] = field(default_factory=dict)

    def floor(self, floor_id: int) -> FloorMesh:
        try:
            return self.floors[floor_id]
        except KeyError:
            raise NavmeshError(f"unknown floor {floor_id}") from None


@dataclass(frozen=True)
class PathResult:
    waypoints: tuple[tuple[float, float, float], ...]
    length_cm: float
    floors_visited: tuple[int, ...]


# ---------------------------------------------------------------------------
# triangulation


def _ensure_ccw(points: list[Point]) -> list[Point]:
    return points if polygon_area(points) > 0 else list(reversed(points))


def _ensure_cw(points: list[Point]) -> list[Point]:
    return points if polygon_area(points) < 0 else list(reversed(points))


def _point_in_ring(p: Point, ring: list[Point]) -> bool:
    from .geometry import point_in_polygon

    return point_in_polygon(p, ring)


def _merge_hole(outer: list[Point], hole: list[Point]) -> list[Point]:
    """Splice one hole into the outer ring via a visibility bridge."""
    m_idx = max(range(len(hole)), key=lambda i: hole[i][0])
    m = hole[m_idx]

    # point on the outer ring directly to the right of m
    best_t = math.inf
    best_edge = None
    for i in range(len(outer)):
        a = outer[i]
        b = outer[(i + 1) % len(outer)]
        if (a[1] > m[1]) == (b[1] > m[1]):
            continue
        t = a[0] + (m[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0])
        if t >= m[0] - 1e-9 and t < best_t:
            best_t = t
            best_edge = i
    if best_edge is None:
        raise NavmeshError("hole outside outer ring")

    a = outer[best_edge]
    b = outer[(best_edge + 1) % len(outer)]
    # candidate visible vertex: endpoint of the intersected edge with max x
    p = a if a[0] > b[0] else b
    ix = (best_t, m[1])
    # pick the reflex vertex inside triangle (m, ix, p) closest in angle, if any
    best = p
    best_metric = None
    for i, v in enumerate(outer):
        if v in (a, b):
            continue
        if point_in_triangle(v, m, ix, p, 0.0):
            d = math.atan2(abs(v[1] - m[1]), v[0] - m[0])
            metric = (d, dist(m, v))
            if best_metric is None or metric < best_metric:
                best_metric = metric
                best = v
    bi = outer.index(best)

    merged = outer[: bi + 1]
    merged.extend(hole[m_idx:] + hole[: m_idx + 1])
    merged.append(outer[bi])
    merged.extend(outer[bi + 1 :])
    return merged


def triangulate_polygon(outer: list[Point], holes: list[list[Point]] | None = None) -> list[Tri]:
    """Ear-clipping triangulation of a simple polygon with optional holes."""
    ring = _ensure_ccw([(float(x), float(y)) for x, y in outer])
    for hole in sorted(holes or [], key=lambda h: -max(p[0] for p in h)):
        ring = _merge_hole(ring, _ensure_cw([(float(x), float(y)) for x, y in hole]))

    verts = list(ring)
    tris: list[Tri] = []
    guard = 0
    while len(verts) > 3:
        n = len(verts)
        clipped = False
        for i in range(n):
            a = verts[(i - 1) % n]
            b = verts[i]
            c = verts[(i + 1) % n]
            area2 = cross2(a, b, c)
            if area2 <= 1e-9:
                if abs(area2) <= 1e-9 and (a == c or dist(a, c) < 1e-9):
                    # degenerate spike (bridge seam): drop it
                    del verts[i]
                    clipped = True
                    break
                continue
            ear = True
            for v in verts:
                if v in (a, b, c):
                    continue
                if point_in_triangle(v, a, b, c, 0.0):
                    ear = False
                    break
            if ear:
                tris.append((a, b, c))
                del verts[i]
                clipped = True
                break
        if not clipped:
            guard += 1
            if guard > 2:
                raise NavmeshError("triangulation failure on degenerate polygon")
            # drop an exactly-collinear vertex and retry
            for i in range(len(verts)):
                a = verts[(i - 1) % len(verts)]
                b = verts[i]
                c = verts[(i + 1) % len(verts)]
                if abs(cross2(a, b, c)) <= 1e-9:
                    del verts[i]
                    break
            else:
                raise NavmeshError("triangulation failure on degenerate polygon")
    if len(verts) == 3:
        if cross2(*verts) > 1e-9:
            tris.append((verts[0], verts[1], verts[2]))
    return tris


def _is_convex(points: tuple[Point, ...]) -> bool:
    n = len(points)
    sign = 0
    for i in range(n):
        c = cross2(points[i], points[(i + 1) % n], points[(i + 2) % n])
        if abs(c) < 1e-9:
            continue
        s = 1 if c > 0 else -1
        if sign == 0:
            sign = s
        elif s != sign:
            return False
    return True


def _triangulate_walkable(poly: WalkablePoly, holes: list[list[Point]]) -> list[Tri]:
    try:
        tris = triangulate_polygon(list(poly.points), holes)
    except NavmeshError as e:
        raise NavmeshError(f"{e} (polygon {poly.id})") from None
    if not tris:
        raise NavmeshError(f"triangulation failure on degenerate polygon {poly.id}")
    return tris


# ---------------------------------------------------------------------------
# mesh build


def _edge_key(a: Point, b: Point) -> tuple:
    ka = (round(a[0], 3), round(a[1], 3))
    kb = (round(b[0], 3), round(b[1], 3))
    return (ka, kb) if ka <= kb else (kb, ka)


def build_navmesh(spec: BuildingSpec) -> NavMesh:
    """Triangulate every floor's walkable space and wire stair links."""
    floors: dict[int, FloorMesh] = {}
    portals: dict[int, list[Portal]] = {}

    for f in spec.floors:
        fm = FloorMesh(f.id, f.z_cm)
        next_group = 0
        for poly in f.walkable:
            holes = []
            for obs in f.obstacles:
                from .geometry import polygon_centroid

                if _point_in_ring(polygon_centroid(obs.points), list(poly.points)):
                    holes.append(list(obs.points))
            convex = not holes and _is_convex(poly.points)
            for tri in _triangulate_walkable(poly, holes):
                fm.add_triangle(tri)
                fm.group_of.append(next_group)
                if not convex:
                    next_group += 1
            if convex:
                next_group += 1
        fm.build_grid()
        floors[f.id] = fm
        portals[f.id] = _build_portals(fm)

    links: list[StairLink] = []
    ramps: list[RampRegion] = []
    for s in spec.staircases:
        link, ramp = _wire_staircase(spec, floors, s)
        links.append(link)
        ramps.append(ramp)

    # ramp strips attach through landing edges: those stretches are
    # openings, not walls, for sliding / line-of-sight purposes
    for s in spec.staircases:
        strip_edges = [
            (s.strip[i], s.strip[(i + 1) % len(s.strip)]) for i in range(len(s.strip))
        ]
        for fid in (s.lower_floor, s.upper_floor):
            fm = floors[fid]
            walls = []
            for a, b in fm.boundary_edges:
                pieces = [(a, b)]
                for o0, o1 in strip_edges:
                    nxt = []
                    for p0, p1 in pieces:
                        ov = collinear_overlap(p0, p1, o0, o1)
                        if ov is None:
                            nxt.append((p0, p1))
                        else:
                            nxt.extend(_cut_interval(p0, p1, ov))
                    pieces = nxt
                walls.extend(pieces)
            fm.boundary_edges = walls

    return NavMesh(floors=floors, stair_links=links, ramps=ramps, portals=portals)


def _build_portals(fm: FloorMesh) -> list[Portal]:
    # pass 1: exact shared edges
    by_key: dict[tuple, list[tuple[int, Point, Point]]] = {}
    for i, (a, b, c) in enumerate(fm.triangles):
        for p, q in ((a, b), (b, c), (c, a)):
            by_key.setdefault(_edge_key(p, q), []).append((i, p, q))

    portals: list[Portal] = []
    unmatched: list[tuple[int, Point, Point]] = []
    for entries in by_key.values():
        if len(entries) == 2 and entries[0][0] != entries[1][0]:
            i, p, q = entries[0]
            j, _, _ = entries[1]
            mid = ((p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0)
            portals.append(Portal(i, j, (p, q), mid))
            _link(fm, i, j, (p, q))
        else:
            unmatched.extend(entries)

    # pass 2: collinear partial overlaps between boundary edges
    n = len(unmatched)
    covered: dict[int, list[tuple[Point, Point]]] = {}
    for i in range(n):
        ti, a0, a1 = unmatched[i]
        for j in range(i + 1, n):
            tj, b0, b1 = unmatched[j]
            if ti == tj:
                continue
            ov = collinear_overlap(a0, a1, b0, b1)
            if ov is None:
                continue
            mid = ((ov[0][0] + ov[1][0]) / 2.0, (ov[0][1] + ov[1][1]) / 2.0)
            portals.append(Portal(ti, tj, ov, mid))
            _link(fm, ti, tj, ov)
            covered.setdefault(i, []).append(ov)
            covered.setdefault(j, []).append(ov)

    # true walls = unmatched edges minus their portal-covered stretches;
    # wall sliding and line-of-sight checks must not see openings as walls
    walls: list[tuple[Point, Point]] = []
    for i, (_, a0, a1) in enumerate(unmatched):
        pieces = [(a0, a1)]
        for ov in covered.get(i, ()):
            nxt = []
            for p0, p1 in pieces:
                shared = collinear_overlap(p0, p1, ov[0], ov[1])
                if shared is None:
                    nxt.append((p0, p1))
                else:
                    nxt.extend(_cut_interval(p0, p1, shared))
            pieces = nxt
        walls.extend(pieces)
    fm.boundary_edges = walls
    return portals


def _cut_interval(p0: Point, p1: Point, ov: tuple[Point, Point]) -> list[tuple[Point, Point]]:
    ux = p1[0] - p0[0]
    uy = p1[1] - p0[1]
    length = math.hypot(ux, uy)
    if length < 1e-9:
        return []
    ux /= length
    uy /= length
    s0 = (ov[0][0] - p0[0]) * ux + (ov[0][1] - p0[1]) * uy
    s1 = (ov[1][0] - p0[0]) * ux + (ov[1][1] - p0[1]) * uy
    lo, hi = min(s0, s1), max(s0, s1)
    out = []
    if lo > 1e-6:
        out.append((p0, (p0[0] + ux * lo, p0[1] + uy * lo)))
    if hi < length - 1e-6:
        out.append(((p0[0] + ux * hi, p0[1] + uy * hi), p1))
    return out


def _link(fm: FloorMesh, i: int, j: int, seg: tuple[Point, Point]):
    fm.neighbors[i].append((j, seg))
    fm.neighbors[j].append((i, seg))


def _wire_staircase(
    spec: BuildingSpec, floors: dict[int, FloorMesh], s: Staircase
) -> tuple[StairLink, RampRegion]:
    lower_node = (s.ramp[0][0], s.ramp[0][1])
    upper_node = (s.ramp[-1][0], s.ramp[-1][1])
    lt = floors[s.lower_floor].locate(lower_node)
    ut = floors[s.upper_floor].locate(upper_node)
    if lt is None or ut is None:
        raise NavmeshError(
            f"staircase {s.label} ({s.lower_floor}-{s.upper_floor}): "
            "ramp endpoint not on its floor mesh"
        )
    link = StairLink(
        label=s.label,
        lower_floor=s.lower_floor,
        upper_floor=s.upper_floor,
        lower_node=lower_node,
        upper_node=upper_node,
        ramp=s.ramp,
        length_cm=polyline_length(s.ramp),
        lower_tri=lt,
        upper_tri=ut,
    )
    xs = [p[0] for p in s.strip]
    ys = [p[1] for p in s.strip]
    knots = []
    for x, y, z in s.ramp:
        knots.append((x, z))
    knots.sort()
    ramp = RampRegion(
        label=s.label,
        lower_floor=s.lower_floor,
        upper_floor=s.upper_floor,
        x0=min(xs),
        y0=min(ys),
        x1=max(xs),
        y1=max(ys),
        knots=tuple(knots),
    )
    return link, ramp


# ---------------------------------------------------------------------------
# queries


def contains(mesh: NavMesh, floor_id: int, p: Point) -> bool:
    return mesh.floor(floor_id).locate(p, CONTAIN_EPS_CM) is not None


def project_to_walkable(mesh: NavMesh, floor_id: int, p: Point) -> Point:
    """Nearest point of the floor mesh (p itself when already contained)."""
    fm = mesh.floor(floor_id)
    if fm.locate(p) is not None:
        return p
    best: Point | None = None
    best_d = math.inf
    for a, b, c in fm.triangles:
        for s0, s1 in ((a, b), (b, c), (c, a)):
            q = closest_point_on_segment(p, s0, s1)
            d = dist(p, q)
            if d < best_d:
                best_d = d
                best = q
    if best is None:
        raise NavmeshError(f"floor {floor_id} has no triangles")
    return best


def _snap_endpoint(mesh: NavMesh, floor_id: int, p: Point) -> Point:
    fm = mesh.floor(floor_id)
    if fm.locate(p) is not None:
        return p
    q = project_to_walkable(mesh, floor_id, p)
    if dist(p, q) > ENDPOINT_SNAP_CM:
        raise Unreachable(f"point {p} on floor {floor_id} is off the walkable mesh")
    return q


# A* node ids: ("start",), ("goal",), ("p", floor, portal_idx),
# ("sl", link_idx) lower end, ("su", link_idx) upper end


def shortest_path(mesh: NavMesh, a, b) -> PathResult:
    """Approximate geodesic between two placed poses.

    ``a`` and ``b`` are (floor, (x, y[, z])) pairs or objects with
    .floor/.point attributes. Funnel smoothing runs per floor leg; ramps
    contribute their 3D polyline length.
    """
    fa, pa = _as_pose(a)
    fb, pb = _as_pose(b)
    pa = _snap_endpoint(mesh, fa, pa)
    pb = _snap_endpoint(mesh, fb, pb)

    fm_a = mesh.floor(fa)
    fm_b = mesh.floor(fb)
    tri_a = fm_a.locate(pa)
    tri_b = fm_b.locate(pb)

    z_of = {fid: fm.z_cm for fid, fm in mesh.floors.items()}

    # trivial same-triangle case
    if fa == fb and tri_a == tri_b:
        wp = ((pa[0], pa[1], z_of[fa]), (pb[0], pb[1], z_of[fb]))
        return PathResult(wp, dist(pa, pb), (fa,))

    # node incidence keyed by convex region: a segment between two boundary
    # points of one convex group is walkable, so graph distances equal taut
    # path lengths and the search picks the genuinely shortest corridor.
    def group_key(fid: int, tri: int) -> tuple[int, int]:
        return (fid, mesh.floors[fid].group_of[tri])

    group_nodes: dict[tuple[int, int], list[tuple]] = {}
    node_pos: dict[tuple, tuple[float, float, float]] = {}
    for fid, plist in mesh.portals.items():
        z = z_of[fid]
        for k, portal in enumerate(plist):
            keys = {group_key(fid, portal.tri_a), group_key(fid, portal.tri_b)}
            for end in (0, 1):
                node = ("p", fid, k, end)
                p = portal.seg[end]
                node_pos[node] = (p[0], p[1], z)
                for key in keys:
                    group_nodes.setdefault(key, []).append(node)
    for li, link in enumerate(mesh.stair_links):
        nl = ("sl", li)
        nu = ("su", li)
        node_pos[nl] = (link.lower_node[0], link.lower_node[1], z_of[link.lower_floor])
        node_pos[nu] = (link.upper_node[0], link.upper_node[1], z_of[link.upper_floor])
        group_nodes.setdefault(group_key(link.lower_floor, link.lower_tri), []).append(nl)
        group_nodes.setdefault(group_key(link.upper_floor, link.upper_tri), []).append(nu)

    goal3 = (pb[0], pb[1], z_of[fb])
    start3 = (pa[0], pa[1], z_of[fa])
    start_key = group_key(fa, tri_a)
    goal_key = group_key(fb, tri_b)

    def node_groups(node) -> list[tuple[int, int]]:
        kind = node[0]
        if kind == "p":
            fid, k = node[1], node[2]
            portal = mesh.portals[fid][k]
            return list({group_key(fid, portal.tri_a), group_key(fid, portal.tri_b)})
        if kind == "sl":
            link = mesh.stair_links[node[1]]
            return [group_key(link.lower_floor, link.lower_tri)]
        if kind == "su":
            link = mesh.stair_links[node[1]]
            return [group_key(link.upper_floor, link.upper_tri)]
        if kind == "start":
            return [start_key]
        return [goal_key]

    def neighbors(node):
        out = []
        kind = node[0]
        if kind == "sl":
            link = mesh.stair_links[node[1]]
            out.append((("su", node[1]), link.length_cm))
        elif kind == "su":
            link = mesh.stair_links[node[1]]
            out.append((("sl", node[1]), link.length_cm))
        here = node_pos[node] if node[0] not in ("start", "goal") else (
            start3 if kind == "start" else goal3
        )
        for key in node_groups(node):
            if key == goal_key and kind != "goal":
                out.append((("goal",), _d3(here, goal3)))
            for other in group_nodes.get(key, ()):
                if other == node:
                    continue
                out.append((other, _d3(here, node_pos[other])))
        return out

    def heuristic(node):
        p = start3 if node == ("start",) else goal3 if node == ("goal",) else node_pos[node]
        return _d3(p, goal3)

    came: dict[tuple, tuple] = {}
    g = {("start",): 0.0}
    pq = [(heuristic(("start",)), 0, ("start",))]
    seen = set()
    tness = 1
    found = False
    while pq:
        _, _, node = heapq.heappop(pq)
        if node in seen:
            continue
        seen.add(node)
        if node == ("goal",):
            found = True
            break
        for nxt, cost in neighbors(node):
            ng = g[node] + cost
            if ng < g.get(nxt, math.inf):
                g[nxt] = ng
                came[nxt] = node
                tness += 1
                heapq.heappush(pq, (ng + heuristic(nxt), tness, nxt))
    if not found:
        raise Unreachable(f"no path between floor {fa} {pa} and floor {fb} {pb}")

    chain = [("goal",)]
    while chain[-1] != ("start",):
        chain.append(came[chain[-1]])
    chain.reverse()

    return _assemble_path(mesh, chain, fa, pa, fb, pb, z_of)


def _as_pose(a) -> tuple[int, Point]:
    if hasattr(a, "floor") and hasattr(a, "point"):
        return a.floor, (a.point[0], a.point[1])
    fl, p = a
    return int(fl), (float(p[0]), float(p[1]))


def _d3(a, b) -> float:
    return math.sqrt((b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2 + (b[2] - a[2]) ** 2)


def _assemble_path(mesh, chain, fa, pa, fb, pb, z_of) -> PathResult:
    waypoints: list[tuple[float, float, float]] = []
    total = 0.0
    floors_visited: list[int] = [fa]

    cur_floor = fa
    cur_point = pa
    leg_portals: list[tuple[Point, Point]] = []

    def flush_leg(end_point: Point):
        nonlocal total
        z = z_of[cur_floor]
        pts2 = funnel(cur_point, end_point, leg_portals)
        for i, p in enumerate(pts2):
            p3 = (p[0], p[1], z)
            if not waypoints or _d3(waypoints[-1], p3) > 1e-9:
                waypoints.append(p3)
        for p, q in zip(pts2, pts2[1:]):
            total += dist(p, q)

    idx = 1
    while idx < len(chain):
        node = chain[idx]
        kind = node[0]
        if kind == "p":
            fid, k = node[1], node[2]
            seg = mesh.portals[fid][k].seg
            if not leg_portals or leg_portals[-1] is not seg:
                leg_portals.append(seg)
        elif kind in ("sl", "su"):
            # a traversal shows up as both ends of one link back to back
            nxt = chain[idx + 1] if idx + 1 < len(chain) else None
            is_pair = (
                nxt is not None
                and nxt[0] in ("sl", "su")
                and nxt[1] == node[1]
                and nxt[0] != kind
            )
            if is_pair:
                link = mesh.stair_links[node[1]]
                going_up = kind == "sl"
                node_pt = link.lower_node if going_up else link.upper_node
                flush_leg(node_pt)
                leg_portals.clear()
                ramp = link.ramp if going_up else tuple(reversed(link.ramp))
                for p in ramp:
                    if not waypoints or _d3(waypoints[-1], p) > 1e-9:
                        waypoints.append(tuple(p))
                total += link.length_cm
                cur_floor = link.upper_floor if going_up else link.lower_floor
                cur_point = link.upper_node if going_up else link.lower_node
                floors_visited.append(cur_floor)
                idx += 1  # consume the paired end
        elif kind == "goal":
            flush_leg(pb)
        idx += 1

    waypoints, total = _refine_ramp_crossings(mesh, waypoints, total)

    dedup_floors = [floors_visited[0]]
    for f in floors_visited[1:]:
        if f != dedup_floors[-1]:
            dedup_floors.append(f)
    return PathResult(tuple(waypoints), total, tuple(dedup_floors))


def _refine_ramp_crossings(mesh, waypoints, total):
    """Slide ramp entry/exit points along the strip edges.

    The assembled path crosses each ramp at the centerline nodes; the true
    geodesic usually clips the strip diagonally. For straight two-point
    ramps, optimize the y of both crossing points (golden section per
    coordinate) and keep the result only when the adjusted approach legs
    stay clear of walls.
    """
    if len(waypoints) < 4:
        return waypoints, total

    ramps_by_edge = {}
    for r in mesh.ramps:
        z_lo = min(k[1] for k in r.knots)
        z_hi = max(k[1] for k in r.knots)
        ramps_by_edge[(round(r.x0, 3), round(z_lo, 3))] = r
        ramps_by_edge[(round(r.x1, 3), round(z_hi, 3))] = r

    pts = [list(p) for p in waypoints]
    for i in range(1, len(pts) - 2):
        e = pts[i]
        x = pts[i + 1]
        key_e = (round(e[0], 3), round(e[2], 3))
        key_x = (round(x[0], 3), round(x[2], 3))
        r = ramps_by_edge.get(key_e)
        if r is None or ramps_by_edge.get(key_x) is not r:
            continue
        if abs(e[1] - x[1]) > 1e-6 or {round(e[0], 3), round(x[0], 3)} != {
            round(r.x0, 3), round(r.x1, 3)
        }:
            continue
        a = pts[i - 1]
        b = pts[i + 2]
        dz = x[2] - e[2]
        dx = x[0] - e[0]

        def cost(ye, yx):
            return (
                math.hypot(e[0] - a[0], ye - a[1])
                + math.sqrt(dx * dx + (yx - ye) ** 2 + dz * dz)
                + math.hypot(b[0] - x[0], b[1] - yx)
            )

        # keep 2 cm off the strip rim so approach legs never graze the
        # wedge corner exactly (the strict wall test would flag it)
        lo = r.y0 + 2.0
        hi = r.y1 - 2.0
        ye, yx = e[1], x[1]
        for _ in range(3):
            ye = _golden(lambda v: cost(v, yx), lo, hi)
            yx = _golden(lambda v: cost(ye, v), lo, hi)

        fm_e = mesh.floors.get(_floor_of_z(mesh, e[2]))
        fm_x = mesh.floors.get(_floor_of_z(mesh, x[2]))
        if fm_e is not None and _crosses_wall(fm_e, (a[0], a[1]), (e[0], ye)):
            ye = e[1]
        if fm_x is not None and _crosses_wall(fm_x, (x[0], yx), (b[0], b[1])):
            yx = x[1]

        old = cost(e[1], x[1])
        new = cost(ye, yx)
        if new < old - 1e-9:
            total += new - old
            pts[i][1] = ye
            pts[i + 1][1] = yx
    return [tuple(p) for p in pts], total


def _floor_of_z(mesh, z):
    best = None
    for fid, fm in mesh.floors.items():
        if best is None or abs(fm.z_cm - z) < abs(mesh.floors[best].z_cm - z):
            best = fid
    if best is not None and abs(mesh.floors[best].z_cm - z) <= 1.0:
        return best
    return None


def _crosses_wall(fm, a, b) -> bool:
    """True when segment a-b properly crosses a wall.

    The segment is shrunk slightly at both ends first: path legs routinely
    START or END exactly on a wall corner (funnel pivots), which is a
    graze, not a crossing.
    """
    from .building import _segments_cross

    d = dist(a, b)
    if d <= 1.0:
        return False
    t = 0.5 / d
    a2 = (a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t)
    b2 = (b[0] + (a[0] - b[0]) * t, b[1] + (a[1] - b[1]) * t)
    for e0, e1 in fm.boundary_edges:
        if _segments_cross((a2, b2), (e0, e1)):
            return True
    return False


def _golden(f, lo, hi, iters=24):
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def funnel(start: Point, goal: Point, portals: list[tuple[Point, Point]]) -> list[Point]:
    """Simple stupid funnel algorithm over an ordered portal sequence."""
    if not portals:
        return [start, goal]

    # orient portals (left, right) w.r.t. travel direction
    oriented: list[tuple[Point, Point]] = []
    prev = start
    for i, (p, q) in enumerate(portals):
        mid = ((p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0)
        dx, dy = mid[0] - prev[0], mid[1] - prev[1]
        if abs(dx) < 1e-12 and abs(dy) < 1e-12:
            nxt = (
                ((portals[i + 1][0][0] + portals[i + 1][1][0]) / 2.0,
                 (portals[i + 1][0][1] + portals[i + 1][1][1]) / 2.0)
                if i + 1 < len(portals)
                else goal
            )
            dx, dy = nxt[0] - mid[0], nxt[1] - mid[1]
        vx, vy = q[0] - p[0], q[1] - p[1]
        if dx * vy - dy * vx > 0:
            oriented.append((q, p))  # (left, right)
        else:
            oriented.append((p, q))
        prev = mid
    oriented.append((goal, goal))

    eps = 1e-9
    pts = [start]
    apex = start
    left, right = start, start
    apex_i = left_i = right_i = 0

    i = 0
    while i < len(oriented):
        nl, nr = oriented[i]
        # narrow the right side (cross2 > 0 means counter-clockwise / left)
        if cross2(apex, right, nr) >= -eps:
            if _veq(apex, right) or cross2(apex, left, nr) < eps:
                right = nr
                right_i = i
            else:
                # right swept past left: the left point is a path corner
                if not _veq(pts[-1], left):
                    pts.append(left)
                apex = left
                apex_i = left_i
                left = apex
                right = apex
                left_i = right_i = apex_i
                i = apex_i + 1
                continue
        # narrow the left side
        if cross2(apex, left, nl) <= eps:
            if _veq(apex, left) or cross2(apex, right, nl) > -eps:
                left = nl
                left_i = i
            else:
                if not _veq(pts[-1], right):
                    pts.append(right)
                apex = right
                apex_i = right_i
                left = apex
                right = apex
                left_i = right_i = apex_i
                i = apex_i + 1
                continue
        i += 1

    if not _veq(pts[-1], goal):
        pts.append(goal)
    return pts


def _veq(a: Point, b: Point) -> bool:
    return abs(a[0] - b[0]) < 1e-9 and abs(a[1] - b[1]) < 1e-9


def mesh_dump(mesh: NavMesh) -> dict:
    """JSON-friendly debug dump (triangles + stair links)."""
    return {
        "floors": {
            str(fid): {
                "z_cm": fm.z_cm,
                "triangles": [[list(a), list(b), list(c)] for a, b, c in fm.triangles],
            }
            for fid, fm in mesh.floors.items()
        },
        "stair_links": [
            {
                "label": l.label,
                "lower_floor": l.lower_floor,
                "upper_floor": l.upper_floor,
                "ramp": [list(p) for p in l.ramp],
                "length_cm": l.length_cm,
            }
            for l in mesh.stair_links
        ],
    }
