"""Multi-story building description: loading, validation and geometric lookups.

The building is declarative JSON (see docs/building-schema.md). All
coordinates are centimeters, z-up. A BuildingSpec is immutable after load
and safe to share between threads.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .geometry import (
    Point,
    bounding_box,
    collinear_overlap,
    dist,
    polygon_area,
    polygon_centroid,
)

EXIT_FLOOR_ID = 1
EXIT_ZONE_RADIUS_CM = 150.0

SIGN_KINDS = ("room_number", "exit_sign", "evacuation_sign", "fire_door", "floor_plan")
ZONE_PURPOSES = ("trigger", "central_point", "spawn")
WALKABLE_KINDS = ("main_corridor", "cross_corridor", "hall", "stair_landing")
OBSTACLE_KINDS = ("wall", "pillar", "elevator", "furniture")

STORY_HEIGHT_CM = 400.0

# decal extents used when attaching doors/signs to wall surfaces
DOOR_DECAL_HALF_WIDTH_CM = 45.0
DOOR_DECAL_Z_RANGE_CM = (0.0, 215.0)
SIGN_DECAL_HALF_WIDTH_CM = 25.0
EXIT_SIGN_PANEL_HALF_WIDTH_CM = 45.0  # panels above the exit doors
SIGN_DECAL_Z_RANGE_CM = (135.0, 225.0)


class BuildingError(ValueError):
    """Malformed or unresolvable building document."""


@dataclass(frozen=True)
class WalkablePoly:
    id: str
    kind: str
    points: tuple[Point, ...]


@dataclass(frozen=True)
class ObstaclePoly:
    id: str
    kind: str
    points: tuple[Point, ...]


@dataclass(frozen=True)
class RoomDef:
    label: str
    floor: int
    door_pos: Point
    side: str  # "even" | "uneven"


@dataclass(frozen=True)
class SignDef:
    kind: str
    floor: int
    position: tuple[float, float, float]
    facing: tuple[float, float, float]
    target: str | None
    half_width_cm: float | None = None


@dataclass(frozen=True)
class Floor:
    id: int
    z_cm: float
    walkable: tuple[WalkablePoly, ...]
    obstacles: tuple[ObstaclePoly, ...]
    rooms: tuple[RoomDef, ...]
    signs: tuple[SignDef, ...]


@dataclass(frozen=True)
class Staircase:
    label: str
    lower_floor: int
    upper_floor: int
    footprints: dict[int, tuple[Point, ...]]  # landing polygon per floor
    strip: tuple[Point, ...]  # plan rectangle of the sloped run
    ramp: tuple[tuple[float, float, float], ...]  # 3D polyline, lower -> upper


@dataclass(frozen=True)
class ExitDef:
    label: str
    floor: int
    position: Point
    is_main_entrance: bool


@dataclass(frozen=True)
class Zone:
    id: str
    floor: int
    purpose: str
    polygon: tuple[Point, ...]
    assignment: int | None = None
    yaw_deg: float | None = None

    def contains(self, p: Point) -> bool:
        from .geometry import point_in_polygon

        return point_in_polygon(p, self.polygon)

    @property
    def centroid(self) -> Point:
        return polygon_centroid(self.polygon)


@dataclass(frozen=True)
class PlacedPose:
    floor: int
    point: tuple[float, float, float]


@dataclass(frozen=True)
class WallSegment:
    surface_id: str
    floor: int
    a: Point
    b: Point
    decal: str | None = None  # "room:4.02" or "sign:exit_sign:<target>"
    decal_kind: str | None = None  # "room_door" or a sign kind


@dataclass(frozen=True)
class BuildingSpec:
    name: str
    floors: tuple[Floor, ...]
    staircases: tuple[Staircase, ...]
    exits: tuple[ExitDef, ...]
    zones: tuple[Zone, ...]
    fixture_hash: str = ""
    _floor_index: dict[int, Floor] = field(default_factory=dict, repr=False)

    def floor(self, floor_id: int) -> Floor:
        try:
            return self._floor_index[floor_id]
        except KeyError:
            raise BuildingError(f"unknown floor {floor_id}") from None

    def has_floor(self, floor_id: int) -> bool:
        return floor_id in self._floor_index

    @property
    def floor_ids(self) -> list[int]:
        return sorted(self._floor_index)

    def zone(self, zone_id: str) -> Zone:
        for z in self.zones:
            if z.id == zone_id:
                return z
        raise BuildingError(f"unknown zone {zone_id}")

    def exit_by_label(self, label: str) -> ExitDef:
        for e in self.exits:
            if e.label == label:
                return e
        raise BuildingError(f"unknown exit {label}")


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise BuildingError(msg)


def _parse_points(raw, where: str) -> tuple[Point, ...]:
    _require(isinstance(raw, list) and len(raw) >= 3, f"{where}: polygon needs >= 3 points")
    pts = []
    for i, p in enumerate(raw):
        _require(
            isinstance(p, (list, tuple)) and len(p) == 2,
            f"{where}: point {i} must be an [x, y] pair",
        )
        pts.append((float(p[0]), float(p[1])))
    return tuple(pts)


def _is_simple_polygon(points: tuple[Point, ...]) -> bool:
    """Brute-force segment pair test; fixture polygons are small."""
    n = len(points)
    if abs(polygon_area(points)) < 1e-9:
        return False
    segs = [(points[i], points[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_cross(segs[i], segs[j]):
                return False
    return True


def _segments_cross(s1, s2) -> bool:
    (a, b), (c, d) = s1, s2
    from .geometry import cross2

    d1 = cross2(c, d, a)
    d2 = cross2(c, d, b)
    d3 = cross2(a, b, c)
    d4 = cross2(a, b, d)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def canonical_document(doc: dict) -> bytes:
    """Stable byte serialization used for the fixture hash."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def load_building(source: str | dict) -> BuildingSpec:
    """Parse a building document (JSON text or already-decoded dict)."""
    if isinstance(source, str):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as e:
            raise BuildingError(f"parse error at line {e.lineno}: {e.msg}") from None
    else:
        doc = source
    _require(isinstance(doc, dict), "document must be a JSON object")
    for key in ("name", "floors", "staircases", "exits", "zones"):
        _require(key in doc, f"missing top-level key '{key}'")

    fixture_hash = hashlib.sha256(canonical_document(doc)).hexdigest()

    floors = []
    for fraw in doc["floors"]:
        fid = int(fraw["id"])
        where = f"floor {fid}"
        walkable = tuple(
            WalkablePoly(
                id=str(w["id"]),
                kind=str(w.get("kind", "main_corridor")),
                points=_parse_points(w["points"], f"{where} walkable {w.get('id')}"),
            )
            for w in fraw.get("walkable", [])
        )
        obstacles = tuple(
            ObstaclePoly(
                id=str(o["id"]),
                kind=str(o.get("kind", "wall")),
                points=_parse_points(o["points"], f"{where} obstacle {o.get('id')}"),
            )
            for o in fraw.get("obstacles", [])
        )
        rooms = tuple(
            RoomDef(
                label=str(r["label"]),
                floor=fid,
                door_pos=(float(r["door"][0]), float(r["door"][1])),
                side=str(r["side"]),
            )
            for r in fraw.get("rooms", [])
        )
        signs = tuple(
            SignDef(
                kind=str(s["kind"]),
                floor=fid,
                position=tuple(float(v) for v in s["position"]),
                facing=tuple(float(v) for v in s["facing"]),
                target=s.get("target"),
                half_width_cm=s.get("half_width_cm"),
            )
            for s in fraw.get("signs", [])
        )
        floors.append(
            Floor(
                id=fid,
                z_cm=float(fraw["z_cm"]),
                walkable=walkable,
                obstacles=obstacles,
                rooms=rooms,
                signs=signs,
            )
        )

    _require(len(floors) > 0, "no floors")
    floor_ids = {f.id for f in floors}

    staircases = []
    for sraw in doc["staircases"]:
        label = str(sraw["label"])
        lower = int(sraw["lower_floor"])
        upper = int(sraw["upper_floor"])
        for ref in (lower, upper):
            _require(
                ref in floor_ids,
                f"staircase {label} ({lower}-{upper}): dangling reference to floor {ref}",
            )
        footprints = {
            int(k): _parse_points(v, f"staircase {label} footprint {k}")
            for k, v in sraw["footprints"].items()
        }
        staircases.append(
            Staircase(
                label=label,
                lower_floor=lower,
                upper_floor=upper,
                footprints=footprints,
                strip=_parse_points(sraw["strip"], f"staircase {label} strip"),
                ramp=tuple(tuple(float(v) for v in p) for p in sraw["ramp"]),
            )
        )

    exits = []
    for eraw in doc["exits"]:
        fid = int(eraw["floor"])
        _require(fid in floor_ids, f"exit {eraw['label']}: dangling reference to floor {fid}")
        exits.append(
            ExitDef(
                label=str(eraw["label"]),
                floor=fid,
                position=(float(eraw["position"][0]), float(eraw["position"][1])),
                is_main_entrance=bool(eraw.get("is_main_entrance", False)),
            )
        )

    zones = []
    for zraw in doc["zones"]:
        fid = int(zraw["floor"])
        _require(fid in floor_ids, f"zone {zraw['id']}: dangling reference to floor {fid}")
        zones.append(
            Zone(
                id=str(zraw["id"]),
                floor=fid,
                purpose=str(zraw["purpose"]),
                polygon=_parse_points(zraw["polygon"], f"zone {zraw['id']}"),
                assignment=zraw.get("assignment"),
                yaw_deg=zraw.get("yaw_deg"),
            )
        )

    spec = BuildingSpec(
        name=str(doc["name"]),
        floors=tuple(sorted(floors, key=lambda f: f.id)),
        staircases=tuple(staircases),
        exits=tuple(exits),
        zones=tuple(zones),
        fixture_hash=fixture_hash,
    )
    for f in spec.floors:
        spec._floor_index[f.id] = f

    # hard structural errors (vs. soft violations from validate_building)
    seen_rooms: set[str] = set()
    for f in spec.floors:
        for r in f.rooms:
            _require(r.label not in seen_rooms, f"duplicate room label {r.label}")
            seen_rooms.add(r.label)
    return spec


def load_building_file(path: str | Path) -> BuildingSpec:
    return load_building(Path(path).read_text(encoding="utf-8"))


def bundled_fixture_path() -> Path:
    """Path of the packaged ceg fixture document."""
    return Path(resources.files("wayfind").joinpath("fixtures/ceg_fixture.json"))


def load_bundled_fixture() -> BuildingSpec:
    return load_building_file(bundled_fixture_path())


def validate_building(spec: BuildingSpec) -> list[str]:
    """Invariant check; returns human-readable violations (empty = valid)."""
    out: list[str] = []

    ids = [f.id for f in spec.floors]
    if len(set(ids)) != len(ids):
        out.append("duplicate floor ids")
    zs = [f.z_cm for f in spec.floors]
    if len(set(zs)) != len(zs):
        out.append("floors share a z-elevation")

    seen_rooms: set[str] = set()
    for f in spec.floors:
        for r in f.rooms:
            if r.label in seen_rooms:
                out.append(f"duplicate room label {r.label}")
            seen_rooms.add(r.label)

    for f in spec.floors:
        all_pts = [p for w in f.walkable for p in w.points]
        for w in f.walkable:
            if not _is_simple_polygon(w.points):
                out.append(f"floor {f.id}: walkable {w.id} is not a simple polygon")
            if w.kind not in WALKABLE_KINDS:
                out.append(f"floor {f.id}: walkable {w.id} has unknown kind {w.kind}")
        if all_pts:
            bx0, by0, bx1, by1 = bounding_box(all_pts)
            for o in f.obstacles:
                ox0, oy0, ox1, oy1 = bounding_box(o.points)
                if ox0 < bx0 - 1e-6 or oy0 < by0 - 1e-6 or ox1 > bx1 + 1e-6 or oy1 > by1 + 1e-6:
                    out.append(f"floor {f.id}: obstacle {o.id} outside floor bounding box")
        for r in f.rooms:
            want = "even" if int(r.label.split(".")[1]) % 2 == 0 else "uneven"
            if r.side != want:
                out.append(f"room {r.label}: side should be {want}")
            if _distance_to_walkable_boundary(f, r.door_pos) > 1e-3:
                out.append(f"room {r.label}: door not on walkable boundary")
        for s in f.signs:
            if s.kind not in SIGN_KINDS:
                out.append(f"floor {f.id}: sign with unknown kind {s.kind}")
            norm = math.sqrt(sum(v * v for v in s.facing))
            if abs(norm - 1.0) > 1e-6:
                out.append(f"floor {f.id}: sign {s.kind}@{s.position} facing not unit length")

    mains = [e for e in spec.exits if e.is_main_entrance]
    if len(mains) != 1:
        out.append("no main entrance" if not mains else "multiple main entrances")
    for e in spec.exits:
        if e.floor != EXIT_FLOOR_ID:
            out.append(f"exit {e.label} not on exit floor {EXIT_FLOOR_ID}")

    for s in spec.staircases:
        zvals = [p[2] for p in s.ramp]
        if any(b < a - 1e-9 for a, b in zip(zvals, zvals[1:])):
            out.append(f"staircase {s.label} ({s.lower_floor}-{s.upper_floor}): ramp not monotone")
        lo = spec.floor(s.lower_floor).z_cm if spec.has_floor(s.lower_floor) else None
        hi = spec.floor(s.upper_floor).z_cm if spec.has_floor(s.upper_floor) else None
        if lo is not None and hi is not None:
            if abs(zvals[0] - lo) > 1e-6 or abs(zvals[-1] - hi) > 1e-6:
                out.append(
                    f"staircase {s.label} ({s.lower_floor}-{s.upper_floor}): "
                    "ramp does not span the two floor elevations"
                )

    for z in spec.zones:
        if z.purpose not in ZONE_PURPOSES:
            out.append(f"zone {z.id}: unknown purpose {z.purpose}")

    return out


def _distance_to_walkable_boundary(floor: Floor, p: Point) -> float:
    from .geometry import segment_distance

    best = math.inf
    for w in floor.walkable:
        n = len(w.points)
        for i in range(n):
            d = segment_distance(p, w.points[i], w.points[(i + 1) % n])
            if d < best:
                best = d
    return best


def lookup_place(spec: BuildingSpec, label: str) -> PlacedPose:
    """Canonical 3D point for a room, exit, staircase label or zone id."""
    for f in spec.floors:
        for r in f.rooms:
            if r.label == label:
                return PlacedPose(f.id, (r.door_pos[0], r.door_pos[1], f.z_cm))
    for e in spec.exits:
        if e.label == label or label == f"Exit {e.label}":
            z = spec.floor(e.floor).z_cm
            return PlacedPose(e.floor, (e.position[0], e.position[1], z))
    flights = [s for s in spec.staircases if s.label == label]
    if flights:
        s = min(flights, key=lambda s: s.lower_floor)
        p = s.ramp[0]
        return PlacedPose(s.lower_floor, (p[0], p[1], spec.floor(s.lower_floor).z_cm))
    for z in spec.zones:
        if z.id == label:
            c = z.centroid
            return PlacedPose(z.floor, (c[0], c[1], spec.floor(z.floor).z_cm))
    raise BuildingError(f"unknown label {label}")


def exit_zone_contains(spec: BuildingSpec, exit_def: ExitDef, p: Point) -> bool:
    """Exit zones are derived: a radius around the exit position on floor 1."""
    return dist(p, exit_def.position) <= EXIT_ZONE_RADIUS_CM


def wall_segments(spec: BuildingSpec, floor_id: int) -> list[WallSegment]:
    """Boundary of walkable-minus-obstacles as per-surface wall segments.

    An input polygon edge stops being a wall where it coincides with
    another walkable polygon's edge (that shared stretch is an opening),
    and where a stair strip attaches to a landing. Obstacle edges are
    always walls. Door and sign decals are attached to the nearest
    resulting segment.
    """
    floor = spec.floor(floor_id)

    openings: list[tuple[Point, Point]] = []
    polys = [(w.id, w.points) for w in floor.walkable]
    for s in spec.staircases:
        if floor_id in (s.lower_floor, s.upper_floor):
            openings_poly = s.strip
            n = len(openings_poly)
            for i in range(n):
                openings.append((openings_poly[i], openings_poly[(i + 1) % n]))

    segments: list[WallSegment] = []
    seq = 0
    for pid, points in polys:
        n = len(points)
        for i in range(n):
            a, b = points[i], points[(i + 1) % n]
            pieces = [(a, b)]
            # carve out stretches shared with other walkable polys or stair strips
            others: list[tuple[Point, Point]] = list(openings)
            for qid, qpoints in polys:
                if qid == pid:
                    continue
                m = len(qpoints)
                for j in range(m):
                    others.append((qpoints[j], qpoints[(j + 1) % m]))
            for o0, o1 in others:
                new_pieces = []
                for p0, p1 in pieces:
                    ov = collinear_overlap(p0, p1, o0, o1)
                    if ov is None:
                        new_pieces.append((p0, p1))
                        continue
                    new_pieces.extend(_subtract_interval(p0, p1, ov))
                pieces = new_pieces
            for p0, p1 in pieces:
                if dist(p0, p1) < 1e-6:
                    continue
                segments.append(
                    WallSegment(surface_id=f"f{floor_id}:{pid}:e{seq}", floor=floor_id, a=p0, b=p1)
                )
                seq += 1
    # obstacles count only where they actually carve the walkable region;
    # free-standing decoration (elevator shafts in the bays) adds no wall
    from .geometry import point_in_polygon

    for o in floor.obstacles:
        centroid = polygon_centroid(o.points)
        if not any(point_in_polygon(centroid, w.points) for w in floor.walkable):
            continue
        n = len(o.points)
        for i in range(n):
            segments.append(
                WallSegment(
                    surface_id=f"f{floor_id}:{o.id}:e{i}",
                    floor=floor_id,
                    a=o.points[i],
                    b=o.points[(i + 1) % n],
                )
            )

    return _attach_decals(floor, segments)


def _subtract_interval(p0: Point, p1: Point, ov: tuple[Point, Point]) -> list[tuple[Point, Point]]:
    """Remove the (collinear) interval ov from segment p0-p1."""
    ux = p1[0] - p0[0]
    uy = p1[1] - p0[1]
    length = math.hypot(ux, uy)
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


def _attach_decals(floor: Floor, segments: list[WallSegment]) -> list[WallSegment]:
    from .geometry import segment_distance

    decorated = list(segments)

    def nearest_idx(p: Point) -> int | None:
        best = None
        best_d = 5.0  # decals must sit on (or within 5 cm of) a wall
        for i, s in enumerate(decorated):
            d = segment_distance(p, s.a, s.b)
            if d < best_d:
                best_d = d
                best = i
        return best

    for r in floor.rooms:
        i = nearest_idx(r.door_pos)
        if i is not None:
            s = decorated[i]
            decorated[i] = WallSegment(
                s.surface_id, s.floor, s.a, s.b, decal=f"room:{r.label}", decal_kind="room_door"
            )
    for sign in floor.signs:
        p = (sign.position[0], sign.position[1])
        i = nearest_idx(p)
        if i is not None:
            s = decorated[i]
            if s.decal is None:
                target = sign.target or ""
                decorated[i] = WallSegment(
                    s.surface_id,
                    s.floor,
                    s.a,
                    s.b,
                    decal=f"sign:{sign.kind}:{target}",
                    decal_kind=sign.kind,
                )
    return decorated


def decal_windows(spec: BuildingSpec, floor_id: int) -> list[dict]:
    """Flat decal list for the gaze raycaster and the UI renderer.

    Each entry: segment endpoints, center, half width along the wall,
    z range, kind and id. Decals are centered on the door/sign position
    projected onto their wall segment.
    """
    floor = spec.floor(floor_id)
    segs = wall_segments(spec, floor_id)
    out = []

    def add(p: Point, kind: str, ident: str, half_w: float, z_range: tuple[float, float]):
        from .geometry import closest_point_on_segment, segment_distance

        best = None
        best_d = 5.0
        for s in segs:
            d = segment_distance(p, s.a, s.b)
            if d < best_d:
                best_d = d
                best = s
        if best is None:
            return
        c = closest_point_on_segment(p, best.a, best.b)
        out.append(
            {
                "surface_id": best.surface_id,
                "a": best.a,
                "b": best.b,
                "center": c,
                "half_width_cm": half_w,
                "z_min": floor.z_cm + z_range[0],
                "z_max": floor.z_cm + z_range[1],
                "kind": kind,
                "id": ident,
            }
        )

    for r in floor.rooms:
        add(r.door_pos, "room_door", f"room:{r.label}", DOOR_DECAL_HALF_WIDTH_CM, DOOR_DECAL_Z_RANGE_CM)
    for sign in floor.signs:
        half = sign.half_width_cm if sign.half_width_cm else SIGN_DECAL_HALF_WIDTH_CM
        add(
            (sign.position[0], sign.position[1]),
            sign.kind,
            f"sign:{sign.kind}:{sign.target or ''}",
            half,
            SIGN_DECAL_Z_RANGE_CM,
        )
    return out
