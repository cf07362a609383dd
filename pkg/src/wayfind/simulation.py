"""Deterministic fixed-tick simulation of one participant.

Heading-steered locomotion at a hard 140 cm/s cap, wall sliding through
navmesh projection, stair traversal along ramp height fields, head-gaze
raycasting against the current floor's walls, and the trigger-sequenced
assignment state machine with the evacuation alarm.

One session is a single-threaded state machine; run as many sessions in
parallel as you like as long as each is owned by one context.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .building import (
    EXIT_ZONE_RADIUS_CM,
    STORY_HEIGHT_CM,
    BuildingSpec,
    decal_windows,
    lookup_place,
    wall_segments,
)
from .geometry import dist, normalize_angle_deg
from .navmesh import NavMesh, RampRegion, build_navmesh, project_to_walkable

TICK_MS = 20
MAX_SPEED_CM_S = 140.0
GOAL_RADIUS_CM = 80.0
GAZE_RANGE_CM = 3000.0
EYE_HEIGHT_RANGE_CM = (120.0, 220.0)

ALARM_TEXT = (
    "Attention, please leave the building using the emergency exits as "
    "indicated. Do not use the elevators."
)


class SimulationError(ValueError):
    pass


class InputFrame:
    """One tick of input: absolute head angles plus the move toggle.

    Validated on construction; plain __slots__ class because sessions
    build one of these per 20 ms tick.
    """

    __slots__ = ("move_held", "yaw", "pitch", "roll")

    def __init__(self, move_held: bool, yaw: float, pitch: float = 0.0, roll: float = 0.0):
        if not (math.isfinite(yaw) and math.isfinite(pitch) and math.isfinite(roll)):
            raise SimulationError("input angles must be finite")
        if not -89.0 <= pitch <= 89.0:
            raise SimulationError("pitch out of [-89, 89]")
        self.move_held = bool(move_held)
        self.yaw = yaw
        self.pitch = pitch
        self.roll = roll

    def __repr__(self):
        return (f"InputFrame(move_held={self.move_held}, yaw={self.yaw}, "
                f"pitch={self.pitch}, roll={self.roll})")

    def __eq__(self, other):
        return (
            isinstance(other, InputFrame)
            and self.move_held == other.move_held
            and self.yaw == other.yaw
            and self.pitch == other.pitch
            and self.roll == other.roll
        )


@dataclass(frozen=True)
class Assignment:
    id: int
    start_label: str
    goal_label: str
    goal_kind: str  # "room" | "any_exit"
    trigger_zone: str
    message: str

    def __post_init__(self):
        if self.goal_kind == "any_exit" and self.id != 4:
            raise SimulationError("any_exit goals are reserved for assignment 4")
        if not self.message:
            raise SimulationError("assignment message must be non-empty")


DEFAULT_ASSIGNMENTS = (
    Assignment(1, "4.02", "4.99", "room", "spawn",
               "Find your way from Room 4.02 to Room 4.99."),
    Assignment(2, "4.99", "2.01", "room", "trigger_a2",
               "Find your way from Room 4.99 to Room 2.01."),
    Assignment(3, "2.01", "4.64", "room", "trigger_a3",
               "Find your way from Room 2.01 to Room 4.64."),
    Assignment(4, "4.64", "", "any_exit", "trigger_a4",
               "Evacuate the building from Room 4.64 and find an exit on the "
               "first floor."),
)


@dataclass
class AgentState:
    x: float
    y: float
    support_z: float  # floor or ramp surface under the feet
    yaw: float
    pitch: float
    roll: float
    eye_height_cm: float
    floor: int
    moving: bool = False
    on_ramp: RampRegion | None = None
    tri_hint: int | None = None
    # last telemetry anchor; sampling snaps the state onto the 0.001 cm
    # lattice so logged positions are state positions, not approximations
    anchor: tuple[float, float] | None = None

    @property
    def pos(self) -> tuple[float, float, float]:
        """Viewpoint position: support + calibrated eye height."""
        return (self.x, self.y, self.support_z + self.eye_height_cm)


SAMPLE_WINDOW_CM = MAX_SPEED_CM_S * 0.1  # cap over one 100 ms logging window


def quantize_for_sample(agent: AgentState) -> None:
    """Round the position to the logging lattice, keeping the speed cap.

    Printing at 3 decimals would otherwise let two independently rounded
    endpoints measure up to ~0.014 cm/s above the cap; snapping the state
    at each sample boundary (and nudging at most 2 lattice steps back
    toward the previous anchor) makes logged speeds exact.
    """
    qx = round(agent.x, 3)
    qy = round(agent.y, 3)
    if agent.anchor is not None:
        ax, ay = agent.anchor
        for _ in range(3):
            dx = qx - ax
            dy = qy - ay
            if math.hypot(dx, dy) <= SAMPLE_WINDOW_CM + 1e-12:
                break
            if abs(dx) >= abs(dy):
                qx = round(qx - math.copysign(0.001, dx), 3)
            else:
                qy = round(qy - math.copysign(0.001, dy), 3)
    agent.x = qx
    agent.y = qy
    if agent.on_ramp is not None:
        agent.support_z = agent.on_ramp.z_at(qx)
    agent.anchor = (qx, qy)


@dataclass
class SessionState:
    assignments: tuple[Assignment, ...]
    rng_seed: int
    assignment_index: int = 0  # 0..len; == len(assignments) when finished
    alarm_active: bool = False
    clock_ms: int = 0
    event_log: list[tuple[int, str, str]] = field(default_factory=list)
    chosen_exit: str | None = None
    pending_events: list[tuple[int, str, str]] = field(default_factory=list)
    zone_inside: dict[str, bool] = field(default_factory=dict)

    @property
    def finished(self) -> bool:
        return self.assignment_index >= len(self.assignments)

    @property
    def active_assignment(self) -> Assignment | None:
        if self.finished:
            return None
        return self.assignments[self.assignment_index]

    def log(self, event: str, detail: str = ""):
        entry = (self.clock_ms, event, detail)
        self.event_log.append(entry)
        self.pending_events.append(entry)

    def drain_events(self) -> list[tuple[int, str, str]]:
        out = self.pending_events
        self.pending_events = []
        return out


@dataclass(frozen=True)
class GazeHit:
    point: tuple[float, float, float] | None
    surface_id: str | None
    target_kind: str  # "wall" | "room_door" | sign kind | "none"
    target_id: str | None
    distance_cm: float | None


_NO_HIT = GazeHit(None, None, "none", None, None)


class _FloorRayIndex:
    """Vectorized ray-vs-segment tables for one floor."""

    def __init__(self, segments, windows, z_cm: float):
        self.segments = segments
        self.z_cm = z_cm
        n = len(segments)
        self.ax = np.array([s.a[0] for s in segments])
        self.ay = np.array([s.a[1] for s in segments])
        self.ex = np.array([s.b[0] - s.a[0] for s in segments])
        self.ey = np.array([s.b[1] - s.a[1] for s in segments])
        self.windows_by_seg: dict[int, list[dict]] = {}
        surface_to_idx = {s.surface_id: i for i, s in enumerate(segments)}
        for w in windows:
            i = surface_to_idx.get(w["surface_id"])
            if i is not None:
                self.windows_by_seg.setdefault(i, []).append(w)

    def cast(self, ox, oy, dx, dy):
        """Nearest crossing: (horizontal distance, segment index) or None."""
        den = dx * self.ey - dy * self.ex
        den = np.where(np.abs(den) < 1e-12, np.inf, den)
        rx = self.ax - ox
        ry = self.ay - oy
        t = (rx * self.ey - ry * self.ex) / den
        u = (rx * dy - ry * dx) / den
        bad = (t <= 1e-9) | (u < 0.0) | (u > 1.0)
        t[bad] = np.inf
        i = int(np.argmin(t))
        ti = float(t[i])
        if ti == math.inf:
            return None
        return ti, i


class World:
    """Immutable per-building context shared by all sessions."""

    def __init__(self, spec: BuildingSpec, mesh: NavMesh | None = None,
                 assignments: tuple[Assignment, ...] = DEFAULT_ASSIGNMENTS):
        self.spec = spec
        self.mesh = mesh if mesh is not None else build_navmesh(spec)
        self.assignments = assignments
        self.trigger_zones = [z for z in spec.zones if z.purpose == "trigger"]
        from .geometry import bounding_box

        self.trigger_bboxes = [bounding_box(z.polygon) for z in self.trigger_zones]
        self.spawn_zone = next((z for z in spec.zones if z.purpose == "spawn"), None)
        self.goal_points = {}
        for a in assignments:
            if a.goal_kind == "room":
                self.goal_points[a.id] = lookup_place(spec, a.goal_label)
        self.rays: dict[int, _FloorRayIndex] = {}
        for f in spec.floors:
            self.rays[f.id] = _FloorRayIndex(
                wall_segments(spec, f.id), decal_windows(spec, f.id), f.z_cm
            )
        # (x0, y0, x1, y1, ramp) per floor, for the per-tick mount check
        self.ramp_boxes: dict[int, list[tuple]] = {f.id: [] for f in spec.floors}
        for r in self.mesh.ramps:
            entry = (r.x0, r.y0, r.x1, r.y1, r)
            self.ramp_boxes[r.lower_floor].append(entry)
            self.ramp_boxes[r.upper_floor].append(entry)

    def floor_z(self, floor_id: int) -> float:
        return self.spec.floor(floor_id).z_cm


def init_session(
    world: World, eye_height_cm: float, seed: int,
) -> tuple[AgentState, SessionState]:
    """Place the agent at the first assignment's start, log its start event."""
    lo, hi = EYE_HEIGHT_RANGE_CM
    if not lo <= eye_height_cm <= hi:
        raise SimulationError(f"eye height {eye_height_cm} outside [{lo}, {hi}]")
    first = world.assignments[0]
    start = lookup_place(world.spec, first.start_label)
    yaw = 0.0
    if world.spawn_zone is not None and world.spawn_zone.yaw_deg is not None:
        yaw = world.spawn_zone.yaw_deg
    agent = AgentState(
        x=start.point[0],
        y=start.point[1],
        support_z=world.floor_z(start.floor),
        yaw=normalize_angle_deg(yaw),
        pitch=0.0,
        roll=0.0,
        eye_height_cm=float(eye_height_cm),
        floor=start.floor,
    )
    session = SessionState(assignments=world.assignments, rng_seed=int(seed))
    session.log("assignment_start 1", first.message)
    return agent, session


def step(world: World, agent: AgentState, session: SessionState,
         inp: InputFrame, dt_ms: int = TICK_MS) -> None:
    """Advance one fixed tick: move, update head, evaluate zones/goals."""
    if dt_ms != TICK_MS:
        raise SimulationError(f"fixed tick is {TICK_MS} ms")

    agent.yaw = normalize_angle_deg(inp.yaw)
    agent.pitch = inp.pitch
    agent.roll = inp.roll
    agent.moving = bool(inp.move_held)

    if inp.move_held:
        step_cm = MAX_SPEED_CM_S * dt_ms / 1000.0
        rad = math.radians(agent.yaw)
        cand = (agent.x + step_cm * math.cos(rad), agent.y + step_cm * math.sin(rad))
        if agent.on_ramp is not None:
            _move_on_ramp(world, agent, cand, step_cm)
        else:
            _move_on_floor(world, agent, cand, step_cm)

    session.clock_ms += dt_ms
    evaluate_zone_entry(world, agent, session)


def _move_on_ramp(world: World, agent: AgentState, cand, step_cm: float) -> None:
    ramp = agent.on_ramp
    nx = cand[0]
    ny = min(max(cand[1], ramp.y0), ramp.y1)
    if nx < ramp.x0 or nx > ramp.x1:
        exiting_min = nx < ramp.x0
        at_low = ramp.low_floor_at_min_x
        target = (
            ramp.lower_floor if (exiting_min == at_low) else ramp.upper_floor
        )
        p = project_to_walkable(world.mesh, target, (nx, ny))
        if dist((agent.x, agent.y), p) > step_cm + 1e-9:
            return  # blocked this tick; stay on the ramp edge
        agent.x, agent.y = p
        agent.floor = target
        agent.support_z = world.floor_z(target)
        agent.on_ramp = None
        agent.tri_hint = None
        return
    agent.x, agent.y = nx, ny
    agent.support_z = ramp.z_at(nx)


def _move_on_floor(world: World, agent: AgentState, cand, step_cm: float) -> None:
    cx, cy = cand
    for x0, y0, x1, y1, ramp in world.ramp_boxes[agent.floor]:
        if x0 <= cx <= x1 and y0 <= cy <= y1:
            agent.on_ramp = ramp
            agent.tri_hint = None
            agent.x = cx
            agent.y = min(max(cy, y0), y1)
            agent.support_z = ramp.z_at(cx)
            return

    fm = world.mesh.floor(agent.floor)
    tri = _locate_cached(fm, cand, agent.tri_hint)
    if tri is not None:
        agent.x, agent.y = cand
        agent.tri_hint = tri
        return

    pos = (agent.x, agent.y)
    p = project_to_walkable(world.mesh, agent.floor, cand)
    d = dist(pos, p)
    if d <= step_cm + 1e-9:
        agent.x, agent.y = p
        agent.tri_hint = fm.locate(p)
        return

    # the projection swung around a concave corner farther than one tick
    # of travel; first try a partial chord toward it, then wall tangents
    t = step_cm / d
    chord = (pos[0] + (p[0] - pos[0]) * t, pos[1] + (p[1] - pos[1]) * t)
    tri = _locate_cached(fm, chord, agent.tri_hint)
    if tri is not None:
        agent.x, agent.y = chord
        agent.tri_hint = tri
        return

    vx = cand[0] - pos[0]
    vy = cand[1] - pos[1]
    for (ax, ay), (bx, by) in _nearest_boundary_edges(fm, pos, 3):
        ex, ey = bx - ax, by - ay
        elen = math.hypot(ex, ey)
        if elen < 1e-9:
            continue
        ex /= elen
        ey /= elen
        along = vx * ex + vy * ey
        if abs(along) < 1e-9:
            continue
        slid = (pos[0] + ex * along, pos[1] + ey * along)
        tri = _locate_cached(fm, slid, agent.tri_hint)
        if tri is None:
            q = project_to_walkable(world.mesh, agent.floor, slid)
            if dist(pos, q) > abs(along) + 1e-9:
                continue
            slid = q
            tri = fm.locate(q)
        agent.x, agent.y = slid
        agent.tri_hint = tri
        return


def _nearest_boundary_edges(fm, p, k: int):
    from .geometry import segment_distance

    scored = sorted(
        ((segment_distance(p, a, b), (a, b)) for a, b in fm.boundary_edges),
        key=lambda s: s[0],
    )
    return [e for _, e in scored[:k]]


def _locate_cached(fm, p, hint: int | None) -> int | None:
    if hint is not None and hint < len(fm.triangles):
        if fm.contains_idx(hint, p):
            return hint
        for j, _ in fm.neighbors[hint]:
            if fm.contains_idx(j, p):
                return j
    return fm.locate(p)


def evaluate_zone_entry(world: World, agent: AgentState, session: SessionState) -> None:
    """Goal arrival first, then out-of-order trigger zones (edge-triggered)."""
    p = (agent.x, agent.y)

    if not session.finished and agent.on_ramp is None:
        a = session.active_assignment
        if a.goal_kind == "room":
            goal = world.goal_points[a.id]
            if agent.floor == goal.floor:
                dx = p[0] - goal.point[0]
                dy = p[1] - goal.point[1]
                if dx * dx + dy * dy <= GOAL_RADIUS_CM * GOAL_RADIUS_CM:
                    _complete_active(world, session)
        else:
            if agent.floor == 1:
                r2 = EXIT_ZONE_RADIUS_CM * EXIT_ZONE_RADIUS_CM
                for e in world.spec.exits:
                    dx = p[0] - e.position[0]
                    dy = p[1] - e.position[1]
                    if dx * dx + dy * dy <= r2:
                        session.chosen_exit = e.label
                        session.log(f"exit_reached {e.label}")
                        _complete_active(world, session)
                        break

    current_id = (
        session.assignments[session.assignment_index].id
        if not session.finished
        else len(session.assignments) + 1
    )
    for z, (bx0, by0, bx1, by1) in zip(world.trigger_zones, world.trigger_bboxes):
        inside = (
            agent.on_ramp is None
            and z.floor == agent.floor
            and bx0 <= p[0] <= bx1
            and by0 <= p[1] <= by1
            and z.contains(p)
        )
        was = session.zone_inside.get(z.id, False)
        session.zone_inside[z.id] = inside
        if inside and not was and z.assignment is not None and z.assignment > current_id:
            session.log(f"trigger_blocked {z.id}", f"assignment {z.assignment} not yet active")


def _complete_active(world: World, session: SessionState) -> None:
    a = session.assignments[session.assignment_index]
    session.log(f"assignment_complete {a.id}")
    session.assignment_index += 1
    if session.finished:
        session.log("session_finished")
        return
    nxt = session.assignments[session.assignment_index]
    session.log(f"assignment_start {nxt.id}", nxt.message)
    if nxt.goal_kind == "any_exit" and not session.alarm_active:
        session.alarm_active = True
        session.log("alarm_on", ALARM_TEXT)


def gaze_raycast(world: World, agent: AgentState) -> GazeHit:
    """Head-gaze proxy: nearest wall/decal crossing of the view ray."""
    idx = world.rays.get(agent.floor)
    if idx is None:
        return _NO_HIT
    yaw_rad = math.radians(agent.yaw)
    pitch_rad = math.radians(agent.pitch)
    dx = math.cos(yaw_rad)
    dy = math.sin(yaw_rad)
    hit = idx.cast(agent.x, agent.y, dx, dy)
    if hit is None:
        return _NO_HIT
    t_h, seg_i = hit
    cos_p = math.cos(pitch_rad)
    if cos_p <= 1e-9:
        return _NO_HIT
    t_3d = t_h / cos_p
    if t_3d > GAZE_RANGE_CM:
        return _NO_HIT
    eye_z = agent.support_z + agent.eye_height_cm
    z_hit = eye_z + t_h * math.tan(pitch_rad)
    if not (idx.z_cm <= z_hit <= idx.z_cm + STORY_HEIGHT_CM):
        return _NO_HIT
    seg = idx.segments[seg_i]
    hx = agent.x + dx * t_h
    hy = agent.y + dy * t_h
    for w in idx.windows_by_seg.get(seg_i, ()):
        if w["z_min"] <= z_hit <= w["z_max"]:
            along = math.hypot(hx - w["center"][0], hy - w["center"][1])
            if along <= w["half_width_cm"]:
                return GazeHit((hx, hy, z_hit), seg.surface_id, w["kind"], w["id"], t_3d)
    return GazeHit((hx, hy, z_hit), seg.surface_id, "wall", seg.surface_id, t_3d)
