"""Deterministic wayfinding policies driving synthetic participants.

Four route policies stand in for the strategy families observed in
multi-level route choice: vertical-first (floor), horizontal-first
(direction), familiar-landmark chaining through the floor-2 hall
(central_point), and pure shortest-path evacuation (nearest_exit).
Policies act only through InputFrames, so every generated trajectory
inherits the simulator's speed cap and wall containment.
"""

from __future__ import annotations

import math
import os
import random
from dataclasses import dataclass

from .building import lookup_place
from .geometry import dist
from .navmesh import PathResult, project_to_walkable, shortest_path
from .simulation import (
    Assignment,
    EYE_HEIGHT_RANGE_CM,
    GOAL_RADIUS_CM,
    InputFrame,
    World,
)
from .building import EXIT_ZONE_RADIUS_CM
from .telemetry import InputTrace, SessionLog, run_session

POLICY_KINDS = ("central_point", "direction", "floor", "nearest_exit")
WAYPOINT_ARRIVE_CM = 20.0
MAX_NOISE_CM = 100.0
DEFAULT_NOISE_CM = 30.0
SESSION_CAP_MS = 1_800_000  # safety stop for a stuck route


class AgentError(ValueError):
    pass


@dataclass(frozen=True)
class PolicySpec:
    kind: str
    jitter_seed: int = 0
    waypoint_noise_cm: float = DEFAULT_NOISE_CM

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise AgentError(f"unknown policy kind {self.kind}")
        if not 0.0 <= self.waypoint_noise_cm <= MAX_NOISE_CM:
            raise AgentError("waypoint noise must be within [0, 100] cm")


@dataclass
class RoutePlan:
    waypoints: list[tuple[float, float]]
    planned_length_cm: float
    floors_visited: tuple[int, ...]
    goal_radius_cm: float


def _pose_point(world: World, label: str):
    p = lookup_place(world.spec, label)
    return p.floor, (p.point[0], p.point[1])


def _wide_crossings(world: World, floor_id: int):
    """Wide cross-corridor polygons (the two broad intersections)."""
    out = []
    for w in world.spec.floor(floor_id).walkable:
        if w.kind != "cross_corridor":
            continue
        xs = [p[0] for p in w.points]
        if max(xs) - min(xs) > 250.0:
            out.append(w)
    return out


def _poly_center(points):
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    return ((min(xs) + max(xs)) / 2.0, (min(ys) + max(ys)) / 2.0)


def _central_zone(world: World):
    for z in world.spec.zones:
        if z.purpose == "central_point":
            return z
    return None


def _stair_labels(world: World) -> list[str]:
    return sorted({s.label for s in world.spec.staircases})


def _stair_x(world: World, label: str) -> float:
    for s in world.spec.staircases:
        if s.label == label:
            return (s.ramp[0][0] + s.ramp[-1][0]) / 2.0
    raise AgentError(f"unknown staircase {label}")


def _stair_node_on_floor(world: World, label: str, floor_id: int, toward_floor: int):
    """Ramp endpoint on floor_id of the flight leading toward toward_floor."""
    for link in world.mesh.stair_links:
        if link.label != label:
            continue
        if link.lower_floor == floor_id and toward_floor > floor_id:
            return link.lower_node
        if link.upper_floor == floor_id and toward_floor < floor_id:
            return link.upper_node
    raise AgentError(f"staircase {label} does not reach floor {floor_id}")


def _nearest_stair(world: World, x: float) -> str:
    labels = _stair_labels(world)
    return min(labels, key=lambda lab: (abs(_stair_x(world, lab) - x), lab))


def _concat_paths(world: World, poses) -> tuple[list[tuple[float, float]], float, list[int]]:
    """Chain shortest paths through the milestone poses."""
    waypoints: list[tuple[float, float]] = []
    total = 0.0
    floors: list[int] = []
    for a, b in zip(poses, poses[1:]):
        leg: PathResult = shortest_path(world.mesh, a, b)
        total += leg.length_cm
        for f in leg.floors_visited:
            if not floors or floors[-1] != f:
                floors.append(f)
        for x, y, _ in leg.waypoints:
            if not waypoints or dist(waypoints[-1], (x, y)) > 1e-9:
                waypoints.append((x, y))
    return waypoints, total, floors


def _truncate_end(waypoints: list[tuple[float, float]], cut_cm: float) -> float:
    """Trim the final cut_cm of the polyline in place; returns removed length."""
    removed = 0.0
    while len(waypoints) >= 2 and removed < cut_cm:
        a = waypoints[-2]
        b = waypoints[-1]
        seg = dist(a, b)
        need = cut_cm - removed
        if seg <= need + 1e-9:
            waypoints.pop()
            removed += seg
        else:
            t = (seg - need) / seg
            waypoints[-1] = (a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t)
            removed += need
    return removed


def plan_route(
    policy: PolicySpec,
    world: World,
    assignment: Assignment,
    from_pose=None,
) -> RoutePlan:
    """Milestone chain per policy kind, smoothed legs, jittered waypoints."""
    if from_pose is None:
        start = _pose_point(world, assignment.start_label)
    else:
        start = from_pose

    standpoint = None
    if assignment.goal_kind == "any_exit":
        goal, goal_radius = _pick_exit_goal(world, start), EXIT_ZONE_RADIUS_CM
        # approach the exit door head-on: step to a point facing it first,
        # so the last leg crosses the corridor instead of hugging the wall
        gx, gy = goal[1]
        for dy in (1.2 * EXIT_ZONE_RADIUS_CM, -1.2 * EXIT_ZONE_RADIUS_CM):
            cand = (gx, gy + dy)
            if world.mesh.floor(goal[0]).locate(cand) is not None:
                standpoint = (goal[0], cand)
                break
    else:
        goal, goal_radius = _pose_point(world, assignment.goal_label), GOAL_RADIUS_CM

    start_floor, start_pt = start
    goal_floor, goal_pt = goal
    floor_change = start_floor != goal_floor

    poses = [start]
    if policy.kind == "direction" and floor_change:
        anchor = project_to_walkable(world.mesh, start_floor, goal_pt)
        poses.append((start_floor, anchor))
        lab = _nearest_stair(world, goal_pt[0])
        poses.append((goal_floor, _stair_node_on_floor(world, lab, goal_floor, start_floor)))
    elif policy.kind == "floor" and floor_change:
        lab = _nearest_stair(world, start_pt[0])
        poses.append((goal_floor, _stair_node_on_floor(world, lab, goal_floor, start_floor)))
    elif policy.kind == "central_point":
        zone = _central_zone(world)
        wides = _wide_crossings(world, start_floor)
        if wides and zone is not None:
            zc = zone.centroid
            wide = min(wides, key=lambda w: abs(_poly_center(w.points)[0] - zc[0]))
            poses.append((start_floor, _poly_center(wide.points)))
            if floor_change or start_floor == zone.floor:
                poses.append((zone.floor, zc))
    if standpoint is not None:
        poses.append(standpoint)
    poses.append(goal)

    waypoints, total, floors = _concat_paths(world, poses)
    delta = _apply_clearance(world, waypoints, floors)
    # stop the route inside the arrival radius: the follower gives up 20 cm
    # early, so cut less than the radius to guarantee goal crossing
    cut = max(goal_radius - WAYPOINT_ARRIVE_CM - 5.0, 0.0)
    _truncate_end(waypoints, cut)
    plan = RoutePlan(
        waypoints=waypoints,
        planned_length_cm=total + delta - goal_radius,
        floors_visited=tuple(floors),
        goal_radius_cm=goal_radius,
    )
    _jitter(plan, world, policy)
    return plan


WALL_CLEARANCE_CM = 12.0


def _apply_clearance(world: World, waypoints, floors) -> float:
    """Push interior funnel corners off their wall vertex.

    Funnel output hugs wall corners exactly; steering along it can wedge
    the agent into concave pockets (door and landing mouths). Offsetting
    each corner a few cm into the walkable wedge keeps followers clear.
    Returns the 2D length change.
    """
    if len(waypoints) < 3:
        return 0.0
    before = sum(dist(a, b) for a, b in zip(waypoints, waypoints[1:]))
    cache: dict[int, int | None] = {}
    for i in range(1, len(waypoints) - 1):
        p = waypoints[i]
        if any(r.contains_plan(p) for r in world.mesh.ramps):
            continue
        a = waypoints[i - 1]
        b = waypoints[i + 1]
        ua = (a[0] - p[0], a[1] - p[1])
        ub = (b[0] - p[0], b[1] - p[1])
        la = math.hypot(*ua)
        lb = math.hypot(*ub)
        if la < 1e-9 or lb < 1e-9:
            continue
        hx = ua[0] / la + ub[0] / lb
        hy = ua[1] / la + ub[1] / lb
        h = math.hypot(hx, hy)
        if h < 1e-6:
            continue  # straight through, nothing to clear
        # walkable side is opposite the bend wedge
        cand = (p[0] - hx / h * WALL_CLEARANCE_CM, p[1] - hy / h * WALL_CLEARANCE_CM)
        floor_id = None
        for fid in floors:
            if world.mesh.floor(fid).locate(p) is not None:
                floor_id = fid
                break
        if floor_id is None:
            continue
        fm = world.mesh.floor(floor_id)
        if fm.locate(cand) is None:
            continue
        # the moved corner must not turn its adjacent legs into wall-crossers
        if fm.locate(a) is not None and not _segment_clear(fm, a, cand):
            continue
        if fm.locate(b) is not None and not _segment_clear(fm, cand, b):
            continue
        waypoints[i] = cand
    after = sum(dist(a, b) for a, b in zip(waypoints, waypoints[1:]))
    return after - before


def _pick_exit_goal(world: World, start) -> tuple[int, tuple[float, float]]:
    """Nearest exit by mesh path length; ties break on label order."""
    best = None
    for e in sorted(world.spec.exits, key=lambda e: e.label):
        try:
            length = shortest_path(world.mesh, start, (e.floor, e.position)).length_cm
        except Exception:
            continue
        if best is None or length < best[0] - 1e-9:
            best = (length, e)
    if best is None:
        raise AgentError("no reachable exit")
    e = best[1]
    return (e.floor, e.position)


def nearest_exit_label(world: World, start) -> str:
    best = None
    for e in sorted(world.spec.exits, key=lambda e: e.label):
        length = shortest_path(world.mesh, start, (e.floor, e.position)).length_cm
        if best is None or length < best[0] - 1e-9:
            best = (length, e.label)
    return best[1]


def _jitter(plan: RoutePlan, world: World, policy: PolicySpec):
    """Lateral uniform noise on interior waypoints, re-projected on the mesh."""
    if policy.waypoint_noise_cm <= 0.0 or len(plan.waypoints) < 3:
        return
    rng = random.Random(policy.jitter_seed)
    floor_of: dict[int, int] = {}
    # waypoints sitting inside a ramp strip keep their exact position
    for i in range(1, len(plan.waypoints) - 1):
        p = plan.waypoints[i]
        if any(r.contains_plan(p) for r in world.mesh.ramps):
            continue
        prev = plan.waypoints[i - 1]
        nxt = plan.waypoints[i + 1]
        dx = nxt[0] - prev[0]
        dy = nxt[1] - prev[1]
        n = math.hypot(dx, dy)
        if n < 1e-9:
            continue
        off = rng.uniform(-policy.waypoint_noise_cm, policy.waypoint_noise_cm)
        cand = (p[0] - dy / n * off, p[1] + dx / n * off)
        floor_id = _floor_of_waypoint(world, plan, i, floor_of)
        if floor_id is None:
            continue
        # drop jitters that would land beyond a wall or drag an adjacent
        # leg through one; followers wedge on wall-crossing aim lines
        fm = world.mesh.floor(floor_id)
        if fm.locate(cand) is None:
            continue
        if fm.locate(prev) is not None and not _segment_clear(fm, prev, cand):
            continue
        if fm.locate(nxt) is not None and not _segment_clear(fm, cand, nxt):
            continue
        plan.waypoints[i] = cand


def _floor_of_waypoint(world: World, plan: RoutePlan, i: int, cache: dict) -> int | None:
    if i in cache:
        return cache[i]
    p = plan.waypoints[i]
    found = None
    for fid in plan.floors_visited:
        if world.mesh.floor(fid).locate(p) is not None:
            found = fid
            break
    cache[i] = found
    return found


def _segment_clear(fm, a, b) -> bool:
    """True when the segment crosses no wall of the floor mesh."""
    from .navmesh import _crosses_wall

    return not _crosses_wall(fm, a, b)


class RouteFollower:
    """Aims at the next waypoint, holds move until within 20 cm of it.

    Advancing past a corner is lazy: the index only moves on when the next
    waypoint is actually visible from here, so a shallow-angle corner never
    leaves the agent aiming through the wall it just rounded.
    """

    def __init__(self, plan: RoutePlan, world: World | None = None):
        self.plan = plan
        self.world = world
        self.index = 0

    def _next_visible(self, agent, i: int) -> bool:
        if self.world is None or agent.on_ramp is not None:
            return True
        wps = self.plan.waypoints
        if i + 1 >= len(wps):
            return True
        fm = self.world.mesh.floor(agent.floor)
        nxt = wps[i + 1]
        if fm.locate(nxt) is None:
            return True  # other floor or ramp interior; nothing to check
        return _segment_clear(fm, (agent.x, agent.y), nxt)

    def input_for(self, agent) -> InputFrame:
        wps = self.plan.waypoints
        p = (agent.x, agent.y)
        # the forced radius must exceed one tick of travel (2.8 cm) or the
        # follower can orbit a waypoint it is not allowed to advance past
        forced = 3.0
        while self.index < len(wps):
            d = dist(p, wps[self.index])
            if d <= forced:
                self.index += 1
                continue
            if d <= WAYPOINT_ARRIVE_CM and self._next_visible(agent, self.index):
                self.index += 1
                continue
            break
        if self.index >= len(wps):
            return InputFrame(False, agent.yaw, 0.0, 0.0)
        target = wps[self.index]
        yaw = math.degrees(math.atan2(target[1] - p[1], target[0] - p[0]))
        return InputFrame(True, yaw, 0.0, 0.0)

    @property
    def done(self) -> bool:
        return self.index >= len(self.plan.waypoints)


def policy_step(follower: RouteFollower, agent) -> InputFrame:
    return follower.input_for(agent)


class PolicyController:
    """Per-session driver: replans at each assignment transition."""

    def __init__(self, world: World, policy: PolicySpec):
        self.world = world
        self.policy = policy
        self.follower: RouteFollower | None = None
        self.planned_index = -1
        self.plans: dict[int, RoutePlan] = {}

    def __call__(self, agent, session) -> InputFrame:
        if session.finished:
            return InputFrame(False, agent.yaw, 0.0, 0.0)
        if session.assignment_index != self.planned_index:
            a = session.active_assignment
            seed = self.policy.jitter_seed * 1000 + a.id
            per_assignment = PolicySpec(
                self.policy.kind, seed, self.policy.waypoint_noise_cm
            )
            plan = plan_route(
                per_assignment, self.world, a, from_pose=(agent.floor, (agent.x, agent.y))
            )
            self.plans[a.id] = plan
            self.follower = RouteFollower(plan, self.world)
            self.planned_index = session.assignment_index
        return self.follower.input_for(agent)


def run_policy_session(
    world: World,
    policy: PolicySpec,
    seed: int,
    participant_id: str | None = None,
    eye_height_cm: float = 170.0,
    max_ms: int | None = None,
    stop_when_finished: bool = True,
    collect_gaze: bool = True,
) -> tuple[SessionLog, InputTrace, PolicyController]:
    pid = participant_id if participant_id is not None else f"{policy.kind}_{seed}"
    controller = PolicyController(world, PolicySpec(policy.kind, seed, policy.waypoint_noise_cm))
    log, trace = run_session(
        world,
        controller,
        eye_height_cm=eye_height_cm,
        seed=seed,
        participant_id=pid,
        max_ms=max_ms if max_ms is not None else SESSION_CAP_MS,
        stop_when_finished=stop_when_finished,
        collect_gaze=collect_gaze,
    )
    return log, trace, controller


_worker_world: World | None = None


def _cohort_init(spec):
    global _worker_world
    _worker_world = World(spec)


def _cohort_run(task) -> SessionLog:
    kind, noise, seed, pid, gaze = task
    log, _, _ = run_policy_session(
        _worker_world, PolicySpec(kind, seed, noise), seed=seed, participant_id=pid,
        collect_gaze=gaze,
    )
    return log


def generate_cohort(
    world: World,
    n: int,
    mix: list[PolicySpec] | PolicySpec,
    base_seed: int = 1,
    workers: int | None = None,
    collect_gaze: bool = True,
) -> list[SessionLog]:
    """n complete sessions cycling through the policy mix, distinct seeds.

    Sessions are independent, so ``workers`` > 1 fans them out over a
    process pool; results are identical to the serial run.
    """
    if n < 1:
        raise AgentError("cohort size must be >= 1")
    policies = mix if isinstance(mix, list) else [mix]
    tasks = []
    for i in range(n):
        p = policies[i % len(policies)]
        tasks.append(
            (p.kind, p.waypoint_noise_cm, base_seed + i, f"{p.kind}_{i:03d}", collect_gaze)
        )

    if workers and workers > 1 and n > 1:
        import multiprocessing as mp

        ctx = mp.get_context("fork" if hasattr(os, "fork") else "spawn")
        with ctx.Pool(workers, initializer=_cohort_init, initargs=(world.spec,)) as pool:
            return list(pool.map(_cohort_run, tasks, chunksize=1))

    logs = []
    for task in tasks:
        kind, noise, seed, pid, gaze = task
        log, _, _ = run_policy_session(
            world, PolicySpec(kind, seed, noise), seed=seed, participant_id=pid,
            collect_gaze=gaze,
        )
        logs.append(log)
    return logs
