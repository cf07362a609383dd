"""Post-hoc pipeline over telemetry logs.

Splits sessions per assignment, computes time-spent statistics, classifies
multi-level route strategies, tallies staircase/exit choices against a
nearest-exit oracle, and aggregates gaze heatmaps and target attention.
All functions are pure over parsed logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .building import STORY_HEIGHT_CM
from .geometry import dist
from .navmesh import shortest_path
from .simulation import World
from .telemetry import SessionLog, TelemetrySample

# classification thresholds; not taken from any reference data, chosen to
# separate the scripted policies with a wide margin (configurable)
H_STAR_DIRECTION = 0.7
H_STAR_FLOOR = 0.3
DETOUR_CENTRAL = 1.25
DETOUR_CENTRAL_SAME_FLOOR = 1.1
SWITCH_DIRECTION = 0.25
DEFAULT_HEATMAP_CELL_CM = 25.0


class AnalysisError(ValueError):
    pass


@dataclass
class AssignmentSplit:
    assignment_id: int
    samples: list[TelemetrySample]
    start_ms: int
    end_ms: int | None  # None when the log was truncated mid-assignment
    complete: bool

    @property
    def duration_s(self) -> float | None:
        if self.end_ms is None:
            return None
        return (self.end_ms - self.start_ms) / 1000.0


@dataclass(frozen=True)
class StrategyLabel:
    label: str  # central_point | direction | floor | mixed
    h_star: float | None
    detour_ratio: float
    visited_central: bool
    switch_fraction: float | None


@dataclass
class HeatmapGrid:
    floor: int
    cell_cm: float
    origin: tuple[float, float]
    counts: np.ndarray  # [ny, nx] ints

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def split_by_assignment(log: SessionLog) -> list[AssignmentSplit]:
    """One split per started assignment; complete splits partition samples."""
    starts: dict[int, int] = {}
    ends: dict[int, int] = {}
    for t, event, _ in log.events:
        parts = event.split()
        if parts[0] == "assignment_start":
            starts[int(parts[1])] = t
        elif parts[0] == "assignment_complete":
            aid = int(parts[1])
            if aid not in starts:
                raise AnalysisError(f"assignment {aid} completed without a start event")
            ends[aid] = t

    splits: list[AssignmentSplit] = []
    order = sorted(starts)
    for aid in order:
        t0 = starts[aid]
        t1 = ends.get(aid)
        complete = t1 is not None
        last_id = order[-1]
        samples = []
        for s in log.samples:
            if s.t_ms < t0:
                continue
            if t1 is not None and aid != last_id:
                if s.t_ms < t1:
                    samples.append(s)
            else:
                # the final slice keeps everything: the arrival row lands on
                # the next 100 ms boundary, just after the completion event
                samples.append(s)
        splits.append(
            AssignmentSplit(
                assignment_id=aid,
                samples=samples,
                start_ms=t0,
                end_ms=t1,
                complete=complete,
            )
        )
    return splits


@dataclass
class TimeSpentReport:
    per_session: dict[str, dict[int, float]]  # participant -> assignment -> s
    totals: dict[str, float]
    assignment_stats: dict[int, tuple[float, float]]  # mean, sd
    total_stats: tuple[float, float]


def _mean_sd(values: list[float]) -> tuple[float, float]:
    if not values:
        return (math.nan, math.nan)
    mean = sum(values) / len(values)
    if len(values) < 2:
        return (mean, 0.0)
    var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return (mean, math.sqrt(var))


def time_spent(splits_by_log: dict[str, list[AssignmentSplit]]) -> TimeSpentReport:
    """Durations per assignment plus cohort mean/SD (sample SD, n-1)."""
    per_session: dict[str, dict[int, float]] = {}
    totals: dict[str, float] = {}
    for pid, splits in splits_by_log.items():
        durations = {
            s.assignment_id: s.duration_s for s in splits if s.duration_s is not None
        }
        per_session[pid] = durations
        if durations:
            totals[pid] = sum(durations.values())
    ids = sorted({aid for d in per_session.values() for aid in d})
    assignment_stats = {
        aid: _mean_sd([d[aid] for d in per_session.values() if aid in d]) for aid in ids
    }
    return TimeSpentReport(
        per_session=per_session,
        totals=totals,
        assignment_stats=assignment_stats,
        total_stats=_mean_sd(list(totals.values())),
    )


def _eye_height_of(world: World, split: AssignmentSplit, start_floor: int) -> float:
    return split.samples[0].z_cm - world.floor_z(start_floor)


def _support_z(sample: TelemetrySample, eye: float) -> float:
    return sample.z_cm - eye


def _floor_of_z(world: World, z: float) -> int | None:
    best = None
    for f in world.spec.floors:
        if best is None or abs(f.z_cm - z) < abs(world.floor_z(best) - z):
            best = f.id
    if best is not None and abs(world.floor_z(best) - z) <= 1.0:
        return best
    return None


def _arc_length_3d(samples: list[TelemetrySample]) -> float:
    total = 0.0
    for a, b in zip(samples, samples[1:]):
        total += math.sqrt(
            (b.x_cm - a.x_cm) ** 2 + (b.y_cm - a.y_cm) ** 2 + (b.z_cm - a.z_cm) ** 2
        )
    return total


def _endpoints(world: World, split: AssignmentSplit):
    """Canonical (floor, point) endpoints; evacuations target the chosen exit."""
    from .building import lookup_place

    a = world.assignments[split.assignment_id - 1]
    start = lookup_place(world.spec, a.start_label)
    if a.goal_kind == "any_exit":
        label = None
        for s in split.samples:
            for e in s.event.split(";"):
                if e.startswith("exit_reached"):
                    label = e.split()[1]
        if label is None:
            label = nearest_exit_label_cached(world, (start.floor, start.point[:2]))
        exit_def = world.spec.exit_by_label(label)
        goal_floor, goal_pt = exit_def.floor, exit_def.position
    else:
        g = lookup_place(world.spec, a.goal_label)
        goal_floor, goal_pt = g.floor, (g.point[0], g.point[1])
    return (start.floor, (start.point[0], start.point[1])), (goal_floor, goal_pt)


_NEAREST_CACHE: dict[tuple[int, float, float], str] = {}


def nearest_exit_label_cached(world: World, start) -> str:
    from .agents import nearest_exit_label

    key = (id(world), round(start[1][0], 1), round(start[1][1], 1))
    if key not in _NEAREST_CACHE:
        _NEAREST_CACHE[key] = nearest_exit_label(world, start)
    return _NEAREST_CACHE[key]


def classify_strategy(split: AssignmentSplit, world: World) -> StrategyLabel:
    """Rule-based multi-level strategy classification.

    Floor-change assignments: horizontal progress at the moment half the
    vertical change is done (h*), detour ratio, and central-zone visits.
    Same-floor assignments: where the first main-corridor switch happens.
    """
    if len(split.samples) < 2:
        return StrategyLabel("mixed", None, 1.0, False, None)

    (start_floor, start_pt), (goal_floor, goal_pt) = _endpoints(world, split)
    eye = _eye_height_of(world, split, start_floor)
    samples = split.samples

    spath = shortest_path(world.mesh, (start_floor, start_pt), (goal_floor, goal_pt))
    arc = _arc_length_3d(samples)
    detour = arc / spath.length_cm if spath.length_cm > 0 else 1.0

    central = next((z for z in world.spec.zones if z.purpose == "central_point"), None)
    visited_central = False
    if central is not None:
        cz = world.floor_z(central.floor)
        for s in samples:
            if abs(_support_z(s, eye) - cz) <= 1.0 and central.contains((s.x_cm, s.y_cm)):
                visited_central = True
                break

    ax = goal_pt[0] - start_pt[0]
    ay = goal_pt[1] - start_pt[1]
    axis_len2 = ax * ax + ay * ay

    def progress(s: TelemetrySample) -> float:
        if axis_len2 <= 0:
            return 0.0
        t = ((s.x_cm - start_pt[0]) * ax + (s.y_cm - start_pt[1]) * ay) / axis_len2
        return min(max(t, 0.0), 1.0)

    if start_floor != goal_floor:
        dz_total = world.floor_z(goal_floor) - world.floor_z(start_floor)
        z0 = samples[0].z_cm
        h_star = None
        for s in samples:
            if abs(s.z_cm - z0) >= 0.5 * abs(dz_total):
                h_star = progress(s)
                break
        if h_star is None:
            return StrategyLabel("mixed", None, detour, visited_central, None)
        if detour >= DETOUR_CENTRAL and visited_central:
            return StrategyLabel("central_point", h_star, detour, visited_central, None)
        if h_star >= H_STAR_DIRECTION:
            return StrategyLabel("direction", h_star, detour, visited_central, None)
        if h_star <= H_STAR_FLOOR:
            return StrategyLabel("floor", h_star, detour, visited_central, None)
        return StrategyLabel("mixed", h_star, detour, visited_central, None)

    # same floor: look for the first switch between the two main corridors
    corridors = [
        w for w in world.spec.floor(start_floor).walkable if w.kind == "main_corridor"
    ]

    def corridor_of(s: TelemetrySample) -> str | None:
        from .geometry import point_in_polygon

        for c in corridors:
            if point_in_polygon((s.x_cm, s.y_cm), c.points):
                return c.id
        return None

    last = None
    switch_fraction = None
    switch_span: tuple[int, int] | None = None
    prev_idx = 0
    for i, s in enumerate(samples):
        cid = corridor_of(s)
        if cid is None:
            continue
        if last is not None and cid != last:
            switch_fraction = progress(s)
            switch_span = (prev_idx, i)
            break
        last = cid
        prev_idx = i
    if switch_fraction is None:
        return StrategyLabel("mixed", None, detour, visited_central, None)

    wide_switch = False
    wides = [
        w
        for w in world.spec.floor(start_floor).walkable
        if w.kind == "cross_corridor"
        and max(p[0] for p in w.points) - min(p[0] for p in w.points) > 250.0
    ]
    from .geometry import point_in_polygon

    for s in samples[switch_span[0]: switch_span[1] + 1]:
        if any(point_in_polygon((s.x_cm, s.y_cm), w.points) for w in wides):
            wide_switch = True
            break

    if wide_switch and detour >= DETOUR_CENTRAL_SAME_FLOOR:
        return StrategyLabel("central_point", None, detour, visited_central, switch_fraction)
    if switch_fraction <= SWITCH_DIRECTION:
        return StrategyLabel("direction", None, detour, visited_central, switch_fraction)
    return StrategyLabel("mixed", None, detour, visited_central, switch_fraction)


@dataclass
class ChoiceTally:
    exit_counts: dict[str, int]
    staircase_counts: dict[str, int]
    nearest_exit_agreement: float
    completed: int
    excluded: list[str] = field(default_factory=list)


def choice_tally(logs: list[SessionLog], world: World) -> ChoiceTally:
    """Exit and staircase usage over completed evacuations."""
    exit_counts: dict[str, int] = {e.label: 0 for e in world.spec.exits}
    stair_counts: dict[str, int] = {}
    excluded = []
    agree = 0
    completed = 0
    evac = world.assignments[-1]
    from .building import lookup_place

    start = lookup_place(world.spec, evac.start_label)
    nearest = nearest_exit_label_cached(world, (start.floor, start.point[:2]))

    for log in logs:
        label = None
        for _, event, _ in log.events:
            if event.startswith("exit_reached"):
                label = event.split()[1]
        if label is None:
            excluded.append(log.participant_id)
            continue
        completed += 1
        exit_counts[label] = exit_counts.get(label, 0) + 1
        if label == nearest:
            agree += 1
        for lab in _stair_traversals(log, world):
            stair_counts[lab] = stair_counts.get(lab, 0) + 1

    return ChoiceTally(
        exit_counts=exit_counts,
        staircase_counts=stair_counts,
        nearest_exit_agreement=(agree / completed) if completed else 0.0,
        completed=completed,
        excluded=excluded,
    )


def _stair_traversals(log: SessionLog, world: World) -> list[str]:
    """Staircase labels in traversal order, detected from off-floor z runs."""
    if not log.samples:
        return []
    # derive eye height from the spawn sample (assignment 1 starts on its floor)
    from .building import lookup_place

    start = lookup_place(world.spec, world.assignments[0].start_label)
    eye = log.samples[0].z_cm - world.floor_z(start.floor)

    out: list[str] = []
    active: str | None = None
    for s in log.samples:
        z = s.z_cm - eye
        on_floor = _floor_of_z(world, z) is not None
        if on_floor:
            active = None
            continue
        ramp = None
        for r in world.mesh.ramps:
            lo = world.floor_z(r.lower_floor)
            hi = world.floor_z(r.upper_floor)
            if lo - 1.0 <= z <= hi + 1.0 and r.contains_plan((s.x_cm, s.y_cm)):
                ramp = r.label
                break
        if ramp is not None and ramp != active:
            out.append(ramp)
            active = ramp
    return out


def gaze_heatmap(
    logs: list[SessionLog], floor: int, cell_cm: float, world: World
) -> HeatmapGrid:
    """Gaze-hit counts on a uniform grid covering the floor's extent."""
    if not 10.0 <= cell_cm <= 200.0:
        raise AnalysisError("cell size must be within [10, 200] cm")
    pts = [p for w in world.spec.floor(floor).walkable for p in w.points]
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    origin = (min(xs), min(ys))
    nx = max(1, int(math.ceil((max(xs) - origin[0]) / cell_cm)))
    ny = max(1, int(math.ceil((max(ys) - origin[1]) / cell_cm)))
    counts = np.zeros((ny, nx), dtype=np.int64)
    z0 = world.floor_z(floor)
    top = max(f.z_cm for f in world.spec.floors)
    z1 = z0 + STORY_HEIGHT_CM
    for log in logs:
        for s in log.samples:
            if s.gaze_x_cm is None:
                continue
            # half-open bands partition hits between floors; the topmost
            # band closes so ceiling-height hits on the top floor count
            if not (z0 <= s.gaze_z_cm < z1 or (z0 == top and s.gaze_z_cm == z1)):
                continue
            # walls sit exactly on the bbox edge; clamp those into the rim cells
            ix = min(int((s.gaze_x_cm - origin[0]) / cell_cm), nx - 1)
            iy = min(int((s.gaze_y_cm - origin[1]) / cell_cm), ny - 1)
            if 0 <= ix and 0 <= iy:
                counts[iy, ix] += 1
    return HeatmapGrid(floor=floor, cell_cm=cell_cm, origin=origin, counts=counts)


def gaze_target_kind(target_id: str) -> str:
    if target_id == "none":
        return "none"
    if target_id.startswith("room:"):
        return "room_door"
    if target_id.startswith("sign:"):
        return target_id.split(":")[1]
    return "wall"


def gaze_target_tally(logs: list[SessionLog]) -> dict[int, dict[str, int]]:
    """Counts of gaze target kinds per assignment (10 Hz samples)."""
    out: dict[int, dict[str, int]] = {}
    for log in logs:
        for s in log.samples:
            kind = gaze_target_kind(s.gaze_target)
            if kind == "none":
                continue
            bucket = out.setdefault(s.assignment, {})
            bucket[kind] = bucket.get(kind, 0) + 1
    return out


@dataclass
class SpeedStats:
    mean_cm_s: float
    max_cm_s: float
    histogram: list[int]  # 10 cm/s bins from 0 to 150+


def speed_stats(split: AssignmentSplit) -> SpeedStats:
    """Instantaneous horizontal speeds between consecutive samples."""
    samples = split.samples
    if len(samples) < 2:
        raise AnalysisError("need at least two samples for speeds")
    speeds = []
    for a, b in zip(samples, samples[1:]):
        dt = (b.t_ms - a.t_ms) / 1000.0
        speeds.append(math.hypot(b.x_cm - a.x_cm, b.y_cm - a.y_cm) / dt)
    hist = [0] * 16
    for v in speeds:
        hist[min(int(v // 10), 15)] += 1
    return SpeedStats(
        mean_cm_s=sum(speeds) / len(speeds),
        max_cm_s=max(speeds),
        histogram=hist,
    )
