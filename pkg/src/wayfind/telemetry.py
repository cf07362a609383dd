"""10 Hz telemetry sampling, CSV logs, input traces and deterministic replay.

The simulator runs at 50 Hz; telemetry decimates to every 5th tick (exact
100 ms spacing). Input traces are recorded at full tick rate in a sidecar
file so a session can be replayed bit-exactly even though the telemetry
log is decimated. Events are duplicated into their own CSV with details.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

from .simulation import (
    TICK_MS,
    AgentState,
    GazeHit,
    InputFrame,
    SessionState,
    World,
    gaze_raycast,
    init_session,
    quantize_for_sample,
    step,
)

SAMPLE_EVERY_TICKS = 5  # 50 Hz sim -> 10 Hz telemetry
SAMPLE_MS = TICK_MS * SAMPLE_EVERY_TICKS

CSV_HEADER = (
    "t_ms,x_cm,y_cm,z_cm,yaw_deg,pitch_deg,roll_deg,"
    "gaze_x_cm,gaze_y_cm,gaze_z_cm,gaze_target,assignment,event"
)
TRACE_HEADER = "tick,move_held,yaw_deg,pitch_deg,roll_deg"
EVENTS_HEADER = "t_ms,event,detail"


class TelemetryError(ValueError):
    pass


@dataclass(frozen=True)
class TelemetrySample:
    t_ms: int
    x_cm: float
    y_cm: float
    z_cm: float
    yaw_deg: float
    pitch_deg: float
    roll_deg: float
    gaze_x_cm: float | None
    gaze_y_cm: float | None
    gaze_z_cm: float | None
    gaze_target: str
    assignment: int
    event: str


@dataclass
class SessionLog:
    participant_id: str
    samples: list[TelemetrySample] = field(default_factory=list)
    events: list[tuple[int, str, str]] = field(default_factory=list)


@dataclass
class InputTrace:
    participant_id: str
    eye_height_cm: float
    seed: int
    fixture_hash: str
    frames: list[InputFrame] = field(default_factory=list)


def sample(agent: AgentState, session: SessionState, gaze: GazeHit) -> TelemetrySample:
    """Snapshot the current state; call on every 5th tick (and at t = 0)."""
    events = session.drain_events()
    if session.finished:
        assignment = session.assignments[-1].id
    else:
        assignment = session.active_assignment.id
    px, py, pz = agent.pos
    gx = gy = gz = None
    if gaze.point is not None:
        gx = round(gaze.point[0], 3)
        gy = round(gaze.point[1], 3)
        gz = round(gaze.point[2], 3)
    return TelemetrySample(
        t_ms=session.clock_ms,
        x_cm=round(px, 3),
        y_cm=round(py, 3),
        z_cm=round(pz, 3),
        yaw_deg=round(agent.yaw, 3),
        pitch_deg=round(agent.pitch, 3),
        roll_deg=round(agent.roll, 3),
        gaze_x_cm=gx,
        gaze_y_cm=gy,
        gaze_z_cm=gz,
        gaze_target=gaze.target_id if gaze.target_id is not None else "none",
        assignment=assignment,
        event=";".join(e for _, e, _ in events),
    )


def _fmt(v: float | None) -> str:
    return "" if v is None else f"{v:.3f}"


def format_row(s: TelemetrySample) -> str:
    return (
        f"{s.t_ms},{_fmt(s.x_cm)},{_fmt(s.y_cm)},{_fmt(s.z_cm)},"
        f"{_fmt(s.yaw_deg)},{_fmt(s.pitch_deg)},{_fmt(s.roll_deg)},"
        f"{_fmt(s.gaze_x_cm)},{_fmt(s.gaze_y_cm)},{_fmt(s.gaze_z_cm)},"
        f"{s.gaze_target},{s.assignment},{s.event}"
    )


class SessionLogWriter:
    """Streaming writer: flushes on every event row and at least once per second."""

    def __init__(self, fh: io.TextIOBase):
        self.fh = fh
        self.rows_since_flush = 0
        fh.write(CSV_HEADER + "\n")
        fh.flush()

    def write_sample(self, s: TelemetrySample):
        self.fh.write(format_row(s) + "\n")
        self.rows_since_flush += 1
        if s.event or self.rows_since_flush >= 10:
            self.fh.flush()
            self.rows_since_flush = 0

    def close(self):
        self.fh.flush()


def log_path(directory: str | Path, participant_id: str) -> Path:
    return Path(directory) / f"participant_{participant_id}.csv"


def write_log(log: SessionLog, directory: str | Path, overwrite: bool = False) -> Path:
    """Write telemetry + events CSVs; refuses to clobber unless told to."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = log_path(directory, log.participant_id)
    if path.exists() and not overwrite:
        raise TelemetryError(f"log exists: {path} (pass overwrite to replace)")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = SessionLogWriter(fh)
        for s in log.samples:
            w.write_sample(s)
        w.close()
    write_events(log, directory, overwrite=True)
    return path


def write_events(log: SessionLog, directory: str | Path, overwrite: bool = False) -> Path:
    path = Path(directory) / f"participant_{log.participant_id}.events.csv"
    if path.exists() and not overwrite:
        raise TelemetryError(f"events file exists: {path}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EVENTS_HEADER.split(","))
        for t, event, detail in log.events:
            w.writerow([t, event, detail])
    return path


def parse_log(path: str | Path) -> SessionLog:
    """Read a telemetry CSV back; loads the events sidecar when present."""
    path = Path(path)
    pid = path.stem
    if pid.startswith("participant_"):
        pid = pid[len("participant_"):]
    log = SessionLog(participant_id=pid)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise TelemetryError(f"malformed header in {path}")
        prev_t = None
        for row_no, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 13:
                raise TelemetryError(f"row {row_no}: expected 13 cells, got {len(parts)}")
            try:
                t = int(parts[0])
                nums = [float(v) for v in parts[1:7]]
                gaze = [None if v == "" else float(v) for v in parts[7:10]]
                assignment = int(parts[11])
            except ValueError as e:
                raise TelemetryError(f"row {row_no}: bad numeric cell ({e})") from None
            if prev_t is not None and t <= prev_t:
                raise TelemetryError(f"row {row_no}: non-monotone timestamp {t}")
            prev_t = t
            log.samples.append(
                TelemetrySample(
                    t_ms=t,
                    x_cm=nums[0], y_cm=nums[1], z_cm=nums[2],
                    yaw_deg=nums[3], pitch_deg=nums[4], roll_deg=nums[5],
                    gaze_x_cm=gaze[0], gaze_y_cm=gaze[1], gaze_z_cm=gaze[2],
                    gaze_target=parts[10],
                    assignment=assignment,
                    event=parts[12],
                )
            )
    events_path = path.with_name(f"participant_{pid}.events.csv")
    if events_path.exists():
        with open(events_path, encoding="utf-8") as fh:
            r = csv.reader(fh)
            header_row = next(r, None)
            if header_row != EVENTS_HEADER.split(","):
                raise TelemetryError(f"malformed header in {events_path}")
            for row in r:
                log.events.append((int(row[0]), row[1], row[2]))
    else:
        # reconstruct from sample event fields (timestamps quantized to 100 ms)
        for s in log.samples:
            for e in s.event.split(";"):
                if e:
                    log.events.append((s.t_ms, e, ""))
    return log


def trace_path(directory: str | Path, participant_id: str) -> Path:
    return Path(directory) / f"participant_{participant_id}.trace.csv"


def write_trace(trace: InputTrace, directory: str | Path, overwrite: bool = False) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = trace_path(directory, trace.participant_id)
    if path.exists() and not overwrite:
        raise TelemetryError(f"trace exists: {path}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# participant_id={trace.participant_id}\n")
        fh.write(f"# eye_height_cm={trace.eye_height_cm!r}\n")
        fh.write(f"# seed={trace.seed}\n")
        fh.write(f"# fixture_hash={trace.fixture_hash}\n")
        fh.write(TRACE_HEADER + "\n")
        for i, f in enumerate(trace.frames):
            fh.write(f"{i},{1 if f.move_held else 0},{f.yaw!r},{f.pitch!r},{f.roll!r}\n")
    return path


def parse_trace(path: str | Path) -> InputTrace:
    path = Path(path)
    meta: dict[str, str] = {}
    frames: list[InputFrame] = []
    with open(path, encoding="utf-8") as fh:
        line = fh.readline()
        while line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value
            line = fh.readline()
        if line.rstrip("\n") != TRACE_HEADER:
            raise TelemetryError(f"malformed trace header in {path}")
        for row_no, raw in enumerate(fh, start=1):
            raw = raw.rstrip("\n")
            if not raw:
                continue
            cells = raw.split(",")
            if len(cells) != 5:
                raise TelemetryError(f"trace row {row_no}: expected 5 cells")
            frames.append(
                InputFrame(
                    move_held=cells[1] == "1",
                    yaw=float(cells[2]),
                    pitch=float(cells[3]),
                    roll=float(cells[4]),
                )
            )
    try:
        return InputTrace(
            participant_id=meta["participant_id"],
            eye_height_cm=float(meta["eye_height_cm"]),
            seed=int(meta["seed"]),
            fixture_hash=meta["fixture_hash"],
            frames=frames,
        )
    except KeyError as e:
        raise TelemetryError(f"trace missing metadata {e}") from None


def run_session(
    world: World,
    controller,
    eye_height_cm: float,
    seed: int,
    participant_id: str,
    max_ms: int | None = None,
    stop_when_finished: bool = True,
    collect_gaze: bool = True,
) -> tuple[SessionLog, InputTrace]:
    """Canonical tick/sample loop shared by scripted runs and replay.

    ``controller(agent, session) -> InputFrame`` is called once per tick.
    Sampling happens at t = 0 and every 100 ms thereafter; after the
    session finishes the loop runs to the next sample boundary so the
    final events land in a row. ``collect_gaze=False`` logs blank gaze
    columns, for bulk cohorts where only trajectories matter.
    """
    from .simulation import _NO_HIT

    def gaze(agent):
        return gaze_raycast(world, agent) if collect_gaze else _NO_HIT

    agent, session = init_session(world, eye_height_cm, seed)
    log = SessionLog(participant_id=participant_id)
    trace = InputTrace(
        participant_id=participant_id,
        eye_height_cm=eye_height_cm,
        seed=seed,
        fixture_hash=world.spec.fixture_hash,
    )
    quantize_for_sample(agent)
    log.samples.append(sample(agent, session, gaze(agent)))
    while True:
        if max_ms is not None and session.clock_ms >= max_ms:
            break
        if (
            stop_when_finished
            and session.finished
            and session.clock_ms % SAMPLE_MS == 0
        ):
            break
        frame = controller(agent, session)
        trace.frames.append(frame)
        step(world, agent, session, frame)
        if session.clock_ms % SAMPLE_MS == 0:
            quantize_for_sample(agent)
            log.samples.append(sample(agent, session, gaze(agent)))
    log.events = list(session.event_log)
    return log, trace


def replay(world: World, trace: InputTrace, collect_gaze: bool = True) -> SessionLog:
    """Re-run a recorded input trace; must reproduce the original exactly."""
    if trace.fixture_hash != world.spec.fixture_hash:
        raise TelemetryError(
            "trace fixture hash mismatch: "
            f"{trace.fixture_hash[:12]} vs {world.spec.fixture_hash[:12]}"
        )
    from .simulation import _NO_HIT

    def gaze(agent):
        return gaze_raycast(world, agent) if collect_gaze else _NO_HIT

    agent, session = init_session(world, trace.eye_height_cm, trace.seed)
    log = SessionLog(participant_id=trace.participant_id)
    quantize_for_sample(agent)
    log.samples.append(sample(agent, session, gaze(agent)))
    for frame in trace.frames:
        step(world, agent, session, frame)
        if session.clock_ms % SAMPLE_MS == 0:
            quantize_for_sample(agent)
            log.samples.append(sample(agent, session, gaze(agent)))
    log.events = list(session.event_log)
    return log


def max_position_deviation(a: SessionLog, b: SessionLog) -> float:
    """Largest per-sample position difference, for replay fidelity checks."""
    n = min(len(a.samples), len(b.samples))
    worst = 0.0
    if len(a.samples) != len(b.samples):
        worst = math.inf
    for i in range(n):
        sa, sb = a.samples[i], b.samples[i]
        d = max(abs(sa.x_cm - sb.x_cm), abs(sa.y_cm - sb.y_cm), abs(sa.z_cm - sb.z_cm))
        worst = max(worst, d)
    return worst
