"""Live experiment session service.

Hosts sessions over newline-delimited JSON, either as WebSocket text
frames (one message per frame) or raw TCP lines. The server is
authoritative: clients send inputs, the server integrates fixed 20 ms
ticks on its own clock with sample-and-hold inputs, emits state at 10 Hz,
and persists telemetry/trace/events CSVs atomically on session end.
"""

from __future__ import annotations

import asyncio
import csv
import json
import os
import secrets
import time
from dataclasses import dataclass, field
from pathlib import Path

from .simulation import (
    ALARM_TEXT,
    InputFrame,
    SimulationError,
    World,
    gaze_raycast,
    init_session,
    quantize_for_sample,
    step,
)
from .telemetry import (
    CSV_HEADER,
    EVENTS_HEADER,
    InputTrace,
    SessionLog,
    format_row,
    sample,
    write_trace,
)

DEFAULT_IDLE_TIMEOUT_S = 120.0
MAX_CATCHUP_TICKS = 250  # 5 s of backlog at most; beyond that time is dropped


class ProtocolError(ValueError):
    pass


@dataclass
class SessionRecord:
    participant_id: str
    eye_height_cm: float
    seed: int
    fixture_hash: str
    status: str  # running | finished | aborted
    telemetry_path: str = ""
    trace_path: str = ""
    events_path: str = ""


@dataclass
class LiveSession:
    """Server-side state for one connected participant."""

    world: World
    participant_id: str
    eye_height_cm: float
    seed: int
    token: str
    agent: object = None
    session: object = None
    held: InputFrame | None = None
    ticks_done: int = 0
    started_mono: float = 0.0
    last_input_mono: float = 0.0
    log: SessionLog = None
    trace: InputTrace = None
    outbound: list[dict] = field(default_factory=list)
    ended: bool = False
    end_reason: str | None = None

    def push(self, msg: dict):
        self.outbound.append(msg)

    def drain(self) -> list[dict]:
        out = self.outbound
        self.outbound = []
        return out


def spawn_session(world: World, participant_id: str, eye_height_cm: float,
                  seed: int | None = None, clock=time.monotonic) -> LiveSession:
    if seed is None:
        seed = secrets.randbits(31)
    agent, session = init_session(world, eye_height_cm, seed)
    live = LiveSession(
        world=world,
        participant_id=participant_id,
        eye_height_cm=eye_height_cm,
        seed=seed,
        token=secrets.token_hex(8),
        agent=agent,
        session=session,
        log=SessionLog(participant_id=participant_id),
        trace=InputTrace(
            participant_id=participant_id,
            eye_height_cm=eye_height_cm,
            seed=seed,
            fixture_hash=world.spec.fixture_hash,
        ),
    )
    quantize_for_sample(agent)
    live.log.samples.append(sample(agent, session, gaze_raycast(world, agent)))
    now = clock()
    live.started_mono = now
    live.last_input_mono = now
    first = world.assignments[0]
    live.push({
        "type": "spawn",
        "token": live.token,
        "pos": list(agent.pos),
        "yaw": agent.yaw,
        "fixture_hash": world.spec.fixture_hash,
        "assignment": {"id": first.id, "message": first.message},
    })
    return live


def handle_client_message(live: LiveSession | None, msg: dict, world: World,
                          clock=time.monotonic) -> LiveSession:
    """Validate and apply one inbound message; outbound lands on the session.

    hello -> creates the session (returns the new LiveSession and queues
    spawn); input -> updates the held frame. Anything else is a protocol
    violation.
    """
    mtype = msg.get("type")
    if live is None:
        if mtype != "hello":
            raise ProtocolError("first message must be hello")
        pid = str(msg.get("participant_id", "")).strip()
        if not pid or any(c in pid for c in "/\\,;\n\t "):
            raise ProtocolError("invalid participant_id")
        try:
            eye = float(msg["eye_height_cm"])
        except (KeyError, TypeError, ValueError):
            raise ProtocolError("hello requires eye_height_cm") from None
        try:
            return spawn_session(world, pid, eye, msg.get("seed"), clock=clock)
        except SimulationError as e:
            raise ProtocolError(str(e)) from None
    if mtype == "hello":
        raise ProtocolError("already spawned")
    if mtype != "input":
        raise ProtocolError(f"unexpected message type {mtype!r}")
    if msg.get("token") != live.token:
        raise ProtocolError("bad session token")
    try:
        live.held = InputFrame(
            move_held=bool(msg["move_held"]),
            yaw=float(msg["yaw_deg"]),
            pitch=float(msg["pitch_deg"]),
            roll=float(msg["roll_deg"]),
        )
    except (KeyError, TypeError, ValueError, SimulationError) as e:
        raise ProtocolError(f"bad input frame: {e}") from None
    live.last_input_mono = clock()
    return live


def advance_to_wall_clock(live: LiveSession, now_mono: float | None = None,
                          clock=time.monotonic) -> None:
    """Run all fixed ticks due per the server clock with the held input."""
    if live.ended:
        return
    now = clock() if now_mono is None else now_mono
    target = int((now - live.started_mono) / 0.02)
    backlog = target - live.ticks_done
    if backlog > MAX_CATCHUP_TICKS:
        # a long stall (debugger, swap): drop the excess rather than burst
        live.started_mono += (backlog - MAX_CATCHUP_TICKS) * 0.02
        backlog = MAX_CATCHUP_TICKS
    for _ in range(backlog):
        run_one_tick(live)
        if live.ended:
            break


def run_one_tick(live: LiveSession) -> None:
    frame = live.held if live.held is not None else InputFrame(False, live.agent.yaw)
    live.trace.frames.append(frame)
    step(live.world, live.agent, live.session, frame)
    live.ticks_done += 1
    if live.session.clock_ms % 100 == 0:
        quantize_for_sample(live.agent)
        s = sample(live.agent, live.session, gaze_raycast(live.world, live.agent))
        live.log.samples.append(s)
        live.push({
            "type": "state",
            "t_ms": s.t_ms,
            "pos": [s.x_cm, s.y_cm, s.z_cm],
            "yaw": s.yaw_deg,
            "assignment": s.assignment,
        })
        for e in s.event.split(";"):
            if e.startswith("assignment_start"):
                aid = int(e.split()[1])
                live.push({
                    "type": "message",
                    "text": live.world.assignments[aid - 1].message,
                })
            elif e == "alarm_on":
                live.push({"type": "alarm", "text": ALARM_TEXT})
            elif e.startswith("exit_reached"):
                live.end_reason = None
                live.push({"type": "end", "exit_label": e.split()[1]})
        if live.session.finished and not live.ended:
            live.ended = True
            live.log.events = list(live.session.event_log)


def abort_session(live: LiveSession, reason: str) -> None:
    if live.ended:
        return
    live.ended = True
    live.end_reason = reason
    live.log.events = list(live.session.event_log)
    live.push({"type": "end", "reason": reason})


class SessionStore:
    """Atomic persistence of finished/aborted sessions plus the index."""

    def __init__(self, out_dir: str | Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._index_lock = asyncio.Lock()

    def _unique_id(self, participant_id: str) -> str:
        pid = participant_id
        n = 1
        while (
            (self.out_dir / f"participant_{pid}.csv").exists()
            or (self.out_dir / f"participant_{pid}.csv.partial").exists()
        ):
            n += 1
            pid = f"{participant_id}_{n}"
        return pid

    def persist(self, live: LiveSession) -> SessionRecord:
        status = "finished" if live.session.finished else "aborted"
        pid = self._unique_id(live.participant_id)
        suffix = "" if status == "finished" else ".partial"

        tele = self.out_dir / f"participant_{pid}.csv{suffix}"
        _atomic_write(tele, _telemetry_text(live.log))
        events = self.out_dir / f"participant_{pid}.events.csv{suffix}"
        _atomic_write(events, _events_text(live.log))
        live.trace.participant_id = pid
        tmp_trace_dir = self.out_dir
        trace_tmp = write_trace(live.trace, tmp_trace_dir, overwrite=True)
        trace = trace_tmp
        if suffix:
            trace = Path(str(trace_tmp) + suffix)
            os.replace(trace_tmp, trace)

        record = SessionRecord(
            participant_id=pid,
            eye_height_cm=live.eye_height_cm,
            seed=live.seed,
            fixture_hash=live.world.spec.fixture_hash,
            status=status,
            telemetry_path=str(tele),
            trace_path=str(trace),
            events_path=str(events),
        )
        self._append_index(record)
        return record

    def _append_index(self, record: SessionRecord):
        index = self.out_dir / "sessions.csv"
        fresh = not index.exists()
        with open(index, "a", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            if fresh:
                w.writerow([
                    "participant_id", "eye_height_cm", "seed", "fixture_hash",
                    "status", "telemetry", "trace", "events",
                ])
            w.writerow([
                record.participant_id, record.eye_height_cm, record.seed,
                record.fixture_hash, record.status, record.telemetry_path,
                record.trace_path, record.events_path,
            ])


def _telemetry_text(log: SessionLog) -> str:
    lines = [CSV_HEADER]
    lines.extend(format_row(s) for s in log.samples)
    return "\n".join(lines) + "\n"


def _events_text(log: SessionLog) -> str:
    import io

    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(EVENTS_HEADER.split(","))
    for t, event, detail in log.events:
        w.writerow([t, event, detail])
    return buf.getvalue()


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


class SessionServer:
    """Accept loop dispatching one task per live connection."""

    def __init__(self, world: World, out_dir: str | Path,
                 idle_timeout_s: float | None = DEFAULT_IDLE_TIMEOUT_S,
                 clock=time.monotonic):
        self.world = world
        self.store = SessionStore(out_dir)
        self.idle_timeout_s = idle_timeout_s
        self.clock = clock
        self.records: list[SessionRecord] = []

    async def serve_websocket(self, host: str, port: int):
        import websockets

        async def handler(conn):
            await self._run_connection(
                recv=conn.recv,
                send=lambda text: conn.send(text),
                close=conn.close,
            )

        return await websockets.serve(handler, host, port)

    async def serve_tcp(self, host: str, port: int):
        async def handler(reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
            async def recv():
                line = await reader.readline()
                if not line:
                    raise ConnectionError("closed")
                return line.decode("utf-8")

            async def send(text: str):
                writer.write((text + "\n").encode("utf-8"))
                await writer.drain()

            async def close():
                writer.close()

            await self._run_connection(recv=recv, send=send, close=close)

        return await asyncio.start_server(handler, host, port)

    async def _run_connection(self, recv, send, close):
        live: LiveSession | None = None
        persisted = False

        async def flush():
            if live is None:
                return
            for msg in live.drain():
                await send(json.dumps(msg))

        async def ticker():
            while live is not None and not live.ended:
                await asyncio.sleep(0.02)
                advance_to_wall_clock(live, clock=self.clock)
                idle = self.clock() - live.last_input_mono
                if (
                    self.idle_timeout_s is not None
                    and not live.ended
                    and idle > self.idle_timeout_s
                ):
                    abort_session(live, "idle timeout")
                await flush()

        tick_task = None
        try:
            while True:
                raw = await recv()
                if not raw.strip():
                    continue
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    raise ProtocolError("malformed JSON")
                was_none = live is None
                live = handle_client_message(live, msg, self.world, clock=self.clock)
                if was_none and live is not None:
                    tick_task = asyncio.create_task(ticker())
                else:
                    advance_to_wall_clock(live, clock=self.clock)
                await flush()
                if live.ended:
                    # drain what the client already sent so closing does not
                    # reset the connection under its feet (losing `end`)
                    try:
                        while True:
                            await asyncio.wait_for(recv(), timeout=0.25)
                    except Exception:
                        pass
                    break
        except ProtocolError as e:
            try:
                await send(json.dumps({"type": "error", "text": str(e)}))
            except Exception:
                pass
            if live is not None:
                abort_session(live, f"protocol violation: {e}")
        except Exception as e:
            if live is not None and not live.ended:
                abort_session(live, f"connection lost: {type(e).__name__}")
        finally:
            if tick_task is not None:
                tick_task.cancel()
            if live is not None and not persisted:
                if not live.ended:
                    abort_session(live, "connection closed")
                try:
                    await flush()
                except Exception:
                    pass
                record = self.store.persist(live)
                self.records.append(record)
                persisted = True
            try:
                await close()
            except Exception:
                pass
