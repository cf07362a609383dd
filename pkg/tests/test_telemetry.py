import math

import pytest

from wayfind.agents import PolicySpec, run_policy_session
from wayfind.simulation import InputFrame, World, init_session
from wayfind.telemetry import (
    CSV_HEADER,
    InputTrace,
    TelemetryError,
    max_position_deviation,
    parse_log,
    parse_trace,
    replay,
    run_session,
    sample,
    write_log,
    write_trace,
)


def still_controller(agent, session):
    return InputFrame(False, agent.yaw)


@pytest.fixture(scope="module")
def scripted(world):
    log, trace, _ = run_policy_session(
        world, PolicySpec("direction", 2, 30.0), seed=2, participant_id="p2"
    )
    return log, trace


class TestSampling:
    def test_560s_row_count(self, world):
        log, _ = run_session(
            world, still_controller, 170.0, seed=1, participant_id="idle",
            max_ms=560_000, stop_when_finished=False,
        )
        assert abs(len(log.samples) - 5600) <= 1
        ts = [s.t_ms for s in log.samples]
        assert all(b - a == 100 for a, b in zip(ts, ts[1:]))

    def test_first_sample_is_protocol_start(self, world):
        log, _ = run_session(
            world, still_controller, 170.0, seed=1, participant_id="x",
            max_ms=1000, stop_when_finished=False,
        )
        first = log.samples[0]
        assert first.t_ms == 0
        assert first.assignment == 1
        assert first.event == "assignment_start 1"

    def test_gaze_blank_when_no_hit(self, world):
        from wayfind.simulation import GazeHit

        agent, session = init_session(world, 170.0, seed=1)
        s = sample(agent, session, GazeHit(None, None, "none", None, None))
        assert s.gaze_x_cm is None and s.gaze_y_cm is None and s.gaze_z_cm is None
        assert s.gaze_target == "none"

    def test_cadence_on_scripted_session(self, scripted):
        log, _ = scripted
        ts = [s.t_ms for s in log.samples]
        assert all(b - a == 100 for a, b in zip(ts, ts[1:]))


class TestLogFiles:
    def test_round_trip(self, scripted, tmp_path):
        log, _ = scripted
        path = write_log(log, tmp_path)
        back = parse_log(path)
        assert back.samples == log.samples
        assert back.events == log.events
        assert back.participant_id == log.participant_id

    def test_row_count(self, scripted, tmp_path):
        log, _ = scripted
        path = write_log(log, tmp_path, overwrite=True)
        lines = path.read_text().splitlines()
        assert len(lines) == len(log.samples) + 1
        assert lines[0] == CSV_HEADER

    def test_empty_log_is_header_only(self, tmp_path):
        from wayfind.telemetry import SessionLog

        path = write_log(SessionLog(participant_id="empty"), tmp_path)
        assert path.read_text() == CSV_HEADER + "\n"

    def test_refuses_overwrite(self, scripted, tmp_path):
        log, _ = scripted
        write_log(log, tmp_path)
        with pytest.raises(TelemetryError, match="exists"):
            write_log(log, tmp_path)
        write_log(log, tmp_path, overwrite=True)

    def test_reordered_header_rejected(self, scripted, tmp_path):
        log, _ = scripted
        path = write_log(log, tmp_path)
        lines = path.read_text().splitlines()
        cols = lines[0].split(",")
        cols[0], cols[1] = cols[1], cols[0]
        path.write_text("\n".join([",".join(cols)] + lines[1:]))
        with pytest.raises(TelemetryError, match="header"):
            parse_log(path)

    def test_timestamp_regression_names_row(self, scripted, tmp_path):
        log, _ = scripted
        path = write_log(log, tmp_path)
        lines = path.read_text().splitlines()
        cells = lines[5].split(",")
        cells[0] = "0"
        lines[5] = ",".join(cells)
        path.write_text("\n".join(lines) + "\n")
        (path.parent / f"participant_{log.participant_id}.events.csv").unlink()
        with pytest.raises(TelemetryError, match="row 6"):
            parse_log(path)

    def test_bad_numeric_cell_names_row(self, scripted, tmp_path):
        log, _ = scripted
        path = write_log(log, tmp_path)
        lines = path.read_text().splitlines()
        cells = lines[3].split(",")
        cells[1] = "bogus"
        lines[3] = ",".join(cells)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(TelemetryError, match="row 4"):
            parse_log(path)

    def test_events_file_has_details(self, scripted, tmp_path):
        from wayfind.simulation import ALARM_TEXT

        log, _ = scripted
        write_log(log, tmp_path)
        events_path = tmp_path / f"participant_{log.participant_id}.events.csv"
        text = events_path.read_text()
        assert ALARM_TEXT in text  # detail with commas survives csv quoting


class TestTraces:
    def test_round_trip(self, scripted, tmp_path):
        _, trace = scripted
        path = write_trace(trace, tmp_path)
        back = parse_trace(path)
        assert back.participant_id == trace.participant_id
        assert back.eye_height_cm == trace.eye_height_cm
        assert back.seed == trace.seed
        assert back.fixture_hash == trace.fixture_hash
        assert back.frames == trace.frames

    def test_malformed_header(self, tmp_path):
        p = tmp_path / "broken.trace.csv"
        p.write_text("# seed=1\nwrong,header\n")
        with pytest.raises(TelemetryError):
            parse_trace(p)


class TestReplay:
    def test_exact_reproduction(self, world, scripted):
        log, trace = scripted
        again = replay(world, trace)
        assert max_position_deviation(log, again) <= 1e-6
        assert [e for _, e, _ in again.events] == [e for _, e, _ in log.events]

    def test_truncated_trace_is_prefix(self, world, scripted):
        log, trace = scripted
        half = InputTrace(
            participant_id=trace.participant_id,
            eye_height_cm=trace.eye_height_cm,
            seed=trace.seed,
            fixture_hash=trace.fixture_hash,
            frames=trace.frames[: len(trace.frames) // 2],
        )
        partial = replay(world, half)
        n = len(partial.samples)
        assert partial.samples == log.samples[:n]

    def test_fixture_hash_mismatch(self, world, scripted):
        _, trace = scripted
        bad = InputTrace(
            participant_id=trace.participant_id,
            eye_height_cm=trace.eye_height_cm,
            seed=trace.seed,
            fixture_hash="0" * 64,
            frames=trace.frames,
        )
        with pytest.raises(TelemetryError, match="hash"):
            replay(world, bad)

    def test_exit_events_name_real_exits(self, world, scripted):
        log, _ = scripted
        labels = {e.label for e in world.spec.exits}
        for _, event, _ in log.events:
            if event.startswith("exit_reached"):
                assert event.split()[1] in labels


class TestSpeedInvariant:
    def test_logged_speed_capped(self, scripted):
        log, _ = scripted
        for a, b in zip(log.samples, log.samples[1:]):
            v = math.hypot(b.x_cm - a.x_cm, b.y_cm - a.y_cm) / ((b.t_ms - a.t_ms) / 1000)
            assert v <= 140.0 + 1e-6

    def test_positions_on_mesh_or_ramp(self, world, scripted):
        from wayfind.navmesh import contains

        log, _ = scripted
        eye = log.samples[0].z_cm - world.floor_z(4)
        floor_zs = {world.floor_z(f.id): f.id for f in world.spec.floors}
        for s in log.samples:
            support = round(s.z_cm - eye, 6)
            fid = floor_zs.get(support)
            if fid is not None:
                assert contains(world.mesh, fid, (s.x_cm, s.y_cm)), s
            else:
                on_ramp = any(
                    r.contains_plan((s.x_cm, s.y_cm))
                    and world.floor_z(r.lower_floor) <= support <= world.floor_z(r.upper_floor)
                    for r in world.mesh.ramps
                )
                assert on_ramp, s
