"""Command line entry points: simulate, serve, analyze, score, replay tools.

Fixture resolution order: --fixture flag, WAYFIND_FIXTURE env var, the
bundled ceg fixture. Exit codes: 0 ok, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import json
import os
import sys
from pathlib import Path


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _resolve_fixture(path_arg: str | None):
    from .building import bundled_fixture_path, load_building_file

    path = path_arg or os.environ.get("WAYFIND_FIXTURE") or bundled_fixture_path()
    return load_building_file(path)


def _world(args):
    from .simulation import World

    return World(_resolve_fixture(getattr(args, "fixture", None)))


def cmd_simulate(args) -> int:
    from .agents import PolicySpec, run_policy_session
    from .telemetry import write_log, write_trace

    world = _world(args)
    kinds = (
        ["central_point", "direction", "floor", "nearest_exit"]
        if args.policy == "mixed"
        else [args.policy]
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    finished = 0
    for i in range(args.n):
        kind = kinds[i % len(kinds)]
        seed = args.seed + i
        pid = f"{kind}_{i:03d}"
        log, trace, _ = run_policy_session(
            world,
            PolicySpec(kind, seed, args.noise),
            seed=seed,
            participant_id=pid,
        )
        write_log(log, out, overwrite=args.overwrite)
        write_trace(trace, out, overwrite=args.overwrite)
        done = any(e == "session_finished" for _, e, _ in log.events)
        finished += int(done)
        print(f"{pid}: {'finished' if done else 'incomplete'} "
              f"({log.samples[-1].t_ms / 1000.0:.1f} s, {len(log.samples)} samples)")
    print(f"{finished}/{args.n} sessions finished -> {out}")
    return 0 if finished == args.n else 2


def cmd_serve(args) -> int:
    from .server import SessionServer

    world = _world(args)
    server = SessionServer(
        world,
        args.out,
        idle_timeout_s=None if args.idle_timeout <= 0 else args.idle_timeout,
    )

    async def main():
        if args.tcp:
            srv = await server.serve_tcp(args.host, args.port)
        else:
            srv = await server.serve_websocket(args.host, args.port)
        proto = "tcp" if args.tcp else "ws"
        print(f"serving {proto}://{args.host}:{args.port} "
              f"fixture={world.spec.name} out={args.out}", flush=True)
        if args.navmesh_dump:
            from .navmesh import mesh_dump

            Path(args.navmesh_dump).write_text(json.dumps(mesh_dump(world.mesh)))
        await asyncio.Future()

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        pass
    return 0


def cmd_analyze(args) -> int:
    from .analysis import (
        DEFAULT_HEATMAP_CELL_CM,
        choice_tally,
        classify_strategy,
        gaze_heatmap,
        gaze_target_tally,
        split_by_assignment,
        time_spent,
    )
    from .telemetry import parse_log

    world = _world(args)
    logs_dir = Path(args.logs)
    logs = []
    for path in sorted(logs_dir.glob("participant_*.csv")):
        if path.name.endswith(".events.csv") or path.name.endswith(".trace.csv"):
            continue
        logs.append(parse_log(path))
    if not logs:
        print(f"no logs found in {logs_dir}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    splits_by_log = {log.participant_id: split_by_assignment(log) for log in logs}
    report = time_spent(splits_by_log)
    with open(out / "time_spent.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["participant_id", "assignment", "duration_s"])
        for pid, durations in sorted(report.per_session.items()):
            for aid, dur in sorted(durations.items()):
                w.writerow([pid, aid, f"{dur:.3f}"])
        for aid, (mean, sd) in sorted(report.assignment_stats.items()):
            w.writerow(["__cohort__", aid, f"{mean:.3f};sd={sd:.3f}"])
        m, sd = report.total_stats
        w.writerow(["__cohort__", "total", f"{m:.3f};sd={sd:.3f}"])

    with open(out / "strategies.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([
            "participant_id", "assignment", "label", "h_star",
            "detour_ratio", "visited_central", "switch_fraction",
        ])
        for pid, splits in sorted(splits_by_log.items()):
            for s in splits:
                if not s.complete:
                    continue
                lab = classify_strategy(s, world)
                w.writerow([
                    pid, s.assignment_id, lab.label,
                    "" if lab.h_star is None else f"{lab.h_star:.3f}",
                    f"{lab.detour_ratio:.3f}",
                    int(lab.visited_central),
                    "" if lab.switch_fraction is None else f"{lab.switch_fraction:.3f}",
                ])

    tally = choice_tally(logs, world)
    with open(out / "choices.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "label", "count"])
        for label, count in sorted(tally.exit_counts.items()):
            w.writerow(["exit", label, count])
        for label, count in sorted(tally.staircase_counts.items()):
            w.writerow(["staircase", label, count])
        w.writerow(["nearest_exit_agreement", "", f"{tally.nearest_exit_agreement:.3f}"])
        w.writerow(["completed", "", tally.completed])

    for f in world.spec.floors:
        grid = gaze_heatmap(logs, f.id, DEFAULT_HEATMAP_CELL_CM, world)
        with open(out / f"heatmap_floor{f.id}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["origin_x", "origin_y", "cell_cm", "nx", "ny"])
            ny, nx = grid.counts.shape
            w.writerow([grid.origin[0], grid.origin[1], grid.cell_cm, nx, ny])
            w.writerow([])
            for row in grid.counts:
                w.writerow(list(row))

    tallies = gaze_target_tally(logs)
    with open(out / "gaze_targets.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["assignment", "target_kind", "count"])
        for aid in sorted(tallies):
            for kind, count in sorted(tallies[aid].items()):
                w.writerow([aid, kind, count])

    print(f"analyzed {len(logs)} logs -> {out}")
    return 0


def cmd_score(args) -> int:
    from .questionnaires import (
        bundled_instrument,
        load_instrument,
        load_responses_csv,
        score,
        summarize_cohort,
        write_reports_csv,
    )

    if args.instrument_file:
        instrument = load_instrument(Path(args.instrument_file))
    else:
        instrument = bundled_instrument(args.instrument)
    responses = [
        r for r in load_responses_csv(args.responses) if r.instrument_id == instrument.id
    ]
    if not responses:
        print(f"no {instrument.id} responses in {args.responses}", file=sys.stderr)
        return 2
    reports = [score(instrument, r) for r in responses]
    write_reports_csv(reports, args.out)
    summary = summarize_cohort(reports)
    for row in summary.rows:
        print(f"{row['measure']:24s} mean={row['mean']:8.3f} sd={row['sd']:7.3f}")
    print(f"{len(reports)} reports -> {args.out}")
    return 0


def cmd_replay(args) -> int:
    from .telemetry import max_position_deviation, parse_log, parse_trace, replay

    world = _world(args)
    trace = parse_trace(args.trace)
    log = replay(world, trace)
    if args.against:
        original = parse_log(args.against)
        dev = max_position_deviation(original, log)
        same_events = [e for _, e, _ in original.events] == [e for _, e, _ in log.events]
        print(f"max deviation {dev:.2e} cm, events {'match' if same_events else 'DIFFER'}")
        return 0 if (dev <= 1e-6 and same_events) else 2
    print(f"replayed {len(log.samples)} samples, {len(log.events)} events")
    return 0


def cmd_replay_export(args) -> int:
    from .building import wall_segments
    from .telemetry import parse_log

    world = _world(args)
    log = parse_log(args.log)
    doc = {
        "participant_id": log.participant_id,
        "fixture_hash": world.spec.fixture_hash,
        "fixture_name": world.spec.name,
        "floors": [
            {"id": f.id, "z_cm": f.z_cm} for f in world.spec.floors
        ],
        "walls": {
            str(f.id): [
                [s.a[0], s.a[1], s.b[0], s.b[1]] for s in wall_segments(world.spec, f.id)
            ]
            for f in world.spec.floors
        },
        "trajectory": [
            {"t_ms": s.t_ms, "x": s.x_cm, "y": s.y_cm, "z": s.z_cm}
            for s in log.samples
        ],
        "gaze": [
            {"t_ms": s.t_ms, "x": s.gaze_x_cm, "y": s.gaze_y_cm, "z": s.gaze_z_cm}
            for s in log.samples
            if s.gaze_x_cm is not None
        ],
        "events": [
            {"t_ms": t, "event": e, "detail": d} for t, e, d in log.events
        ],
    }
    Path(args.out).write_text(json.dumps(doc), encoding="utf-8")
    print(f"exported {len(doc['trajectory'])} trajectory points -> {args.out}")
    return 0


def cmd_navmesh_dump(args) -> int:
    from .navmesh import mesh_dump

    world = _world(args)
    Path(args.out).write_text(json.dumps(mesh_dump(world.mesh)), encoding="utf-8")
    print(f"mesh dump -> {args.out}")
    return 0


def build_parser() -> _Parser:
    p = _Parser(prog="wayfind", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run scripted cohorts headlessly")
    sim.add_argument("--policy", required=True,
                     choices=["central_point", "direction", "floor", "nearest_exit", "mixed"])
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--seed", type=int, default=1)
    sim.add_argument("--noise", type=float, default=30.0)
    sim.add_argument("--out", required=True)
    sim.add_argument("--fixture")
    sim.add_argument("--overwrite", action="store_true")
    sim.set_defaults(fn=cmd_simulate)

    srv = sub.add_parser("serve", help="host live sessions")
    srv.add_argument("--port", type=int, required=True)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--fixture")
    srv.add_argument("--out", required=True)
    srv.add_argument("--idle-timeout", type=float, default=120.0,
                     help="seconds; <= 0 disables")
    srv.add_argument("--tcp", action="store_true", help="raw TCP instead of WebSocket")
    srv.add_argument("--navmesh-dump", help="write a mesh debug JSON on startup")
    srv.set_defaults(fn=cmd_serve)

    an = sub.add_parser("analyze", help="run the analysis pipeline over logs")
    an.add_argument("--logs", required=True)
    an.add_argument("--out", required=True)
    an.add_argument("--fixture")
    an.set_defaults(fn=cmd_analyze)

    sc = sub.add_parser("score", help="score questionnaire responses")
    sc.add_argument("--responses", required=True)
    sc.add_argument("--instrument", choices=["ssq", "sus", "pq", "face_validity"],
                    default="ssq")
    sc.add_argument("--instrument-file", help="custom instrument JSON")
    sc.add_argument("--out", required=True)
    sc.set_defaults(fn=cmd_score)

    rp = sub.add_parser("replay", help="re-run a recorded input trace")
    rp.add_argument("--trace", required=True)
    rp.add_argument("--against", help="original telemetry CSV to compare")
    rp.add_argument("--fixture")
    rp.set_defaults(fn=cmd_replay)

    ex = sub.add_parser("replay-export", help="emit a replay document for the viewer")
    ex.add_argument("--log", required=True)
    ex.add_argument("--out", required=True)
    ex.add_argument("--fixture")
    ex.set_defaults(fn=cmd_replay_export)

    nd = sub.add_parser("navmesh-dump", help="write the navmesh debug JSON")
    nd.add_argument("--out", required=True)
    nd.add_argument("--fixture")
    nd.set_defaults(fn=cmd_navmesh_dump)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except SystemExit:
        raise
    except KeyboardInterrupt:
        return 130
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
