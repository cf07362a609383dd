import json

import pytest

from wayfind.cli import main


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sims")
    code = main([
        "simulate", "--policy", "mixed", "--n", "4", "--seed", "70",
        "--noise", "30", "--out", str(out),
    ])
    assert code == 0
    return out


class TestSimulate:
    def test_outputs(self, sim_dir):
        logs = [p for p in sim_dir.glob("participant_*.csv")
                if not p.name.endswith(".events.csv") and not p.name.endswith(".trace.csv")]
        assert len(logs) == 4
        assert len(list(sim_dir.glob("*.trace.csv"))) == 4
        assert len(list(sim_dir.glob("*.events.csv"))) == 4

    def test_bad_flags_exit_1(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["simulate", "--policy", "warp", "--n", "1", "--out", "x"])
        assert e.value.code == 1

    def test_unknown_subcommand_exit_1(self):
        with pytest.raises(SystemExit) as e:
            main(["frobnicate"])
        assert e.value.code == 1


class TestAnalyze:
    def test_pipeline_outputs(self, sim_dir, tmp_path):
        out = tmp_path / "analysis"
        assert main(["analyze", "--logs", str(sim_dir), "--out", str(out)]) == 0
        for name in ("time_spent.csv", "strategies.csv", "choices.csv", "gaze_targets.csv"):
            assert (out / name).exists(), name
        for k in (1, 2, 3, 4):
            assert (out / f"heatmap_floor{k}.csv").exists()
        header = (out / "strategies.csv").read_text().splitlines()[0]
        assert header.split(",") == [
            "participant_id", "assignment", "label", "h_star",
            "detour_ratio", "visited_central", "switch_fraction",
        ]

    def test_empty_dir_is_runtime_error(self, tmp_path):
        assert main(["analyze", "--logs", str(tmp_path), "--out", str(tmp_path)]) == 2


class TestScore:
    def test_score_sus(self, tmp_path, capsys):
        responses = tmp_path / "responses.csv"
        lines = ["participant_id,instrument,item_id,value"]
        for pid in ("p1", "p2"):
            for item_id in range(1, 11):
                lines.append(f"{pid},sus,{item_id},3")
        responses.write_text("\n".join(lines) + "\n")
        out = tmp_path / "sus_scores.csv"
        code = main(["score", "--responses", str(responses), "--instrument", "sus",
                     "--out", str(out)])
        assert code == 0
        text = out.read_text()
        assert "50.00" in text
        printed = capsys.readouterr().out
        assert "total" in printed

    def test_no_matching_responses(self, tmp_path):
        responses = tmp_path / "responses.csv"
        responses.write_text("participant_id,instrument,item_id,value\n")
        assert main(["score", "--responses", str(responses), "--instrument", "ssq",
                     "--out", str(tmp_path / "x.csv")]) == 2


class TestReplayTools:
    def test_replay_against_original(self, sim_dir):
        trace = next(iter(sim_dir.glob("*.trace.csv")))
        log = sim_dir / trace.name.replace(".trace", "")
        assert main(["replay", "--trace", str(trace), "--against", str(log)]) == 0

    def test_replay_export_counts(self, sim_dir, tmp_path):
        log = next(p for p in sim_dir.glob("participant_*.csv")
                   if ".events" not in p.name and ".trace" not in p.name)
        out = tmp_path / "replay.json"
        assert main(["replay-export", "--log", str(log), "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        rows = len(log.read_text().splitlines()) - 1
        assert len(doc["trajectory"]) == rows
        assert doc["fixture_hash"]
        assert doc["walls"]["4"]
        ts = [p["t_ms"] for p in doc["trajectory"]]
        assert ts == sorted(ts)

    def test_navmesh_dump(self, tmp_path):
        out = tmp_path / "mesh.json"
        assert main(["navmesh-dump", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert set(doc["floors"]) == {"1", "2", "3", "4"}
        assert len(doc["stair_links"]) == 15


class TestFixtureResolution:
    def test_env_var_override(self, tmp_path, monkeypatch, capsys):
        from wayfind.building import bundled_fixture_path

        alt = tmp_path / "alt_fixture.json"
        doc = json.loads(bundled_fixture_path().read_text())
        doc["name"] = "env-override"
        alt.write_text(json.dumps(doc))
        monkeypatch.setenv("WAYFIND_FIXTURE", str(alt))
        out = tmp_path / "mesh.json"
        assert main(["navmesh-dump", "--out", str(out)]) == 0

    def test_runtime_failure_exit_2(self, tmp_path, monkeypatch):
        monkeypatch.setenv("WAYFIND_FIXTURE", str(tmp_path / "missing.json"))
        assert main(["navmesh-dump", "--out", str(tmp_path / "m.json")]) == 2
