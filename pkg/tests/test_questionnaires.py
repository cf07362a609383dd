import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wayfind.questionnaires import (
    InstrumentDefinition,
    QuestionnaireError,
    ResponseSet,
    ScoreReport,
    bundled_instrument,
    load_instrument,
    load_responses_csv,
    score,
    summarize_cohort,
    write_reports_csv,
)

SSQ = bundled_instrument("ssq")
SUS = bundled_instrument("sus")
PQ = bundled_instrument("pq")
FV = bundled_instrument("face_validity")


def respond(instrument, value_fn):
    return ResponseSet(
        participant_id="p",
        instrument_id=instrument.id,
        answers={item.id: value_fn(item) for item in instrument.items},
    )


def answers(instrument):
    lo, hi = instrument.scale_min, instrument.scale_max
    ids = sorted(i.id for i in instrument.items)
    return st.fixed_dictionaries({i: st.integers(lo, hi) for i in ids})


class TestLoad:
    def test_ssq_structure(self):
        assert len(SSQ.items) == 16
        assert len(SSQ.subscales) == 3
        weights = {s.name: s.weight for s in SSQ.subscales}
        assert weights == {"nausea": 9.54, "oculomotor": 7.58, "disorientation": 13.92}
        assert SSQ.total_multiplier == 3.74
        # symptoms may belong to several subscales
        member_count = sum(len(s.items) for s in SSQ.subscales)
        assert member_count > len(SSQ.items)

    def test_sus_structure(self):
        assert len(SUS.items) == 10
        for item in SUS.items:
            assert item.reverse == (item.id % 2 == 0)
        assert SUS.total_multiplier == 2.5

    def test_pq_structure(self):
        assert len(PQ.items) == 29
        assert {s.name for s in PQ.subscales} == {
            "involvement", "sensory_fidelity", "adaptation_immersion", "interface_quality",
        }
        assert sum(len(s.items) for s in PQ.subscales) == 29
        reversed_ids = {i.id for i in PQ.items if i.reverse}
        iq = next(s for s in PQ.subscales if s.name == "interface_quality")
        assert reversed_ids == set(iq.items)

    def test_degenerate_scale_rejected(self):
        doc = {
            "id": "bad", "scale": {"min": 0, "max": 0},
            "items": [{"id": 1, "prompt": "x"}],
        }
        with pytest.raises(QuestionnaireError):
            load_instrument(doc)

    def test_subscale_unknown_item_rejected(self):
        doc = {
            "id": "bad", "scale": {"min": 1, "max": 5},
            "items": [{"id": 1, "prompt": "x"}],
            "subscales": [{"name": "s", "items": [99], "weight": 1.0}],
        }
        with pytest.raises(QuestionnaireError):
            load_instrument(doc)


class TestScoreExactness:
    def test_ssq_all_zero(self):
        r = score(SSQ, respond(SSQ, lambda i: 0))
        assert r.total == 0.0
        assert all(v == 0.0 for v in r.subscales.values())

    def test_ssq_paper_arithmetic(self):
        # one point on every symptom: raw subscale sums are 7 each,
        # total = (7 + 7 + 7) * 3.74
        r = score(SSQ, respond(SSQ, lambda i: 1))
        assert r.total == pytest.approx(21 * 3.74)
        assert r.subscales["nausea"] == pytest.approx(7 * 9.54)
        assert r.subscales["oculomotor"] == pytest.approx(7 * 7.58)
        assert r.subscales["disorientation"] == pytest.approx(7 * 13.92)

    def test_sus_all_threes(self):
        r = score(SUS, respond(SUS, lambda i: 3))
        assert r.total == 50.0

    def test_sus_extremes(self):
        best = score(SUS, respond(SUS, lambda i: 5 if i.id % 2 == 1 else 1))
        worst = score(SUS, respond(SUS, lambda i: 1 if i.id % 2 == 1 else 5))
        assert best.total == 100.0
        assert worst.total == 0.0

    def test_sus_band_for_8132(self):
        from wayfind.questionnaires import _band_for

        assert _band_for(SUS, 81.32) == "excellent"
        assert _band_for(SUS, 50.0) == "OK"
        assert _band_for(SUS, 20.0) == "worst imaginable"
        assert _band_for(SUS, 92.5) == "best imaginable"

    def test_pq_range_endpoints(self):
        lo = score(PQ, respond(PQ, lambda i: 7 if i.reverse else 1))
        hi = score(PQ, respond(PQ, lambda i: 1 if i.reverse else 7))
        assert lo.total == 29.0
        assert hi.total == 203.0

    def test_face_validity_items_only(self):
        r = score(FV, respond(FV, lambda i: 4))
        assert r.total is None
        assert r.band is None
        assert r.item_values == {1: 4.0, 2: 4.0, 3: 4.0, 4: 4.0}


class TestScoreValidation:
    def test_missing_item(self):
        answers = {i.id: 0 for i in SSQ.items}
        del answers[5]
        with pytest.raises(QuestionnaireError, match="missing"):
            score(SSQ, ResponseSet("p", "ssq", answers))

    def test_out_of_range(self):
        answers = {i.id: 0 for i in SSQ.items}
        answers[3] = 4
        with pytest.raises(QuestionnaireError, match="outside"):
            score(SSQ, ResponseSet("p", "ssq", answers))

    def test_wrong_instrument(self):
        with pytest.raises(QuestionnaireError):
            score(SSQ, respond(SUS, lambda i: 3))


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(answers(SSQ))
    def test_ssq_bounds(self, ans):
        r = score(SSQ, ResponseSet("p", "ssq", ans))
        assert 0.0 <= r.total <= 236.0

    @settings(max_examples=60, deadline=None)
    @given(answers(SUS))
    def test_sus_bounds(self, ans):
        r = score(SUS, ResponseSet("p", "sus", ans))
        assert 0.0 <= r.total <= 100.0

    @settings(max_examples=60, deadline=None)
    @given(answers(PQ))
    def test_pq_bounds(self, ans):
        r = score(PQ, ResponseSet("p", "pq", ans))
        assert 29.0 <= r.total <= 203.0

    @settings(max_examples=40, deadline=None)
    @given(answers(PQ))
    def test_reversal_involution(self, ans):
        # flipping every reverse flag and mirroring the answers is a no-op
        doc = json.loads(
            (__import__("importlib").resources.files("wayfind") / "instruments/pq.json")
            .read_text()
        )
        for item in doc["items"]:
            item["reverse"] = not item["reverse"]
        mirrored = load_instrument(doc)
        lo, hi = PQ.scale_min, PQ.scale_max
        mirrored_answers = {k: lo + hi - v for k, v in ans.items()}
        a = score(PQ, ResponseSet("p", "pq", ans))
        b = score(mirrored, ResponseSet("p", "pq", mirrored_answers))
        assert a.total == pytest.approx(b.total)
        for name in a.subscales:
            assert a.subscales[name] == pytest.approx(b.subscales[name])

    @settings(max_examples=40, deadline=None)
    @given(answers(SSQ), st.integers(1, 16))
    def test_ssq_monotone(self, ans, bump_id):
        base = score(SSQ, ResponseSet("p", "ssq", ans))
        if ans[bump_id] == SSQ.scale_max:
            return
        raised = dict(ans)
        raised[bump_id] += 1
        more = score(SSQ, ResponseSet("p", "ssq", raised))
        assert more.total >= base.total
        for s in SSQ.subscales:
            if bump_id in s.items:
                assert more.subscales[s.name] >= base.subscales[s.name]


class TestCohort:
    def test_identical_reports_zero_sd(self):
        reports = [score(SUS, respond(SUS, lambda i: 3)) for _ in range(5)]
        summary = summarize_cohort(reports)
        row = next(r for r in summary.rows if r["measure"] == "total")
        assert row["mean"] == 50.0
        assert row["sd"] == 0.0

    def test_two_ssq_totals_mean(self):
        zero = score(SSQ, respond(SSQ, lambda i: 0))
        answers = {i.id: 0 for i in SSQ.items}
        answers[2] = 1  # fatigue: oculomotor only -> raw 1, total 3.74
        one = score(SSQ, ResponseSet("p", "ssq", answers))
        assert one.total == pytest.approx(3.74)
        summary = summarize_cohort([zero, one])
        row = next(r for r in summary.rows if r["measure"] == "total")
        assert row["mean"] == pytest.approx(3.74 / 2)

    def test_row_shape(self):
        summary = summarize_cohort([score(SSQ, respond(SSQ, lambda i: 1))])
        assert all(set(r) == {"measure", "mean", "sd"} for r in summary.rows)

    def test_mixed_instruments_rejected(self):
        with pytest.raises(QuestionnaireError, match="mixed"):
            summarize_cohort([
                score(SSQ, respond(SSQ, lambda i: 0)),
                score(SUS, respond(SUS, lambda i: 3)),
            ])

    def test_face_validity_per_item_rows(self):
        reports = [score(FV, respond(FV, lambda i: v)) for v in (3, 4, 5)]
        summary = summarize_cohort(reports)
        measures = {r["measure"] for r in summary.rows}
        assert measures == {"item_1", "item_2", "item_3", "item_4"}


class TestResponsesCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "responses.csv"
        lines = ["participant_id,instrument,item_id,value"]
        for pid in ("a", "b"):
            for item in SUS.items:
                lines.append(f"{pid},sus,{item.id},3")
        path.write_text("\n".join(lines) + "\n")
        responses = load_responses_csv(path)
        assert len(responses) == 2
        reports = [score(SUS, r) for r in responses]
        assert all(r.total == 50.0 for r in reports)
        out = tmp_path / "reports.csv"
        write_reports_csv(reports, out)
        assert out.read_text().count("\n") == 3

    def test_bad_header(self, tmp_path):
        path = tmp_path / "responses.csv"
        path.write_text("wrong,header\n")
        with pytest.raises(QuestionnaireError):
            load_responses_csv(path)
