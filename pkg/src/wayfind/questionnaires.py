"""Data-driven questionnaire scoring: SSQ, SUS, PQ and face validity.

Instruments are JSON documents (items, scales, reverse flags, subscale
memberships and weights, total rule). Scoring is pure; cohort summaries
report sample mean/SD per measure.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

INSTRUMENT_IDS = ("ssq", "sus", "pq", "face_validity")


class QuestionnaireError(ValueError):
    pass


@dataclass(frozen=True)
class Item:
    id: int
    prompt: str
    reverse: bool


@dataclass(frozen=True)
class Subscale:
    name: str
    items: tuple[int, ...]
    weight: float


@dataclass(frozen=True)
class InstrumentDefinition:
    id: str
    name: str
    scale_min: int
    scale_max: int
    items: tuple[Item, ...]
    subscales: tuple[Subscale, ...]
    total_rule: str  # weighted_subscale_sum | converted_sum | plain_sum | none
    total_multiplier: float
    total_range: tuple[float, float] | None
    subscale_rule: str  # weighted_raw_sum | mean_scale | none
    bands: tuple[dict, ...]

    def item(self, item_id: int) -> Item:
        for it in self.items:
            if it.id == item_id:
                return it
        raise QuestionnaireError(f"unknown item {item_id} in {self.id}")


@dataclass(frozen=True)
class ResponseSet:
    participant_id: str
    instrument_id: str
    answers: dict[int, int]


@dataclass(frozen=True)
class ScoreReport:
    participant_id: str
    instrument_id: str
    subscales: dict[str, float]
    item_values: dict[int, float]  # after reversal mapping
    total: float | None
    band: str | None


def load_instrument(source: str | dict | Path) -> InstrumentDefinition:
    if isinstance(source, Path):
        doc = json.loads(source.read_text(encoding="utf-8"))
    elif isinstance(source, str):
        doc = json.loads(source)
    else:
        doc = source

    scale = doc["scale"]
    lo, hi = int(scale["min"]), int(scale["max"])
    if lo >= hi:
        raise QuestionnaireError(f"{doc.get('id')}: degenerate scale {lo}..{hi}")
    items = tuple(
        Item(int(i["id"]), str(i["prompt"]), bool(i.get("reverse", False)))
        for i in doc["items"]
    )
    if not items:
        raise QuestionnaireError("instrument without items")
    ids = [i.id for i in items]
    if len(set(ids)) != len(ids):
        raise QuestionnaireError("duplicate item ids")
    subscales = tuple(
        Subscale(str(s["name"]), tuple(int(i) for i in s["items"]), float(s.get("weight", 1.0)))
        for s in doc.get("subscales", [])
    )
    for s in subscales:
        for i in s.items:
            if i not in ids:
                raise QuestionnaireError(f"subscale {s.name} references unknown item {i}")
    total = doc.get("total", {"rule": "none", "multiplier": 1.0, "range": None})
    rng = total.get("range")
    return InstrumentDefinition(
        id=str(doc["id"]),
        name=str(doc.get("name", doc["id"])),
        scale_min=lo,
        scale_max=hi,
        items=items,
        subscales=subscales,
        total_rule=str(total.get("rule", "none")),
        total_multiplier=float(total.get("multiplier", 1.0)),
        total_range=(float(rng[0]), float(rng[1])) if rng else None,
        subscale_rule=str(doc.get("subscale_rule", "none")),
        bands=tuple(doc.get("bands", [])),
    )


def bundled_instrument(instrument_id: str) -> InstrumentDefinition:
    if instrument_id not in INSTRUMENT_IDS:
        raise QuestionnaireError(f"unknown instrument {instrument_id}")
    path = resources.files("wayfind").joinpath(f"instruments/{instrument_id}.json")
    return load_instrument(json.loads(path.read_text(encoding="utf-8")))


def score(instrument: InstrumentDefinition, response: ResponseSet) -> ScoreReport:
    """Score one response set; raises on missing or out-of-range answers."""
    if response.instrument_id != instrument.id:
        raise QuestionnaireError(
            f"response for {response.instrument_id} scored against {instrument.id}"
        )
    lo, hi = instrument.scale_min, instrument.scale_max
    values: dict[int, float] = {}
    raw: dict[int, int] = {}
    for it in instrument.items:
        if it.id not in response.answers:
            raise QuestionnaireError(f"missing answer for item {it.id}")
        v = response.answers[it.id]
        if not lo <= v <= hi:
            raise QuestionnaireError(f"item {it.id}: answer {v} outside {lo}..{hi}")
        raw[it.id] = v
        values[it.id] = float(lo + hi - v) if it.reverse else float(v)

    subscales: dict[str, float] = {}
    for s in instrument.subscales:
        if instrument.subscale_rule == "weighted_raw_sum":
            subscales[s.name] = sum(values[i] for i in s.items) * s.weight
        elif instrument.subscale_rule == "mean_scale":
            subscales[s.name] = sum(values[i] for i in s.items) / len(s.items)

    total: float | None = None
    if instrument.total_rule == "weighted_subscale_sum":
        total = sum(sum(values[i] for i in s.items) for s in instrument.subscales)
        total *= instrument.total_multiplier
    elif instrument.total_rule == "converted_sum":
        converted = [
            float(hi - raw[it.id]) if it.reverse else float(raw[it.id] - lo)
            for it in instrument.items
        ]
        total = sum(converted) * instrument.total_multiplier
    elif instrument.total_rule == "plain_sum":
        total = sum(values.values()) * instrument.total_multiplier

    if total is not None and instrument.total_range is not None:
        t0, t1 = instrument.total_range
        if not t0 - 1e-9 <= total <= t1 + 1e-9:
            raise QuestionnaireError(
                f"{instrument.id}: total {total} escaped declared range [{t0}, {t1}]"
            )

    return ScoreReport(
        participant_id=response.participant_id,
        instrument_id=instrument.id,
        subscales=subscales,
        item_values=values,
        total=total,
        band=_band_for(instrument, total),
    )


def _band_for(instrument: InstrumentDefinition, total: float | None) -> str | None:
    if total is None:
        return None
    for b in instrument.bands:
        lo = b.get("min")
        hi = b.get("max")
        if (lo is None or total >= lo) and (hi is None or total < hi):
            return b["label"]
    return None


@dataclass
class CohortSummary:
    instrument_id: str
    n: int
    rows: list[dict] = field(default_factory=list)  # {measure, mean, sd}


def _mean_sd(values: list[float]) -> tuple[float, float]:
    mean = sum(values) / len(values)
    if len(values) < 2:
        return (mean, 0.0)
    var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return (mean, math.sqrt(var))


def summarize_cohort(reports: list[ScoreReport]) -> CohortSummary:
    """Mean/SD of totals, subscales and (for per-item scales) items."""
    if not reports:
        raise QuestionnaireError("no reports to summarize")
    iid = reports[0].instrument_id
    if any(r.instrument_id != iid for r in reports):
        raise QuestionnaireError("mixed instruments in cohort")
    out = CohortSummary(instrument_id=iid, n=len(reports))
    totals = [r.total for r in reports if r.total is not None]
    if totals:
        m, sd = _mean_sd(totals)
        out.rows.append({"measure": "total", "mean": m, "sd": sd})
    for name in reports[0].subscales:
        m, sd = _mean_sd([r.subscales[name] for r in reports])
        out.rows.append({"measure": name, "mean": m, "sd": sd})
    if not reports[0].subscales and reports[0].total is None:
        for item_id in sorted(reports[0].item_values):
            m, sd = _mean_sd([r.item_values[item_id] for r in reports])
            out.rows.append({"measure": f"item_{item_id}", "mean": m, "sd": sd})
    return out


def load_responses_csv(path: str | Path) -> list[ResponseSet]:
    """Long-format CSV: participant_id,instrument,item_id,value."""
    grouped: dict[tuple[str, str], dict[int, int]] = {}
    with open(path, encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = ["participant_id", "instrument", "item_id", "value"]
        if reader.fieldnames != expected:
            raise QuestionnaireError(
                f"bad responses header {reader.fieldnames}, expected {expected}"
            )
        for row_no, row in enumerate(reader, start=2):
            try:
                key = (row["participant_id"], row["instrument"])
                grouped.setdefault(key, {})[int(row["item_id"])] = int(row["value"])
            except (TypeError, ValueError) as e:
                raise QuestionnaireError(f"row {row_no}: {e}") from None
    return [
        ResponseSet(participant_id=pid, instrument_id=iid, answers=answers)
        for (pid, iid), answers in grouped.items()
    ]


def write_reports_csv(reports: list[ScoreReport], path: str | Path) -> Path:
    path = Path(path)
    names = sorted({n for r in reports for n in r.subscales})
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["participant_id", "instrument", "total", "band", *names])
        for r in reports:
            w.writerow(
                [
                    r.participant_id,
                    r.instrument_id,
                    "" if r.total is None else f"{r.total:.2f}",
                    r.band or "",
                    *[f"{r.subscales[n]:.2f}" for n in names],
                ]
            )
    return path
