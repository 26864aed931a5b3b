import datetime as dt
import math
import random

import pytest

from hyperrec.exceptions import ConfigError, DegenerateSplit
from hyperrec.evalharness import (
    SplitSpec,
    hit_rate_at_n,
    metric_law_violations,
    precision_at_n,
    quantile_cutoff,
    random_hit_rate,
    run_evaluation,
    temporal_split,
)
from hyperrec.ingest import DiagnosisRecord, DoctorRecord, InteractionLog, PatientRecord, VisitRecord
from hyperrec.synthgen import SynthParams, generate

DAY0 = dt.date(2021, 1, 1)
CUT = dt.date(2021, 6, 1)


def make_log(visits, patients=("P1", "P2", "P3"), doctors=("D1", "D2", "D3")):
    return InteractionLog(
        patients=tuple(PatientRecord(p, "F", 1980, "north") for p in patients),
        doctors=tuple(DoctorRecord(d, "M", 1970, "H1") for d in doctors),
        visits=tuple(VisitRecord(p, d, DAY0 + dt.timedelta(days=o)) for p, d, o in visits),
        diagnoses=tuple(DiagnosisRecord(p, "401.9", DAY0) for p in patients),
    )


class TestSplit:
    def test_cross_cutoff_patient(self):
        log = make_log([("P1", "D1", 10), ("P1", "D2", 200), ("P2", "D1", 20)])
        sp = temporal_split(log, SplitSpec(CUT))
        assert sp.test == {"P1": ("D2",)}
        assert [v.doctor_id for v in sp.train.visits] == ["D1", "D1"]
        assert sp.counts["excluded_no_test_visits"] == 1

    def test_test_only_patient_excluded(self):
        log = make_log([("P1", "D1", 10), ("P1", "D2", 200), ("P3", "D3", 300)])
        sp = temporal_split(log, SplitSpec(CUT))
        assert "P3" not in sp.test and "P3" not in sp.train.patient_ids
        assert sp.counts["excluded_no_train_history"] == 2

    def test_repeat_doctor_counts_once(self):
        log = make_log([("P1", "D1", 10), ("P1", "D1", 200), ("P1", "D1", 250)])
        assert temporal_split(log, SplitSpec(CUT)).test == {"P1": ("D1",)}

    def test_cutoff_day_is_test(self):
        log = make_log([("P1", "D1", 10), ("P1", "D2", (CUT - DAY0).days)])
        assert temporal_split(log, SplitSpec(CUT)).test == {"P1": ("D2",)}

    def test_degenerate(self):
        log = make_log([("P1", "D1", 10), ("P2", "D1", 20)])
        with pytest.raises(DegenerateSplit):
            temporal_split(log, SplitSpec(CUT))
        with pytest.raises(DegenerateSplit):
            temporal_split(make_log([("P1", "D1", 10), ("P2", "D1", 200)]), SplitSpec(CUT))

    def test_no_leakage(self):
        base = [("P1", "D1", 10), ("P2", "D2", 20), ("P1", "D3", 200)]
        post = [("P2", "D1", 200 + k) for k in range(5)] + [("P3", "D2", 300)]
        random.Random(1).shuffle(post)
        a = temporal_split(make_log(base), SplitSpec(CUT)).train
        b = temporal_split(make_log(base + post), SplitSpec(CUT)).train
        assert a.visits == b.visits and a.patients == b.patients

    def test_quantile_cutoff(self):
        log = make_log([("P1", "D1", o) for o in range(10)])
        assert quantile_cutoff(log, 0.8).cutoff_date == DAY0 + dt.timedelta(days=8)
        assert quantile_cutoff(make_log([("P1", "D1", 0), ("P1", "D1", 0), ("P1", "D2", 5)]),
                               0.1).cutoff_date == DAY0 + dt.timedelta(days=5)
        with pytest.raises(ConfigError):
            quantile_cutoff(log, 1.0)


class TestMetrics:
    def test_hit_rate_example(self):
        test = {"A": ("D1",), "B": ("D2",), "C": ("D3",), "E": ("D4",)}
        lists = {"A": ["D1", "D9", "D8"], "B": ["D9", "D2", "D8"],
                 "C": ["D7", "D8", "D9"], "E": ["D5", "D6", "D7"]}
        assert hit_rate_at_n(lists, test, 3) == 0.5
        assert hit_rate_at_n(lists, test, 1) == 0.25

    def test_precision_example(self):
        assert precision_at_n({"A": ["D1", "D2", "D3"]}, {"A": ("D2",)}, 3) == pytest.approx(1 / 3)

    def test_prefix_lists_order_hit_rate_but_not_precision(self):
        test = {"A": ("D4", "D5")}
        lists = {"A": ["D1", "D2", "D3", "D4", "D5", "D6", "D7", "D8", "D9", "D10"]}
        hr = [hit_rate_at_n(lists, test, n) for n in (3, 5, 10)]
        p = [precision_at_n(lists, test, n) for n in (3, 5, 10)]
        assert hr == [0.0, 1.0, 1.0]
        assert p == [0.0, 0.4, 0.2]
        assert all(a <= b for a, b in zip(p, hr))

    def test_random_baseline(self):
        test = {"A": ("D1",), "B": ("D1", "D2")}
        doctors = [f"D{k}" for k in range(1, 11)]
        expected = 1 - (math.comb(9, 3) / math.comb(10, 3) + math.comb(8, 3) / math.comb(10, 3)) / 2
        assert random_hit_rate(test, doctors, 3) == pytest.approx(expected, abs=1e-15)
        assert random_hit_rate(test, doctors, 10) == 1.0


@pytest.fixture(scope="module")
def world():
    return generate(SynthParams(seed=3, n_patients=200, n_doctors=20, depth=3))


def evaluate(world, models=("doctor-icd",)):
    log = world.log
    return run_evaluation(log, models, quantile_cutoff(log), table=world.table, code_map=world.code_map)


class TestRunEvaluation:
    def test_single_model_report(self, world):
        report = evaluate(world)
        assert list(report.metrics) == ["doctor-icd"]
        assert len(list(report.rows())) == 3
        numbers = [v for per_n in report.metrics["doctor-icd"].values() for v in per_n.values()]
        assert len(numbers) == 6 and all(0 <= v <= 1 for v in numbers)
        assert report.cohort["scored_patients"] > 0

    def test_metric_laws(self, world):
        report = evaluate(world, ("doctor-icd", "patient-icd", "conventional-cb"))
        assert metric_law_violations(report) == []

    def test_deterministic(self, world, tmp_path):
        a, b = evaluate(world), evaluate(world)
        assert a.to_json() == b.to_json()
        a.write(tmp_path / "a")
        b.write(tmp_path / "b")
        for name in ("report.json", "metrics.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_bad_n(self, world):
        with pytest.raises(ConfigError):
            run_evaluation(world.log, ["doctor-icd"], quantile_cutoff(world.log), ns=(0,),
                           table=world.table, code_map=world.code_map)
