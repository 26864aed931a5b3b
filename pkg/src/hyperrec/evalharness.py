"""Temporal train/test splitting and hit-rate / precision evaluation."""

import csv
import datetime as dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, DegenerateSplit
from .recsys import ModelKind, make_recommender
from .profiles import DEFAULT_TAU_DAYS
from .validation import DEFAULT_CLAMP_EPS

DEFAULT_NS = (3, 5, 10)
DEFAULT_CUTOFF_QUANTILE = 0.8


@dataclass(frozen=True)
class SplitSpec:
    cutoff_date: dt.date
    mode: str = "fixed-date"


@dataclass(frozen=True)
class Split:
    train: object
    test: dict
    cutoff_date: dt.date
    counts: dict = field(default_factory=dict)


def quantile_cutoff(log, q=DEFAULT_CUTOFF_QUANTILE):
    """Cutoff date at quantile ``q`` of the visit dates.

    Snaps forward to the next distinct date when the quantile lands on the
    earliest visit, so that the train side is never empty by construction.
    """
    if not 0.0 < q < 1.0:
        raise ConfigError(f"cutoff quantile must lie in (0, 1), got {q}")
    days = np.sort(np.array([v.date.toordinal() for v in log.visits], dtype=np.int64))
    if days.size == 0:
        raise DegenerateSplit("log has no visits")
    cut = int(np.quantile(days, q, method="higher"))
    if cut <= days[0]:
        later = days[days > days[0]]
        if later.size == 0:
            raise DegenerateSplit("all visits share one date")
        cut = int(later[0])
    return SplitSpec(dt.date.fromordinal(cut))


def temporal_split(log, spec):
    """Split visits at ``spec.cutoff_date``.

    The train log keeps visits strictly before the cutoff and only the
    patients who have at least one of them.  The test set maps each train
    patient to the distinct doctors they visited on or after the cutoff;
    train patients without such visits are not scored.
    """
    cutoff = spec.cutoff_date
    train_visits = tuple(v for v in log.visits if v.date < cutoff)
    test_visits = [v for v in log.visits if v.date >= cutoff]
    if not train_visits or not test_visits:
        raise DegenerateSplit(f"cutoff {cutoff} leaves an empty train or test side")
    train_patients = {v.patient_id for v in train_visits}
    test_doctors = {}
    for v in test_visits:
        test_doctors.setdefault(v.patient_id, set()).add(v.doctor_id)
    test = {p: tuple(sorted(ds)) for p, ds in sorted(test_doctors.items()) if p in train_patients}
    if not test:
        raise DegenerateSplit(f"no patient has visits on both sides of {cutoff}")
    train = log.replace(
        patients=tuple(p for p in log.patients if p.patient_id in train_patients),
        visits=train_visits,
        diagnoses=tuple(d for d in log.diagnoses if d.patient_id in train_patients),
    )
    counts = {
        "patients_in_log": len(log.patients),
        "train_patients": len(train_patients),
        "scored_patients": len(test),
        "excluded_no_train_history": len(log.patients) - len(train_patients),
        "excluded_no_test_visits": len(train_patients) - len(test),
        "train_visits": len(train_visits),
        "test_visits": len(test_visits),
    }
    return Split(train, test, cutoff, counts)


def _doctors(rec):
    return getattr(rec, "doctor_ids", rec)


def hit_rate_at_n(lists, test, n):
    """Fraction of scored patients whose top-``n`` list contains a test doctor."""
    if not test:
        return 0.0
    hits = sum(1 for p, docs in test.items() if set(_doctors(lists[p])[:n]) & set(docs))
    return hits / len(test)


def precision_at_n(lists, test, n):
    """Mean over scored patients of ``|top-n & test| / n``."""
    if not test:
        return 0.0
    total = sum(len(set(_doctors(lists[p])[:n]) & set(docs)) / n for p, docs in test.items())
    return total / len(test)


def random_hit_rate(test, doctor_ids, n):
    """Expected HR@n of a recommender drawing ``n`` doctors uniformly without replacement."""
    pool = set(doctor_ids)
    K = len(pool)
    if not test or K < n:
        return 0.0
    miss = [math.comb(K - len(pool & set(docs)), n) / math.comb(K, n) for docs in test.values()]
    return 1.0 - sum(miss) / len(test)


@dataclass
class EvalReport:
    metrics: dict
    cohort: dict
    split: dict
    config: dict
    baselines: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "metrics": self.metrics,
            "cohort": self.cohort,
            "split": self.split,
            "config": self.config,
            "baselines": self.baselines,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def rows(self):
        for model in sorted(self.metrics):
            for n in sorted(self.metrics[model], key=int):
                m = self.metrics[model][n]
                yield model, int(n), m["hit_rate"], m["precision"]

    def write(self, out_dir):
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(self.to_json(), encoding="utf-8")
        with (out_dir / "metrics.csv").open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["model", "n", "hit_rate", "precision"])
            for model, n, hr, p in self.rows():
                w.writerow([model, n, repr(hr), repr(p)])


def metric_law_violations(report):
    """Return human-readable violations of HR/p monotonicity and p <= HR."""
    problems = []
    for model, per_n in report.metrics.items():
        ns = sorted(per_n, key=int)
        for a, b in zip(ns, ns[1:]):
            if per_n[a]["hit_rate"] > per_n[b]["hit_rate"]:
                problems.append(f"{model}: HR@{a} > HR@{b}")
            if per_n[a]["precision"] < per_n[b]["precision"]:
                problems.append(f"{model}: p@{a} < p@{b}")
        for n in ns:
            m = per_n[n]
            if not 0 <= m["precision"] <= m["hit_rate"] <= 1:
                problems.append(f"{model}: bounds violated at n={n}")
    return problems


def run_evaluation(log, models, spec, ns=DEFAULT_NS, *, table=None, code_map=None,
                   tau_days=DEFAULT_TAU_DAYS, reference_date=None,
                   clamp_eps=DEFAULT_CLAMP_EPS, denominator="literal", config=None):
    """Fit every requested model on the pre-cutoff log and score it on the rest."""
    ns = tuple(sorted({int(n) for n in ns}))
    if not ns or ns[0] < 1:
        raise ConfigError(f"n values must be positive, got {ns}")
    kinds = sorted({ModelKind(m) for m in models}, key=lambda k: k.value)
    if not kinds:
        raise ConfigError("no models requested")
    split = temporal_split(log, spec)
    scored = list(split.test)

    metrics, doctor_ids = {}, None
    for kind in kinds:
        est = make_recommender(kind, table=table, code_map=code_map, tau_days=tau_days,
                               reference_date=reference_date, clamp_eps=clamp_eps,
                               denominator=denominator)
        est.fit(split.train)
        doctor_ids = est.doctor_ids_
        lists = {rec.patient_id: rec for rec in est.recommend(max(ns), scored)}
        metrics[kind.value] = {
            str(n): {
                "hit_rate": hit_rate_at_n(lists, split.test, n),
                "precision": precision_at_n(lists, split.test, n),
            }
            for n in ns
        }
    baselines = {"random": {str(n): {"hit_rate": random_hit_rate(split.test, doctor_ids, n)}
                            for n in ns}}
    cohort = dict(split.counts)
    cohort["recommendable_doctors"] = len(doctor_ids)
    cohort["doctors_in_log"] = len(log.doctors)
    report_split = {"mode": spec.mode, "cutoff_date": split.cutoff_date.isoformat()}
    return EvalReport(metrics, cohort, report_split, dict(config or {}), baselines)
