"""Model inputs: hyperbolic patient/doctor features, trust weights, benchmark features."""

import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import ConfigError, DateError, EmptyExpertise, UnknownEntity
from .hypgeo import hyperbolic_average
from .ingest import NOT_MAPPED, resolve_code
from .validation import DEFAULT_CLAMP_EPS

DEFAULT_TAU_DAYS = 365.0


@dataclass(frozen=True)
class PatientProfile:
    patient_id: str
    feature: np.ndarray = field(repr=False)
    code_count: int


@dataclass(frozen=True)
class DoctorProfile:
    doctor_id: str
    feature: np.ndarray = field(repr=False)
    source_code_count: int


@dataclass(frozen=True)
class TrustMatrix:
    values: np.ndarray = field(repr=False)
    patient_ids: tuple
    doctor_ids: tuple

    def row(self, patient_id):
        try:
            return self.values[self.patient_ids.index(patient_id)]
        except ValueError:
            raise UnknownEntity(f"unknown patient {patient_id!r}") from None

    def select_doctors(self, doctor_ids):
        """Restrict the doctor axis to ``doctor_ids`` (in that order)."""
        pos = {d: k for k, d in enumerate(self.doctor_ids)}
        cols = [pos[d] for d in doctor_ids]
        return TrustMatrix(self.values[:, cols], self.patient_ids, tuple(doctor_ids))


@dataclass(frozen=True)
class BenchmarkFeature:
    patient_id: str
    vector: np.ndarray = field(repr=False)


def embed_codes(codes, code_map, table):
    """Embedding rows for the resolvable ``codes``, in sorted code order."""
    rows = []
    for code in sorted(codes):
        vec = resolve_code(code, code_map, table)
        if vec is not NOT_MAPPED:
            rows.append(vec)
    return np.array(rows, dtype=np.float64).reshape(-1, table.dim)


class HyperbolicAverager(TransformerMixin, BaseEstimator):
    """Map multisets of ICD-9 codes to the hyperbolic average of their embeddings.

    ``transform`` takes a sequence of code lists and returns an
    ``(n, dim)`` array of Poincare features.  Unresolvable codes are
    skipped; a row with no resolvable code raises ``EmptyInput``.
    """

    def __init__(self, table=None, code_map=None, clamp_eps=DEFAULT_CLAMP_EPS):
        self.table = table
        self.code_map = code_map
        self.clamp_eps = clamp_eps

    def fit(self, X=None, y=None):
        if self.table is None or self.code_map is None:
            raise ConfigError("HyperbolicAverager needs an embedding table and a code map")
        self.dim_ = self.table.dim
        return self

    def transform(self, X):
        out = np.empty((len(X), self.table.dim))
        for i, codes in enumerate(X):
            out[i] = hyperbolic_average(embed_codes(codes, self.code_map, self.table), self.clamp_eps)
        return out


def patient_feature(patient_id, log, code_map, table, clamp_eps=DEFAULT_CLAMP_EPS):
    codes = log.codes_by_patient().get(patient_id)
    if patient_id not in {p.patient_id for p in log.patients} or codes is None:
        raise UnknownEntity(f"unknown patient {patient_id!r}")
    return _patient_profile(patient_id, codes, code_map, table, clamp_eps)


def _patient_profile(patient_id, codes, code_map, table, clamp_eps):
    rows = embed_codes(codes, code_map, table)
    return PatientProfile(patient_id, hyperbolic_average(rows, clamp_eps), rows.shape[0])


def doctor_feature(doctor_id, log, code_map, table, clamp_eps=DEFAULT_CLAMP_EPS):
    """Hyperbolic average over the codes of every patient who visited ``doctor_id``.

    Each visiting patient contributes their code multiset once, however
    many times they visited.
    """
    if doctor_id not in {d.doctor_id for d in log.doctors}:
        raise UnknownEntity(f"unknown doctor {doctor_id!r}")
    visitors = log.visitors_by_doctor().get(doctor_id, [])
    return _doctor_profile(doctor_id, visitors, log.codes_by_patient(), code_map, table, clamp_eps)


def _doctor_profile(doctor_id, visitors, codes_by_patient, code_map, table, clamp_eps):
    rows = [embed_codes(codes_by_patient.get(p, []), code_map, table) for p in visitors]
    rows = np.concatenate(rows) if rows else np.empty((0, table.dim))
    if rows.shape[0] == 0:
        raise EmptyExpertise(f"doctor {doctor_id!r} has no retained visiting patients")
    return DoctorProfile(doctor_id, hyperbolic_average(rows, clamp_eps), rows.shape[0])


def patient_profiles(log, code_map, table, clamp_eps=DEFAULT_CLAMP_EPS):
    codes = log.codes_by_patient()
    return [_patient_profile(p, codes.get(p, []), code_map, table, clamp_eps)
            for p in log.patient_ids]


def doctor_profiles(log, code_map, table, clamp_eps=DEFAULT_CLAMP_EPS):
    """Profiles of every doctor with at least one visitor, plus the excluded ids."""
    codes = log.codes_by_patient()
    visitors = log.visitors_by_doctor()
    profiles, excluded = [], []
    for d in log.doctor_ids:
        try:
            profiles.append(_doctor_profile(d, visitors.get(d, []), codes, code_map, table, clamp_eps))
        except EmptyExpertise:
            excluded.append(d)
    return profiles, excluded


def trust_weights(log, reference_date=None, tau_days=DEFAULT_TAU_DAYS):
    """Recency- and frequency-weighted interaction matrix.

    ``y[i, j] = sum(exp(-age_days / tau_days))`` over the visits of patient
    ``i`` to doctor ``j``, with ages measured back from ``reference_date``
    (default: the latest visit in the log).
    """
    if not tau_days > 0:
        raise ConfigError(f"tau_days must be positive, got {tau_days}")
    if reference_date is None:
        reference_date = log.max_visit_date() or dt.date.today()
    patient_ids = tuple(log.patient_ids)
    doctor_ids = tuple(log.doctor_ids)
    pi = {p: i for i, p in enumerate(patient_ids)}
    dj = {d: j for j, d in enumerate(doctor_ids)}
    visits = sorted(log.visits, key=lambda v: (v.patient_id, v.doctor_id, v.date))
    rows = np.empty(len(visits), dtype=np.intp)
    cols = np.empty(len(visits), dtype=np.intp)
    ages = np.empty(len(visits))
    for n, v in enumerate(visits):
        age = (reference_date - v.date).days
        if age < 0:
            raise DateError(f"visit of {v.patient_id} to {v.doctor_id} on {v.date} is after {reference_date}")
        rows[n], cols[n], ages[n] = pi[v.patient_id], dj[v.doctor_id], age
    values = np.zeros((len(patient_ids), len(doctor_ids)))
    np.add.at(values, (rows, cols), np.exp(-ages / float(tau_days)))
    return TrustMatrix(values, patient_ids, doctor_ids)


def _unit(v):
    n = np.linalg.norm(v)
    return v / n if n > 0 else v


def benchmark_features(log, code_map, reference_date=None):
    """Demographic + one-hot ICD-9 vectors for the cosine-similarity benchmark.

    Layout: ``[scaled age, one-hot gender, one-hot region]`` then a
    multi-hot block over the cohort's resolved codes.  Each block is
    L2-normalized on its own before concatenation.
    """
    if reference_date is None:
        reference_date = log.max_visit_date() or dt.date.today()
    patients = sorted(log.patients, key=lambda p: p.patient_id)
    ages = np.array([reference_date.year - p.birth_year for p in patients], dtype=np.float64)
    span = ages.max() - ages.min() if len(ages) else 0.0
    scaled = (ages - ages.min()) / span if span > 0 else np.zeros_like(ages)
    genders = sorted({p.gender for p in patients})
    regions = sorted({p.region for p in patients})
    codes = log.codes_by_patient()
    vocab = sorted({c for p in patients for c in codes.get(p.patient_id, []) if c in code_map.resolved})
    g_pos = {g: k for k, g in enumerate(genders)}
    r_pos = {r: k for k, r in enumerate(regions)}
    c_pos = {c: k for k, c in enumerate(vocab)}

    out = []
    for n, p in enumerate(patients):
        demo = np.zeros(1 + len(genders) + len(regions))
        demo[0] = scaled[n]
        demo[1 + g_pos[p.gender]] = 1.0
        demo[1 + len(genders) + r_pos[p.region]] = 1.0
        icd = np.zeros(len(vocab))
        for c in codes.get(p.patient_id, []):
            if c in c_pos:
                icd[c_pos[c]] = 1.0
        out.append(BenchmarkFeature(p.patient_id, np.concatenate([_unit(demo), _unit(icd)])))
    return out


def write_profiles(path, patient_profiles=(), doctor_profiles=()):
    """Dump features as ``entity_id<TAB>kind<TAB>v1...vd`` rows."""
    lines = []
    for prof in patient_profiles:
        lines.append("\t".join([prof.patient_id, "patient", *map(repr, map(float, prof.feature))]))
    for prof in doctor_profiles:
        lines.append("\t".join([prof.doctor_id, "doctor", *map(repr, map(float, prof.feature))]))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
