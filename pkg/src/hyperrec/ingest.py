"""Loaders for embedding tables, terminology maps and hospital records.

ICD-9 codes are resolved to embeddings through a two-stage chain
``icd9 -> SNOMED -> CUI``; patients with no resolvable diagnosis are
filtered out together with their visits and diagnoses.
"""

import csv
import datetime as dt
import json
import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import DateError, DuplicateCode, IntegrityError, ParseError
from .validation import DEFAULT_CLAMP_EPS, check_clamp_eps, clamp_rows

logger = logging.getLogger(__name__)

EMBEDDINGS_FILE = "embeddings.tsv"
CUI_SNOMED_FILE = "cui_snomed.csv"
SNOMED_ICD9_FILE = "snomed_icd9.csv"
PATIENTS_FILE = "patients.csv"
DOCTORS_FILE = "doctors.csv"
VISITS_FILE = "visits.csv"
DIAGNOSES_FILE = "diagnoses.csv"

PATIENT_COLUMNS = ("patient_id", "gender", "birth_year", "region")
DOCTOR_COLUMNS = ("doctor_id", "gender", "birth_year", "hospital")
VISIT_COLUMNS = ("patient_id", "doctor_id", "date")
DIAGNOSIS_COLUMNS = ("patient_id", "icd9_code", "date")

ICD9_PATTERN = re.compile(r"^(\d{3}|V\d{2}|E\d{3})(\.\d{1,2})?$")


class _NotMapped:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __bool__(self):
        return False

    def __repr__(self):
        return "NOT_MAPPED"


NOT_MAPPED = _NotMapped()


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    entries: dict = field(repr=False)
    n_clamped: int = 0

    def __len__(self):
        return len(self.entries)

    def __contains__(self, code):
        return code in self.entries

    def __getitem__(self, code):
        return self.entries[code]

    def matrix(self, codes):
        """Stack the vectors of ``codes`` into an (n, dim) array."""
        return np.array([self.entries[c] for c in codes], dtype=np.float64).reshape(-1, self.dim)


@dataclass(frozen=True)
class CodeMap:
    cui_to_snomed: dict
    snomed_to_icd9: dict
    resolved: dict
    stats: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class PatientRecord:
    patient_id: str
    gender: str
    birth_year: int
    region: str


@dataclass(frozen=True)
class DoctorRecord:
    doctor_id: str
    gender: str
    birth_year: int
    hospital: str


@dataclass(frozen=True)
class VisitRecord:
    patient_id: str
    doctor_id: str
    date: dt.date


@dataclass(frozen=True)
class DiagnosisRecord:
    patient_id: str
    icd9_code: str
    date: dt.date


@dataclass(frozen=True)
class InteractionLog:
    patients: tuple
    doctors: tuple
    visits: tuple
    diagnoses: tuple
    stats: dict = field(default_factory=dict, compare=False)

    @property
    def patient_ids(self):
        return sorted(p.patient_id for p in self.patients)

    @property
    def doctor_ids(self):
        return sorted(d.doctor_id for d in self.doctors)

    def visits_by_patient(self):
        out = defaultdict(list)
        for v in self.visits:
            out[v.patient_id].append(v)
        return out

    def codes_by_patient(self):
        out = defaultdict(list)
        for d in self.diagnoses:
            out[d.patient_id].append(d.icd9_code)
        return out

    def visitors_by_doctor(self):
        """Distinct visiting patients per doctor, sorted."""
        out = defaultdict(set)
        for v in self.visits:
            out[v.doctor_id].add(v.patient_id)
        return {d: sorted(p) for d, p in out.items()}

    def max_visit_date(self):
        return max(v.date for v in self.visits) if self.visits else None

    def replace(self, **changes):
        kwargs = dict(
            patients=self.patients,
            doctors=self.doctors,
            visits=self.visits,
            diagnoses=self.diagnoses,
            stats=dict(self.stats),
        )
        kwargs.update(changes)
        return InteractionLog(**kwargs)


def _parse_date(text, where):
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError as exc:
        raise ParseError(f"{where}: bad date {text!r}") from exc


def _parse_int(text, where):
    try:
        return int(text.strip())
    except ValueError as exc:
        raise ParseError(f"{where}: bad integer {text!r}") from exc


def load_embeddings(path, clamp_eps=DEFAULT_CLAMP_EPS):
    """Read an embeddings TSV (``code<TAB>v1<TAB>...``) into an ``EmbeddingTable``.

    An optional ``#dim=<d>`` header pins the dimensionality; otherwise the
    first row does.  Vectors on or beyond radius ``1 - clamp_eps`` are pulled
    back onto it and counted.
    """
    clamp_eps = check_clamp_eps(clamp_eps)
    path = Path(path)
    dim = None
    codes, rows = [], []
    seen = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            where = f"{path.name}:{lineno}"
            if line.startswith("#"):
                m = re.match(r"#\s*dim\s*=\s*(\d+)\s*$", line)
                if m and lineno == 1:
                    dim = int(m.group(1))
                continue
            parts = line.split("\t")
            code = parts[0].strip()
            if not code:
                raise ParseError(f"{where}: empty code identifier")
            try:
                vec = [float(v) for v in parts[1:]]
            except ValueError as exc:
                raise ParseError(f"{where}: non-numeric coordinate") from exc
            if dim is None:
                dim = len(vec)
            if len(vec) != dim or dim == 0:
                raise ParseError(f"{where}: expected {dim} coordinates, got {len(vec)}")
            if not all(np.isfinite(vec)):
                raise ParseError(f"{where}: non-finite coordinate")
            if code in seen:
                if seen[code] != vec:
                    raise DuplicateCode(f"{where}: code {code!r} repeated with a different vector")
                continue
            seen[code] = vec
            codes.append(code)
            rows.append(vec)
    if dim is None:
        raise ParseError(f"{path.name}: no embeddings found")
    mat = np.array(rows, dtype=np.float64).reshape(-1, dim)
    mat, n_clamped = clamp_rows(mat, 1.0 - clamp_eps)
    if n_clamped:
        logger.warning("%s: clamped %d vectors to norm %g", path.name, n_clamped, 1.0 - clamp_eps)
    mat.setflags(write=False)
    entries = {c: mat[i] for i, c in enumerate(codes)}
    return EmbeddingTable(dim=dim, entries=entries, n_clamped=n_clamped)


def _read_pairs(path):
    path = Path(path)
    pairs = []
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) != 2:
            raise ParseError(f"{path.name}: expected a two-column header row")
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != 2 or not row[0].strip() or not row[1].strip():
                raise ParseError(f"{path.name}:{lineno}: expected two non-empty columns")
            pairs.append((row[0].strip(), row[1].strip()))
    return pairs


def build_code_map(cui_snomed_path, snomed_icd9_path, table):
    """Resolve every reachable ICD-9 code to a single embedded CUI.

    When several embedded CUIs are reachable the lexicographically smallest
    wins and the code is counted as ambiguous.
    """
    cui_to_snomed = defaultdict(set)
    snomed_to_cuis = defaultdict(set)
    for cui, snomed in _read_pairs(cui_snomed_path):
        cui_to_snomed[cui].add(snomed)
        snomed_to_cuis[snomed].add(cui)
    snomed_to_icd9 = defaultdict(set)
    icd9_to_snomed = defaultdict(set)
    for snomed, icd9 in _read_pairs(snomed_icd9_path):
        snomed_to_icd9[snomed].add(icd9)
        icd9_to_snomed[icd9].add(snomed)

    resolved = {}
    unresolved, ambiguous = [], []
    for icd9 in sorted(icd9_to_snomed):
        cuis = {c for s in icd9_to_snomed[icd9] for c in snomed_to_cuis.get(s, ()) if c in table}
        if not cuis:
            unresolved.append(icd9)
            continue
        if len(cuis) > 1:
            ambiguous.append(icd9)
        resolved[icd9] = min(cuis)
    stats = {
        "cui_snomed_pairs": sum(len(v) for v in cui_to_snomed.values()),
        "snomed_icd9_pairs": sum(len(v) for v in snomed_to_icd9.values()),
        "icd9_codes": len(icd9_to_snomed),
        "resolved_codes": len(resolved),
        "unresolved_codes": len(unresolved),
        "ambiguous_codes": len(ambiguous),
    }
    return CodeMap(
        cui_to_snomed={k: sorted(v) for k, v in sorted(cui_to_snomed.items())},
        snomed_to_icd9={k: sorted(v) for k, v in sorted(snomed_to_icd9.items())},
        resolved=resolved,
        stats=stats,
    )


def resolve_code(code, code_map, table):
    """Embedding of an ICD-9 code, or ``NOT_MAPPED``."""
    cui = code_map.resolved.get(code)
    if cui is None or cui not in table:
        return NOT_MAPPED
    return table[cui]


def _read_records(path, columns):
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != columns:
            raise ParseError(f"{path.name}: expected header {','.join(columns)}, got {header}")
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != len(columns):
                raise ParseError(f"{path.name}:{lineno}: expected {len(columns)} columns, got {len(row)}")
            yield f"{path.name}:{lineno}", [c.strip() for c in row]


def load_interactions(patients_path, doctors_path, visits_path, diagnoses_path, code_map,
                      reference_date=None):
    """Load the four record files and drop patients without a resolvable diagnosis.

    A patient is kept when at least one diagnosis code is present in
    ``code_map.resolved``; dropped patients lose their visits and
    diagnoses too.  With ``reference_date`` set, later visits raise
    ``DateError``.
    """
    patients = {}
    for where, (pid, gender, birth, region) in _read_records(patients_path, PATIENT_COLUMNS):
        if not pid:
            raise ParseError(f"{where}: empty patient_id")
        if pid in patients:
            raise IntegrityError(f"{where}: duplicate patient_id {pid!r}")
        patients[pid] = PatientRecord(pid, gender, _parse_int(birth, where), region)

    doctors = {}
    for where, (did, gender, birth, hospital) in _read_records(doctors_path, DOCTOR_COLUMNS):
        if not did:
            raise ParseError(f"{where}: empty doctor_id")
        if did in doctors:
            raise IntegrityError(f"{where}: duplicate doctor_id {did!r}")
        doctors[did] = DoctorRecord(did, gender, _parse_int(birth, where), hospital)

    visits = []
    for where, (pid, did, date) in _read_records(visits_path, VISIT_COLUMNS):
        if pid not in patients:
            raise IntegrityError(f"{where}: visit references unknown patient {pid!r}")
        if did not in doctors:
            raise IntegrityError(f"{where}: visit references unknown doctor {did!r}")
        day = _parse_date(date, where)
        if reference_date is not None and day > reference_date:
            raise DateError(f"{where}: visit date {day} is after reference date {reference_date}")
        visits.append(VisitRecord(pid, did, day))

    diagnoses = []
    for where, (pid, code, date) in _read_records(diagnoses_path, DIAGNOSIS_COLUMNS):
        if pid not in patients:
            raise IntegrityError(f"{where}: diagnosis references unknown patient {pid!r}")
        if not ICD9_PATTERN.match(code):
            raise ParseError(f"{where}: malformed ICD-9 code {code!r}")
        diagnoses.append(DiagnosisRecord(pid, code, _parse_date(date, where)))

    mapped = {d.patient_id for d in diagnoses if d.icd9_code in code_map.resolved}
    keep = sorted(p for p in patients if p in mapped)
    kept_visits = tuple(v for v in visits if v.patient_id in mapped)
    kept_diagnoses = tuple(d for d in diagnoses if d.patient_id in mapped)
    active_doctors = {v.doctor_id for v in kept_visits}
    stats = {
        "patients_in_file": len(patients),
        "patients_retained": len(keep),
        "patients_dropped": len(patients) - len(keep),
        "doctors_in_file": len(doctors),
        "doctors_without_retained_visits": sum(1 for d in doctors if d not in active_doctors),
        "visits_in_file": len(visits),
        "visits_retained": len(kept_visits),
        "visits_dropped": len(visits) - len(kept_visits),
        "diagnoses_in_file": len(diagnoses),
        "diagnoses_retained": len(kept_diagnoses),
        "diagnoses_dropped": len(diagnoses) - len(kept_diagnoses),
        "diagnoses_unmapped_retained": sum(
            1 for d in kept_diagnoses if d.icd9_code not in code_map.resolved
        ),
    }
    return InteractionLog(
        patients=tuple(patients[p] for p in keep),
        doctors=tuple(doctors[d] for d in sorted(doctors)),
        visits=kept_visits,
        diagnoses=kept_diagnoses,
        stats=stats,
    )


@dataclass(frozen=True)
class Dataset:
    table: EmbeddingTable
    code_map: CodeMap
    log: InteractionLog

    def report(self):
        """Machine-readable ingest summary."""
        return {
            "embeddings": {"codes": len(self.table), "dim": self.table.dim,
                           "clamped": self.table.n_clamped},
            "code_map": dict(self.code_map.stats),
            "interactions": dict(self.log.stats),
        }


def load_dataset(data_dir, clamp_eps=DEFAULT_CLAMP_EPS, reference_date=None):
    """Load the standard file set found in ``data_dir``."""
    data_dir = Path(data_dir)
    table = load_embeddings(data_dir / EMBEDDINGS_FILE, clamp_eps=clamp_eps)
    code_map = build_code_map(data_dir / CUI_SNOMED_FILE, data_dir / SNOMED_ICD9_FILE, table)
    log = load_interactions(
        data_dir / PATIENTS_FILE,
        data_dir / DOCTORS_FILE,
        data_dir / VISITS_FILE,
        data_dir / DIAGNOSES_FILE,
        code_map,
        reference_date=reference_date,
    )
    return Dataset(table, code_map, log)


def write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
