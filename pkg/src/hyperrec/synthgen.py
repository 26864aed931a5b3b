"""Desk-scale synthetic stand-in for a hospital dataset.

A complete ``b``-ary code tree is laid out in the Poincare disk, doctors
are anchored at random leaves, and simulated patients visit doctors with
probability decaying in the hyperbolic distance between the patient's
averaged code embedding and the doctor's anchor.  All randomness comes
from one seeded generator, drawn in a fixed order.
"""

import csv
import datetime as dt
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ConfigError
from .hypgeo import hyperbolic_average, pairwise_poincare_distances
from .ingest import (
    CUI_SNOMED_FILE,
    DIAGNOSES_FILE,
    DOCTORS_FILE,
    EMBEDDINGS_FILE,
    PATIENTS_FILE,
    SNOMED_ICD9_FILE,
    VISITS_FILE,
    CodeMap,
    DiagnosisRecord,
    DoctorRecord,
    EmbeddingTable,
    InteractionLog,
    PatientRecord,
    VisitRecord,
)
from .validation import DEFAULT_CLAMP_EPS, clamp_rows

GENDERS = ("F", "M")
REGIONS = ("north", "centre", "south", "lisbon", "islands")
HOSPITALS = ("H1", "H2", "H3", "H4")


@dataclass(frozen=True)
class SynthParams:
    seed: int = 0
    branching: int = 4
    depth: int = 4
    n_patients: int = 1000
    n_doctors: int = 50
    visits_per_patient: int = 6
    codes_per_patient: int = 4
    affinity_sharpness: float = 3.0
    embed_dim: int = 2
    radius_step: float = 1.0
    start_date: dt.date = dt.date(2020, 1, 1)
    window_days: int = 730
    clamp_eps: float = DEFAULT_CLAMP_EPS

    def validate(self):
        ints = ("branching", "depth", "n_patients", "n_doctors", "visits_per_patient",
                "codes_per_patient", "window_days")
        for name in ints:
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.branching < 2 or self.depth < 2:
            raise ConfigError("branching and depth must be at least 2")
        if self.embed_dim != 2:
            raise ConfigError("synthetic layouts are 2-dimensional")
        if not self.radius_step > 0:
            raise ConfigError("radius_step must be positive")
        if not self.affinity_sharpness >= 0:
            raise ConfigError("affinity_sharpness must be non-negative")
        if _node_count(self.branching, self.depth) > 100_000:
            raise ConfigError("tree too large for ICD-9 style code ids")
        return self


def _node_count(b, depth):
    return (b ** (depth + 1) - 1) // (b - 1)


@dataclass(frozen=True)
class CodeTree:
    branching: int
    parent: tuple
    depth: tuple
    codes: tuple

    @property
    def root(self):
        return 0

    def __len__(self):
        return len(self.parent)

    def children(self, node):
        b = self.branching
        first = node * b + 1
        return [c for c in range(first, first + b) if c < len(self)]

    @property
    def leaves(self):
        top = max(self.depth)
        return [n for n, d in enumerate(self.depth) if d == top]

    def descendants(self, node):
        out, frontier = [], [node]
        while frontier:
            kids = [c for n in frontier for c in self.children(n)]
            out.extend(kids)
            frontier = kids
        return sorted(out)

    def path_to_root(self, node):
        path = [node]
        while self.parent[path[-1]] >= 0:
            path.append(self.parent[path[-1]])
        return path

    def tree_distance(self, u, v):
        up = {n: k for k, n in enumerate(self.path_to_root(u))}
        for k, n in enumerate(self.path_to_root(v)):
            if n in up:
                return up[n] + k
        raise AssertionError("tree is disconnected")


def _code_id(i, n_nodes):
    if n_nodes <= 1000:
        return f"{i:03d}"
    q, r = divmod(i, 100)
    return f"{q:03d}.{r:02d}"


def generate_hierarchy(params):
    """Complete ``branching``-ary tree of the given depth, numbered breadth first."""
    params.validate()
    b = params.branching
    n = _node_count(b, params.depth)
    parent = tuple(-1 if i == 0 else (i - 1) // b for i in range(n))
    depth = [0] * n
    for i in range(1, n):
        depth[i] = depth[parent[i]] + 1
    return CodeTree(b, parent, tuple(depth), tuple(_code_id(i, n) for i in range(n)))


def layout_tree_embeddings(tree, params):
    """Place each node at hyperbolic radius ``depth * radius_step``.

    Angles come from splitting the parent's angular sector evenly among
    its children and taking each child's sector centre.
    """
    params.validate()
    n = len(tree)
    lo = np.zeros(n)
    hi = np.zeros(n)
    hi[0] = 2 * np.pi
    for node in range(n):
        kids = tree.children(node)
        width = (hi[node] - lo[node]) / max(len(kids), 1)
        for k, c in enumerate(kids):
            lo[c] = lo[node] + k * width
            hi[c] = lo[c] + width
    angle = 0.5 * (lo + hi)
    radius = np.tanh(np.asarray(tree.depth, dtype=np.float64) * params.radius_step / 2.0)
    pts = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
    pts[0] = 0.0
    pts, n_clamped = clamp_rows(pts, 1.0 - params.clamp_eps)
    pts.setflags(write=False)
    return EmbeddingTable(dim=2, entries={c: pts[i] for i, c in enumerate(tree.codes)},
                          n_clamped=n_clamped)


def choice_probabilities(distances, sharpness):
    """Softmax of ``-sharpness * distances``."""
    logits = -float(sharpness) * np.asarray(distances, dtype=np.float64)
    w = np.exp(logits - logits.max())
    return w / w.sum()


def identity_code_map(table):
    """Code map in which every code is its own CUI and SNOMED concept."""
    codes = sorted(table.entries)
    return CodeMap(
        cui_to_snomed={c: [c] for c in codes},
        snomed_to_icd9={c: [c] for c in codes},
        resolved={c: c for c in codes},
        stats={"resolved_codes": len(codes)},
    )


@dataclass(frozen=True)
class SyntheticWorld:
    params: SynthParams
    tree: CodeTree
    table: EmbeddingTable
    code_map: CodeMap
    log: InteractionLog
    ground_truth: dict = field(repr=False)


def _date(params, offset):
    return params.start_date + dt.timedelta(days=int(offset))


def simulate_population(tree, table, params):
    """Draw doctors, patients, diagnoses and visits.

    Draw order: doctor anchors and demographics, then per patient (in id
    order) branch, codes, demographics, diagnosis dates, visit doctors and
    visit dates.
    """
    params.validate()
    rng = np.random.default_rng(params.seed)
    leaves = tree.leaves
    branches = tree.children(tree.root)
    pool = {b: tree.descendants(b) for b in branches}
    width_p = len(str(params.n_patients))
    width_d = len(str(params.n_doctors))

    doctors, anchors = [], []
    for k in range(params.n_doctors):
        anchor = leaves[int(rng.integers(len(leaves)))]
        did = f"D{k + 1:0{width_d}d}"
        doctors.append(DoctorRecord(did, GENDERS[int(rng.integers(2))],
                                    int(rng.integers(1950, 1990)),
                                    HOSPITALS[int(rng.integers(len(HOSPITALS)))]))
        anchors.append(anchor)
    anchor_pts = table.matrix([tree.codes[a] for a in anchors])

    patients, visits, diagnoses = [], [], []
    patient_branch = {}
    for k in range(params.n_patients):
        pid = f"P{k + 1:0{width_p}d}"
        branch = branches[int(rng.integers(len(branches)))]
        nodes = rng.choice(pool[branch], size=params.codes_per_patient, replace=True)
        codes = [tree.codes[int(n)] for n in nodes]
        patients.append(PatientRecord(pid, GENDERS[int(rng.integers(2))],
                                      int(rng.integers(1935, 2010)),
                                      REGIONS[int(rng.integers(len(REGIONS)))]))
        patient_branch[pid] = tree.codes[branch]
        for c in codes:
            diagnoses.append(DiagnosisRecord(pid, c, _date(params, rng.integers(params.window_days))))
        feature = hyperbolic_average(table.matrix(sorted(codes)), params.clamp_eps)
        dist = pairwise_poincare_distances(feature[None, :], anchor_pts)[0]
        probs = choice_probabilities(dist, params.affinity_sharpness)
        chosen = rng.choice(params.n_doctors, size=params.visits_per_patient, p=probs)
        offsets = rng.integers(params.window_days, size=params.visits_per_patient)
        for d, off in zip(chosen, offsets):
            visits.append(VisitRecord(pid, doctors[int(d)].doctor_id, _date(params, off)))

    log = InteractionLog(
        patients=tuple(patients),
        doctors=tuple(doctors),
        visits=tuple(visits),
        diagnoses=tuple(diagnoses),
        stats={"patients_in_file": len(patients), "patients_dropped": 0},
    )
    truth = {
        "seed": params.seed,
        "doctor_anchors": {d.doctor_id: tree.codes[a] for d, a in zip(doctors, anchors)},
        "patient_branches": patient_branch,
    }
    return SyntheticWorld(params, tree, table, identity_code_map(table), log, truth)


def generate(params=None):
    """Build the tree, its embeddings and a simulated population."""
    params = (params or SynthParams()).validate()
    tree = generate_hierarchy(params)
    table = layout_tree_embeddings(tree, params)
    return simulate_population(tree, table, params)


def _write_csv(path, header, rows):
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_world(world, out_dir):
    """Write the ingest file set plus ``ground_truth.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    codes = world.tree.codes
    with (out / EMBEDDINGS_FILE).open("w", encoding="utf-8", newline="") as fh:
        fh.write(f"#dim={world.table.dim}\n")
        for c in codes:
            fh.write("\t".join([c, *(repr(float(v)) for v in world.table[c])]) + "\n")
    _write_csv(out / CUI_SNOMED_FILE, ["cui", "snomed"], [(c, c) for c in codes])
    _write_csv(out / SNOMED_ICD9_FILE, ["snomed", "icd9"], [(c, c) for c in codes])
    log = world.log
    _write_csv(out / PATIENTS_FILE, ["patient_id", "gender", "birth_year", "region"],
               [(p.patient_id, p.gender, p.birth_year, p.region) for p in log.patients])
    _write_csv(out / DOCTORS_FILE, ["doctor_id", "gender", "birth_year", "hospital"],
               [(d.doctor_id, d.gender, d.birth_year, d.hospital) for d in log.doctors])
    _write_csv(out / VISITS_FILE, ["patient_id", "doctor_id", "date"],
               [(v.patient_id, v.doctor_id, v.date.isoformat()) for v in log.visits])
    _write_csv(out / DIAGNOSES_FILE, ["patient_id", "icd9_code", "date"],
               [(d.patient_id, d.icd9_code, d.date.isoformat()) for d in log.diagnoses])
    params = asdict(world.params)
    params["start_date"] = world.params.start_date.isoformat()
    truth = dict(world.ground_truth, params=params)
    (out / "ground_truth.json").write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")
    return out
