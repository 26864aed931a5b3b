"""Similarity matrices, affinity prediction and top-n recommendation.

Three content-based models are provided, each as an sklearn-style
estimator fitted on an :class:`~hyperrec.ingest.InteractionLog`:

* :class:`ConventionalCBRecommender` - patient neighbourhood over cosine
  similarity of demographic and one-hot ICD-9 features.
* :class:`PatientIcdRecommender` - patient neighbourhood over hyperbolic
  similarity of averaged code embeddings.
* :class:`DoctorIcdRecommender` - doctor neighbourhood over hyperbolic
  similarity of doctors' averaged expertise embeddings.
"""

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import (
    ConfigError,
    DimensionError,
    NotEnoughDoctors,
    TooFewEntities,
    UnknownEntity,
)
from .hypgeo import pairwise_poincare_distances, similarity_from_distances
from .profiles import (
    DEFAULT_TAU_DAYS,
    benchmark_features,
    doctor_profiles,
    patient_profiles,
    trust_weights,
)
from .validation import DEFAULT_CLAMP_EPS

DENOMINATORS = ("literal", "visited-only")


class ModelKind(str, enum.Enum):
    CONVENTIONAL_CB = "conventional-cb"
    PATIENT_ICD = "patient-icd"
    DOCTOR_ICD = "doctor-icd"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SimilarityMatrix:
    values: np.ndarray = field(repr=False)
    labels: tuple

    def reorder(self, labels):
        pos = {l: k for k, l in enumerate(self.labels)}
        idx = [pos[l] for l in labels]
        return SimilarityMatrix(self.values[np.ix_(idx, idx)], tuple(labels))


@dataclass(frozen=True)
class AffinityVector:
    patient_id: str
    doctor_ids: tuple
    scores: np.ndarray = field(repr=False)
    degenerate: bool = False


@dataclass(frozen=True)
class RecommendationList:
    patient_id: str
    doctor_ids: tuple
    affinities: tuple
    model: str = ""

    def __len__(self):
        return len(self.doctor_ids)


def _hyperbolic_similarity(features, labels):
    if len(labels) < 2:
        raise TooFewEntities(f"need at least 2 entities for a similarity matrix, got {len(labels)}")
    D = pairwise_poincare_distances(np.asarray(features))
    return SimilarityMatrix(similarity_from_distances(D), tuple(labels))


def doctor_similarity(profiles):
    """Hyperbolic similarity between doctor features."""
    return _hyperbolic_similarity([p.feature for p in profiles], [p.doctor_id for p in profiles])


def patient_similarity(profiles):
    """Hyperbolic similarity between patient features."""
    return _hyperbolic_similarity([p.feature for p in profiles], [p.patient_id for p in profiles])


def cosine_similarity(u, v):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DimensionError(f"cosine needs equal-length vectors, got {u.shape} and {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def cosine_similarity_matrix(F):
    """Pairwise cosine between rows of ``F``; zero rows give 0."""
    F = np.asarray(F, dtype=np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", F, F))
    safe = np.where(norms > 0, norms, 1.0)
    U = F / safe[:, None]
    return np.clip(np.einsum("ik,jk->ij", U, U), -1.0, 1.0)


def _ratio(num, den):
    bad = den <= 0
    out = np.divide(num, np.where(bad, 1.0, den))
    out[bad] = 0.0
    return out, bad


def doctor_model_scores(Y, S, denominator="literal"):
    """Affinities ``p[i, j] = sum_k Y[i, k] S[j, k] / sum_k S[j, k]`` for every row of ``Y``.

    With ``denominator="visited-only"`` the normalizer only sums
    ``S[j, k]`` over doctors ``k`` that patient ``i`` has visited.
    Returns the score matrix and a per-patient flag marking rows where
    some doctor had a zero normalizer (those entries are set to 0).
    """
    Y = np.asarray(Y, dtype=np.float64)
    S = np.asarray(S, dtype=np.float64)
    num = np.einsum("ik,jk->ij", Y, S)
    if denominator == "literal":
        den = np.broadcast_to(np.einsum("jk->j", S), num.shape)
    elif denominator == "visited-only":
        den = np.einsum("ik,jk->ij", (Y > 0).astype(np.float64), S)
    else:
        raise ConfigError(f"unknown denominator {denominator!r}; expected one of {DENOMINATORS}")
    P, bad = _ratio(num, den)
    return P, bad.any(axis=1)


def patient_model_scores(Y, S, rows=None):
    """Neighbourhood affinities ``p[i] = sum_{u != i} S[i, u] Y[u] / sum_{u != i} S[i, u]``.

    ``rows`` selects which patients (row indices of ``Y``) to score.
    """
    Y = np.asarray(Y, dtype=np.float64)
    S = np.asarray(S, dtype=np.float64)
    rows = np.arange(Y.shape[0]) if rows is None else np.asarray(rows, dtype=np.intp)
    W = S[rows].copy()
    W[np.arange(len(rows)), rows] = 0.0
    num = np.einsum("iu,uj->ij", W, Y)
    den = np.einsum("iu->i", W)[:, None]
    P, bad = _ratio(num, np.broadcast_to(den, num.shape))
    return P, bad.any(axis=1)


def _patient_index(y, patient_id):
    try:
        return y.patient_ids.index(patient_id)
    except ValueError:
        raise UnknownEntity(f"unknown patient {patient_id!r}") from None


def predict_doctor_model(patient_id, y, s, denominator="literal"):
    """Doctor-similarity affinities of one patient over the doctors of ``s``."""
    y = y.select_doctors(s.labels)
    i = _patient_index(y, patient_id)
    P, bad = doctor_model_scores(y.values[i:i + 1], s.values, denominator)
    return AffinityVector(patient_id, s.labels, P[0], bool(bad[0]))


def predict_patient_model(patient_id, y, s):
    """Patient-neighbourhood affinities of one patient; the patient is left out of its own neighbourhood."""
    s = s.reorder(y.patient_ids)
    i = _patient_index(y, patient_id)
    P, bad = patient_model_scores(y.values, s.values, rows=[i])
    return AffinityVector(patient_id, y.doctor_ids, P[0], bool(bad[0]))


def benchmark_similarity(features, patient_ids=None):
    """Cosine similarity of benchmark vectors, floored at 0."""
    feats = {f.patient_id: f.vector for f in features}
    labels = tuple(patient_ids) if patient_ids is not None else tuple(feats)
    F = np.array([feats[p] for p in labels])
    return SimilarityMatrix(np.maximum(cosine_similarity_matrix(F), 0.0), labels)


def predict_benchmark(patient_id, y, features):
    return predict_patient_model(patient_id, y, benchmark_similarity(features, y.patient_ids))


def recommend_top_n(p, n, model=""):
    """Top-``n`` doctors by affinity; ties go to the smaller doctor id.

    Previously visited doctors stay eligible.
    """
    if n < 1:
        raise ConfigError(f"n must be positive, got {n}")
    K = len(p.doctor_ids)
    if K < n:
        raise NotEnoughDoctors(f"cannot recommend {n} doctors out of {K}")
    scores = np.asarray(p.scores)
    order = sorted(range(K), key=lambda k: (-scores[k], p.doctor_ids[k]))[:n]
    return RecommendationList(
        p.patient_id,
        tuple(p.doctor_ids[k] for k in order),
        tuple(float(scores[k]) for k in order),
        str(model),
    )


def write_recommendations(path, lists):
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["patient_id", "rank", "doctor_id", "affinity"])
        for rec in lists:
            for rank, (d, a) in enumerate(zip(rec.doctor_ids, rec.affinities), 1):
                w.writerow([rec.patient_id, rank, d, repr(a)])


class BaseRecommender(BaseEstimator):
    """Shared fit/predict/recommend plumbing.

    Doctors without any visiting patient in the fitted log cannot be
    profiled and are left out of the recommendable set; their ids end up
    in ``excluded_doctors_``.
    """

    kind = None

    def __init__(self, table=None, code_map=None, tau_days=DEFAULT_TAU_DAYS,
                 reference_date=None, clamp_eps=DEFAULT_CLAMP_EPS):
        self.table = table
        self.code_map = code_map
        self.tau_days = tau_days
        self.reference_date = reference_date
        self.clamp_eps = clamp_eps

    def _check_params(self):
        if self.code_map is None:
            raise ConfigError(f"{type(self).__name__} needs a code_map")
        if not self.tau_days > 0:
            raise ConfigError(f"tau_days must be positive, got {self.tau_days}")

    def fit(self, log, y=None):
        self._check_params()
        visitors = log.visitors_by_doctor()
        self.doctor_ids_ = tuple(d for d in log.doctor_ids if visitors.get(d))
        self.excluded_doctors_ = tuple(d for d in log.doctor_ids if not visitors.get(d))
        self.trust_ = trust_weights(log, self.reference_date, self.tau_days).select_doctors(self.doctor_ids_)
        self.patient_ids_ = self.trust_.patient_ids
        self._fit_similarity(log)
        return self

    def _fit_similarity(self, log):
        raise NotImplementedError

    def _scores(self, rows):
        raise NotImplementedError

    def _rows(self, patient_ids):
        if patient_ids is None:
            return np.arange(len(self.patient_ids_))
        pos = {p: i for i, p in enumerate(self.patient_ids_)}
        try:
            return np.array([pos[p] for p in patient_ids], dtype=np.intp)
        except KeyError as exc:
            raise UnknownEntity(f"unknown patient {exc.args[0]!r}") from None

    def predict(self, patient_ids=None):
        """Affinity matrix (patients x ``doctor_ids_``) for ``patient_ids`` (default: all)."""
        check_is_fitted(self, "trust_")
        P, _ = self._scores(self._rows(patient_ids))
        return P

    def affinities(self, patient_ids=None):
        check_is_fitted(self, "trust_")
        rows = self._rows(patient_ids)
        P, bad = self._scores(rows)
        return [AffinityVector(self.patient_ids_[r], self.doctor_ids_, P[k], bool(bad[k]))
                for k, r in enumerate(rows)]

    def recommend(self, n, patient_ids=None):
        return [recommend_top_n(a, n, self.kind) for a in self.affinities(patient_ids)]


class DoctorIcdRecommender(BaseRecommender):
    kind = ModelKind.DOCTOR_ICD

    def __init__(self, table=None, code_map=None, tau_days=DEFAULT_TAU_DAYS,
                 reference_date=None, clamp_eps=DEFAULT_CLAMP_EPS, denominator="literal"):
        super().__init__(table, code_map, tau_days, reference_date, clamp_eps)
        self.denominator = denominator

    def _check_params(self):
        super()._check_params()
        if self.table is None:
            raise ConfigError("DoctorIcdRecommender needs an embedding table")
        if self.denominator not in DENOMINATORS:
            raise ConfigError(f"unknown denominator {self.denominator!r}")

    def _fit_similarity(self, log):
        self.doctor_profiles_, _ = doctor_profiles(log, self.code_map, self.table, self.clamp_eps)
        self.similarity_ = doctor_similarity(self.doctor_profiles_)

    def _scores(self, rows):
        return doctor_model_scores(self.trust_.values[rows], self.similarity_.values, self.denominator)


class PatientIcdRecommender(BaseRecommender):
    kind = ModelKind.PATIENT_ICD

    def _check_params(self):
        super()._check_params()
        if self.table is None:
            raise ConfigError("PatientIcdRecommender needs an embedding table")

    def _fit_similarity(self, log):
        self.patient_profiles_ = patient_profiles(log, self.code_map, self.table, self.clamp_eps)
        self.similarity_ = patient_similarity(self.patient_profiles_)

    def _scores(self, rows):
        return patient_model_scores(self.trust_.values, self.similarity_.values, rows)


class ConventionalCBRecommender(BaseRecommender):
    kind = ModelKind.CONVENTIONAL_CB

    def _fit_similarity(self, log):
        self.features_ = benchmark_features(log, self.code_map, self.reference_date)
        self.similarity_ = benchmark_similarity(self.features_, self.patient_ids_)

    def _scores(self, rows):
        return patient_model_scores(self.trust_.values, self.similarity_.values, rows)


MODEL_CLASSES = {
    ModelKind.CONVENTIONAL_CB: ConventionalCBRecommender,
    ModelKind.PATIENT_ICD: PatientIcdRecommender,
    ModelKind.DOCTOR_ICD: DoctorIcdRecommender,
}


def make_recommender(kind, **params):
    kind = ModelKind(kind)
    cls = MODEL_CLASSES[kind]
    if kind is not ModelKind.DOCTOR_ICD:
        params.pop("denominator", None)
    return cls(**params)
