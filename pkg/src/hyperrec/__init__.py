"""Content-based patient-doctor recommendation over hyperbolic disease-code embeddings."""

from .evalharness import EvalReport, SplitSpec, quantile_cutoff, run_evaluation, temporal_split
from .hypgeo import (
    einstein_midpoint,
    hyperbolic_average,
    klein_to_poincare,
    pairwise_poincare_distances,
    poincare_distance,
    poincare_to_klein,
)
from .ingest import load_dataset
from .recsys import (
    ConventionalCBRecommender,
    DoctorIcdRecommender,
    ModelKind,
    PatientIcdRecommender,
    make_recommender,
)
from .synthgen import SynthParams, generate, write_world

__version__ = "0.1.0"

__all__ = [
    "ConventionalCBRecommender",
    "DoctorIcdRecommender",
    "EvalReport",
    "ModelKind",
    "PatientIcdRecommender",
    "SplitSpec",
    "SynthParams",
    "einstein_midpoint",
    "generate",
    "hyperbolic_average",
    "klein_to_poincare",
    "load_dataset",
    "make_recommender",
    "pairwise_poincare_distances",
    "poincare_distance",
    "poincare_to_klein",
    "quantile_cutoff",
    "run_evaluation",
    "temporal_split",
    "write_world",
]
