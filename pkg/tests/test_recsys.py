import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

import naive
from hyperrec.exceptions import DimensionError, NotEnoughDoctors, TooFewEntities, UnknownEntity
from hyperrec.profiles import BenchmarkFeature, DoctorProfile, PatientProfile, TrustMatrix
from hyperrec.recsys import (
    AffinityVector,
    DoctorIcdRecommender,
    SimilarityMatrix,
    cosine_similarity,
    doctor_similarity,
    patient_similarity,
    predict_benchmark,
    predict_doctor_model,
    predict_patient_model,
    recommend_top_n,
)


def trust(values, patients=None, doctors=None):
    values = np.asarray(values, dtype=float)
    patients = patients or tuple(f"P{i + 1}" for i in range(values.shape[0]))
    doctors = doctors or tuple(f"D{j + 1}" for j in range(values.shape[1]))
    return TrustMatrix(values, tuple(patients), tuple(doctors))


def random_sim(rng, n):
    A = rng.uniform(size=(n, n))
    S = (A + A.T) / 2
    np.fill_diagonal(S, 1.0)
    return S


class TestSimilarity:
    def test_identical_doctors(self):
        profs = [DoctorProfile("D1", np.array([0.1, 0.2]), 1), DoctorProfile("D2", np.array([0.1, 0.2]), 1)]
        np.testing.assert_array_equal(doctor_similarity(profs).values, np.ones((2, 2)))

    def test_distances_2_2_4(self):
        # collinear points with d(1,2) = d(2,3) = 2, d(1,3) = 4: radii -tanh(1), 0, tanh(1)
        t = math.tanh(1.0)
        profs = [DoctorProfile(f"D{k}", np.array([x, 0.0]), 1) for k, x in enumerate((-t, 0.0, t), 1)]
        S = doctor_similarity(profs).values
        np.testing.assert_allclose(S, [[1, 0.5, 0], [0.5, 1, 0.5], [0, 0.5, 1]], atol=1e-12)
        pats = [PatientProfile(p.doctor_id, p.feature, 1) for p in profs]
        np.testing.assert_allclose(patient_similarity(pats).values, S, atol=0)

    def test_relabeling_equivariance(self):
        rng = np.random.default_rng(0)
        feats = rng.uniform(-0.5, 0.5, size=(5, 3))
        profs = [DoctorProfile(f"D{k}", f, 1) for k, f in enumerate(feats)]
        perm = [3, 0, 4, 1, 2]
        S = doctor_similarity(profs).values
        Sp = doctor_similarity([profs[k] for k in perm]).values
        np.testing.assert_array_equal(Sp, S[np.ix_(perm, perm)])

    def test_self_similarity_is_row_max(self):
        rng = np.random.default_rng(1)
        profs = [PatientProfile(f"P{k}", f, 1) for k, f in enumerate(rng.uniform(-0.5, 0.5, size=(6, 2)))]
        S = patient_similarity(profs).values
        assert np.all(np.diag(S) == S.max(axis=1))

    def test_too_few(self):
        with pytest.raises(TooFewEntities):
            doctor_similarity([DoctorProfile("D1", np.zeros(2), 1)])


class TestCosine:
    def test_values(self):
        assert cosine_similarity([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)
        assert cosine_similarity([1, 0], [0, 1]) == 0.0
        assert cosine_similarity([1, 1, 0], [1, 0, 1]) == pytest.approx(0.5, abs=1e-15)
        assert cosine_similarity([0, 0], [1, 0]) == 0.0

    def test_dimension(self):
        with pytest.raises(DimensionError):
            cosine_similarity([1, 0], [1, 0, 0])


class TestDoctorModel:
    def test_hand_example(self):
        y = trust([[1.0, 0.0]])
        s = SimilarityMatrix(np.array([[1, 0.5], [0.5, 1]]), ("D1", "D2"))
        p = predict_doctor_model("P1", y, s)
        np.testing.assert_allclose(p.scores, [2 / 3, 1 / 3], atol=1e-15)

    def test_empty_history(self):
        s = SimilarityMatrix(np.array([[1, 0.5], [0.5, 1]]), ("D1", "D2"))
        assert np.all(predict_doctor_model("P1", trust([[0.0, 0.0]]), s).scores == 0)

    def test_uniform_offdiagonal_preserves_ranking(self):
        rng = np.random.default_rng(2)
        for K in range(2, 6):
            S = np.full((K, K), rng.uniform(0, 0.9))
            np.fill_diagonal(S, 1.0)
            s = SimilarityMatrix(S, tuple(f"D{j + 1}" for j in range(K)))
            for _ in range(20):
                yv = rng.uniform(size=K)
                p = predict_doctor_model("P1", trust([yv]), s).scores
                np.testing.assert_array_equal(np.argsort(-p, kind="stable"), np.argsort(-yv, kind="stable"))

    def test_matches_naive(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            N, K = rng.integers(1, 11), rng.integers(2, 6)
            Y = rng.uniform(size=(N, K)) * (rng.uniform(size=(N, K)) < 0.6)
            S = random_sim(rng, K)
            y = trust(Y)
            s = SimilarityMatrix(S, y.doctor_ids)
            for i, pid in enumerate(y.patient_ids):
                for visited_only in (False, True):
                    got = predict_doctor_model(pid, y, s, "visited-only" if visited_only else "literal")
                    np.testing.assert_allclose(got.scores, naive.doctor_model(Y[i], S, visited_only), atol=1e-12)

    def test_degenerate_denominator(self):
        s = SimilarityMatrix(np.zeros((2, 2)), ("D1", "D2"))
        p = predict_doctor_model("P1", trust([[1.0, 0.0]]), s)
        assert p.degenerate and np.all(p.scores == 0)

    def test_scale_covariance(self):
        rng = np.random.default_rng(4)
        S = random_sim(rng, 5)
        s = SimilarityMatrix(S, tuple(f"D{j + 1}" for j in range(5)))
        yv = rng.uniform(size=5)
        p1 = predict_doctor_model("P1", trust([yv]), s)
        p2 = predict_doctor_model("P1", trust([3.7 * yv]), s)
        np.testing.assert_allclose(p2.scores, 3.7 * p1.scores, rtol=1e-12)
        assert recommend_top_n(p1, 3).doctor_ids == recommend_top_n(p2, 3).doctor_ids

    def test_label_permutation(self):
        rng = np.random.default_rng(5)
        S = random_sim(rng, 4)
        labels = ("D1", "D2", "D3", "D4")
        yv = rng.uniform(size=4)
        base = predict_doctor_model("P1", trust([yv]), SimilarityMatrix(S, labels))
        perm = [2, 0, 3, 1]
        permuted = predict_doctor_model(
            "P1",
            trust([yv[perm]], doctors=tuple(labels[k] for k in perm)),
            SimilarityMatrix(S[np.ix_(perm, perm)], tuple(labels[k] for k in perm)),
        )
        np.testing.assert_allclose(permuted.scores, base.scores[perm], atol=1e-15)

    def test_unknown_patient(self):
        s = SimilarityMatrix(np.eye(2), ("D1", "D2"))
        with pytest.raises(UnknownEntity):
            predict_doctor_model("P7", trust([[1.0, 0.0]]), s)


class TestPatientModels:
    def test_single_neighbour(self):
        y = trust([[1.0, 0.0], [0.0, 1.0]])
        s = SimilarityMatrix(np.array([[1.0, 1.0], [1.0, 1.0]]), ("P1", "P2"))
        np.testing.assert_allclose(predict_patient_model("P1", y, s).scores, [0, 1])

    def test_zero_neighbours(self):
        y = trust([[1.0, 0.0], [0.0, 1.0]])
        s = SimilarityMatrix(np.eye(2), ("P1", "P2"))
        p = predict_patient_model("P1", y, s)
        assert p.degenerate and np.all(p.scores == 0)

    def test_matches_naive(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            N, K = rng.integers(2, 11), rng.integers(2, 6)
            Y = rng.uniform(size=(N, K))
            S = random_sim(rng, N)
            y = trust(Y)
            s = SimilarityMatrix(S, y.patient_ids)
            for i, pid in enumerate(y.patient_ids):
                np.testing.assert_allclose(predict_patient_model(pid, y, s).scores,
                                           naive.neighbour_model(i, Y, S), atol=1e-12)

    def test_benchmark_twin(self):
        y = trust([[0.0, 0.0], [1.0, 0.0]])
        feats = [BenchmarkFeature("P1", np.array([1.0, 0.0])), BenchmarkFeature("P2", np.array([1.0, 0.0]))]
        np.testing.assert_allclose(predict_benchmark("P1", y, feats).scores, [1, 0])

    def test_benchmark_orthogonal(self):
        y = trust([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        feats = [BenchmarkFeature(f"P{k + 1}", v) for k, v in enumerate(np.eye(3))]
        p = predict_benchmark("P1", y, feats)
        assert p.degenerate and np.all(p.scores == 0)

    def test_benchmark_matches_naive(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            N, K = rng.integers(2, 11), rng.integers(2, 6)
            Y = rng.uniform(size=(N, K))
            F = rng.normal(size=(N, 6))
            y = trust(Y)
            feats = [BenchmarkFeature(p, F[i]) for i, p in enumerate(y.patient_ids)]
            for i, pid in enumerate(y.patient_ids):
                np.testing.assert_allclose(predict_benchmark(pid, y, feats).scores,
                                           naive.benchmark_model(i, Y.tolist(), F.tolist()), atol=1e-12)


class TestTopN:
    def aff(self, scores):
        return AffinityVector("P1", tuple(f"d{k + 1}" for k in range(len(scores))), np.asarray(scores))

    def test_sort(self):
        assert recommend_top_n(self.aff([0.9, 0.1, 0.5]), 3).doctor_ids == ("d1", "d3", "d2")

    def test_ties(self):
        p = AffinityVector("P1", ("b", "c", "a"), np.array([0.2, 0.2, 0.2]))
        assert recommend_top_n(p, 3).doctor_ids == ("a", "b", "c")

    def test_prefix(self):
        rng = np.random.default_rng(8)
        p = self.aff(rng.integers(0, 4, size=12) / 4)
        l3, l5, l10 = (recommend_top_n(p, n).doctor_ids for n in (3, 5, 10))
        assert l5[:3] == l3 and l10[:5] == l5
        assert len(set(l10)) == 10

    def test_not_enough(self):
        with pytest.raises(NotEnoughDoctors):
            recommend_top_n(self.aff([0.1, 0.2]), 3)


def test_estimator_api():
    est = DoctorIcdRecommender(tau_days=30.0, denominator="visited-only")
    params = est.get_params()
    assert params["tau_days"] == 30.0 and params["denominator"] == "visited-only"
    assert clone(est).get_params() == params
    with pytest.raises(NotFittedError):
        est.predict()
