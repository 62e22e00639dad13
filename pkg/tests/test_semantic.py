import math
import random

import numpy as np
import pytest

from corposcope.errors import ConfigError, UndefinedMetricError
from corposcope.semantic import (
    ClusterConfig,
    EmbeddingProviderSpec,
    centroid_cosines,
    embed_builtin,
    kmeans,
    mean_pairwise_cosine,
    silhouette,
    silhouette_samples,
    tfidf_fit_transform,
)


class TestTfidf:
    def test_single_document_self_cosine(self):
        model = tfidf_fit_transform([["a", "b"]])
        row = model.matrix.toarray()[0]
        assert row @ row == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_vocab_orthogonal(self):
        model = tfidf_fit_transform([["a", "b"], ["c", "d"]])
        x = model.matrix.toarray()
        assert x[0] @ x[1] == 0.0

    def test_closed_form_cosine(self):
        # docs ["a","b"], ["a","c"]: idf(a)=ln(3/3)+1=1, idf(b)=idf(c)=ln(3/2)+1
        model = tfidf_fit_transform([["a", "b"], ["a", "c"]])
        x = model.matrix.toarray()
        cosine = float(x[0] @ x[1])
        expected = 1.0 / (1.0 + (1.0 + math.log(1.5)) ** 2)
        assert cosine == pytest.approx(expected, abs=1e-12)

    def test_vocabulary_first_occurrence_order(self):
        model = tfidf_fit_transform([["b", "a"], ["c", "a"]])
        assert list(model.vocabulary) == ["b", "a", "c"]

    def test_all_empty_undefined(self):
        with pytest.raises(UndefinedMetricError):
            tfidf_fit_transform([[], []])

    def test_empty_doc_gets_zero_row(self):
        model = tfidf_fit_transform([["a"], []])
        assert np.allclose(model.matrix.toarray()[1], 0.0)


class TestMeanPairwiseCosine:
    def test_identical_unit_vectors(self):
        vectors = np.tile([0.6, 0.8], (5, 1))
        assert mean_pairwise_cosine(vectors) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert mean_pairwise_cosine(np.eye(2)) == 0.0

    def test_hand_computed_three_vectors(self):
        vectors = np.array([[1, 0], [0, 1], [1 / np.sqrt(2), 1 / np.sqrt(2)]])
        assert mean_pairwise_cosine(vectors) == pytest.approx(np.sqrt(2) / 3, abs=1e-12)

    def test_zero_vector_contributes_zero(self):
        vectors = np.array([[1.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
        # pairs: (0,1)=0, (0,2)=1, (1,2)=0
        assert mean_pairwise_cosine(vectors) == pytest.approx(1 / 3, abs=1e-12)

    def test_rotation_invariant(self):
        rng = np.random.default_rng(0)
        vectors = rng.standard_normal((10, 4))
        theta = 0.7
        rot = np.eye(4)
        rot[0, 0] = rot[1, 1] = np.cos(theta)
        rot[0, 1], rot[1, 0] = -np.sin(theta), np.sin(theta)
        assert mean_pairwise_cosine(vectors @ rot) == pytest.approx(
            mean_pairwise_cosine(vectors), abs=1e-12
        )

    def test_single_vector_undefined(self):
        with pytest.raises(UndefinedMetricError):
            mean_pairwise_cosine(np.array([[1.0, 0.0]]))


class TestEmbedBuiltin:
    def test_identical_texts_identical_vectors(self):
        seqs = [["hello", "world", "again"]] * 4
        emb = embed_builtin(seqs, svd_rank=8, seed=0)
        assert np.allclose(emb, emb[0])

    def test_deterministic_across_calls(self):
        rng = random.Random(2)
        seqs = [[f"w{rng.randint(0, 30)}" for _ in range(12)] for _ in range(25)]
        a = embed_builtin(seqs, svd_rank=8, seed=42)
        b = embed_builtin(seqs, svd_rank=8, seed=42)
        assert np.array_equal(a, b)

    def test_rank_one_corpus_collinear(self):
        seqs = [["solo", "sentence"]] * 6
        emb = embed_builtin(seqs, svd_rank=16, seed=1)
        assert mean_pairwise_cosine(emb) == pytest.approx(1.0, abs=1e-9)

    def test_dimension_rule(self):
        seqs = [[f"w{i}", f"w{i+1}"] for i in range(10)]  # vocab 11, N=10
        emb = embed_builtin(seqs, svd_rank=4, seed=0)
        assert emb.shape == (10, 4)
        emb_full = embed_builtin(seqs, svd_rank=500, seed=0)
        assert emb_full.shape == (10, min(500, 11, 9))

    def test_randomized_path_matches_dense_geometry(self):
        # corpus large enough to trigger the randomized range finder
        rng = random.Random(9)
        seqs = [
            [f"w{rng.randint(0, 400)}" for _ in range(rng.randint(5, 15))] for _ in range(120)
        ]
        emb = embed_builtin(seqs, svd_rank=8, seed=3)
        assert emb.shape == (120, 8)
        norms = np.linalg.norm(emb, axis=1)
        assert np.allclose(norms[norms > 0], 1.0)


class TestKmeans:
    def test_two_obvious_clusters(self):
        pts = np.array([[0.0], [0.1], [10.0], [10.1]])
        result = kmeans(pts, ClusterConfig(k=2, restarts=5, seed=0))
        centroids = sorted(float(c) for c in result.centroids[:, 0])
        assert centroids == pytest.approx([0.05, 10.05], abs=1e-12)
        labels = result.assignments
        assert labels[0] == labels[1] and labels[2] == labels[3] and labels[0] != labels[2]

    def test_identical_points_zero_inertia(self):
        pts = np.zeros((6, 2))
        result = kmeans(pts, ClusterConfig(k=2, restarts=3, seed=1))
        assert result.inertia == 0.0

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        pts = rng.standard_normal((40, 3))
        cfg = ClusterConfig(k=4, restarts=6, seed=11)
        a = kmeans(pts, cfg)
        b = kmeans(pts, cfg)
        assert np.array_equal(a.assignments, b.assignments)
        assert a.inertia == b.inertia

    def test_threads_do_not_change_result(self):
        rng = np.random.default_rng(6)
        pts = rng.standard_normal((50, 4))
        cfg = ClusterConfig(k=3, restarts=8, seed=2)
        a = kmeans(pts, cfg, threads=1)
        b = kmeans(pts, cfg, threads=4)
        assert np.array_equal(a.assignments, b.assignments)
        assert a.inertia == b.inertia

    def test_inertia_non_increasing_over_iterations(self):
        for seed in range(50):
            rng = np.random.default_rng(seed)
            pts = rng.standard_normal((30, 2))
            result = kmeans(pts, ClusterConfig(k=3, restarts=2, seed=seed))
            history = result.inertia_history
            for before, after in zip(history, history[1:]):
                assert after <= before + 1e-9

    def test_k_out_of_range(self):
        pts = np.zeros((4, 1))
        with pytest.raises(ConfigError):
            kmeans(pts, ClusterConfig(k=4, seed=0))


class TestSilhouette:
    def test_four_point_hand_value(self):
        pts = np.array([[0.0], [0.1], [10.0], [10.1]])
        labels = np.array([0, 0, 1, 1])
        expected = (9.95 / 10.05 + 9.85 / 9.95 + 9.85 / 9.95 + 9.95 / 10.05) / 4
        assert silhouette(pts, labels) == pytest.approx(expected, abs=1e-9)

    def test_coincident_clusters_far_apart(self):
        pts = np.array([[0.0], [0.0], [5.0], [5.0]])
        assert silhouette(pts, np.array([0, 0, 1, 1])) == 1.0

    def test_singleton_cluster_scores_zero(self):
        pts = np.array([[0.0], [0.2], [9.0]])
        scores = silhouette_samples(pts, np.array([0, 0, 1]))
        assert scores[2] == 0.0

    def test_single_cluster_undefined(self):
        pts = np.array([[0.0], [1.0], [2.0]])
        with pytest.raises(UndefinedMetricError):
            silhouette(pts, np.array([0, 0, 0]))

    def test_bounded(self):
        rng = np.random.default_rng(8)
        pts = rng.standard_normal((40, 3))
        labels = rng.integers(0, 3, size=40)
        value = silhouette(pts, labels)
        assert -1.0 <= value <= 1.0


class TestCentroidCosines:
    def test_sample_on_centroid_direction(self):
        vectors = np.array([[2.0, 0.0], [1.0, 0.0], [3.0, 0.0]])
        cosines = centroid_cosines(vectors)
        assert np.allclose(cosines, 1.0)

    def test_zero_vector_scores_zero(self):
        vectors = np.array([[1.0, 0.0], [0.0, 0.0]])
        assert centroid_cosines(vectors)[1] == 0.0


class TestProviderSpec:
    def test_http_requires_endpoint(self):
        with pytest.raises(ConfigError):
            EmbeddingProviderSpec(kind="external_http")

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            EmbeddingProviderSpec(kind="magic")
