import json

import numpy as np
import pytest

from corposcope.errors import SelectionError
from corposcope.pca import PcaModel, Scaler
from corposcope.profiling import METRIC_NAMES, DatasetProfile, MetricVector, PerSampleFeatures
from corposcope.selection import (
    SubsetSpec,
    build_subsets,
    rank_by_projection,
    rank_by_proxy,
    subset_manifest,
    write_subset_jsonl,
)

from .conftest import make_handle


def model_with_loadings(rows, fingerprint="fp0"):
    loadings = np.asarray(rows, dtype=np.float64)
    return PcaModel(
        language="en",
        scaler=Scaler(means=np.zeros(10), stds=np.ones(10), constant=np.zeros(10, dtype=bool)),
        loadings=loadings,
        explained_variance_ratio=np.linspace(0.5, 0.1, loadings.shape[0]),
        dataset_scores={},
        metric_order=METRIC_NAMES,
        config_fingerprint=fingerprint,
        n_datasets=5,
    )


def one_hot_model(metric, value=1.0):
    row = np.zeros(10)
    row[METRIC_NAMES.index(metric)] = value
    return model_with_loadings([row])


def profile_with_features(ids, columns_values, dataset_id="fixture"):
    """columns_values: dict metric -> list of per-sample values (None allowed)."""
    rows = []
    for i in range(len(ids)):
        rows.append(tuple(columns_values.get(m, [0.0] * len(ids))[i] for m in METRIC_NAMES))
    features = PerSampleFeatures(ids=tuple(ids), columns=METRIC_NAMES, rows=tuple(rows))
    return DatasetProfile(
        dataset_id=dataset_id,
        language="en",
        sample_seed=0,
        n_samples=len(ids),
        metrics=MetricVector(ttr=0.5),
        config_fingerprint="fp0",
        per_sample=features,
    )


class TestRankByProxy:
    def test_descending_by_value(self):
        profile = profile_with_features(["1", "2", "3"], {"ttr": [3.0, 1.0, 2.0]})
        ranking = rank_by_proxy(profile, one_hot_model("ttr"), 1)
        assert ranking.ids == ("1", "3", "2")

    def test_negative_loading_reverses(self):
        profile = profile_with_features(["1", "2", "3"], {"ttr": [3.0, 1.0, 2.0]})
        ranking = rank_by_proxy(profile, one_hot_model("ttr", -1.0), 1)
        assert ranking.ids == ("2", "3", "1")

    def test_ties_break_by_id(self):
        profile = profile_with_features(["b", "a", "c"], {"ttr": [1.0, 1.0, 1.0]})
        ranking = rank_by_proxy(profile, one_hot_model("ttr"), 1)
        assert ranking.ids == ("a", "b", "c")

    def test_missing_values_sort_last(self):
        profile = profile_with_features(["1", "2", "3"], {"ttr": [0.1, None, 0.9]})
        ranking = rank_by_proxy(profile, one_hot_model("ttr"), 1)
        assert ranking.ids == ("3", "1", "2")
        assert ranking.scores[-1] is None

    def test_requires_per_sample(self):
        profile = DatasetProfile(
            dataset_id="d", language="en", sample_seed=0, n_samples=3,
            metrics=MetricVector(ttr=0.5), config_fingerprint="fp0",
        )
        with pytest.raises(SelectionError, match="--per-sample"):
            rank_by_proxy(profile, one_hot_model("ttr"), 1)

    def test_all_missing_proxy_rejected(self):
        profile = profile_with_features(["1", "2"], {"silhouette": [None, None]})
        with pytest.raises(SelectionError, match="no defined per-sample values"):
            rank_by_proxy(profile, one_hot_model("silhouette"), 1)


class TestRankByProjection:
    def test_one_hot_equals_proxy(self):
        values = {"mtld": [12.0, 3.0, 44.0, 7.0, 25.0]}
        profile = profile_with_features(["1", "2", "3", "4", "5"], values)
        model = one_hot_model("mtld")
        assert rank_by_projection(profile, model, 1).ids == rank_by_proxy(profile, model, 1).ids

    def test_one_hot_negative_loading_equals_proxy(self):
        values = {"mtld": [12.0, 3.0, 44.0, 7.0, 25.0]}
        profile = profile_with_features(["1", "2", "3", "4", "5"], values)
        model = one_hot_model("mtld", -1.0)
        assert rank_by_projection(profile, model, 1).ids == rank_by_proxy(profile, model, 1).ids

    def test_identical_samples_rank_by_id(self):
        profile = profile_with_features(["3", "1", "2"], {"ttr": [0.4, 0.4, 0.4]})
        ranking = rank_by_projection(profile, one_hot_model("ttr"), 1)
        assert ranking.ids == ("1", "2", "3")
        assert all(s == 0.0 for s in ranking.scores)

    def test_two_metric_loading_hand_computed(self):
        # three samples, two active metrics, loading (1/sqrt2, 1/sqrt2)
        ttr_vals = [0.2, 0.5, 0.8]
        mattr_vals = [0.9, 0.1, 0.5]
        profile = profile_with_features(
            ["1", "2", "3"], {"ttr": ttr_vals, "mattr": mattr_vals}
        )
        row = np.zeros(10)
        row[METRIC_NAMES.index("ttr")] = 1 / np.sqrt(2)
        row[METRIC_NAMES.index("mattr")] = 1 / np.sqrt(2)
        model = model_with_loadings([row])
        ranking = rank_by_projection(profile, model, 1)

        def z(vals):
            arr = np.asarray(vals)
            return (arr - arr.mean()) / arr.std()

        expected = (z(ttr_vals) + z(mattr_vals)) / np.sqrt(2)
        by_id = dict(zip(ranking.ids, ranking.scores))
        for i, sample_id in enumerate(["1", "2", "3"]):
            assert by_id[sample_id] == pytest.approx(expected[i], abs=1e-12)

    def test_missing_standardizes_to_zero(self):
        profile = profile_with_features(["1", "2", "3"], {"ttr": [0.1, None, 0.9]})
        ranking = rank_by_projection(profile, one_hot_model("ttr"), 1)
        by_id = dict(zip(ranking.ids, ranking.scores))
        assert by_id["2"] == 0.0


class TestBuildSubsets:
    def _setup(self, n=10):
        ids = [str(i + 1) for i in range(n)]
        values = {"ttr": [float(i + 1) for i in range(n)]}  # ascending by id
        profile = profile_with_features(ids, values)
        handle = make_handle([f"text {i}" for i in range(n)], ids=ids)
        model = one_hot_model("ttr")
        ranking = rank_by_proxy(profile, model, 1)
        return handle, ranking

    def test_high_low_membership(self):
        handle, ranking = self._setup()
        spec = SubsetSpec(dataset_id="fixture", pc=1, mode="high", size=2, seed=0)
        result = build_subsets(handle, ranking, spec)
        assert set(result.high) == {"9", "10"}
        assert set(result.low) == {"1", "2"}

    def test_sizes_match_exactly(self):
        handle, ranking = self._setup(20)
        spec = SubsetSpec(dataset_id="fixture", pc=1, mode="high", size=7, seed=1)
        result = build_subsets(handle, ranking, spec)
        assert len(result.high) == len(result.low) == len(result.random) == 7

    def test_no_overlap_when_size_at_most_half(self):
        handle, ranking = self._setup(10)
        spec = SubsetSpec(dataset_id="fixture", pc=1, mode="high", size=5, seed=1)
        result = build_subsets(handle, ranking, spec)
        assert set(result.high) & set(result.low) == set()

    def test_oversize_rejected(self):
        handle, ranking = self._setup(10)
        with pytest.raises(SelectionError, match="exceeds dataset size"):
            build_subsets(handle, ranking, SubsetSpec("fixture", 1, "high", size=11))

    def test_overlapping_size_rejected(self):
        handle, ranking = self._setup(10)
        with pytest.raises(SelectionError, match="overlap"):
            build_subsets(handle, ranking, SubsetSpec("fixture", 1, "high", size=6))

    def test_random_deterministic(self):
        handle, ranking = self._setup(30)
        spec = SubsetSpec("fixture", 1, "random", size=10, seed=123)
        a = build_subsets(handle, ranking, spec)
        b = build_subsets(handle, ranking, spec)
        assert a.random == b.random
        other = build_subsets(handle, ranking, SubsetSpec("fixture", 1, "random", size=10, seed=124))
        assert other.random != a.random

    def test_mean_proxy_ordering(self):
        handle, ranking = self._setup(30)
        spec = SubsetSpec("fixture", 1, "high", size=10, seed=5)
        result = build_subsets(handle, ranking, spec)
        score = dict(zip(ranking.ids, ranking.scores))

        def mean_of(ids):
            return sum(score[i] for i in ids) / len(ids)

        assert mean_of(result.high) > mean_of(result.random) > mean_of(result.low)

    def test_monotone_relabeling_keeps_membership(self):
        ids = [str(i + 1) for i in range(12)]
        raw = [float(i) for i in range(12)]
        transformed = [v**3 + 5 for v in raw]  # strictly monotone
        p1 = profile_with_features(ids, {"ttr": raw})
        p2 = profile_with_features(ids, {"ttr": transformed})
        handle = make_handle([f"t {i}" for i in range(12)], ids=ids)
        model = one_hot_model("ttr")
        spec = SubsetSpec("fixture", 1, "high", size=4, seed=2)
        r1 = build_subsets(handle, rank_by_proxy(p1, model, 1), spec)
        r2 = build_subsets(handle, rank_by_proxy(p2, model, 1), spec)
        assert set(r1.high) == set(r2.high)
        assert set(r1.low) == set(r2.low)

    def test_ranking_ids_must_exist_in_handle(self):
        _, ranking = self._setup(10)
        other_handle = make_handle(["a b"], ids=["zzz"])
        with pytest.raises(SelectionError, match="absent"):
            build_subsets(other_handle, ranking, SubsetSpec("fixture", 1, "high", size=1))


class TestExport:
    def test_jsonl_records_preserved_untouched(self, tmp_path):
        handle = make_handle(["alpha beta", "gamma delta", "epsilon zeta"])
        out = tmp_path / "subset.jsonl"
        write_subset_jsonl(handle, ("1", "3"), out)
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines == [handle.samples[0].raw, handle.samples[2].raw]

    def test_manifest_contents(self):
        ids = ["1", "2", "3", "4"]
        profile = profile_with_features(ids, {"ttr": [1.0, 2.0, 3.0, 4.0]})
        model = one_hot_model("ttr")
        ranking = rank_by_proxy(profile, model, 1)
        spec = SubsetSpec("fixture", 1, "high", size=2, seed=0)
        manifest = subset_manifest(spec, ("4", "3"), ranking)
        assert manifest["dataset_id"] == "fixture"
        assert manifest["mode"] == "high"
        assert manifest["score_stats"] == {"min": 3.0, "max": 4.0, "mean": 3.5}
        json.dumps(manifest)  # serializable
