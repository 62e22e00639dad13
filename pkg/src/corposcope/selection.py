"""Rank samples along PCA dimensions and build High/Low/Random subsets.

Two rankings are provided: proxy (the single metric with the highest
absolute loading on the chosen component, multiplied by the loading's sign
so "high" always points along the positive PC direction) and projection
(per-sample feature rows standardized within the dataset and projected onto
the component's loading vector). The three subsets for one request are
size-matched by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import SCHEMA_VERSIONS
from .corpus import DatasetHandle
from .errors import SelectionError
from .pca import PcaModel, top_loading_metric
from .profiling import DatasetProfile
from .seeds import seeded_subset

RANKINGS = ("proxy_metric", "pc_projection")
MODES = ("high", "low", "random")


@dataclass(frozen=True)
class SubsetSpec:
    dataset_id: str
    pc: int
    mode: str
    size: int = 2000
    ranking: str = "pc_projection"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise SelectionError(f"unknown subset mode {self.mode!r}")
        if self.ranking not in RANKINGS:
            raise SelectionError(f"unknown ranking {self.ranking!r}")
        if self.size < 1:
            raise SelectionError("subset size must be >= 1")


@dataclass(frozen=True)
class RankedSamples:
    """Sample ids ordered best-first, with their ranking scores (None = missing)."""

    ids: tuple[str, ...]
    scores: tuple[float | None, ...]

    def score_of(self, sample_id: str) -> float | None:
        return self.scores[self.ids.index(sample_id)]


@dataclass(frozen=True)
class SubsetResult:
    high: tuple[str, ...]
    low: tuple[str, ...]
    random: tuple[str, ...]
    ranking: RankedSamples


def _require_per_sample(profile: DatasetProfile):
    if profile.per_sample is None:
        raise SelectionError(
            "profile lacks per-sample features; re-profile with --per-sample"
        )
    return profile.per_sample


def _order(ids: list[str], scores: list[float | None]) -> RankedSamples:
    """Descending by score, missing values last, ties by sample id."""
    def key(i: int):
        score = scores[i]
        return (score is None, -score if score is not None else 0.0, ids[i])

    order = sorted(range(len(ids)), key=key)
    return RankedSamples(
        ids=tuple(ids[i] for i in order),
        scores=tuple(scores[i] for i in order),
    )


def rank_by_proxy(profile: DatasetProfile, model: PcaModel, pc: int) -> RankedSamples:
    """Order samples by the top-loading metric of the component, sign-adjusted."""
    features = _require_per_sample(profile)
    metric, loading = top_loading_metric(model, pc)
    col = features.columns.index(metric)
    sign = -1.0 if loading < 0 else 1.0
    scores = [
        None if row[col] is None else sign * row[col] for row in features.rows
    ]
    if all(s is None for s in scores):
        raise SelectionError(
            f"proxy metric {metric!r} has no defined per-sample values for this dataset"
        )
    return _order(list(features.ids), scores)


def rank_by_projection(profile: DatasetProfile, model: PcaModel, pc: int) -> RankedSamples:
    """Order samples by projecting standardized feature rows onto the PC loading.

    Columns are standardized by their within-dataset mean and population
    std; missing entries become 0 after standardization, as do constant
    columns.
    """
    features = _require_per_sample(profile)
    if not 1 <= pc <= model.n_components:
        raise SelectionError(f"pc must be in 1..{model.n_components}")
    matrix = np.array(
        [[np.nan if v is None else v for v in row] for row in features.rows],
        dtype=np.float64,
    )
    z = np.zeros_like(matrix)
    for j in range(matrix.shape[1]):
        col = matrix[:, j]
        present = col[~np.isnan(col)]
        # exact max==min, not std==0: the std of a constant column can be a
        # nonzero rounding residue
        if present.size == 0 or float(present.max()) == float(present.min()):
            continue
        mean = float(np.mean(present))
        std = float(np.std(present))
        z[:, j] = np.where(np.isnan(col), 0.0, (col - mean) / std)
    loading_order = [model.metric_order.index(c) for c in features.columns]
    loadings = model.loadings[pc - 1][loading_order]
    scores = [float(v) for v in z @ loadings]
    return _order(list(features.ids), scores)


def build_subsets(
    handle: DatasetHandle, ranking: RankedSamples, spec: SubsetSpec
) -> SubsetResult:
    """High/Low/Random sample-id subsets of exactly spec.size each.

    High takes the top of the ranking, Low the bottom; Random draws without
    replacement from the ranked population with the documented seeded
    routine. High and Low may never intersect, so sizes above half the
    population are an error.
    """
    ranked = list(ranking.ids)
    n = len(ranked)
    handle_ids = set(handle.ids())
    unknown = [i for i in ranked if i not in handle_ids]
    if unknown:
        raise SelectionError(
            f"ranking references ids absent from the dataset (first: {unknown[0]!r})"
        )
    if spec.size > n:
        raise SelectionError(f"subset size {spec.size} exceeds dataset size {n}")
    if 2 * spec.size > n:
        raise SelectionError(
            f"subset size {spec.size} exceeds half the dataset ({n}); "
            "high and low subsets would overlap"
        )
    high = tuple(ranked[: spec.size])
    low = tuple(ranked[n - spec.size :])
    # the random draw runs over the population in original dataset order, so
    # it does not depend on the ranking permutation
    ranked_set = set(ranked)
    population = [s.id for s in handle.samples if s.id in ranked_set]
    random_ids = tuple(population[i] for i in seeded_subset(n, spec.size, spec.seed))
    return SubsetResult(high=high, low=low, random=random_ids, ranking=ranking)


def write_subset_jsonl(handle: DatasetHandle, ids: tuple[str, ...], path) -> None:
    """Emit the subset's original records, one JSON line each, in file order."""
    wanted = set(ids)
    with open(path, "w", encoding="utf-8") as fh:
        for sample in handle.samples:
            if sample.id in wanted:
                raw = sample.raw
                if raw is None:
                    raw = json.dumps({"id": sample.id, "text": sample.text}, ensure_ascii=False)
                fh.write(raw + "\n")


def subset_manifest(
    spec: SubsetSpec, ids: tuple[str, ...], ranking: RankedSamples, config_fingerprint: str = ""
) -> dict:
    chosen = set(ids)
    values = [
        s for i, s in zip(ranking.ids, ranking.scores) if i in chosen and s is not None
    ]
    stats = None
    if values:
        stats = {
            "min": min(values),
            "max": max(values),
            "mean": sum(values) / len(values),
        }
    return {
        "schema_version": SCHEMA_VERSIONS["subset_manifest"],
        "dataset_id": spec.dataset_id,
        "pc": spec.pc,
        "mode": spec.mode,
        "ranking": spec.ranking,
        "size": spec.size,
        "seed": spec.seed,
        "score_stats": stats,
        "config_fingerprint": config_fingerprint,
    }
