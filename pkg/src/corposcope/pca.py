"""Per-language standardization and PCA over the dataset-by-metric matrix.

Standardization uses the population (divide-by-D) convention because the
profiled datasets are the entire population under study. Missing metric
values are imputed with the per-language column mean before fitting, which
puts them at 0 after z-scoring. The SVD is deterministic and a fixed sign
convention (largest-magnitude loading entry positive) makes refits
bit-identical.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from . import SCHEMA_VERSIONS
from .errors import ConfigError, FitError
from .profiling import METRIC_NAMES, DatasetProfile

CATEGORY_ORDER = ("diversity", "lexical", "semantic", "clustering")

DEFAULT_CATEGORY_MAP = {
    "distinct1": "diversity",
    "distinct2": "diversity",
    "self_bleu": "diversity",
    "ttr": "lexical",
    "mattr": "lexical",
    "hdd": "lexical",
    "mtld": "lexical",
    "cos_embed": "semantic",
    "cos_tfidf": "semantic",
    "silhouette": "clustering",
}

SMALL_D_WARNING = 11  # below this many datasets a 10-feature PCA is near-saturated


@dataclass(frozen=True)
class Scaler:
    means: np.ndarray
    stds: np.ndarray
    constant: np.ndarray  # bool per column

    def transform(self, matrix: np.ndarray) -> np.ndarray:
        x = np.array(matrix, dtype=np.float64)
        # NaN -> column mean, i.e. 0 after z-scoring
        nan_mask = np.isnan(x)
        if nan_mask.any():
            x[nan_mask] = np.broadcast_to(self.means, x.shape)[nan_mask]
        safe_std = np.where(self.constant, 1.0, self.stds)
        z = (x - self.means) / safe_std
        z[:, self.constant] = 0.0
        return z


@dataclass(frozen=True)
class PcaModel:
    language: str
    scaler: Scaler
    loadings: np.ndarray                 # (C, 10), orthonormal rows
    explained_variance_ratio: np.ndarray  # (C,)
    dataset_scores: dict[str, tuple[float, ...]]
    metric_order: tuple[str, ...]
    config_fingerprint: str
    n_datasets: int

    @property
    def n_components(self) -> int:
        return self.loadings.shape[0]

    def project(self, standardized_rows: np.ndarray) -> np.ndarray:
        return np.asarray(standardized_rows, dtype=np.float64) @ self.loadings.T

    def to_json_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSIONS["pca"],
            "language": self.language,
            "metric_order": list(self.metric_order),
            "scaler": {
                "means": [float(v) for v in self.scaler.means],
                "stds": [float(v) for v in self.scaler.stds],
                "constant_flags": [bool(v) for v in self.scaler.constant],
            },
            "loadings": [[float(v) for v in row] for row in self.loadings],
            "explained_variance_ratio": [float(v) for v in self.explained_variance_ratio],
            "dataset_scores": {
                did: [float(v) for v in scores]
                for did, scores in sorted(self.dataset_scores.items())
            },
            "category_contributions": [
                [float(v) for v in row] for row in category_contributions(self)
            ],
            "config_fingerprint": self.config_fingerprint,
            "n_datasets": self.n_datasets,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2, ensure_ascii=False)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "PcaModel":
        if doc.get("schema_version") != SCHEMA_VERSIONS["pca"]:
            raise ConfigError(f"unsupported pca schema: {doc.get('schema_version')!r}")
        scaler = Scaler(
            means=np.asarray(doc["scaler"]["means"], dtype=np.float64),
            stds=np.asarray(doc["scaler"]["stds"], dtype=np.float64),
            constant=np.asarray(doc["scaler"]["constant_flags"], dtype=bool),
        )
        return cls(
            language=doc["language"],
            scaler=scaler,
            loadings=np.asarray(doc["loadings"], dtype=np.float64),
            explained_variance_ratio=np.asarray(
                doc["explained_variance_ratio"], dtype=np.float64
            ),
            dataset_scores={k: tuple(v) for k, v in doc["dataset_scores"].items()},
            metric_order=tuple(doc["metric_order"]),
            config_fingerprint=doc["config_fingerprint"],
            n_datasets=int(doc["n_datasets"]),
        )


def fit_scaler(matrix: np.ndarray) -> Scaler:
    """Per-column mean and population std; NaN entries are imputed with the
    column mean first; zero-variance columns are flagged constant and map
    to 0 under transform."""
    x = np.array(matrix, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise FitError("scaler fit needs a 2-D matrix with at least 2 rows")
    means = np.zeros(x.shape[1])
    for j in range(x.shape[1]):
        col = x[:, j]
        present = col[~np.isnan(col)]
        means[j] = float(np.mean(present)) if present.size else 0.0
    nan_mask = np.isnan(x)
    if nan_mask.any():
        x[nan_mask] = np.broadcast_to(means, x.shape)[nan_mask]
    stds = np.std(x, axis=0)  # population convention (divide by D)
    # exact max==min rather than std==0: the std of a constant column can be
    # a nonzero rounding residue
    constant = np.array([float(x[:, j].max()) == float(x[:, j].min()) for j in range(x.shape[1])])
    return Scaler(means=means, stds=stds, constant=constant)


def fit_pca(standardized: np.ndarray, n_components: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """SVD of the centered standardized matrix.

    Returns (loadings, explained_variance_ratio) with the sign convention
    applied. Emits fewer components with a warning when D-1 is smaller than
    requested.
    """
    x = np.asarray(standardized, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise FitError("pca fit requires finite standardized inputs")
    d, m = x.shape
    if d < 2:
        raise FitError("pca fit needs at least 2 datasets")
    max_components = min(d - 1, m)
    if n_components > max_components:
        warnings.warn(
            f"only {max_components} principal components available for {d} datasets",
            stacklevel=2,
        )
        n_components = max_components
    centered = x - np.mean(x, axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    total = float(np.sum(s**2))
    if total == 0.0:
        # all datasets identical after standardization
        evr = np.zeros(n_components)
        loadings = np.eye(m)[:n_components]
        return loadings, evr
    evr = (s[:n_components] ** 2) / total
    loadings = vt[:n_components].copy()
    for i in range(loadings.shape[0]):
        j = int(np.argmax(np.abs(loadings[i])))
        if loadings[i, j] < 0:
            loadings[i] = -loadings[i]
    return loadings, evr


def build_pca_model(
    profiles: list[DatasetProfile], n_components: int = 3
) -> PcaModel:
    """Fit scaler + PCA over one language's profiles and package the model."""
    if not profiles:
        raise FitError("no profiles given")
    languages = sorted({p.language for p in profiles})
    if len(languages) > 1:
        raise FitError(f"mixed-language profiles: {', '.join(languages)}")
    fingerprints = sorted({p.config_fingerprint for p in profiles})
    if len(fingerprints) > 1:
        raise FitError(
            "profiles were produced under different metric configurations: "
            + ", ".join(fingerprints)
        )
    ordered = sorted(profiles, key=lambda p: p.dataset_id)
    ids = [p.dataset_id for p in ordered]
    if len(set(ids)) != len(ids):
        raise FitError("duplicate dataset ids across profiles")
    if len(ordered) < 2:
        raise FitError("pca needs at least 2 dataset profiles")
    if len(ordered) < SMALL_D_WARNING:
        warnings.warn(
            f"PCA over only {len(ordered)} datasets and {len(METRIC_NAMES)} metrics "
            "is near-saturated; interpret loadings with care",
            stacklevel=2,
        )
    matrix = np.array(
        [
            [
                np.nan if p.metrics.as_dict()[name] is None else p.metrics.as_dict()[name]
                for name in METRIC_NAMES
            ]
            for p in ordered
        ],
        dtype=np.float64,
    )
    scaler = fit_scaler(matrix)
    standardized = scaler.transform(matrix)
    loadings, evr = fit_pca(standardized, n_components)
    scores = standardized @ loadings.T
    return PcaModel(
        language=languages[0],
        scaler=scaler,
        loadings=loadings,
        explained_variance_ratio=evr,
        dataset_scores={did: tuple(float(v) for v in row) for did, row in zip(ids, scores)},
        metric_order=METRIC_NAMES,
        config_fingerprint=ordered[0].config_fingerprint,
        n_datasets=len(ordered),
    )


def category_contributions(
    model: PcaModel, category_map: dict[str, str] | None = None
) -> np.ndarray:
    """Squared-loading mass per metric category, one row per component.

    Rows sum to 1 because loading rows are unit vectors.
    """
    cmap = dict(DEFAULT_CATEGORY_MAP if category_map is None else category_map)
    missing = [m for m in model.metric_order if m not in cmap]
    if missing:
        raise ConfigError(f"metrics not covered by category map: {missing}")
    out = np.zeros((model.n_components, len(CATEGORY_ORDER)))
    for col, metric in enumerate(model.metric_order):
        cat_idx = CATEGORY_ORDER.index(cmap[metric])
        out[:, cat_idx] += model.loadings[:, col] ** 2
    return out


def top_loading_metric(model: PcaModel, pc: int) -> tuple[str, float]:
    """Metric with the highest absolute loading on the 1-based component `pc`.

    Ties break toward the earlier metric in metric_order.
    """
    if not 1 <= pc <= model.n_components:
        raise ConfigError(f"pc must be in 1..{model.n_components}")
    row = model.loadings[pc - 1]
    best = 0
    for j in range(1, len(row)):
        if abs(row[j]) > abs(row[best]):
            best = j
    return model.metric_order[best], float(row[best])


def normalized_scores(model: PcaModel) -> dict[str, tuple[float, ...]]:
    """Min-max normalized dataset scores per component (output transform only)."""
    ids = sorted(model.dataset_scores)
    arr = np.array([model.dataset_scores[d] for d in ids], dtype=np.float64)
    lo = arr.min(axis=0)
    hi = arr.max(axis=0)
    span = hi - lo
    out = np.zeros_like(arr)
    for j in range(arr.shape[1]):
        if span[j] > 0:
            out[:, j] = (arr[:, j] - lo[j]) / span[j]
    return {d: tuple(float(v) for v in out[i]) for i, d in enumerate(ids)}
