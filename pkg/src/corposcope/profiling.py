"""Assemble the ten dataset-level metrics and optional per-sample features.

Dataset-level values: distinct-1/2 and Self-BLEU over the sample set;
TTR/MATTR/HD-D/MTLD over the pooled token concatenation in sample order;
cosine metrics as mean pairwise cosines over embedding and TF-IDF vectors;
silhouette from seeded k-means on the embeddings. Metrics whose
preconditions fail are recorded as missing, never fabricated, and no NaN
ever reaches serialized output.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import SCHEMA_VERSIONS
from .corpus import DatasetHandle
from .diversity import BleuConfig, distinct_n, self_bleu_per_sample
from .errors import ConfigError, ProfileError, ProviderError, UndefinedMetricError
from .lexical import LexicalConfig, hdd, mattr, mtld, ttr
from .semantic import (
    ClusterConfig,
    EmbeddingProviderSpec,
    centroid_cosines,
    embed,
    kmeans,
    mean_pairwise_cosine,
    silhouette_samples,
    tfidf_fit_transform,
)

METRIC_NAMES = (
    "distinct1",
    "distinct2",
    "self_bleu",
    "ttr",
    "mattr",
    "hdd",
    "mtld",
    "cos_embed",
    "cos_tfidf",
    "silhouette",
)

# Bounded metrics and their closed ranges, used for output validation.
METRIC_RANGES = {
    "distinct1": (0.0, 1.0),
    "distinct2": (0.0, 1.0),
    "self_bleu": (0.0, 1.0),
    "ttr": (0.0, 1.0),
    "mattr": (0.0, 1.0),
    "hdd": (0.0, 1.0),
    "cos_embed": (-1.0, 1.0),
    "cos_tfidf": (-1.0, 1.0),
    "silhouette": (-1.0, 1.0),
}


@dataclass(frozen=True)
class MetricVector:
    """The ten named metric values; None marks a metric undefined for the data."""

    distinct1: float | None = None
    distinct2: float | None = None
    self_bleu: float | None = None
    ttr: float | None = None
    mattr: float | None = None
    hdd: float | None = None
    mtld: float | None = None
    cos_embed: float | None = None
    cos_tfidf: float | None = None
    silhouette: float | None = None

    def as_dict(self) -> dict[str, float | None]:
        return {name: getattr(self, name) for name in METRIC_NAMES}

    def __post_init__(self):
        for name, value in self.as_dict().items():
            if value is None:
                continue
            if not np.isfinite(value):
                raise ProfileError(f"metric {name} is non-finite: {value}")
            if name in METRIC_RANGES:
                lo, hi = METRIC_RANGES[name]
                if not lo - 1e-9 <= value <= hi + 1e-9:
                    raise ProfileError(f"metric {name}={value} outside [{lo}, {hi}]")


@dataclass(frozen=True)
class ProfileConfig:
    lexical: LexicalConfig = field(default_factory=LexicalConfig)
    bleu: BleuConfig = field(default_factory=BleuConfig)
    embedding: EmbeddingProviderSpec = field(default_factory=EmbeddingProviderSpec)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    pooled_lexical: bool = True   # False: average defined per-sample values instead
    http_fallback_builtin: bool = False

    def fingerprint(self) -> str:
        payload = json.dumps(
            {
                "lexical": asdict(self.lexical),
                "bleu": asdict(self.bleu),
                "embedding": asdict(self.embedding),
                "cluster": asdict(self.cluster),
                "pooled_lexical": self.pooled_lexical,
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class PerSampleFeatures:
    ids: tuple[str, ...]
    columns: tuple[str, ...]
    rows: tuple[tuple[float | None, ...], ...]


@dataclass(frozen=True)
class DatasetProfile:
    dataset_id: str
    language: str
    sample_seed: int | None
    n_samples: int
    metrics: MetricVector
    config_fingerprint: str
    per_sample: PerSampleFeatures | None = None

    def to_json_dict(self) -> dict:
        doc = {
            "schema_version": SCHEMA_VERSIONS["profile"],
            "dataset_id": self.dataset_id,
            "language": self.language,
            "n_samples": self.n_samples,
            "sample_seed": self.sample_seed,
            "config_fingerprint": self.config_fingerprint,
            "metrics": self.metrics.as_dict(),
        }
        if self.per_sample is not None:
            doc["per_sample"] = {
                "ids": list(self.per_sample.ids),
                "columns": list(self.per_sample.columns),
                "rows": [list(row) for row in self.per_sample.rows],
            }
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2, ensure_ascii=False)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "DatasetProfile":
        if doc.get("schema_version") != SCHEMA_VERSIONS["profile"]:
            raise ConfigError(
                f"unsupported profile schema: {doc.get('schema_version')!r}"
            )
        per_sample = None
        if "per_sample" in doc:
            ps = doc["per_sample"]
            per_sample = PerSampleFeatures(
                ids=tuple(ps["ids"]),
                columns=tuple(ps["columns"]),
                rows=tuple(tuple(row) for row in ps["rows"]),
            )
        return cls(
            dataset_id=doc["dataset_id"],
            language=doc["language"],
            sample_seed=doc["sample_seed"],
            n_samples=doc["n_samples"],
            metrics=MetricVector(**doc["metrics"]),
            config_fingerprint=doc["config_fingerprint"],
            per_sample=per_sample,
        )


def _try(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except UndefinedMetricError:
        return None


def _embeddings_or_none(handle: DatasetHandle, config: ProfileConfig):
    token_seqs = [s.tokens for s in handle.samples]
    texts = [s.text for s in handle.samples]
    try:
        return embed(token_seqs, texts, config.embedding)
    except UndefinedMetricError:
        return None
    except ProviderError:
        if config.embedding.kind == "external_http" and config.http_fallback_builtin:
            fallback = EmbeddingProviderSpec(
                kind="builtin_svd",
                svd_rank=config.embedding.svd_rank,
                seed=config.embedding.seed,
            )
            return embed(token_seqs, texts, fallback)
        raise


def profile_dataset(
    handle: DatasetHandle,
    config: ProfileConfig = ProfileConfig(),
    with_per_sample: bool = False,
    threads: int = 1,
) -> DatasetProfile:
    """Compute the ten-metric vector (and optionally per-sample features)."""
    samples = handle.samples
    if len(samples) < 2:
        raise ProfileError(
            f"dataset {handle.dataset_id!r} has {len(samples)} samples; profiling needs >= 2"
        )
    token_seqs = [s.tokens for s in samples]
    pooled: list[str] = []
    for seq in token_seqs:
        pooled.extend(seq)

    bleu_scores = self_bleu_per_sample(token_seqs, config.bleu, threads=threads)

    lex = config.lexical
    if config.pooled_lexical:
        lex_values = {
            "ttr": _try(ttr, pooled),
            "mattr": _try(mattr, pooled, lex.mattr_window),
            "hdd": _try(hdd, pooled, lex.hdd_draw),
            "mtld": _try(mtld, pooled, lex.mtld_threshold),
        }
    else:
        lex_values = {
            "ttr": _mean_defined([_try(ttr, seq) for seq in token_seqs]),
            "mattr": _mean_defined([_try(mattr, seq, lex.mattr_window) for seq in token_seqs]),
            "hdd": _mean_defined([_try(hdd, seq, lex.hdd_draw) for seq in token_seqs]),
            "mtld": _mean_defined([_try(mtld, seq, lex.mtld_threshold) for seq in token_seqs]),
        }

    embeddings = _embeddings_or_none(handle, config)
    tfidf = _try(tfidf_fit_transform, token_seqs)

    cos_embed = None
    cos_tfidf = None
    sil_value = None
    sil_per_sample = None
    if embeddings is not None and embeddings.shape[0] >= 2:
        cos_embed = mean_pairwise_cosine(embeddings)
        n = embeddings.shape[0]
        if 2 <= config.cluster.k <= n - 1 and n >= 3:
            clustering = kmeans(embeddings, config.cluster, threads=threads)
            sil_scores = _try(silhouette_samples, embeddings, clustering.assignments)
            if sil_scores is not None:
                sil_per_sample = sil_scores
                sil_value = float(np.mean(sil_scores))
    if tfidf is not None:
        cos_tfidf = _try(mean_pairwise_cosine, tfidf.matrix)

    metrics = MetricVector(
        distinct1=_try(distinct_n, token_seqs, 1),
        distinct2=_try(distinct_n, token_seqs, 2),
        self_bleu=sum(bleu_scores) / len(bleu_scores),
        cos_embed=cos_embed,
        cos_tfidf=cos_tfidf,
        silhouette=sil_value,
        **lex_values,
    )

    per_sample = None
    if with_per_sample:
        per_sample = _sample_features(
            handle, config, bleu_scores, embeddings, tfidf, sil_per_sample
        )

    return DatasetProfile(
        dataset_id=handle.dataset_id,
        language=handle.language,
        sample_seed=handle.sample_seed,
        n_samples=len(samples),
        metrics=metrics,
        config_fingerprint=config.fingerprint(),
        per_sample=per_sample,
    )


def _mean_defined(values: list[float | None]) -> float | None:
    defined = [v for v in values if v is not None]
    if not defined:
        return None
    return sum(defined) / len(defined)


def sample_features(
    handle: DatasetHandle, config: ProfileConfig = ProfileConfig(), threads: int = 1
) -> PerSampleFeatures:
    """Per-sample adaptations of the ten metrics (N x 10 with missing values)."""
    if len(handle.samples) < 2:
        raise ProfileError("per-sample features need >= 2 samples")
    token_seqs = [s.tokens for s in handle.samples]
    bleu_scores = self_bleu_per_sample(token_seqs, config.bleu, threads=threads)
    embeddings = _embeddings_or_none(handle, config)
    tfidf = _try(tfidf_fit_transform, token_seqs)
    sil_scores = None
    if embeddings is not None:
        n = embeddings.shape[0]
        if 2 <= config.cluster.k <= n - 1 and n >= 3:
            clustering = kmeans(embeddings, config.cluster, threads=threads)
            sil_scores = _try(silhouette_samples, embeddings, clustering.assignments)
    return _sample_features(handle, config, bleu_scores, embeddings, tfidf, sil_scores)


def _sample_features(
    handle: DatasetHandle,
    config: ProfileConfig,
    bleu_scores: list[float],
    embeddings,
    tfidf,
    sil_scores,
) -> PerSampleFeatures:
    lex = config.lexical
    embed_cos = centroid_cosines(embeddings) if embeddings is not None else None
    tfidf_cos = (
        centroid_cosines(tfidf.matrix.toarray()) if tfidf is not None else None
    )
    rows = []
    for i, sample in enumerate(handle.samples):
        seq = sample.tokens
        row = {
            "distinct1": _try(distinct_n, [seq], 1),
            "distinct2": _try(distinct_n, [seq], 2),
            "self_bleu": bleu_scores[i],
            "ttr": _try(ttr, seq),
            "mattr": _try(mattr, seq, lex.mattr_window),
            "hdd": _try(hdd, seq, lex.hdd_draw),
            "mtld": _try(mtld, seq, lex.mtld_threshold),
            "cos_embed": float(embed_cos[i]) if embed_cos is not None else None,
            "cos_tfidf": float(tfidf_cos[i]) if tfidf_cos is not None else None,
            "silhouette": float(sil_scores[i]) if sil_scores is not None else None,
        }
        rows.append(tuple(row[name] for name in METRIC_NAMES))
    return PerSampleFeatures(
        ids=handle.ids(), columns=METRIC_NAMES, rows=tuple(rows)
    )
