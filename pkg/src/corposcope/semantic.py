"""Semantic and clustering metrics: TF-IDF, cosine similarity, embeddings,
seeded k-means, silhouette.

The default embedding provider is a deterministic TF-IDF + truncated-SVD
projection so the whole pipeline runs hermetically; an external HTTP
provider speaking the /embed wire protocol can be swapped in without
changing any output schema.
"""

from __future__ import annotations

import json
import math
import urllib.error
import urllib.request
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse

from .errors import ConfigError, ProviderError, UndefinedMetricError
from .seeds import derive_seed

HTTP_BATCH_LIMIT = 64


@dataclass(frozen=True)
class TfidfModel:
    """TF-IDF document vectors with idf = ln((1+N)/(1+df)) + 1, rows L2-normalized.

    Vocabulary columns follow first occurrence across documents, so the
    model is a pure function of the input order. Documents sharing no
    vocabulary keep a zero row.
    """

    vocabulary: dict[str, int]
    idf: np.ndarray
    matrix: sparse.csr_matrix  # N x V


@dataclass(frozen=True)
class EmbeddingProviderSpec:
    kind: str = "builtin_svd"  # or "external_http"
    svd_rank: int = 256
    seed: int = 0
    endpoint: str | None = None

    def __post_init__(self):
        if self.kind not in ("builtin_svd", "external_http"):
            raise ConfigError(f"unknown embedding provider kind {self.kind!r}")
        if self.svd_rank < 1:
            raise ConfigError("svd_rank must be >= 1")
        if self.kind == "external_http" and not self.endpoint:
            raise ConfigError("external_http provider requires an endpoint URL")


@dataclass(frozen=True)
class ClusterConfig:
    k: int = 8
    restarts: int = 10
    max_iters: int = 300
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ConfigError("k must be >= 2")
        if self.restarts < 1 or self.max_iters < 1:
            raise ConfigError("restarts and max_iters must be >= 1")


@dataclass(frozen=True)
class KmeansResult:
    assignments: np.ndarray       # (N,) int
    centroids: np.ndarray         # (k, d)
    inertia: float
    inertia_history: tuple[float, ...]  # per Lloyd iteration of the winning restart


def tfidf_fit_transform(samples: Sequence[Sequence[str]]) -> TfidfModel:
    if not samples or all(len(s) == 0 for s in samples):
        raise UndefinedMetricError("tfidf is undefined: all samples are empty")
    vocabulary: dict[str, int] = {}
    doc_counts = []
    for tokens in samples:
        counts = Counter(tokens)
        doc_counts.append(counts)
        for tok in tokens:
            if tok not in vocabulary:
                vocabulary[tok] = len(vocabulary)
    n_docs = len(samples)
    df = np.zeros(len(vocabulary))
    for counts in doc_counts:
        for tok in counts:
            df[vocabulary[tok]] += 1
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0

    rows, cols, vals = [], [], []
    for i, counts in enumerate(doc_counts):
        for tok, tf in counts.items():
            j = vocabulary[tok]
            rows.append(i)
            cols.append(j)
            vals.append(tf * idf[j])
    matrix = sparse.csr_matrix(
        (vals, (rows, cols)), shape=(n_docs, len(vocabulary)), dtype=np.float64
    )
    norms = np.sqrt(matrix.multiply(matrix).sum(axis=1)).A1
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    matrix = sparse.diags(scale) @ matrix
    return TfidfModel(vocabulary=vocabulary, idf=idf, matrix=matrix.tocsr())


def _normalize_rows(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1)
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    return vectors * scale[:, None]


def mean_pairwise_cosine(vectors) -> float:
    """Mean cosine over all unordered pairs i<j, summed in fixed index order.

    Zero vectors have similarity 0 with everything.
    """
    n = vectors.shape[0]
    if n < 2:
        raise UndefinedMetricError("mean pairwise cosine requires at least 2 vectors")
    if sparse.issparse(vectors):
        gram = (vectors @ vectors.T).toarray()
        norms = np.sqrt(np.maximum(gram.diagonal().copy(), 0.0))
        scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
        gram = gram * scale[:, None] * scale[None, :]
    else:
        normalized = _normalize_rows(np.asarray(vectors, dtype=np.float64))
        gram = normalized @ normalized.T
    iu, ju = np.triu_indices(n, k=1)
    return float(np.sum(gram[iu, ju]) / len(iu))


def centroid_cosines(vectors: np.ndarray) -> np.ndarray:
    """Cosine of each row against the mean vector (zero rows/centroid give 0)."""
    dense = np.asarray(vectors, dtype=np.float64)
    centroid = dense.mean(axis=0)
    c_norm = np.linalg.norm(centroid)
    norms = np.linalg.norm(dense, axis=1)
    denom = norms * c_norm
    dots = dense @ centroid
    return np.divide(dots, denom, out=np.zeros_like(dots), where=denom > 0)


def embed_builtin(
    token_seqs: Sequence[Sequence[str]], svd_rank: int = 256, seed: int = 0
) -> np.ndarray:
    """Deterministic document embeddings: TF-IDF, rank-r truncated SVD with
    seeded initialization, document projection, L2 normalization.

    Output dimension is min(svd_rank, vocabulary size, N-1). The sign of
    each right-singular vector is fixed by making its largest-magnitude
    entry positive, so repeated fits are bit-identical.
    """
    model = tfidf_fit_transform(token_seqs)
    x = model.matrix
    n_docs, n_terms = x.shape
    k = min(svd_rank, n_terms, n_docs - 1)
    if k < 1:
        raise UndefinedMetricError("builtin embeddings need at least 2 documents and 1 term")
    u, s, vt = _truncated_svd(x, k, seed)
    u, s, vt = _fix_signs(u, s, vt)
    docs = u * s
    return _normalize_rows(docs)


def _truncated_svd(x: sparse.csr_matrix, k: int, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n, v = x.shape
    oversample = 10
    if min(n, v) <= k + oversample:
        u, s, vt = np.linalg.svd(x.toarray(), full_matrices=False)
        return u[:, :k], s[:k], vt[:k]
    # Randomized range finder (Halko et al. style) with seeded Gaussian test
    # matrix and power iterations; deterministic for a fixed seed.
    rng = np.random.default_rng(derive_seed(seed, "svd-init"))
    omega = rng.standard_normal((v, k + oversample))
    y = x @ omega
    q, _ = np.linalg.qr(y)
    for _ in range(4):
        z = x.T @ q
        q, _ = np.linalg.qr(x @ z)
    b = (x.T @ q).T
    ub, s, vt = np.linalg.svd(b, full_matrices=False)
    u = q @ ub
    return u[:, :k], s[:k], vt[:k]


def _fix_signs(u: np.ndarray, s: np.ndarray, vt: np.ndarray):
    for i in range(vt.shape[0]):
        j = int(np.argmax(np.abs(vt[i])))
        if vt[i, j] < 0:
            vt[i] = -vt[i]
            u[:, i] = -u[:, i]
    return u, s, vt


def embed_http(texts: Sequence[str], endpoint: str, timeout: float = 30.0) -> np.ndarray:
    """Fetch embeddings from an /embed provider in batches of at most 64 texts."""
    vectors: list[list[float]] = []
    dim: int | None = None
    url = endpoint.rstrip("/") + "/embed"
    for start in range(0, len(texts), HTTP_BATCH_LIMIT):
        batch = list(texts[start : start + HTTP_BATCH_LIMIT])
        payload = json.dumps({"texts": batch}).encode("utf-8")
        request = urllib.request.Request(
            url, data=payload, headers={"Content-Type": "application/json"}, method="POST"
        )
        try:
            with urllib.request.urlopen(request, timeout=timeout) as response:
                if response.status != 200:
                    raise ProviderError(f"embedding provider returned HTTP {response.status}")
                body = json.loads(response.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, json.JSONDecodeError) as exc:
            raise ProviderError(f"embedding provider unreachable or invalid: {exc}") from exc
        got = body.get("vectors")
        got_dim = body.get("dim")
        if not isinstance(got, list) or len(got) != len(batch):
            raise ProviderError("embedding provider returned a wrong-sized vector list")
        if dim is None:
            dim = int(got_dim)
        elif int(got_dim) != dim:
            raise ProviderError(f"embedding dimension changed mid-dataset: {got_dim} != {dim}")
        for vec in got:
            if len(vec) != dim:
                raise ProviderError("embedding provider returned inconsistent dimensions")
            vectors.append([float(x) for x in vec])
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.size and not np.all(np.isfinite(arr)):
        raise ProviderError("embedding provider returned non-finite values")
    return arr


def embed(
    token_seqs: Sequence[Sequence[str]],
    texts: Sequence[str],
    spec: EmbeddingProviderSpec,
) -> np.ndarray:
    """Dispatch to the configured provider. Builtin consumes token sequences,
    the HTTP provider consumes raw texts."""
    if spec.kind == "builtin_svd":
        return embed_builtin(token_seqs, svd_rank=spec.svd_rank, seed=spec.seed)
    return embed_http(texts, spec.endpoint)


def kmeans(vectors: np.ndarray, cfg: ClusterConfig, threads: int = 1) -> KmeansResult:
    """Seeded k-means++ with Lloyd iterations, best of cfg.restarts by inertia.

    Ties between restarts go to the lower restart index. Empty clusters are
    refilled with the point farthest from its current centroid. Inertia is
    non-increasing across Lloyd iterations (recorded in inertia_history).
    """
    x = np.asarray(vectors, dtype=np.float64)
    n = x.shape[0]
    if not 2 <= cfg.k <= n - 1:
        raise ConfigError(f"k must satisfy 2 <= k <= N-1 (k={cfg.k}, N={n})")
    if not np.all(np.isfinite(x)):
        raise ConfigError("kmeans requires finite vectors")

    def run_restart(r: int) -> tuple[float, np.ndarray, np.ndarray, tuple[float, ...]]:
        rng = np.random.default_rng(derive_seed(cfg.seed, "kmeans", r))
        centroids = _kmeanspp_init(x, cfg.k, rng)
        assignments = np.full(n, -1, dtype=np.int64)
        history: list[float] = []
        inertia = math.inf
        for _ in range(cfg.max_iters):
            dists = _sq_distances(x, centroids)
            new_assignments = np.argmin(dists, axis=1)
            inertia = float(np.sum(dists[np.arange(n), new_assignments]))
            history.append(inertia)
            if np.array_equal(new_assignments, assignments):
                break
            assignments = new_assignments
            centroids = _update_centroids(x, assignments, cfg.k, centroids)
        return inertia, assignments, centroids, tuple(history)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_restart, range(cfg.restarts)))
    else:
        results = [run_restart(r) for r in range(cfg.restarts)]

    best = results[0]
    for candidate in results[1:]:
        if candidate[0] < best[0]:
            best = candidate
    inertia, assignments, centroids, history = best
    return KmeansResult(
        assignments=assignments, centroids=centroids, inertia=inertia, inertia_history=history
    )


def _sq_distances(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    x_sq = np.sum(x * x, axis=1)[:, None]
    c_sq = np.sum(centroids * centroids, axis=1)[None, :]
    return np.maximum(x_sq - 2.0 * (x @ centroids.T) + c_sq, 0.0)


def _kmeanspp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = x[first]
    closest = _sq_distances(x, centroids[:1])[:, 0]
    for i in range(1, k):
        total = float(closest.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest / total))
        centroids[i] = x[idx]
        closest = np.minimum(closest, _sq_distances(x, centroids[i : i + 1])[:, 0])
    return centroids


def _update_centroids(
    x: np.ndarray, assignments: np.ndarray, k: int, previous: np.ndarray
) -> np.ndarray:
    centroids = previous.copy()
    counts = np.bincount(assignments, minlength=k)
    for c in range(k):
        if counts[c] > 0:
            centroids[c] = x[assignments == c].mean(axis=0)
    empty = [c for c in range(k) if counts[c] == 0]
    if empty:
        dists = _sq_distances(x, centroids)
        own = dists[np.arange(len(assignments)), assignments].copy()
        for c in empty:
            far = int(np.argmax(own))
            centroids[c] = x[far]
            own[far] = -1.0  # don't reuse the same point for another empty cluster
    return centroids


def silhouette(vectors: np.ndarray, assignments: np.ndarray) -> float:
    """Mean silhouette coefficient with Euclidean distance.

    Points in singleton clusters score 0 by convention, as does the 0/0
    case of coincident points.
    """
    return float(np.mean(silhouette_samples(vectors, assignments)))


def silhouette_samples(vectors: np.ndarray, assignments: np.ndarray) -> np.ndarray:
    x = np.asarray(vectors, dtype=np.float64)
    labels = np.asarray(assignments)
    n = x.shape[0]
    unique = np.unique(labels)
    if len(unique) < 2:
        raise UndefinedMetricError("silhouette requires at least 2 non-empty clusters")
    if n < 3:
        raise UndefinedMetricError("silhouette requires at least 3 points")
    sq = _sq_distances(x, x)
    np.fill_diagonal(sq, 0.0)
    dists = np.sqrt(sq)
    scores = np.zeros(n)
    members = {c: np.flatnonzero(labels == c) for c in unique}
    for i in range(n):
        own = members[labels[i]]
        if len(own) == 1:
            scores[i] = 0.0
            continue
        a = float(np.sum(dists[i, own]) / (len(own) - 1))
        b = math.inf
        for c in unique:
            if c == labels[i]:
                continue
            b = min(b, float(np.mean(dists[i, members[c]])))
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return scores
