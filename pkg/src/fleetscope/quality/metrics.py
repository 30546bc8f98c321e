"""Cluster-quality and embedding-fidelity metrics.

Three cluster scores (silhouette, Davies-Bouldin, Calinski-Harabasz) judge
the labeled 2-d embedding on its own, while trustworthiness and continuity
compare neighborhoods between the high-dimensional feature rows and their
low-dimensional coordinates. All five are plain O(N^2) computations; fleets
are small enough that nothing smarter is warranted.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.distance import cdist

from ..errors import PreconditionError
from ..reduce import EmbeddingFrame, FeatureMatrix


@dataclass
class QualityReport:
    silhouette: float
    davies_bouldin: float
    calinski_harabasz: float
    trustworthiness: float
    continuity: float
    k_neighbors: int
    # Filled by normalize_reports when comparing several pipelines.
    davies_bouldin_normalized: float = 0.0
    calinski_harabasz_normalized: float = 0.0

    def to_payload(self) -> dict:
        return {
            "silhouette": self.silhouette,
            "davies_bouldin": self.davies_bouldin,
            "davies_bouldin_normalized": self.davies_bouldin_normalized,
            "calinski_harabasz": self.calinski_harabasz,
            "calinski_harabasz_normalized": self.calinski_harabasz_normalized,
            "trustworthiness": self.trustworthiness,
            "continuity": self.continuity,
            "k_neighbors": self.k_neighbors,
        }


def _pairwise(x: np.ndarray) -> np.ndarray:
    # cdist works from coordinate differences, so there is no cancellation
    # residue to poison near-zero distances.
    return cdist(x, x)


def silhouette_mean(coords: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette over points; a singleton cluster's point scores 0."""
    d = _pairwise(coords)
    n = coords.shape[0]
    ids = np.unique(labels)
    sizes = {c: int(np.sum(labels == c)) for c in ids}
    scores = np.zeros(n)
    for i in range(n):
        own = labels[i]
        if sizes[own] == 1:
            continue
        a = d[i, labels == own].sum() / (sizes[own] - 1)
        b = min(d[i, labels == c].mean() for c in ids if c != own)
        scores[i] = (b - a) / max(a, b)
    return float(scores.mean())


def davies_bouldin(coords: np.ndarray, labels: np.ndarray) -> float:
    """Mean over clusters of the worst (sigma_i + sigma_j) / d(c_i, c_j)."""
    ids = np.unique(labels)
    centroids = np.stack([coords[labels == c].mean(axis=0) for c in ids])
    sigma = np.array(
        [np.linalg.norm(coords[labels == c] - centroids[m], axis=1).mean() for m, c in enumerate(ids)]
    )
    dist = _pairwise(centroids)
    # Coincident centroids contribute nothing rather than blowing up.
    np.fill_diagonal(dist, np.inf)
    dist[dist == 0] = np.inf
    ratios = (sigma[:, None] + sigma[None, :]) / dist
    return float(np.max(ratios, axis=1).mean())


def calinski_harabasz(coords: np.ndarray, labels: np.ndarray) -> float:
    """Between/within dispersion ratio scaled by (N - k) / (k - 1)."""
    n = coords.shape[0]
    ids = np.unique(labels)
    k = len(ids)
    grand = coords.mean(axis=0)
    between = 0.0
    within = 0.0
    for c in ids:
        members = coords[labels == c]
        centroid = members.mean(axis=0)
        between += members.shape[0] * float(np.sum((centroid - grand) ** 2))
        within += float(np.sum((members - centroid) ** 2))
    if within == 0.0:
        return 1.0  # degenerate: every cluster collapsed to its centroid
    return between * (n - k) / (within * (k - 1))


def _neighbor_ranks(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(order, rank) with self forced first; rank[i, j] in 1..N-1 for j != i."""
    d = _pairwise(x)
    np.fill_diagonal(d, -1.0)  # self always sorts first, even among duplicates
    order = np.argsort(d, axis=1, kind="stable")
    rank = np.empty_like(order)
    n = x.shape[0]
    rows = np.arange(n)[:, None]
    rank[rows, order] = np.arange(n)[None, :]
    return order, rank


def _rank_penalty_score(ranks_ref: np.ndarray, order_ref: np.ndarray, order_other: np.ndarray, k: int) -> float:
    """1 - normalized penalty for points in the other space's k-NN but not ours."""
    n = ranks_ref.shape[0]
    penalty = 0
    for i in range(n):
        ours = set(order_ref[i, 1 : k + 1].tolist())
        for j in order_other[i, 1 : k + 1]:
            if int(j) not in ours:
                penalty += int(ranks_ref[i, j]) - k
    return 1.0 - 2.0 * penalty / (n * k * (2 * n - 3 * k - 1))


def quality_report(high, low: EmbeddingFrame, k: int = 15) -> QualityReport:
    """Score a labeled embedding against its high-dimensional source rows.

    k bounds the neighborhoods compared for trustworthiness and continuity
    and must stay below N/2 so the rank-penalty normalizer is positive.
    """
    high_values = high.values if isinstance(high, FeatureMatrix) else np.asarray(high, dtype=np.float64)
    coords = np.asarray(low.coords, dtype=np.float64)
    if low.labels is None:
        raise PreconditionError("quality_report needs a clustered embedding (labels missing)")
    labels = np.asarray(low.labels)
    n = coords.shape[0]
    if high_values.shape[0] != n:
        raise PreconditionError("high and low spaces disagree on row count")
    if len(np.unique(labels)) < 2:
        raise PreconditionError("need at least 2 clusters to score")
    if not 1 <= k < n / 2:
        raise PreconditionError(f"k_neighbors must be in [1, N/2), got {k} for N={n}")

    order_high, rank_high = _neighbor_ranks(high_values)
    order_low, rank_low = _neighbor_ranks(coords)
    return QualityReport(
        silhouette=silhouette_mean(coords, labels),
        davies_bouldin=davies_bouldin(coords, labels),
        calinski_harabasz=calinski_harabasz(coords, labels),
        trustworthiness=_rank_penalty_score(rank_high, order_high, order_low, k),
        continuity=_rank_penalty_score(rank_low, order_low, order_high, k),
        k_neighbors=k,
    )


def adjusted_rand_index(a, b) -> float:
    """Chance-corrected agreement between two labelings of the same points."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise PreconditionError("labelings must cover the same points")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    n = a.shape[0]
    contingency = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(contingency, (ai, bi), 1)

    def comb2(x):
        return x * (x - 1) // 2

    sum_cells = comb2(contingency).sum()
    sum_rows = comb2(contingency.sum(axis=1)).sum()
    sum_cols = comb2(contingency.sum(axis=0)).sum()
    expected = sum_rows * sum_cols / comb2(n)
    max_index = (sum_rows + sum_cols) / 2.0
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


def normalize_reports(reports: list[QualityReport]) -> list[QualityReport]:
    """Min-max normalize Davies-Bouldin and Calinski-Harabasz across a set.

    The normalization is only meaningful relative to the other pipelines in
    the same comparison; a single report (or an all-equal set) gets 0.0.
    """
    if not reports:
        return []

    def scaled(values: list[float]) -> list[float]:
        lo, hi = min(values), max(values)
        if hi == lo:
            return [0.0] * len(values)
        return [(v - lo) / (hi - lo) for v in values]

    db = scaled([r.davies_bouldin for r in reports])
    ch = scaled([r.calinski_harabasz for r in reports])
    return [
        replace(r, davies_bouldin_normalized=d, calinski_harabasz_normalized=c)
        for r, d, c in zip(reports, db, ch)
    ]
