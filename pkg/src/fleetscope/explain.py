"""Why does a cluster look different: contrastive metric weights and averages.

For each cluster, the one-vs-rest contrast direction is the top eigenvector
of Cov(cluster) - alpha * Cov(rest), swept over an alpha grid. The chosen
alpha maximizes the ratio of cluster variance to rest variance along the
direction, subject to the direction retaining a minimum share of the
cluster's own leading variance (otherwise large alphas collapse onto noise
directions). Ties keep the smallest alpha, so the contrast never drifts
further from plain PCA than the data demands.

Also provides per-cluster average time series of the raw readings, with
null-aware averaging and a centered, edge-truncated smoothing window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

from .errors import PreconditionError
from .reduce.features import FeatureMatrix
from .tensor import MonitoringTensor

VARIANCE_FLOOR_SHARE = 0.05
RATIO_EPS = 1e-12


def alpha_grid() -> np.ndarray:
    return np.concatenate([[0.0], np.logspace(-3.0, 3.0, 61)])


def _covariance(rows: np.ndarray) -> np.ndarray:
    m = rows.shape[1]
    if rows.shape[0] < 2:
        return np.zeros((m, m))
    return np.cov(rows, rowvar=False, ddof=1)


def _orient_contrast(w: np.ndarray, target: np.ndarray, background: np.ndarray) -> np.ndarray:
    """Point the direction toward the target: higher mean projection there."""
    gap = float(target.mean(axis=0) @ w)
    if background.shape[0]:
        gap -= float(background.mean(axis=0) @ w)
    if gap > 0:
        return w
    if gap < 0:
        return -w
    pivot = int(np.argmax(np.abs(w)))
    return w if w[pivot] >= 0 else -w


def contrastive_direction(
    target: np.ndarray, background: np.ndarray
) -> tuple[np.ndarray, float]:
    """Best one-vs-rest direction and the alpha that produced it."""
    cov_t = _covariance(target)
    cov_b = _covariance(background)
    alphas = alpha_grid()

    m = cov_t.shape[0]
    stack = cov_t[None, :, :] - alphas[:, None, None] * cov_b[None, :, :]

    # The grid scan reruns on every re-cluster, so only the extremal
    # eigenpair is computed per alpha (subset LAPACK solve) instead of a
    # full batched decomposition. Each slice is symmetric, so the
    # transposed view feeds Fortran order without a copy; overwrite is
    # safe because the slice is never read again.
    candidates = np.empty((alphas.size, m))
    top = np.empty(alphas.size)
    for i in range(alphas.size):
        vals, vecs, _, _, info = lapack.dsyevr(
            stack[i].T, compute_v=1, range="I", il=m, iu=m, overwrite_a=1
        )
        if info != 0:  # pragma: no cover - dense fallback on LAPACK failure
            full = np.linalg.eigh(cov_t - alphas[i] * cov_b)
            vals = full[0][-1:]
            vecs = full[1][:, -1:]
        candidates[i] = vecs[:, 0]
        top[i] = vals[0]

    # Quadratic forms rather than the eigenvalue identity: identical target
    # and background must yield bitwise-equal variances so the tie rule can
    # still fire.
    var_t = np.einsum("am,mn,an->a", candidates, cov_t, candidates)
    var_b = np.einsum("am,mn,an->a", candidates, cov_b, candidates)
    lead = float(top[0])  # alpha zero solves Cov(target) directly

    scores = var_t / (var_b + RATIO_EPS)
    scores[var_t < VARIANCE_FLOOR_SHARE * lead] = -np.inf
    best = int(np.argmax(scores))  # first max: smallest alpha wins ties
    w = _orient_contrast(candidates[best], target, background)
    return w, float(alphas[best])


@dataclass
class ClusterContribution:
    cluster: int
    alpha: float
    weights: np.ndarray
    size_one: bool = False

    def to_payload(self) -> dict:
        return {
            "id": int(self.cluster),
            "alpha": self.alpha,
            "weights": self.weights.tolist(),
        }


@dataclass
class Contributions:
    metrics: list[str]
    clusters: list[ClusterContribution]
    ranking: list[str]
    size_one_clusters: list[int] = field(default_factory=list)

    def to_payload(self) -> dict:
        return {
            "metrics": self.metrics,
            "clusters": [c.to_payload() for c in self.clusters],
            "ranking": self.ranking,
            "size_one_clusters": self.size_one_clusters,
        }


def ccpca_contributions(
    features: FeatureMatrix, labels: np.ndarray, standardize: bool = False, memo=None
) -> Contributions:
    """One-vs-rest contrastive weights per cluster plus a global metric ranking.

    Metrics are ranked by the largest absolute weight they receive in any
    cluster. Size-one clusters have no covariance: they fall back to the
    unit mean-difference direction and are flagged.

    memo, when given, is called as memo(members, build) and may serve the
    per-cluster scan from a cache. The scan depends only on the member row
    set (the background is its complement), so a re-cluster that leaves a
    cluster's membership intact can reuse its scan even if the label moved.
    """
    x = np.asarray(features.values, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.shape[0] != x.shape[0]:
        raise PreconditionError("labels and feature rows disagree in length")

    if standardize:
        std = x.std(axis=0, ddof=0)
        center = x.mean(axis=0)
        x = (x - center) / np.where(std > 0, std, 1.0)

    clusters = []
    flagged = []
    for c in np.unique(labels):
        mask = labels == c

        def build(mask=mask):
            target = x[mask]
            background = x[~mask]
            if target.shape[0] == 1:
                w = target[0] - (background.mean(axis=0) if background.shape[0] else 0.0)
                norm = np.linalg.norm(w)
                if norm > 0:
                    w = w / norm
                return 0.0, w, True
            w, alpha = contrastive_direction(target, background)
            return alpha, w, False

        if memo is None:
            alpha, w, size_one = build()
        else:
            members = tuple(int(i) for i in np.flatnonzero(mask))
            alpha, w, size_one = memo(members, build)
        clusters.append(ClusterContribution(int(c), alpha, w, size_one=size_one))
        if size_one:
            flagged.append(int(c))

    stacked = np.abs(np.stack([c.weights for c in clusters]))
    strength = stacked.max(axis=0)
    order = np.argsort(-strength, kind="stable")
    ranking = [features.metrics[i] for i in order]
    return Contributions(
        metrics=list(features.metrics),
        clusters=clusters,
        ranking=ranking,
        size_one_clusters=flagged,
    )


@dataclass
class ClusterSeries:
    cluster: int
    metric: str
    timestamps: np.ndarray
    values: np.ndarray
    carried: list[float] = field(default_factory=list)
    degenerate: bool = False

    def to_payload(self) -> dict:
        return {
            "cluster": int(self.cluster),
            "metric": self.metric,
            "t": self.timestamps.tolist(),
            "v": self.values.tolist(),
            "carried": self.carried,
            "degenerate": self.degenerate,
        }


def smooth_centered(series: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average; windows truncate at the edges."""
    if window <= 1:
        return series.copy()
    t = series.shape[0]
    csum = np.concatenate([[0.0], np.cumsum(series)])
    idx = np.arange(t)
    left = np.maximum(idx - (window - 1) // 2, 0)
    right = np.minimum(idx + window // 2, t - 1)
    return (csum[right + 1] - csum[left]) / (right - left + 1)


def default_smooth_window(t: int) -> int:
    return max(1, round(t / 200))


def cluster_average_series(
    tensor: MonitoringTensor,
    labels: np.ndarray,
    cluster: int,
    metric: str,
    smooth_window: int | None = None,
) -> ClusterSeries:
    """Average raw readings of one metric over a cluster's members.

    Null readings are skipped per timestamp. When every member is null at a
    timestamp the previous average is carried forward (the first timestamps
    borrow the next valid value instead) and the timestamp is flagged.
    """
    labels = np.asarray(labels)
    if labels.shape[0] != len(tensor.node_ids):
        raise PreconditionError("labels and tensor nodes disagree in length")
    members = np.nonzero(labels == cluster)[0]
    if members.size == 0:
        raise PreconditionError(f"cluster {cluster} has no members")
    j = tensor.metric_index(metric)

    vals = tensor.values[members, j, :]
    nulls = tensor.null_mask[members, j, :]
    counts = (~nulls).sum(axis=0)
    sums = np.where(nulls, 0.0, vals).sum(axis=0)
    covered = counts > 0
    avg = np.divide(sums, counts, out=np.zeros_like(sums), where=covered)

    carried = tensor.timestamps[~covered].tolist()
    degenerate = not covered.any()
    if degenerate:
        avg = np.zeros_like(avg)
    elif not covered.all():
        t = avg.shape[0]
        idx = np.where(covered, np.arange(t), 0)
        np.maximum.accumulate(idx, out=idx)
        avg = avg[idx]
        # Leading gap: no previous average exists, use the next one.
        first = int(np.argmax(covered))
        avg[:first] = avg[first]

    window = default_smooth_window(avg.shape[0]) if smooth_window is None else int(smooth_window)
    if window < 1:
        raise PreconditionError("smooth window must be at least 1")
    smoothed = smooth_centered(avg, window)
    return ClusterSeries(
        cluster=int(cluster),
        metric=metric,
        timestamps=tensor.timestamps.copy(),
        values=smoothed,
        carried=carried,
        degenerate=degenerate,
    )
