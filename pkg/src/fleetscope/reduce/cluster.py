"""Seeded k-means over embedding coordinates.

Plain Lloyd iterations on top of k-means++ seeding. Labels are canonical:
clusters are numbered by descending size, ties broken by the smallest member
index, so a given partition always gets the same numbering regardless of
seeding order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import PreconditionError


@dataclass
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    n_iter: int
    inertia_history: list[float] = field(default_factory=list)


@dataclass
class EmbeddingFrame:
    """2-d node coordinates plus the parameters that produced them.

    labels and centroids stay None until a clustering pass fills them.
    """

    coords: np.ndarray
    params: dict = field(default_factory=dict)
    labels: np.ndarray | None = None
    centroids: np.ndarray | None = None

    def to_payload(self) -> dict:
        return {
            "coords": [[float(a), float(b)] for a, b in self.coords],
            "params": self.params,
            "labels": None if self.labels is None else [int(v) for v in self.labels],
            "centroids": None
            if self.centroids is None
            else [[float(a), float(b)] for a, b in self.centroids],
        }


def _plus_plus_seeds(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[i] = x[rng.integers(n)]
            continue
        centers[i] = x[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((x - centers[i]) ** 2, axis=1))
    return centers


def _sq_dist_to_centers(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # Clipped expansion: tiny negatives from cancellation would break argmin ties.
    d2 = (
        np.sum(x**2, axis=1)[:, None]
        - 2.0 * (x @ centers.T)
        + np.sum(centers**2, axis=1)[None, :]
    )
    return np.maximum(d2, 0.0)


def canonical_relabel(labels: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Renumber clusters by descending size; ties go to the smaller first member."""
    k = centroids.shape[0]
    sizes = np.bincount(labels, minlength=k)
    first_member = np.full(k, labels.shape[0])
    for c in range(k):
        members = np.nonzero(labels == c)[0]
        if members.size:
            first_member[c] = members[0]
    order = sorted(range(k), key=lambda c: (-sizes[c], first_member[c]))
    remap = np.empty(k, dtype=int)
    for new, old in enumerate(order):
        remap[old] = new
    return remap[labels], centroids[order]


def kmeans(x, k: int, seed: int = 42, max_iter: int = 300):
    """Cluster rows of x into k groups.

    Accepts a plain coordinate array (returns a KMeansResult) or an
    EmbeddingFrame (returns a copy with labels and centroids filled in).
    Converges when assignments stop changing or after max_iter rounds. An
    empty cluster is re-seeded at the point currently farthest from its own
    centroid; with fewer distinct points than k a cluster may stay empty.
    """
    if isinstance(x, EmbeddingFrame):
        result = kmeans(x.coords, k, seed=seed, max_iter=max_iter)
        params = dict(x.params)
        params.update({"k": k, "kmeans_seed": seed})
        return EmbeddingFrame(
            coords=x.coords,
            params=params,
            labels=result.labels,
            centroids=result.centroids,
        )
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise PreconditionError("kmeans needs a non-empty 2-d array")
    if not np.all(np.isfinite(x)):
        raise PreconditionError("kmeans input contains non-finite values")
    n = x.shape[0]
    if not 1 <= k <= n:
        raise PreconditionError(f"k must be in [1, {n}], got {k}")

    rng = np.random.default_rng(seed)
    centers = _plus_plus_seeds(x, k, rng)
    labels = np.full(n, -1)
    history: list[float] = []

    for it in range(1, max_iter + 1):
        d2 = _sq_dist_to_centers(x, centers)
        new_labels = np.argmin(d2, axis=1)

        for c in range(k):
            members = new_labels == c
            if not members.any():
                # Re-seed on the point farthest from its current centroid.
                spread = d2[np.arange(n), new_labels]
                far = int(np.argmax(spread))
                if spread[far] > 0:
                    centers[c] = x[far]
                    new_labels[far] = c
                    d2[:, c] = np.sum((x - centers[c]) ** 2, axis=1)

        history.append(float(d2[np.arange(n), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = x[labels == c]
            if members.size:
                centers[c] = members.mean(axis=0)

    labels, centers = canonical_relabel(labels, centers)
    inertia = float(np.sum((x - centers[labels]) ** 2))
    return KMeansResult(
        labels=labels,
        centroids=centers,
        inertia=inertia,
        n_iter=it,
        inertia_history=history,
    )
