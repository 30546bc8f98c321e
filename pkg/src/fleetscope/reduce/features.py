"""First reduction stage: collapse each metric's time axis to one score per node.

Each metric gives an N x T slice (nodes by time). The slice is optionally
z-scaled globally, centered per timestamp, and projected onto its first
principal component, yielding one number per node per metric. Stacking the
M projections gives the N x M feature matrix consumed by the embedding and
clustering stages.

The principal direction is computed on the smaller side of the slice (the
N x N Gram matrix when N <= T), which is algebraically identical to the
T x T covariance eigendecomposition but much cheaper for long windows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import PreconditionError
from ..tensor import MonitoringTensor, TensorSelection


@dataclass
class FeatureMatrix:
    """Node x metric matrix of first-PC scores, plus the loadings used."""

    nodes: list[str]
    metrics: list[str]
    values: np.ndarray
    loading_store: np.ndarray = field(default=None)  # (M, T) unit rows
    zero_variance_metrics: list[str] = field(default_factory=list)

    def to_payload(self) -> dict:
        return {
            "nodes": self.nodes,
            "metrics": self.metrics,
            "values": self.values.tolist(),
            "zero_variance_metrics": self.zero_variance_metrics,
        }


def _orient(v: np.ndarray, profile: np.ndarray) -> np.ndarray:
    """Fix the sign of a principal direction.

    The direction is flipped so it points along the mean temporal profile of
    the slice; when the two are orthogonal the largest-magnitude entry is
    made positive instead.
    """
    ref = float(np.dot(v, profile))
    if ref > 0:
        return v
    if ref < 0:
        return -v
    pivot = int(np.argmax(np.abs(v)))
    return v if v[pivot] > 0 else -v


def first_pc_scores(
    slice_nt: np.ndarray, normalize: bool = True
) -> tuple[np.ndarray, np.ndarray, bool]:
    """(scores, loading, degenerate) for one N x T slice.

    A slice where every node follows the exact same trajectory has no
    cross-node variance: scores are zero, the loading falls back to a flat
    unit vector, and the degenerate flag is set.
    """
    s = np.asarray(slice_nt, dtype=np.float64)
    n, t = s.shape
    if normalize:
        std = s.std()
        if std > 0:
            s = (s - s.mean()) / std
    # Zero cross-node variance: every node follows the same trajectory.
    if np.all(s == s[0]):
        return np.zeros(n), np.full(t, 1.0 / np.sqrt(t)), True
    profile = s.mean(axis=0)
    c = s - profile  # center each timestamp across nodes

    if n <= t:
        # Gram route: eigenvector u of C C^T gives v = C^T u up to scale.
        gram = c @ c.T
        eigvals, eigvecs = np.linalg.eigh(gram)
        u = eigvecs[:, -1]
        v = c.T @ u
        norm = np.linalg.norm(v)
        if norm == 0 or eigvals[-1] <= 0:
            return np.zeros(n), np.full(t, 1.0 / np.sqrt(t)), True
        v /= norm
    else:
        cov = c.T @ c
        eigvals, eigvecs = np.linalg.eigh(cov)
        if eigvals[-1] <= 0:
            return np.zeros(n), np.full(t, 1.0 / np.sqrt(t)), True
        v = eigvecs[:, -1]
    v = _orient(v, profile)
    return c @ v, v, False


def dr1_time_compress(
    tensor: MonitoringTensor,
    selection: TensorSelection | None = None,
    normalize: bool = True,
) -> FeatureMatrix:
    """Compress the time axis of each selected metric into per-node scores.

    The tensor must already be imputed: nulls have no defined projection.
    Requires at least two nodes and two timestamps in the selection.
    """
    if tensor.null_mask.any():
        raise PreconditionError("dr1 requires an imputed tensor (null readings present)")
    selection = selection or TensorSelection()
    nodes, metrics, times = selection.resolve(tensor)
    if len(nodes) < 2 or len(times) < 2:
        raise PreconditionError("dr1 needs at least 2 nodes and 2 timestamps selected")

    values = np.empty((len(nodes), len(metrics)))
    loading_store = np.empty((len(metrics), len(times)))
    degenerate = []
    sub = tensor.values[np.ix_(nodes, metrics, times)]
    for j in range(len(metrics)):
        scores, loading, flat = first_pc_scores(sub[:, j, :], normalize=normalize)
        values[:, j] = scores
        loading_store[j] = loading
        if flat:
            degenerate.append(tensor.metric_names[metrics[j]])

    return FeatureMatrix(
        nodes=[tensor.node_ids[i] for i in nodes],
        metrics=[tensor.metric_names[j] for j in metrics],
        values=values,
        loading_store=loading_store,
        zero_variance_metrics=degenerate,
    )
