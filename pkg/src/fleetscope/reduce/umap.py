"""Second reduction stage: neighborhood-graph embedding of the feature matrix.

Pipeline: k-nearest-neighbor graph (exact for small inputs, neighbor-descent
above a size threshold), per-point bandwidth calibration so every point's
neighborhood has effective size log2(k), fuzzy union symmetrization, spectral
initialization from the graph Laplacian, then negative-sampling SGD on the
low-dimensional layout. The SGD kernel is jitted and single-threaded so a
fixed seed gives a bit-identical embedding.
"""

from __future__ import annotations

import numpy as np
import scipy.optimize
import scipy.sparse

from numba import njit

from ..errors import PreconditionError

SMOOTH_K_TOLERANCE = 1e-5
MIN_K_DIST_SCALE = 1e-3
EXACT_KNN_LIMIT = 5000


def exact_knn(x: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices and Euclidean distances of each row's k nearest rows (self included)."""
    n = x.shape[0]
    indices = np.empty((n, k), dtype=np.int64)
    dists = np.empty((n, k))
    sq_norms = np.sum(x**2, axis=1)
    block = max(1, int(2**24 / max(n, 1)))
    for start in range(0, n, block):
        stop = min(start + block, n)
        d2 = sq_norms[start:stop, None] - 2.0 * (x[start:stop] @ x.T) + sq_norms[None, :]
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(start, stop) - start, np.arange(start, stop)] = 0.0
        idx = np.argsort(d2, axis=1, kind="stable")[:, :k]
        indices[start:stop] = idx
        dists[start:stop] = np.sqrt(np.take_along_axis(d2, idx, axis=1))
    return indices, dists


def descent_knn(
    x: np.ndarray, k: int, seed: int, n_iters: int = 12
) -> tuple[np.ndarray, np.ndarray]:
    """Approximate kNN by iterating over neighbors-of-neighbors.

    Starts from random neighbor lists and repeatedly merges each point's
    current neighbors' neighbors plus a few random candidates, keeping the k
    best. Converges in a handful of rounds on smooth data.
    """
    n = x.shape[0]
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(n, k - 1))
    idx = np.concatenate([np.arange(n)[:, None], idx], axis=1)

    def dist_to(cols: np.ndarray) -> np.ndarray:
        out = np.empty(cols.shape)
        block = max(1, int(2**22 / max(cols.shape[1] * x.shape[1], 1)))
        for start in range(0, n, block):
            stop = min(start + block, n)
            diff = x[start:stop, None, :] - x[cols[start:stop]]
            out[start:stop] = np.sqrt(np.sum(diff * diff, axis=2))
        return out

    dists = dist_to(idx)
    order = np.argsort(dists, axis=1, kind="stable")
    idx = np.take_along_axis(idx, order, axis=1)
    dists = np.take_along_axis(dists, order, axis=1)

    for _ in range(n_iters):
        expanded = idx[idx].reshape(n, -1)  # neighbors of neighbors
        random_cols = rng.integers(0, n, size=(n, k))
        cand = np.concatenate([idx, expanded, random_cols], axis=1)
        # Dedupe per row: sort, mask repeats with self (distance recomputed anyway).
        cand = np.sort(cand, axis=1)
        dup = np.zeros_like(cand, dtype=bool)
        dup[:, 1:] = cand[:, 1:] == cand[:, :-1]
        cand[dup] = cand[:, :1].repeat(cand.shape[1], axis=1)[dup]

        cd = dist_to(cand)
        cd[dup] = np.inf
        order = np.argsort(cd, axis=1, kind="stable")[:, :k]
        new_idx = np.take_along_axis(cand, order, axis=1)
        new_dists = np.take_along_axis(cd, order, axis=1)
        if np.array_equal(new_idx, idx):
            break
        idx, dists = new_idx, new_dists
    return idx, dists


def smooth_knn_dist(
    distances: np.ndarray,
    k: float,
    n_iter: int = 64,
    local_connectivity: float = 1.0,
    bandwidth: float = 1.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-point kernel bandwidth sigma and connectivity offset rho.

    sigma_i solves sum_j exp(-(d_ij - rho_i)/sigma_i) = log2(k) by bisection;
    rho_i is the distance to the nearest distinct neighbor, so every point is
    locally connected.
    """
    target = np.log2(k) * bandwidth
    n = distances.shape[0]
    rho = np.zeros(n)
    sigma = np.zeros(n)
    mean_all = float(np.mean(distances))

    for i in range(n):
        lo, hi, mid = 0.0, np.inf, 1.0
        row = distances[i]
        non_zero = row[row > 0.0]
        if non_zero.shape[0] >= local_connectivity:
            index = int(np.floor(local_connectivity))
            interpolation = local_connectivity - index
            if index > 0:
                rho[i] = non_zero[index - 1]
                if interpolation > SMOOTH_K_TOLERANCE:
                    rho[i] += interpolation * (non_zero[index] - non_zero[index - 1])
            else:
                rho[i] = interpolation * non_zero[0]
        elif non_zero.shape[0] > 0:
            rho[i] = np.max(non_zero)

        for _ in range(n_iter):
            psum = 0.0
            for j in range(1, row.shape[0]):
                d = row[j] - rho[i]
                psum += np.exp(-(d / mid)) if d > 0 else 1.0
            if np.abs(psum - target) < SMOOTH_K_TOLERANCE:
                break
            if psum > target:
                hi = mid
                mid = (lo + hi) / 2.0
            else:
                lo = mid
                mid = mid * 2 if hi == np.inf else (lo + hi) / 2.0
        sigma[i] = mid

        if rho[i] > 0.0:
            mean_row = float(np.mean(row))
            if sigma[i] < MIN_K_DIST_SCALE * mean_row:
                sigma[i] = MIN_K_DIST_SCALE * mean_row
        elif sigma[i] < MIN_K_DIST_SCALE * mean_all:
            sigma[i] = MIN_K_DIST_SCALE * mean_all
    return sigma, rho


def membership_strengths(
    knn_indices: np.ndarray, knn_dists: np.ndarray, sigmas: np.ndarray, rhos: np.ndarray
) -> scipy.sparse.coo_matrix:
    """Directed fuzzy membership graph from calibrated neighbor distances."""
    n, k = knn_indices.shape
    rows = np.repeat(np.arange(n), k)
    cols = knn_indices.ravel()
    d = knn_dists.ravel()
    rho = np.repeat(rhos, k)
    sigma = np.repeat(sigmas, k)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.exp(-np.maximum(d - rho, 0.0) / sigma)
    vals[(d - rho <= 0.0) | (sigma == 0.0)] = 1.0
    vals[rows == cols] = 0.0
    graph = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(n, n))
    graph.eliminate_zeros()
    return graph


def fuzzy_union(graph: scipy.sparse.coo_matrix) -> scipy.sparse.coo_matrix:
    """Symmetrize with the probabilistic t-conorm: A + A^T - A o A^T."""
    transpose = graph.transpose()
    product = graph.multiply(transpose)
    return (graph + transpose - product).tocoo()


def find_ab_params(spread: float = 1.0, min_dist: float = 0.1) -> tuple[float, float]:
    """Least-squares fit of 1/(1 + a x^(2b)) to the target membership curve."""

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2 * b))

    xv = np.linspace(0, spread * 3, 300)
    yv = np.zeros(xv.shape)
    yv[xv < min_dist] = 1.0
    yv[xv >= min_dist] = np.exp(-(xv[xv >= min_dist] - min_dist) / spread)
    params, _ = scipy.optimize.curve_fit(curve, xv, yv)
    return float(params[0]), float(params[1])


def make_epochs_per_sample(weights: np.ndarray, n_epochs: int) -> np.ndarray:
    result = -1.0 * np.ones(weights.shape[0])
    n_samples = n_epochs * (weights / weights.max())
    result[n_samples > 0] = float(n_epochs) / n_samples[n_samples > 0]
    return result


def spectral_init(graph: scipy.sparse.spmatrix, dim: int, seed: int) -> np.ndarray:
    """Laplacian eigenmap initialization, random layout for large graphs."""
    n = graph.shape[0]
    state = np.random.RandomState(seed)
    if n > 2048:
        return state.uniform(low=-10.0, high=10.0, size=(n, dim)).astype(np.float32)

    a = graph.toarray()
    deg = a.sum(axis=1)
    inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    lap = np.eye(n) - (inv_sqrt[:, None] * a * inv_sqrt[None, :])
    _, vecs = np.linalg.eigh(lap)
    emb = vecs[:, 1 : dim + 1]  # skip the trivial constant eigenvector

    expansion = 10.0 / np.abs(emb).max()
    emb = (emb * expansion).astype(np.float32)
    emb += state.normal(scale=0.0001, size=emb.shape).astype(np.float32)
    return emb


@njit(cache=True, inline="always")
def _tau_rand_int(state):
    state[0] = (((state[0] & 4294967294) << 12) & 0xFFFFFFFF) ^ (
        (((state[0] << 13) & 0xFFFFFFFF) ^ state[0]) >> 19
    )
    state[1] = (((state[1] & 4294967288) << 4) & 0xFFFFFFFF) ^ (
        (((state[1] << 2) & 0xFFFFFFFF) ^ state[1]) >> 25
    )
    state[2] = (((state[2] & 4294967280) << 17) & 0xFFFFFFFF) ^ (
        (((state[2] << 3) & 0xFFFFFFFF) ^ state[2]) >> 11
    )
    return state[0] ^ state[1] ^ state[2]


@njit(cache=True, inline="always")
def _clip(val):
    if val > 4.0:
        return 4.0
    if val < -4.0:
        return -4.0
    return val


@njit(cache=True)
def _optimize_layout(
    embedding,
    head,
    tail,
    n_epochs,
    n_vertices,
    epochs_per_sample,
    a,
    b,
    rng_state,
    gamma,
    initial_alpha,
    negative_sample_rate,
):
    dim = embedding.shape[1]
    alpha = initial_alpha
    epochs_per_negative_sample = epochs_per_sample / negative_sample_rate
    epoch_of_next_negative_sample = epochs_per_negative_sample.copy()
    epoch_of_next_sample = epochs_per_sample.copy()

    for n in range(n_epochs):
        for i in range(epochs_per_sample.shape[0]):
            if epoch_of_next_sample[i] > n:
                continue
            j = head[i]
            k = tail[i]
            current = embedding[j]
            other = embedding[k]

            dist_squared = 0.0
            for d in range(dim):
                diff = current[d] - other[d]
                dist_squared += diff * diff

            if dist_squared > 0.0:
                grad_coeff = -2.0 * a * b * pow(dist_squared, b - 1.0)
                grad_coeff /= a * pow(dist_squared, b) + 1.0
            else:
                grad_coeff = 0.0

            for d in range(dim):
                grad_d = _clip(grad_coeff * (current[d] - other[d]))
                current[d] += grad_d * alpha
                other[d] -= grad_d * alpha

            epoch_of_next_sample[i] += epochs_per_sample[i]

            n_neg_samples = int(
                (n - epoch_of_next_negative_sample[i]) / epochs_per_negative_sample[i]
            )
            for _ in range(n_neg_samples):
                k = _tau_rand_int(rng_state) % n_vertices
                other = embedding[k]

                dist_squared = 0.0
                for d in range(dim):
                    diff = current[d] - other[d]
                    dist_squared += diff * diff

                if dist_squared > 0.0:
                    grad_coeff = 2.0 * gamma * b
                    grad_coeff /= (0.001 + dist_squared) * (a * pow(dist_squared, b) + 1.0)
                elif j == k:
                    continue
                else:
                    grad_coeff = 0.0

                for d in range(dim):
                    if grad_coeff > 0.0:
                        grad_d = _clip(grad_coeff * (current[d] - other[d]))
                    else:
                        grad_d = 4.0
                    current[d] += grad_d * alpha

            epoch_of_next_negative_sample[i] += (
                n_neg_samples * epochs_per_negative_sample[i]
            )

        alpha = initial_alpha * (1.0 - float(n + 1) / float(n_epochs))
    return embedding


def umap_embed(
    features: np.ndarray,
    n_neighbors: int = 15,
    min_dist: float = 0.1,
    n_components: int = 2,
    seed: int = 42,
    spread: float = 1.0,
    repulsion_strength: float = 1.0,
    negative_sample_rate: int = 5,
    initial_alpha: float = 1.0,
    n_epochs: int | None = None,
    exact_knn_limit: int = EXACT_KNN_LIMIT,
) -> np.ndarray:
    """Embed rows of a feature matrix into n_components dimensions.

    Deterministic for a fixed seed. Raises PreconditionError when features
    contain NaN or when there are not more rows than n_neighbors.
    """
    x = np.ascontiguousarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise PreconditionError("features must be a 2-d array")
    n = x.shape[0]
    if np.isnan(x).any():
        raise PreconditionError("features contain NaN; impute before embedding")
    if n <= n_neighbors:
        raise PreconditionError(f"need more than n_neighbors={n_neighbors} rows, got {n}")

    if n <= exact_knn_limit:
        knn_indices, knn_dists = exact_knn(x, n_neighbors)
    else:
        knn_indices, knn_dists = descent_knn(x, n_neighbors, seed)

    sigmas, rhos = smooth_knn_dist(knn_dists, float(n_neighbors))
    graph = fuzzy_union(membership_strengths(knn_indices, knn_dists, sigmas, rhos))

    if n_epochs is None:
        n_epochs = 500 if n <= 10000 else 200

    graph = graph.tocoo()
    graph.sum_duplicates()
    drop = graph.data < (graph.data.max() / float(n_epochs))
    graph.data[drop] = 0.0
    graph.eliminate_zeros()

    a, b = find_ab_params(spread, min_dist)
    embedding = spectral_init(graph, n_components, seed).astype(np.float64)

    epochs_per_sample = make_epochs_per_sample(graph.data, n_epochs)
    rng_state = (
        np.random.RandomState(seed)
        .randint(np.iinfo(np.int32).min, np.iinfo(np.int32).max, 3)
        .astype(np.int64)
    )
    embedding = _optimize_layout(
        embedding,
        graph.row.astype(np.int64),
        graph.col.astype(np.int64),
        n_epochs,
        n,
        epochs_per_sample,
        a,
        b,
        rng_state,
        repulsion_strength,
        initial_alpha,
        negative_sample_rate,
    )
    return np.asarray(embedding)


def dr2_umap(
    features,
    n_neighbors: int = 15,
    min_dist: float = 0.1,
    n_components: int = 2,
    seed: int = 42,
    **kwargs,
):
    """Embed a feature matrix and wrap the coordinates with their parameters."""
    from .cluster import EmbeddingFrame
    from .features import FeatureMatrix

    values = features.values if isinstance(features, FeatureMatrix) else features
    coords = umap_embed(
        values,
        n_neighbors=n_neighbors,
        min_dist=min_dist,
        n_components=n_components,
        seed=seed,
        **kwargs,
    )
    return EmbeddingFrame(
        coords=coords,
        params={
            "n_neighbors": n_neighbors,
            "min_dist": min_dist,
            "n_components": n_components,
            "seed": seed,
        },
    )
