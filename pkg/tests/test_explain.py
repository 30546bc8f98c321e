"""Contrastive weight extraction and cluster average series."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fleetscope.errors import PreconditionError
from fleetscope.explain import (
    alpha_grid,
    ccpca_contributions,
    cluster_average_series,
    contrastive_direction,
    default_smooth_window,
    smooth_centered,
)
from fleetscope.reduce.features import FeatureMatrix
from fleetscope.tensor import MonitoringTensor


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    return abs(float(a @ b)) / (np.linalg.norm(a) * np.linalg.norm(b))


def feature_matrix(values: np.ndarray) -> FeatureMatrix:
    n, m = values.shape
    return FeatureMatrix(
        nodes=[f"n{i:03d}" for i in range(n)],
        metrics=[f"m{j:02d}" for j in range(m)],
        values=values,
    )


def oracle_direction(target, background):
    """Unbatched reference sweep: one eigendecomposition per alpha."""
    cov_t = np.cov(target, rowvar=False, ddof=1)
    cov_b = np.cov(background, rowvar=False, ddof=1)
    lead = np.linalg.eigvalsh(cov_t)[-1]
    best_score, best_w, best_alpha = -np.inf, None, None
    for alpha in alpha_grid():
        _, vecs = np.linalg.eigh(cov_t - alpha * cov_b)
        w = vecs[:, -1]
        vt = w @ cov_t @ w
        if vt < 0.05 * lead:
            continue
        score = vt / (w @ cov_b @ w + 1e-12)
        if score > best_score:
            best_score, best_w, best_alpha = score, w, alpha
    return best_w, best_alpha


def test_identical_target_and_background_degenerates_to_plain_pca():
    rng = np.random.default_rng(0)
    rows = rng.normal(size=(60, 5)) @ np.diag([3.0, 2.0, 1.0, 0.5, 0.2])
    w, alpha = contrastive_direction(rows, rows.copy())
    assert alpha == 0.0
    top_pc = np.linalg.eigh(np.cov(rows, rowvar=False, ddof=1))[1][:, -1]
    assert cosine(w, top_pc) >= 0.999


def test_contrast_finds_the_metric_that_separates():
    # Metric 0: quiet in the background, active in the target. Metric 1 is
    # equally active in both, so plain PCA alone cannot isolate metric 0.
    rng = np.random.default_rng(1)
    n = 200
    target = np.column_stack([rng.normal(0, 1.0, n), rng.normal(0, 1.0, n)])
    background = np.column_stack([rng.normal(0, 0.05, n), rng.normal(0, 1.0, n)])
    w, alpha = contrastive_direction(target, background)
    assert abs(w[0]) >= 0.99
    assert alpha > 0.0


def test_contrast_matches_unbatched_oracle():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        target = rng.normal(size=(40, 6)) * rng.uniform(0.5, 3.0, size=6)
        background = rng.normal(size=(70, 6))
        w, alpha = contrastive_direction(target, background)
        ow, oalpha = oracle_direction(target, background)
        assert alpha == oalpha
        if float(w @ ow) < 0:
            ow = -ow
        assert np.max(np.abs(w - ow)) < 1e-9


def test_direction_points_toward_the_target():
    rng = np.random.default_rng(2)
    n = 150
    background = np.column_stack([rng.normal(0, 0.05, n), rng.normal(0, 1.0, n)])
    high = np.column_stack([rng.normal(3, 1.0, n), rng.normal(0, 1.0, n)])
    w, _ = contrastive_direction(high, background)
    assert w[0] > 0.9
    low = np.column_stack([rng.normal(-3, 1.0, n), rng.normal(0, 1.0, n)])
    w, _ = contrastive_direction(low, background)
    assert w[0] < -0.9


def test_size_one_cluster_uses_mean_difference_and_is_flagged():
    rng = np.random.default_rng(3)
    values = rng.normal(size=(9, 3))
    values[0] = [10.0, 0.0, 0.0]
    values[1:, 0] = 0.0
    labels = np.array([1] + [0] * 8)
    result = ccpca_contributions(feature_matrix(values), labels)
    assert result.size_one_clusters == [1]
    single = [c for c in result.clusters if c.cluster == 1][0]
    assert single.size_one
    expected = values[0] - values[1:].mean(axis=0)
    expected /= np.linalg.norm(expected)
    assert np.max(np.abs(single.weights - expected)) < 1e-12
    assert abs(np.linalg.norm(single.weights) - 1.0) < 1e-12


def test_ranking_orders_metrics_by_peak_absolute_weight():
    rng = np.random.default_rng(4)
    n = 120
    # Cluster 0 is loud on metric 2, cluster 1 on metric 0; metric 1 is noise.
    a = np.column_stack(
        [rng.normal(0, 0.05, n), rng.normal(0, 0.02, n), rng.normal(0, 2.0, n)]
    )
    b = np.column_stack(
        [rng.normal(0, 1.0, n), rng.normal(0, 0.02, n), rng.normal(0, 0.05, n)]
    )
    values = np.concatenate([a, b])
    labels = np.array([0] * n + [1] * n)
    result = ccpca_contributions(feature_matrix(values), labels)
    assert set(result.ranking[:2]) == {"m00", "m02"}
    assert result.ranking[2] == "m01"


def test_standardize_flag_changes_the_contrast():
    rng = np.random.default_rng(5)
    values = rng.normal(size=(80, 3))
    values[:, 1] *= 500.0
    labels = (np.arange(80) < 40).astype(int)
    off = ccpca_contributions(feature_matrix(values), labels, standardize=False)
    on = ccpca_contributions(feature_matrix(values), labels, standardize=True)
    assert not np.allclose(off.clusters[0].weights, on.clusters[0].weights)


def test_contributions_payload_shape():
    rng = np.random.default_rng(6)
    values = rng.normal(size=(30, 4))
    labels = np.repeat([0, 1, 2], 10)
    payload = ccpca_contributions(feature_matrix(values), labels).to_payload()
    assert {c["id"] for c in payload["clusters"]} == {0, 1, 2}
    assert all(len(c["weights"]) == 4 for c in payload["clusters"])
    assert sorted(payload["ranking"]) == ["m00", "m01", "m02", "m03"]


# ---------------------------------------------------------------------------
# Cluster average series.


def raw_tensor(values: np.ndarray, mask: np.ndarray) -> MonitoringTensor:
    n, m, t = values.shape
    safe = values.copy()
    safe[mask] = 0.0
    return MonitoringTensor(
        node_ids=[f"n{i:03d}" for i in range(n)],
        metric_names=[f"m{j:02d}" for j in range(m)],
        timestamps=15.0 * np.arange(t),
        values=safe,
        null_mask=mask,
        sample_interval=15.0,
    )


def test_average_skips_nulls_per_timestamp():
    values = np.array([[[1.0, 2.0, 3.0]], [[3.0, 10.0, 5.0]]])
    mask = np.array([[[False, False, False]], [[False, True, False]]])
    tensor = raw_tensor(values, mask)
    series = cluster_average_series(tensor, np.array([0, 0]), 0, "m00", smooth_window=1)
    assert np.array_equal(series.values, [2.0, 2.0, 4.0])
    assert series.carried == []


def test_fully_null_timestamp_carries_previous_value():
    values = np.array([[[1.0, 0.0, 3.0]], [[3.0, 0.0, 5.0]]])
    mask = np.array([[[False, True, False]], [[False, True, False]]])
    tensor = raw_tensor(values, mask)
    series = cluster_average_series(tensor, np.array([0, 0]), 0, "m00", smooth_window=1)
    assert np.array_equal(series.values, [2.0, 2.0, 4.0])
    assert series.carried == [15.0]


def test_leading_null_timestamp_borrows_the_next_value():
    values = np.array([[[0.0, 2.0, 4.0]]])
    mask = np.array([[[True, False, False]]])
    tensor = raw_tensor(values, mask)
    series = cluster_average_series(tensor, np.array([0]), 0, "m00", smooth_window=1)
    assert np.array_equal(series.values, [2.0, 2.0, 4.0])
    assert series.carried == [0.0]


def test_degenerate_series_is_flagged_and_zero():
    values = np.zeros((1, 1, 3))
    mask = np.ones((1, 1, 3), dtype=bool)
    tensor = raw_tensor(values, mask)
    series = cluster_average_series(tensor, np.array([0]), 0, "m00", smooth_window=1)
    assert series.degenerate
    assert np.array_equal(series.values, [0.0, 0.0, 0.0])
    assert series.carried == [0.0, 15.0, 30.0]


def test_smoothing_matches_brute_force_truncated_windows():
    rng = np.random.default_rng(7)
    series = rng.normal(size=37)
    for window in (1, 2, 3, 4, 5, 8, 37, 50):
        got = smooth_centered(series, window)
        expected = np.empty_like(series)
        for i in range(len(series)):
            lo = max(i - (window - 1) // 2, 0)
            hi = min(i + window // 2, len(series) - 1)
            expected[i] = series[lo : hi + 1].mean()
        assert np.max(np.abs(got - expected)) < 1e-9


@given(st.integers(1, 400))
def test_default_smooth_window_scales_with_length(t):
    w = default_smooth_window(t)
    assert w >= 1
    assert w == max(1, round(t / 200))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_window_one_smoothing_is_identity(seed):
    rng = np.random.default_rng(seed)
    series = rng.normal(size=rng.integers(1, 50))
    assert np.array_equal(smooth_centered(series, 1), series)


def test_series_precondition_checks():
    tensor = raw_tensor(np.zeros((2, 1, 3)), np.zeros((2, 1, 3), dtype=bool))
    with pytest.raises(PreconditionError):
        cluster_average_series(tensor, np.array([0, 0]), 3, "m00")
    with pytest.raises(PreconditionError):
        cluster_average_series(tensor, np.array([0, 0]), 0, "nope")
    with pytest.raises(PreconditionError):
        cluster_average_series(tensor, np.array([0]), 0, "m00")
