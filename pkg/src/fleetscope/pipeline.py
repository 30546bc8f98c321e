"""Cache-backed analysis pipeline behind the HTTP and CLI surfaces.

run_analysis chains impute -> dr1 -> dr2 -> kmeans -> ccpca, with every
stage addressed by a key hashing its own parameters plus its upstream
digests. Changing k therefore recomputes only clustering and contributions;
changing the time window invalidates everything after ingest. run_zscores
does the same for baselines and anomaly scores. Payloads carry the stage
digests and hit/miss tags so callers can see what was reused.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cache import StageCache, StageKey, stage_key
from .dynamics import BaselineSpec, auto_baseline, zscores
from .errors import PreconditionError
from .explain import ccpca_contributions, cluster_average_series
from .reduce import dr1_time_compress, dr2_umap, kmeans
from .tensor import MonitoringTensor, TensorSelection, impute, null_activity


@dataclass
class AnalysisParams:
    """Everything that shapes the clustering half of the pipeline."""

    impute_policy: str = "forward-then-backward-fill"
    normalize_dr1: bool = True
    n_neighbors: int = 15
    min_dist: float = 0.1
    n_components: int = 2
    seed: int = 42
    k: int = 4
    standardize_ccpca: bool = False

    def to_payload(self) -> dict:
        return {
            "impute_policy": self.impute_policy,
            "normalize_dr1": self.normalize_dr1,
            "n_neighbors": self.n_neighbors,
            "min_dist": self.min_dist,
            "n_components": self.n_components,
            "seed": self.seed,
            "k": self.k,
            "standardize_ccpca": self.standardize_ccpca,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "AnalysisParams":
        base = cls()
        known = {f: getattr(base, f) for f in base.__dataclass_fields__}
        for name in known:
            if name in payload:
                known[name] = payload[name]
        return cls(**known)


@dataclass
class BandParams:
    """Multi-resolution decomposition and frequency-isolation settings."""

    levels: int = 4
    rho: float = 1.0
    min_bin_snapshots: int = 16
    f_lo: float = 0.0
    f_hi: float | None = None
    power_quantile: float = 0.5

    def to_payload(self) -> dict:
        return {
            "levels": self.levels,
            "rho": self.rho,
            "min_bin_snapshots": self.min_bin_snapshots,
            "f_lo": self.f_lo,
            "f_hi": self.f_hi,
            "power_quantile": self.power_quantile,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "BandParams":
        base = cls()
        known = {f: getattr(base, f) for f in base.__dataclass_fields__}
        for name in known:
            if name in payload:
                known[name] = payload[name]
        return cls(**known)


@dataclass
class SessionState:
    """One analyst's view of one dataset: parameters plus baseline edits."""

    dataset_id: str
    selection: TensorSelection = field(default_factory=TensorSelection)
    analysis: AnalysisParams = field(default_factory=AnalysisParams)
    band: BandParams = field(default_factory=BandParams)
    baseline_overrides: dict[str, BaselineSpec] = field(default_factory=dict)


@dataclass
class AnalysisResult:
    features: object
    embedding: object
    contributions: object
    keys: dict[str, StageKey]
    tags: dict[str, str]
    imputed: MonitoringTensor
    raw: MonitoringTensor
    _activity: object = None

    @property
    def activity(self):
        # View payload, not a pipeline stage: built on demand so a warm
        # rerun costs only the cache lookups.
        if self._activity is None:
            self._activity = null_activity(self.raw, labels=self.embedding.labels)
        return self._activity

    def provenance(self) -> dict:
        return {
            "digests": {stage: key.digest for stage, key in self.keys.items()},
            "cache": self.tags,
        }

    def to_payload(self) -> dict:
        return {
            "embedding": self.embedding.to_payload(),
            "contributions": self.contributions.to_payload(),
            "null_activity": self.activity.to_payload(self.raw),
            "provenance": self.provenance(),
        }


def _selection_payload(selection: TensorSelection) -> dict:
    return selection.to_payload()


def run_analysis(
    tensor: MonitoringTensor,
    dataset_id: str,
    session: SessionState,
    cache: StageCache,
) -> AnalysisResult:
    """Chain the clustering pipeline through the cache and collect payloads."""
    params = session.analysis
    keys: dict[str, StageKey] = {}
    tags: dict[str, str] = {}

    keys["ingest"] = stage_key("ingest", dataset_id, {"impute": params.impute_policy})
    imputed, tags["ingest"] = cache.get_or_compute(
        keys["ingest"], lambda: impute(tensor, params.impute_policy)[0]
    )

    keys["dr1"] = stage_key(
        "dr1",
        dataset_id,
        {"normalize": params.normalize_dr1, "selection": _selection_payload(session.selection)},
        upstream=[keys["ingest"]],
    )
    features, tags["dr1"] = cache.get_or_compute(
        keys["dr1"],
        lambda: dr1_time_compress(imputed, session.selection, normalize=params.normalize_dr1),
    )

    keys["dr2"] = stage_key(
        "dr2",
        dataset_id,
        {
            "n_neighbors": params.n_neighbors,
            "min_dist": params.min_dist,
            "n_components": params.n_components,
            "seed": params.seed,
        },
        upstream=[keys["dr1"]],
    )
    frame, tags["dr2"] = cache.get_or_compute(
        keys["dr2"],
        lambda: dr2_umap(
            features,
            n_neighbors=params.n_neighbors,
            min_dist=params.min_dist,
            n_components=params.n_components,
            seed=params.seed,
        ),
    )

    keys["cluster"] = stage_key(
        "cluster", dataset_id, {"k": params.k, "seed": params.seed}, upstream=[keys["dr2"]]
    )
    labeled, tags["cluster"] = cache.get_or_compute(
        keys["cluster"], lambda: kmeans(frame, params.k, seed=params.seed)
    )

    keys["ccpca"] = stage_key(
        "ccpca",
        dataset_id,
        {"standardize": params.standardize_ccpca},
        upstream=[keys["cluster"]],
    )

    def cluster_memo(members, build):
        # Keyed on the member rows, not the label: a cluster whose
        # membership survives a k change keeps its one-vs-rest scan.
        key = stage_key(
            "ccpca",
            dataset_id,
            {"members": list(members), "standardize": params.standardize_ccpca},
            upstream=[keys["dr1"]],
        )
        value, _ = cache.get_or_compute(key, build)
        return value

    contributions, tags["ccpca"] = cache.get_or_compute(
        keys["ccpca"],
        lambda: ccpca_contributions(
            features,
            labeled.labels,
            standardize=params.standardize_ccpca,
            memo=cluster_memo,
        ),
    )

    return AnalysisResult(
        features=features,
        embedding=labeled,
        contributions=contributions,
        keys=keys,
        tags=tags,
        imputed=imputed,
        raw=tensor,
    )


@dataclass
class ZScoreResult:
    matrix: object
    baselines: dict[str, BaselineSpec]
    keys: dict[str, StageKey]
    tags: dict[str, str]

    def to_payload(self) -> dict:
        return {
            "zscores": self.matrix.to_payload(),
            "baselines": {m: spec.to_payload() for m, spec in self.baselines.items()},
            "provenance": {
                "digests": {stage: key.digest for stage, key in self.keys.items()},
                "cache": self.tags,
            },
        }


def run_zscores(
    tensor: MonitoringTensor,
    dataset_id: str,
    session: SessionState,
    cache: StageCache,
    nodes: list[int],
    metrics: list[str] | None = None,
) -> ZScoreResult:
    """Baselines (discovered or overridden) plus anomaly z-scores for a selection."""
    if not nodes:
        raise PreconditionError("zscores needs a non-empty node selection")
    params = session.analysis
    band = session.band
    metrics = list(metrics) if metrics is not None else list(tensor.metric_names)

    keys: dict[str, StageKey] = {}
    tags: dict[str, str] = {}
    keys["ingest"] = stage_key("ingest", dataset_id, {"impute": params.impute_policy})
    imputed, tags["ingest"] = cache.get_or_compute(
        keys["ingest"], lambda: impute(tensor, params.impute_policy)[0]
    )

    baselines: dict[str, BaselineSpec] = {}
    baseline_keys = []
    for metric in metrics:
        override = session.baseline_overrides.get(metric)
        hint = None if override is None else (override.t_start, override.t_end)
        key = stage_key(
            "baseline",
            dataset_id,
            {"metric": metric, "nodes": [int(v) for v in nodes], "hint": hint},
            upstream=[keys["ingest"]],
        )
        spec, tag = cache.get_or_compute(
            key,
            lambda m=metric, h=hint: auto_baseline(imputed, m, node_subset=list(nodes), window_hint=h),
        )
        baselines[metric] = spec
        baseline_keys.append(key)
        keys[f"baseline:{metric}"] = key
        tags[f"baseline:{metric}"] = tag

    keys["zscore"] = stage_key(
        "zscore",
        dataset_id,
        {
            "metrics": metrics,
            "nodes": [int(v) for v in nodes],
            "band": band.to_payload(),
        },
        upstream=[keys["ingest"], *baseline_keys],
    )
    matrix, tags["zscore"] = cache.get_or_compute(
        keys["zscore"],
        lambda: zscores(
            imputed,
            baselines,
            metrics=metrics,
            nodes=list(nodes),
            f_lo=band.f_lo,
            f_hi=band.f_hi,
            power_quantile=band.power_quantile,
            levels=band.levels,
            rho=band.rho,
            min_bin_snapshots=band.min_bin_snapshots,
        ),
    )
    return ZScoreResult(matrix=matrix, baselines=baselines, keys=keys, tags=tags)


def cluster_series_payload(
    tensor: MonitoringTensor,
    labels: np.ndarray,
    cluster: int,
    metric: str,
    smooth_window: int | None = None,
) -> dict:
    """Smoothed cluster-average series for the reading view."""
    series = cluster_average_series(tensor, labels, cluster, metric, smooth_window=smooth_window)
    return series.to_payload()
