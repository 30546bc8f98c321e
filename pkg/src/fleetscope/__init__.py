"""Fleet telemetry behavior clustering and anomaly scoring.

The pipeline turns node x metric x time telemetry into a clustered 2-d
behavior map (per-metric PCA over time, then UMAP over metrics, then
k-means), explains each cluster by contrastive metric contributions, and
scores per-node anomalies against automatically discovered quiet baselines
using multi-resolution dynamic mode decomposition.
"""

from .cache import StageCache, StageKey, stage_key
from .dynamics import (
    BaselineSpec,
    ModeSet,
    ModeTree,
    ZScoreMatrix,
    auto_baseline,
    dmd,
    isolate_modes,
    mrdmd,
    zscores,
)
from .errors import FleetscopeError, IngestError, PreconditionError
from .explain import ccpca_contributions, cluster_average_series
from .pipeline import AnalysisParams, BandParams, SessionState, run_analysis, run_zscores
from .quality import (
    QualityReport,
    SynthSpec,
    adjusted_rand_index,
    bench,
    normalize_reports,
    quality_report,
    synth_generate,
)
from .reduce import (
    EmbeddingFrame,
    FeatureMatrix,
    dr1_time_compress,
    dr2_umap,
    kmeans,
    umap_embed,
)
from .tensor import (
    MonitoringTensor,
    TensorSelection,
    impute,
    ingest_csv,
    export_csv,
    null_activity,
)

__all__ = [
    "AnalysisParams",
    "BandParams",
    "BaselineSpec",
    "EmbeddingFrame",
    "FeatureMatrix",
    "FleetscopeError",
    "IngestError",
    "ModeSet",
    "ModeTree",
    "MonitoringTensor",
    "PreconditionError",
    "QualityReport",
    "SessionState",
    "StageCache",
    "StageKey",
    "SynthSpec",
    "TensorSelection",
    "ZScoreMatrix",
    "adjusted_rand_index",
    "auto_baseline",
    "bench",
    "ccpca_contributions",
    "cluster_average_series",
    "dmd",
    "dr1_time_compress",
    "dr2_umap",
    "impute",
    "ingest_csv",
    "export_csv",
    "isolate_modes",
    "kmeans",
    "mrdmd",
    "normalize_reports",
    "null_activity",
    "quality_report",
    "run_analysis",
    "run_zscores",
    "stage_key",
    "synth_generate",
    "umap_embed",
    "zscores",
]

__version__ = "0.1.0"
