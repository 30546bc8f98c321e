"""Telemetry data model: the node x metric x time reading cube.

CSV telemetry (long or wide layout) is aligned onto a common time grid and
stored as a dense float array plus a null mask. The tensor is immutable
after ingest; downstream stages slice it through ``TensorSelection`` and
work on imputed copies.

Grid alignment snaps each raw timestamp to the nearest multiple of the
sampling interval (anchored at the earliest reading), which tolerates
wall-clock jitter up to half the interval. The sampling interval itself is
estimated as the median gap between distinct raw timestamps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import IngestError, PreconditionError

IMPUTE_POLICIES = ("forward-then-backward-fill", "zero-fill")


@dataclass(frozen=True)
class CsvLayout:
    """Column mapping for telemetry CSV files.

    ``kind="long"``: one reading per row, columns node/metric/timestamp/value.
    ``kind="wide"``: one row per (node, timestamp), one column per metric;
    metric columns default to every column not claimed by node/time.
    """

    kind: str = "long"
    node: str = "node"
    metric: str = "metric"
    timestamp: str = "timestamp"
    value: str = "value"
    metric_columns: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("long", "wide"):
            raise PreconditionError(f"unknown CSV layout kind: {self.kind!r}")

    def to_payload(self) -> dict:
        return {
            "kind": self.kind,
            "node": self.node,
            "metric": self.metric,
            "timestamp": self.timestamp,
            "value": self.value,
            "metric_columns": list(self.metric_columns) if self.metric_columns else None,
        }

    @classmethod
    def from_payload(cls, payload: dict | None) -> "CsvLayout":
        if not payload:
            return cls()
        cols = payload.get("metric_columns")
        return cls(
            kind=payload.get("kind", "long"),
            node=payload.get("node", "node"),
            metric=payload.get("metric", "metric"),
            timestamp=payload.get("timestamp", "timestamp"),
            value=payload.get("value", "value"),
            metric_columns=tuple(cols) if cols else None,
        )


@dataclass
class MonitoringTensor:
    """Dense reading cube with explicit nulls.

    values[n, m, t] is the reading of node n, metric m at timestamps[t];
    null_mask is True where no reading exists. Timestamps are epoch seconds,
    strictly increasing.
    """

    node_ids: list[str]
    metric_names: list[str]
    timestamps: np.ndarray
    values: np.ndarray
    null_mask: np.ndarray
    sample_interval: float

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.float64)
        if self.timestamps.ndim != 1 or np.any(np.diff(self.timestamps) <= 0):
            raise PreconditionError("timestamps must be strictly increasing")
        n, m, t = len(self.node_ids), len(self.metric_names), len(self.timestamps)
        if self.values.shape != (n, m, t) or self.null_mask.shape != (n, m, t):
            raise PreconditionError(
                f"tensor shape mismatch: values {self.values.shape}, expected {(n, m, t)}"
            )
        if len(set(self.node_ids)) != n:
            raise PreconditionError("duplicate node ids")
        if len(set(self.metric_names)) != m:
            raise PreconditionError("duplicate metric names")
        if not np.all(np.isfinite(self.values[~self.null_mask])):
            raise PreconditionError("non-finite reading outside the null mask")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    def node_index(self, node_id: str) -> int:
        try:
            return self.node_ids.index(node_id)
        except ValueError:
            raise PreconditionError(f"unknown node id: {node_id!r}") from None

    def metric_index(self, metric: str) -> int:
        try:
            return self.metric_names.index(metric)
        except ValueError:
            raise PreconditionError(f"unknown metric: {metric!r}") from None

    def time_indices(self, t_start: float, t_end: float) -> np.ndarray:
        """Indices of timestamps within [t_start, t_end] inclusive."""
        lo = np.searchsorted(self.timestamps, t_start, side="left")
        hi = np.searchsorted(self.timestamps, t_end, side="right")
        return np.arange(lo, hi)


@dataclass(frozen=True)
class TensorSelection:
    """Node / metric / time sub-cube selection.

    ``None`` for any field means "everything". Time bounds are inclusive
    timestamps, not indices.
    """

    node_subset: tuple[int, ...] | None = None
    metric_subset: tuple[int, ...] | None = None
    time_window: tuple[float, float] | None = None

    def resolve(self, tensor: MonitoringTensor) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Validate against a tensor and return (node, metric, time) index arrays."""
        n, m, _ = tensor.shape
        nodes = np.arange(n) if self.node_subset is None else np.asarray(sorted(set(self.node_subset)), dtype=int)
        metrics = np.arange(m) if self.metric_subset is None else np.asarray(sorted(set(self.metric_subset)), dtype=int)
        if nodes.size == 0 or metrics.size == 0:
            raise PreconditionError("selection has an empty node or metric subset")
        if nodes.min() < 0 or nodes.max() >= n or metrics.min() < 0 or metrics.max() >= m:
            raise PreconditionError("selection index out of range")
        if self.time_window is None:
            times = np.arange(len(tensor.timestamps))
        else:
            times = tensor.time_indices(*self.time_window)
        if times.size == 0:
            raise PreconditionError("time window does not intersect the tensor")
        return nodes, metrics, times

    def to_payload(self) -> dict:
        return {
            "nodes": list(self.node_subset) if self.node_subset is not None else None,
            "metrics": list(self.metric_subset) if self.metric_subset is not None else None,
            "window": list(self.time_window) if self.time_window is not None else None,
        }

    @classmethod
    def from_payload(cls, payload: dict | None) -> "TensorSelection":
        if not payload:
            return cls()
        window = payload.get("window")
        return cls(
            node_subset=tuple(payload["nodes"]) if payload.get("nodes") else None,
            metric_subset=tuple(payload["metrics"]) if payload.get("metrics") else None,
            time_window=(float(window[0]), float(window[1])) if window else None,
        )


@dataclass
class NullActivity:
    """Nodes whose readings are null across ALL metrics, per timestamp."""

    timestamps: np.ndarray
    entries: list[list[tuple[int, int | None]]]  # per timestamp: (node index, cluster label)

    def to_payload(self, tensor: MonitoringTensor) -> list[dict]:
        out = []
        for t, nodes in zip(self.timestamps, self.entries):
            out.append(
                {
                    "t": float(t),
                    "nodes": [
                        {"node": tensor.node_ids[n], "cluster": None if c is None else int(c)}
                        for n, c in nodes
                    ],
                }
            )
        return out


@dataclass
class IngestReport:
    rows: int
    duplicates: int
    snapped: int
    all_null_series: list[tuple[str, str]] = field(default_factory=list)

    def to_payload(self) -> dict:
        return {
            "rows": self.rows,
            "duplicates": self.duplicates,
            "snapped": self.snapped,
            "all_null_series": [list(pair) for pair in self.all_null_series],
        }


@dataclass
class ImputationReport:
    policy: str
    filled: int
    all_null_series: list[tuple[str, str]]
    original_mask: np.ndarray


def _parse_timestamps(raw: pd.Series, file: str, lines: np.ndarray) -> np.ndarray:
    """Epoch seconds from a string column; accepts numeric or ISO-8601."""
    stripped = raw.reset_index(drop=True).fillna("").astype(str).str.strip()
    numeric = pd.to_numeric(stripped, errors="coerce").to_numpy(dtype=np.float64)
    bad = ~np.isfinite(numeric)
    out = np.zeros(len(stripped), dtype=np.float64)
    if (~bad).any():
        # numpy's string parser rounds correctly; to_numeric's does not.
        out[~bad] = stripped.to_numpy()[~bad].astype(np.float64)
    if bad.any():
        parsed = pd.to_datetime(stripped[bad], errors="coerce", utc=True, format="ISO8601")
        still_bad = parsed.isna().to_numpy()
        if still_bad.any():
            pos = int(np.nonzero(bad)[0][np.nonzero(still_bad)[0][0]])
            raise IngestError(
                f"unparseable timestamp {stripped.iloc[pos]!r}", file=file, line=int(lines[pos])
            )
        out[bad] = parsed.astype("int64").to_numpy() / 1e9
    return out


def _parse_values(raw: pd.Series, file: str, lines: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(values, is_null) from a string column; empty field means null."""
    stripped = raw.fillna("").astype(str).str.strip()
    is_null = (stripped == "").to_numpy()
    vals = np.full(len(stripped), np.nan, dtype=np.float64)
    present = ~is_null
    if present.any():
        try:
            vals[present] = stripped.to_numpy()[present].astype(np.float64)
        except ValueError:
            numeric = pd.to_numeric(stripped.where(present, other="0"), errors="coerce")
            bad = numeric.isna().to_numpy() & present
            pos = int(np.nonzero(bad)[0][0])
            raise IngestError(
                f"unparseable value {stripped.iloc[pos]!r}", file=file, line=int(lines[pos])
            ) from None
    nonfinite = ~np.isfinite(vals) & present
    if nonfinite.any():
        pos = int(np.nonzero(nonfinite)[0][0])
        raise IngestError(
            f"non-finite value {stripped.iloc[pos]!r}", file=file, line=int(lines[pos])
        )
    return vals, is_null


def _read_long(path: str, layout: CsvLayout) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except Exception as exc:  # pandas ParserError carries its own line info
        raise IngestError(str(exc), file=path) from exc
    for col in (layout.node, layout.metric, layout.timestamp, layout.value):
        if col not in df.columns:
            raise IngestError(f"missing column {col!r}", file=path)
    return df


def _read_wide(path: str, layout: CsvLayout) -> tuple[pd.DataFrame, int]:
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except Exception as exc:
        raise IngestError(str(exc), file=path) from exc
    for col in (layout.node, layout.timestamp):
        if col not in df.columns:
            raise IngestError(f"missing column {col!r}", file=path)
    metric_cols = (
        list(layout.metric_columns)
        if layout.metric_columns
        else [c for c in df.columns if c not in (layout.node, layout.timestamp)]
    )
    if not metric_cols:
        raise IngestError("wide layout has no metric columns", file=path)
    missing = [c for c in metric_cols if c not in df.columns]
    if missing:
        raise IngestError(f"missing metric columns {missing}", file=path)
    melted = df.melt(
        id_vars=[layout.node, layout.timestamp],
        value_vars=metric_cols,
        var_name="__metric",
        value_name="__value",
    )
    melted = melted.rename(columns={layout.node: "__node", layout.timestamp: "__time"})
    return melted, len(df)


def ingest_csv(
    files: list[str], layout: CsvLayout | None = None
) -> tuple[MonitoringTensor, IngestReport]:
    """Parse telemetry CSVs into a MonitoringTensor on a common time grid.

    Timestamps are snapped to the nearest grid point (grid step = median gap,
    anchored at the earliest reading); readings more than half a step apart
    land on distinct grid points. Duplicate (node, metric, timestamp) cells
    keep the last occurrence in file order and are counted in the report.
    """
    layout = layout or CsvLayout()
    if not files:
        raise IngestError("no input files")

    nodes_parts, metrics_parts, times_parts, vals_parts, null_parts = [], [], [], [], []
    for path in files:
        if layout.kind == "long":
            df = _read_long(path, layout)
            if len(df) == 0:
                continue
            lines = np.arange(len(df)) + 2  # header is line 1
            node_col = df[layout.node].astype(str).str.strip()
            metric_col = df[layout.metric].astype(str).str.strip()
            ts = _parse_timestamps(df[layout.timestamp], path, lines)
            vals, nulls = _parse_values(df[layout.value], path, lines)
        else:
            df, n_file_rows = _read_wide(path, layout)
            if len(df) == 0:
                continue
            # Melt stacks one block of file rows per metric column.
            lines = np.tile(np.arange(n_file_rows) + 2, len(df) // n_file_rows)
            node_col = df["__node"].astype(str).str.strip()
            metric_col = df["__metric"].astype(str)
            ts = _parse_timestamps(df["__time"], path, lines)
            vals, nulls = _parse_values(df["__value"], path, lines)
        nodes_parts.append(node_col.to_numpy())
        metrics_parts.append(metric_col.to_numpy())
        times_parts.append(ts)
        vals_parts.append(vals)
        null_parts.append(nulls)

    if not nodes_parts:
        raise IngestError("no data rows in input")

    node_col = np.concatenate(nodes_parts)
    metric_col = np.concatenate(metrics_parts)
    raw_ts = np.concatenate(times_parts)
    vals = np.concatenate(vals_parts)
    nulls = np.concatenate(null_parts)
    total_rows = len(node_col)

    # Sampling interval: median gap between consecutive readings of the same
    # (node, metric) series. Jitter shifts a few gaps; the median ignores them.
    order = np.lexsort((raw_ts, metric_col, node_col))
    same_series = (node_col[order][1:] == node_col[order][:-1]) & (
        metric_col[order][1:] == metric_col[order][:-1]
    )
    gaps = np.diff(raw_ts[order])[same_series]
    gaps = gaps[gaps > 0]
    if gaps.size == 0:  # degenerate input: fall back to union-grid gaps
        gaps = np.diff(np.unique(raw_ts))
        gaps = gaps[gaps > 0]
    sample_interval = float(np.median(gaps)) if gaps.size else 1.0
    t0 = float(raw_ts.min())
    snapped_ts = t0 + np.round((raw_ts - t0) / sample_interval) * sample_interval
    snapped_count = int(np.count_nonzero(snapped_ts != raw_ts))

    node_ids = sorted(set(node_col.tolist()))
    metric_names = sorted(set(metric_col.tolist()))
    grid = np.unique(snapped_ts)

    node_idx = pd.Categorical(node_col, categories=node_ids).codes.astype(np.int64)
    metric_idx = pd.Categorical(metric_col, categories=metric_names).codes.astype(np.int64)
    time_idx = np.searchsorted(grid, snapped_ts)

    n, m, t = len(node_ids), len(metric_names), len(grid)
    keys = (node_idx * m + metric_idx) * t + time_idx
    # Keep the last occurrence of each duplicated cell, preserving file order.
    _, first_of_reversed = np.unique(keys[::-1], return_index=True)
    keep = (len(keys) - 1) - first_of_reversed
    duplicates = int(len(keys) - len(keep))

    values = np.full((n, m, t), np.nan, dtype=np.float64)
    null_mask = np.ones((n, m, t), dtype=bool)
    kn, km, kt = node_idx[keep], metric_idx[keep], time_idx[keep]
    kv, knull = vals[keep], nulls[keep]
    present = ~knull
    values[kn[present], km[present], kt[present]] = kv[present]
    null_mask[kn[present], km[present], kt[present]] = False

    tensor = MonitoringTensor(
        node_ids=node_ids,
        metric_names=metric_names,
        timestamps=grid,
        values=values,
        null_mask=null_mask,
        sample_interval=sample_interval,
    )
    all_null = np.argwhere(null_mask.all(axis=2))
    report = IngestReport(
        rows=total_rows,
        duplicates=duplicates,
        snapped=snapped_count,
        all_null_series=[(node_ids[i], metric_names[j]) for i, j in all_null],
    )
    return tensor, report


def export_csv(tensor: MonitoringTensor, path: str, kind: str = "long") -> None:
    """Write the tensor back out as CSV; null cells become empty fields."""
    n, m, t = tensor.shape
    ts = tensor.timestamps
    ts_out = ts.astype(np.int64) if np.all(ts == np.round(ts)) else ts
    if kind == "long":
        df = pd.DataFrame(
            {
                "node": np.repeat(tensor.node_ids, m * t),
                "metric": np.tile(np.repeat(tensor.metric_names, t), n),
                "timestamp": np.tile(ts_out, n * m),
                "value": np.where(tensor.null_mask.ravel(), np.nan, tensor.values.ravel()),
            }
        )
    elif kind == "wide":
        df = pd.DataFrame(
            {
                "node": np.repeat(tensor.node_ids, t),
                "timestamp": np.tile(ts_out, n),
            }
        )
        flat = np.where(tensor.null_mask, np.nan, tensor.values)
        for j, name in enumerate(tensor.metric_names):
            df[name] = flat[:, j, :].ravel()
    else:
        raise PreconditionError(f"unknown export kind: {kind!r}")
    # repr() round-trips float64 exactly; the default CSV float format does not.
    df.to_csv(path, index=False, float_format=lambda v: repr(float(v)))


def null_activity(
    tensor: MonitoringTensor,
    window: tuple[float, float] | None = None,
    labels: np.ndarray | None = None,
) -> NullActivity:
    """Per timestamp, the nodes whose readings are null across all metrics."""
    if window is None:
        t_sel = np.arange(len(tensor.timestamps))
    else:
        t_sel = tensor.time_indices(*window)
    all_null = tensor.null_mask.all(axis=1)  # (N, T)
    entries = []
    for ti in t_sel:
        idx = np.nonzero(all_null[:, ti])[0]
        if labels is None:
            entries.append([(int(i), None) for i in idx])
        else:
            entries.append([(int(i), int(labels[i])) for i in idx])
    return NullActivity(timestamps=tensor.timestamps[t_sel], entries=entries)


def impute(
    tensor: MonitoringTensor, policy: str = "forward-then-backward-fill"
) -> tuple[MonitoringTensor, ImputationReport]:
    """Densify the tensor; never touches non-null readings.

    Series that are entirely null get zeros under either policy and are
    flagged in the report. The original mask rides along as provenance.
    """
    if policy not in IMPUTE_POLICIES:
        raise PreconditionError(f"unknown imputation policy: {policy!r}")
    mask = tensor.null_mask
    filled = int(mask.sum())
    out = tensor.values.copy()
    out[mask] = np.nan

    if policy == "forward-then-backward-fill":
        t = out.shape[2]
        valid = ~mask
        idx = np.where(valid, np.arange(t), 0)
        np.maximum.accumulate(idx, axis=2, out=idx)
        out = np.take_along_axis(out, idx, axis=2)
        # Leading nulls have no forward source; fill backward from the next reading.
        still = np.isnan(out)
        if still.any():
            idx = np.where(~still, np.arange(t), t - 1)
            idx = np.minimum.accumulate(idx[:, :, ::-1], axis=2)[:, :, ::-1]
            out = np.take_along_axis(out, idx, axis=2)
    # zero-fill and any residual all-null series:
    all_null_series = np.argwhere(mask.all(axis=2))
    out = np.nan_to_num(out, nan=0.0)

    dense = MonitoringTensor(
        node_ids=tensor.node_ids,
        metric_names=tensor.metric_names,
        timestamps=tensor.timestamps,
        values=out,
        null_mask=np.zeros_like(mask),
        sample_interval=tensor.sample_interval,
    )
    report = ImputationReport(
        policy=policy,
        filled=filled,
        all_null_series=[(tensor.node_ids[i], tensor.metric_names[j]) for i, j in all_null_series],
        original_mask=mask,
    )
    return dense, report
