"""Ingest, alignment, imputation, and round-trip behavior of the reading cube."""

from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fleetscope.errors import IngestError, PreconditionError
from fleetscope.tensor import (
    CsvLayout,
    MonitoringTensor,
    TensorSelection,
    export_csv,
    impute,
    ingest_csv,
    null_activity,
)


def write_csv(path: Path, text: str) -> str:
    path.write_text(text)
    return str(path)


LONG_BASIC = """node,metric,timestamp,value
a,cpu,0,1.0
a,cpu,15,2.0
a,mem,0,10.0
a,mem,15,11.0
b,cpu,0,3.0
b,cpu,15,4.0
b,mem,0,12.0
b,mem,15,13.0
"""


def test_long_ingest_basic(tmp_path):
    f = write_csv(tmp_path / "t.csv", LONG_BASIC)
    tensor, report = ingest_csv([f])
    assert tensor.node_ids == ["a", "b"]
    assert tensor.metric_names == ["cpu", "mem"]
    assert np.array_equal(tensor.timestamps, [0.0, 15.0])
    assert tensor.sample_interval == 15.0
    assert tensor.values[0, 0, 1] == 2.0
    assert tensor.values[1, 1, 0] == 12.0
    assert not tensor.null_mask.any()
    assert report.rows == 8
    assert report.duplicates == 0
    assert report.snapped == 0
    assert report.all_null_series == []


def test_wide_ingest_matches_long(tmp_path):
    f_long = write_csv(tmp_path / "long.csv", LONG_BASIC)
    f_wide = write_csv(
        tmp_path / "wide.csv",
        "node,timestamp,cpu,mem\na,0,1.0,10.0\na,15,2.0,11.0\nb,0,3.0,12.0\nb,15,4.0,13.0\n",
    )
    t1, _ = ingest_csv([f_long])
    t2, r2 = ingest_csv([f_wide], CsvLayout(kind="wide"))
    assert t1.node_ids == t2.node_ids
    assert t1.metric_names == t2.metric_names
    assert np.array_equal(t1.values, t2.values)
    assert r2.rows == 8  # one logical reading per (node, ts, metric) cell


def test_jittered_timestamp_snaps_to_nearest_grid_point(tmp_path):
    # 15s grid with one reading 7s late: 22 is nearer to 15 than to 30.
    f = write_csv(
        tmp_path / "t.csv",
        "node,metric,timestamp,value\n"
        "a,cpu,0,1\na,cpu,15,2\na,cpu,30,3\na,cpu,45,4\n"
        "b,cpu,0,5\nb,cpu,22,6\nb,cpu,30,7\nb,cpu,45,8\n",
    )
    tensor, report = ingest_csv([f])
    assert np.array_equal(tensor.timestamps, [0.0, 15.0, 30.0, 45.0])
    assert tensor.sample_interval == 15.0
    assert tensor.values[1, 0, 1] == 6.0
    assert report.snapped == 1


def test_duplicate_cells_keep_last_in_file_order(tmp_path):
    f1 = write_csv(
        tmp_path / "one.csv",
        "node,metric,timestamp,value\na,cpu,0,1.0\na,cpu,0,2.0\na,cpu,15,9.0\n",
    )
    f2 = write_csv(tmp_path / "two.csv", "node,metric,timestamp,value\na,cpu,0,3.0\n")
    tensor, report = ingest_csv([f1, f2])
    assert tensor.values[0, 0, 0] == 3.0
    assert tensor.values[0, 0, 1] == 9.0
    assert report.duplicates == 2
    assert report.rows == 4


def test_malformed_value_reports_file_and_line(tmp_path):
    f = write_csv(
        tmp_path / "bad.csv",
        "node,metric,timestamp,value\na,cpu,0,1.0\na,cpu,15,oops\n",
    )
    with pytest.raises(IngestError) as err:
        ingest_csv([f])
    assert err.value.file == f
    assert err.value.line == 3
    assert "oops" in str(err.value)


def test_malformed_timestamp_reports_file_and_line(tmp_path):
    f = write_csv(
        tmp_path / "bad.csv",
        "node,metric,timestamp,value\na,cpu,0,1.0\na,cpu,not-a-time,2.0\n",
    )
    with pytest.raises(IngestError) as err:
        ingest_csv([f])
    assert err.value.line == 3


def test_missing_column_is_an_ingest_error(tmp_path):
    f = write_csv(tmp_path / "bad.csv", "node,metric,value\na,cpu,1.0\n")
    with pytest.raises(IngestError):
        ingest_csv([f])


def test_iso_timestamps_parse_to_epoch_seconds(tmp_path):
    f = write_csv(
        tmp_path / "t.csv",
        "node,metric,timestamp,value\n"
        "a,cpu,1970-01-01T00:00:00Z,1.0\na,cpu,1970-01-01T00:00:15Z,2.0\n",
    )
    tensor, _ = ingest_csv([f])
    assert np.array_equal(tensor.timestamps, [0.0, 15.0])


def test_empty_value_field_is_null(tmp_path):
    f = write_csv(
        tmp_path / "t.csv",
        "node,metric,timestamp,value\na,cpu,0,\na,cpu,15,2.0\nb,cpu,0,1.0\nb,cpu,15,\n",
    )
    tensor, report = ingest_csv([f])
    assert tensor.null_mask[0, 0, 0]
    assert not tensor.null_mask[0, 0, 1]
    assert report.all_null_series == []


def test_unobserved_series_listed_in_report(tmp_path):
    # Node b never reports mem: the (b, mem) series is entirely null.
    f = write_csv(
        tmp_path / "t.csv",
        "node,metric,timestamp,value\na,cpu,0,1\na,mem,0,2\nb,cpu,0,3\n",
    )
    tensor, report = ingest_csv([f])
    assert report.all_null_series == [("b", "mem")]
    assert tensor.null_mask[1, 1].all()


def test_empty_input_rejected(tmp_path):
    with pytest.raises(IngestError):
        ingest_csv([])
    f = write_csv(tmp_path / "empty.csv", "node,metric,timestamp,value\n")
    with pytest.raises(IngestError):
        ingest_csv([f])


def make_tensor(values, mask=None, dt=15.0):
    values = np.asarray(values, dtype=np.float64)
    n, m, t = values.shape
    mask = np.zeros_like(values, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    safe = values.copy()
    safe[mask] = 0.0
    return MonitoringTensor(
        node_ids=[f"n{i:03d}" for i in range(n)],
        metric_names=[f"m{j:02d}" for j in range(m)],
        timestamps=dt * np.arange(t),
        values=safe,
        null_mask=mask,
        sample_interval=dt,
    )


@st.composite
def tensor_cases(draw):
    n = draw(st.integers(1, 4))
    m = draw(st.integers(1, 3))
    t = draw(st.integers(1, 6))
    vals = draw(
        st.lists(
            st.floats(-1e6, 1e6, allow_nan=False, width=64),
            min_size=n * m * t,
            max_size=n * m * t,
        )
    )
    mask = draw(st.lists(st.booleans(), min_size=n * m * t, max_size=n * m * t))
    return (
        np.array(vals).reshape(n, m, t),
        np.array(mask).reshape(n, m, t),
    )


@given(tensor_cases())
@settings(max_examples=40, deadline=None)
def test_export_ingest_round_trip_is_bit_exact(case):
    # Holds for uniform-grid tensors: snapping is the identity there.
    values, mask = case
    tensor = make_tensor(values, mask)
    with tempfile.TemporaryDirectory() as d:
        path = str(Path(d) / "roundtrip.csv")
        export_csv(tensor, path)
        back, report = ingest_csv([path])
    assert back.node_ids == tensor.node_ids
    assert back.metric_names == tensor.metric_names
    assert np.array_equal(back.timestamps, tensor.timestamps)
    assert np.array_equal(back.null_mask, tensor.null_mask)
    assert np.array_equal(back.values[~mask], tensor.values[~mask])
    assert report.duplicates == 0 and report.snapped == 0


@given(tensor_cases())
@settings(max_examples=20, deadline=None)
def test_wide_export_round_trips_too(case):
    values, mask = case
    tensor = make_tensor(values, mask)
    with tempfile.TemporaryDirectory() as d:
        path = str(Path(d) / "roundtrip.csv")
        export_csv(tensor, path, kind="wide")
        back, _ = ingest_csv([path], CsvLayout(kind="wide"))
    assert np.array_equal(back.null_mask, tensor.null_mask)
    assert np.array_equal(back.values[~mask], tensor.values[~mask])


def test_impute_forward_then_backward():
    nan = 0.0  # placeholder under the mask
    values = np.array([[[nan, 1.0, nan, nan, 4.0, nan]]])
    mask = np.array([[[True, False, True, True, False, True]]])
    tensor = make_tensor(values, mask)
    dense, report = impute(tensor)
    assert np.array_equal(dense.values[0, 0], [1.0, 1.0, 1.0, 1.0, 4.0, 4.0])
    assert not dense.null_mask.any()
    assert report.filled == 4
    assert np.array_equal(report.original_mask, mask)


def test_impute_zero_policy():
    values = np.array([[[0.0, 5.0, 0.0]]])
    mask = np.array([[[True, False, True]]])
    dense, _ = impute(make_tensor(values, mask), policy="zero-fill")
    assert np.array_equal(dense.values[0, 0], [0.0, 5.0, 0.0])


def test_impute_all_null_series_becomes_zeros_and_is_flagged():
    values = np.zeros((2, 1, 3))
    values[0, 0] = [1.0, 2.0, 3.0]
    mask = np.zeros((2, 1, 3), dtype=bool)
    mask[1, 0] = True
    dense, report = impute(make_tensor(values, mask))
    assert np.array_equal(dense.values[1, 0], [0.0, 0.0, 0.0])
    assert report.all_null_series == [("n001", "m00")]


def test_impute_rejects_unknown_policy():
    with pytest.raises(PreconditionError):
        impute(make_tensor(np.zeros((1, 1, 2))), policy="interpolate")


@given(tensor_cases(), st.sampled_from(["forward-then-backward-fill", "zero-fill"]))
@settings(max_examples=40, deadline=None)
def test_impute_never_changes_observed_readings(case, policy):
    values, mask = case
    tensor = make_tensor(values, mask)
    dense, _ = impute(tensor, policy=policy)
    assert np.array_equal(dense.values[~mask], tensor.values[~mask])
    assert np.all(np.isfinite(dense.values))


def test_null_activity_reports_fully_null_nodes_per_timestamp():
    values = np.zeros((3, 2, 3))
    mask = np.zeros((3, 2, 3), dtype=bool)
    mask[0, :, 1] = True  # node 0 dark at t=15
    mask[2, :, 1] = True  # node 2 dark at t=15
    mask[1, 0, 2] = True  # node 1 only partially null at t=30
    tensor = make_tensor(values, mask)
    act = null_activity(tensor)
    assert act.entries[0] == []
    assert act.entries[1] == [(0, None), (2, None)]
    assert act.entries[2] == []

    labeled = null_activity(tensor, window=(15.0, 15.0), labels=np.array([7, 8, 9]))
    assert len(labeled.entries) == 1
    assert labeled.entries[0] == [(0, 7), (2, 9)]
    payload = labeled.to_payload(tensor)
    assert payload[0]["t"] == 15.0
    assert payload[0]["nodes"][0] == {"node": "n000", "cluster": 7}


def test_tensor_invariants_enforced():
    with pytest.raises(PreconditionError):
        MonitoringTensor(
            node_ids=["a"],
            metric_names=["m"],
            timestamps=np.array([0.0, 0.0]),
            values=np.zeros((1, 1, 2)),
            null_mask=np.zeros((1, 1, 2), dtype=bool),
            sample_interval=1.0,
        )
    with pytest.raises(PreconditionError):
        MonitoringTensor(
            node_ids=["a", "b"],
            metric_names=["m"],
            timestamps=np.array([0.0]),
            values=np.zeros((1, 1, 1)),
            null_mask=np.zeros((1, 1, 1), dtype=bool),
            sample_interval=1.0,
        )


def test_selection_resolution_and_bounds():
    tensor = make_tensor(np.zeros((3, 2, 4)))
    nodes, metrics, times = TensorSelection().resolve(tensor)
    assert len(nodes) == 3 and len(metrics) == 2 and len(times) == 4

    sel = TensorSelection(node_subset=(2, 0), metric_subset=(1,), time_window=(15.0, 30.0))
    nodes, metrics, times = sel.resolve(tensor)
    assert np.array_equal(nodes, [0, 2])
    assert np.array_equal(metrics, [1])
    assert np.array_equal(times, [1, 2])

    with pytest.raises(PreconditionError):
        TensorSelection(node_subset=(5,)).resolve(tensor)
    with pytest.raises(PreconditionError):
        TensorSelection(time_window=(100.0, 200.0)).resolve(tensor)

    payload = sel.to_payload()
    assert TensorSelection.from_payload(payload) == sel
