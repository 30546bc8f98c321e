"""HTTP JSON service over the analysis pipeline.

Datasets are registered once (CSV payload or a synthetic-fixture spec) and
sessions layer parameters on top of them: each session id owns its own
selection, pipeline parameters, and baseline edits, while all sessions share
one stage cache so identical work is never repeated. Module precondition
failures surface as 422 responses carrying the module's error text.
"""

from __future__ import annotations

import hashlib
import json
import tempfile
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse

from .cache import DEFAULT_BUDGET, StageCache
from .dynamics import BaselineSpec, auto_baseline
from .errors import FleetscopeError, PreconditionError
from .pipeline import (
    AnalysisParams,
    BandParams,
    SessionState,
    cluster_series_payload,
    run_analysis,
    run_zscores,
)
from .quality import SynthSpec, synth_generate
from .tensor import CsvLayout, MonitoringTensor, TensorSelection, ingest_csv, null_activity


class DatasetStore:
    """Ingested tensors by content-addressed id."""

    def __init__(self, data_dir: str | None = None):
        self.data_dir = Path(data_dir) if data_dir else None
        self._lock = threading.Lock()
        self._tensors: dict[str, MonitoringTensor] = {}
        self._reports: dict[str, dict] = {}

    def add_csv(self, text: str, layout: CsvLayout | None = None) -> tuple[str, dict]:
        dataset_id = hashlib.sha256(text.encode()).hexdigest()[:12]
        with self._lock:
            if dataset_id in self._tensors:
                return dataset_id, self._reports[dataset_id]
        with tempfile.NamedTemporaryFile(
            mode="w", suffix=".csv", dir=self.data_dir, delete=False
        ) as handle:
            handle.write(text)
            path = handle.name
        try:
            tensor, report = ingest_csv([path], layout=layout)
        finally:
            Path(path).unlink(missing_ok=True)
        return self._register(dataset_id, tensor, report.to_payload())

    def add_synth(self, spec: SynthSpec) -> tuple[str, dict]:
        payload = spec.to_payload()
        canonical = repr(sorted(payload.items()))
        dataset_id = "synth-" + hashlib.sha256(canonical.encode()).hexdigest()[:12]
        with self._lock:
            if dataset_id in self._tensors:
                return dataset_id, self._reports[dataset_id]
        tensor, labels = synth_generate(spec)
        report = {
            "rows": int(np.prod(tensor.shape)),
            "synth": payload,
            "truth_labels": [int(v) for v in labels],
        }
        return self._register(dataset_id, tensor, report)

    def _register(self, dataset_id: str, tensor: MonitoringTensor, report: dict) -> tuple[str, dict]:
        report = dict(report)
        report.update(
            {
                "dataset": dataset_id,
                "nodes": len(tensor.node_ids),
                "metrics": len(tensor.metric_names),
                "timestamps": len(tensor.timestamps),
                "sample_interval": tensor.sample_interval,
            }
        )
        with self._lock:
            self._tensors[dataset_id] = tensor
            self._reports[dataset_id] = report
        return dataset_id, report

    def get(self, dataset_id: str) -> MonitoringTensor | None:
        with self._lock:
            return self._tensors.get(dataset_id)

    def report_for(self, dataset_id: str) -> dict | None:
        with self._lock:
            return self._reports.get(dataset_id)


class NotFound(Exception):
    pass


def create_app(data_dir: str | None = None, cache_bytes: int = DEFAULT_BUDGET) -> FastAPI:
    app = FastAPI(title="fleet telemetry analysis")
    store = DatasetStore(data_dir)
    cache = StageCache(max_bytes=cache_bytes)
    sessions: dict[str, SessionState] = {}
    last_analysis: dict[str, object] = {}
    lock = threading.Lock()

    app.state.store = store
    app.state.cache = cache

    @app.exception_handler(FleetscopeError)
    async def _domain_error(request: Request, exc: FleetscopeError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    def require_dataset(dataset_id: str) -> MonitoringTensor:
        tensor = store.get(dataset_id)
        if tensor is None:
            raise NotFound(dataset_id)
        return tensor

    def require_session(session_id: str) -> SessionState:
        with lock:
            session = sessions.get(session_id)
        if session is None:
            raise NotFound(session_id)
        return session

    @app.exception_handler(NotFound)
    async def _missing(request: Request, exc: NotFound):
        return JSONResponse(status_code=404, content={"detail": f"unknown id: {exc.args[0]}"})

    async def json_body(request: Request) -> dict:
        try:
            body = await request.json()
        except json.JSONDecodeError as exc:
            raise PreconditionError(f"request body is not valid JSON: {exc}") from exc
        if not isinstance(body, dict):
            raise PreconditionError("request body must be a JSON object")
        return body

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/cache/stats")
    def cache_stats():
        return cache.stats()

    @app.post("/datasets", status_code=201)
    async def add_dataset(request: Request):
        body = await json_body(request)
        if "csv" in body:
            layout = CsvLayout.from_payload(body["layout"]) if body.get("layout") else None
            dataset_id, report = store.add_csv(body["csv"], layout=layout)
        elif "synth" in body:
            dataset_id, report = store.add_synth(SynthSpec.from_payload(body["synth"]))
        else:
            raise PreconditionError("dataset body needs a 'csv' or 'synth' field")
        return {"dataset": dataset_id, "report": report}

    @app.get("/datasets/{dataset_id}/null-activity")
    def dataset_null_activity(
        dataset_id: str,
        from_ts: float | None = Query(None, alias="from"),
        to_ts: float | None = Query(None, alias="to"),
    ):
        tensor = require_dataset(dataset_id)
        window = None
        if from_ts is not None or to_ts is not None:
            lo = from_ts if from_ts is not None else float(tensor.timestamps[0])
            hi = to_ts if to_ts is not None else float(tensor.timestamps[-1])
            window = (lo, hi)
        return null_activity(tensor, window=window).to_payload(tensor)

    @app.get("/datasets/{dataset_id}")
    def dataset_info(dataset_id: str):
        require_dataset(dataset_id)
        return store.report_for(dataset_id)

    @app.post("/sessions/{session_id}/analysis")
    async def analysis(session_id: str, request: Request):
        body = await json_body(request)
        dataset_id = body.get("dataset")
        if dataset_id is None:
            with lock:
                existing = sessions.get(session_id)
            if existing is None:
                raise PreconditionError("first analysis call must name a dataset")
            dataset_id = existing.dataset_id
        tensor = require_dataset(dataset_id)

        session = SessionState(
            dataset_id=dataset_id,
            selection=TensorSelection.from_payload(body.get("selection") or {}),
            analysis=AnalysisParams.from_payload(body.get("params") or {}),
            band=BandParams.from_payload(body.get("band") or {}),
        )
        with lock:
            previous = sessions.get(session_id)
            if previous is not None and previous.dataset_id == dataset_id:
                session.baseline_overrides = previous.baseline_overrides
            sessions[session_id] = session

        result = run_analysis(tensor, dataset_id, session, cache)
        with lock:
            last_analysis[session_id] = result
        payload = result.to_payload()
        payload["dataset"] = dataset_id
        payload["nodes"] = result.features.nodes
        return payload

    def require_analysis(session_id: str):
        require_session(session_id)
        with lock:
            result = last_analysis.get(session_id)
        if result is None:
            raise PreconditionError("run analysis before requesting view payloads")
        return result

    @app.get("/sessions/{session_id}/contributions")
    def contributions(session_id: str):
        result = require_analysis(session_id)
        return result.contributions.to_payload()

    @app.get("/sessions/{session_id}/series")
    def series(session_id: str, metric: str, cluster: int = 0, smooth: int | None = None):
        session = require_session(session_id)
        result = require_analysis(session_id)
        tensor = require_dataset(session.dataset_id)
        return cluster_series_payload(
            tensor, result.embedding.labels, cluster, metric, smooth_window=smooth
        )

    @app.get("/sessions/{session_id}/raw")
    def raw(session_id: str, metric: str, nodes: str = ""):
        session = require_session(session_id)
        tensor = require_dataset(session.dataset_id)
        j = tensor.metric_index(metric)
        wanted = [v for v in nodes.split(",") if v] or list(tensor.node_ids)
        series_out = {}
        for node in wanted:
            i = tensor.node_index(node)
            vals = tensor.values[i, j, :]
            mask = tensor.null_mask[i, j, :]
            series_out[node] = [None if m else float(v) for v, m in zip(vals, mask)]
        return {"metric": metric, "t": tensor.timestamps.tolist(), "series": series_out}

    @app.get("/sessions/{session_id}/baseline")
    def get_baseline(session_id: str, metric: str):
        session = require_session(session_id)
        tensor = require_dataset(session.dataset_id)
        override = session.baseline_overrides.get(metric)
        if override is not None:
            return override.to_payload()
        return auto_baseline(tensor, metric).to_payload()

    @app.put("/sessions/{session_id}/baseline")
    async def put_baseline(session_id: str, request: Request):
        session = require_session(session_id)
        body = await json_body(request)
        if not all(f in body for f in ("metric", "t_start", "t_end")):
            raise PreconditionError("baseline body needs metric, t_start and t_end")
        try:
            t_start, t_end = float(body["t_start"]), float(body["t_end"])
        except (TypeError, ValueError):
            raise PreconditionError("baseline t_start and t_end must be numbers")
        if t_start > t_end:
            raise PreconditionError("baseline window needs t_start <= t_end")
        spec = BaselineSpec(
            metric=body["metric"],
            t_start=t_start,
            t_end=t_end,
            source="user",
        )
        with lock:
            session.baseline_overrides[spec.metric] = spec
        return spec.to_payload()

    @app.post("/sessions/{session_id}/zscores")
    async def session_zscores(session_id: str, request: Request):
        session = require_session(session_id)
        tensor = require_dataset(session.dataset_id)
        body = await json_body(request)
        if body.get("band"):
            session.band = BandParams.from_payload(body["band"])
        node_ids = body.get("nodes")
        if not node_ids:
            raise PreconditionError("zscores needs a non-empty node selection")
        rows = [
            tensor.node_index(v) if isinstance(v, str) else int(v) for v in node_ids
        ]
        result = run_zscores(
            tensor,
            session.dataset_id,
            session,
            cache,
            nodes=rows,
            metrics=body.get("metrics"),
        )
        return result.to_payload()

    return app
