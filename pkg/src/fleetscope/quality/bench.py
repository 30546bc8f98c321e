"""Cold/warm pipeline timing over a sweep of fleet sizes.

Each sweep point generates a synthetic fleet, runs the analysis pipeline
against an empty cache (cold), runs it again (warm: every stage is a cache
hit), and finally re-clusters with a different k on the warm cache to show
what an interactive parameter change actually costs. Timings are medians
over the requested repetitions and everything runs serially so the numbers
don't contaminate each other.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..cache import StageCache
from ..errors import PreconditionError
from ..pipeline import AnalysisParams, SessionState, run_analysis
from .synth import SynthSpec, synth_generate

BENCH_STAGES = ("ingest", "dr1", "dr2", "cluster", "ccpca")


@dataclass
class BenchRow:
    stage: str
    n_nodes: int
    n_metrics: int
    cold_ms: float
    warm_ms: float

    def to_csv_row(self) -> str:
        return f"{self.stage},{self.n_nodes},{self.n_metrics},{self.cold_ms:.3f},{self.warm_ms:.3f}"


def bench_rows_to_csv(rows: list[BenchRow]) -> str:
    lines = ["stage,N,M,cold_ms,warm_ms"]
    lines.extend(row.to_csv_row() for row in rows)
    return "\n".join(lines) + "\n"


def _timed_analysis(tensor, dataset_id, session, cache):
    """Stage wall times and the whole-call wall time, in milliseconds."""
    timings: dict[str, float] = {}
    original = cache.get_or_compute
    active: set[str] = set()

    def instrumented(key, producer, size_of=None):
        # Per-cluster lookups nest inside their stage's producer; count only
        # the outermost call so a stage is not billed twice.
        if key.stage in active:
            return original(key, producer, size_of=size_of)
        active.add(key.stage)
        start = time.perf_counter()
        try:
            out = original(key, producer, size_of=size_of)
        finally:
            active.discard(key.stage)
        timings[key.stage] = timings.get(key.stage, 0.0) + (time.perf_counter() - start) * 1e3
        return out

    cache.get_or_compute = instrumented
    started = time.perf_counter()
    try:
        run_analysis(tensor, dataset_id, session, cache)
    finally:
        cache.get_or_compute = original
    return timings, (time.perf_counter() - started) * 1e3


def _warm_up_jit() -> None:
    """Compile the numba layout kernels before anything is timed."""
    from ..reduce import umap_embed

    rng = np.random.default_rng(0)
    umap_embed(rng.normal(size=(30, 3)), n_neighbors=5, n_epochs=20, seed=0)


def bench(
    n_values: list[int],
    n_metrics: int = 46,
    n_timestamps: int = 1000,
    groups: int = 4,
    k: int = 4,
    repetitions: int = 3,
    seed: int = 42,
    cache_bytes: int = 2 * 2**30,
) -> list[BenchRow]:
    """Sweep fleet sizes and report per-stage cold and warm medians."""
    if repetitions < 1:
        raise PreconditionError("repetitions must be at least 1")
    if not n_values:
        raise PreconditionError("sweep needs at least one fleet size")
    _warm_up_jit()

    rows: list[BenchRow] = []
    for n in n_values:
        spec = SynthSpec(
            n_nodes=n, n_metrics=n_metrics, n_timestamps=n_timestamps, groups=groups, seed=seed
        )
        tensor, _ = synth_generate(spec)
        session = SessionState(dataset_id="bench", analysis=AnalysisParams(k=k, seed=seed))

        cold_runs: list[dict[str, float]] = []
        warm_runs: list[dict[str, float]] = []
        cold_walls: list[float] = []
        warm_walls: list[float] = []
        recluster_runs: list[float] = []
        for _ in range(repetitions):
            cache = StageCache(max_bytes=cache_bytes)
            cold, cold_wall = _timed_analysis(tensor, "bench", session, cache)
            warm, warm_wall = _timed_analysis(tensor, "bench", session, cache)
            cold_runs.append(cold)
            warm_runs.append(warm)
            cold_walls.append(cold_wall)
            warm_walls.append(warm_wall)
            relabel = SessionState(
                dataset_id="bench", analysis=AnalysisParams(k=k + 1, seed=seed)
            )
            start = time.perf_counter()
            run_analysis(tensor, "bench", relabel, cache)
            recluster_runs.append((time.perf_counter() - start) * 1e3)

        for stage in BENCH_STAGES:
            rows.append(
                BenchRow(
                    stage=stage,
                    n_nodes=n,
                    n_metrics=n_metrics,
                    cold_ms=float(np.median([r[stage] for r in cold_runs])),
                    warm_ms=float(np.median([r[stage] for r in warm_runs])),
                )
            )
        cold_total = float(np.median(cold_walls))
        warm_total = float(np.median(warm_walls))
        rows.append(
            BenchRow(
                stage="recluster",
                n_nodes=n,
                n_metrics=n_metrics,
                cold_ms=float(np.median(recluster_runs)),
                warm_ms=float(np.median(recluster_runs)),
            )
        )
        rows.append(
            BenchRow(
                stage="total", n_nodes=n, n_metrics=n_metrics, cold_ms=cold_total, warm_ms=warm_total
            )
        )
    return rows
