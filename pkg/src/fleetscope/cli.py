"""Command line front end.

Batch subcommands (ingest, analyze, explain, zscores, eval, bench) read
telemetry from CSV files or from a synthetic-fixture spec, write JSON (CSV
for bench) to stdout or --out, and exit 0 on success, 1 on any error. serve
starts the HTTP service.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .cache import StageCache
from .dynamics import BaselineSpec
from .errors import FleetscopeError, PreconditionError
from .pipeline import AnalysisParams, BandParams, SessionState, run_analysis, run_zscores
from .quality import SynthSpec, adjusted_rand_index, bench, bench_rows_to_csv, quality_report, synth_generate
from .tensor import CsvLayout, TensorSelection, ingest_csv


def _add_input_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--csv", nargs="+", help="telemetry CSV files")
    parser.add_argument("--layout", help="CSV layout JSON file (defaults to long format)")
    parser.add_argument("--synth", help="synthetic fixture spec JSON file")


def _add_analysis_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--k", type=int, default=4)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--n-neighbors", type=int, default=15)
    parser.add_argument("--min-dist", type=float, default=0.1)
    parser.add_argument("--no-normalize-dr1", action="store_true")
    parser.add_argument("--standardize-ccpca", action="store_true")
    parser.add_argument("--impute", default="forward-then-backward-fill")
    parser.add_argument("--t-start", type=float)
    parser.add_argument("--t-end", type=float)
    parser.add_argument("--metrics", nargs="*", help="metric names to analyze")


def _load_tensor(args):
    if bool(args.csv) == bool(args.synth):
        raise PreconditionError("provide exactly one of --csv or --synth")
    if args.synth:
        with open(args.synth) as handle:
            spec = SynthSpec.from_payload(json.load(handle))
        tensor, truth = synth_generate(spec)
        return tensor, truth, spec
    layout = None
    if args.layout:
        with open(args.layout) as handle:
            layout = CsvLayout.from_payload(json.load(handle))
    tensor, _ = ingest_csv(args.csv, layout=layout)
    return tensor, None, None


def _selection_from(args, tensor) -> TensorSelection:
    window = None
    if args.t_start is not None or args.t_end is not None:
        lo = args.t_start if args.t_start is not None else float(tensor.timestamps[0])
        hi = args.t_end if args.t_end is not None else float(tensor.timestamps[-1])
        window = (lo, hi)
    metric_subset = None
    if args.metrics:
        metric_subset = tuple(tensor.metric_index(m) for m in args.metrics)
    return TensorSelection(metric_subset=metric_subset, time_window=window)


def _params_from(args) -> AnalysisParams:
    return AnalysisParams(
        impute_policy=args.impute,
        normalize_dr1=not args.no_normalize_dr1,
        n_neighbors=args.n_neighbors,
        min_dist=args.min_dist,
        seed=args.seed,
        k=args.k,
        standardize_ccpca=args.standardize_ccpca,
    )


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _emit_json(payload, out_path: str | None) -> None:
    _emit(json.dumps(payload, indent=2), out_path)


def _cmd_ingest(args) -> None:
    layout = None
    if args.layout:
        with open(args.layout) as handle:
            layout = CsvLayout.from_payload(json.load(handle))
    tensor, report = ingest_csv(args.csv, layout=layout)
    payload = report.to_payload()
    payload.update(
        {
            "nodes": len(tensor.node_ids),
            "metrics": len(tensor.metric_names),
            "timestamps": len(tensor.timestamps),
            "sample_interval": tensor.sample_interval,
        }
    )
    _emit_json(payload, args.out)


def _cmd_analyze(args) -> None:
    tensor, _, _ = _load_tensor(args)
    session = SessionState(
        dataset_id="cli",
        selection=_selection_from(args, tensor),
        analysis=_params_from(args),
    )
    result = run_analysis(tensor, "cli", session, StageCache())
    payload = result.to_payload()
    payload["nodes"] = result.features.nodes
    _emit_json(payload, args.out)


def _cmd_explain(args) -> None:
    tensor, _, _ = _load_tensor(args)
    session = SessionState(
        dataset_id="cli",
        selection=_selection_from(args, tensor),
        analysis=_params_from(args),
    )
    result = run_analysis(tensor, "cli", session, StageCache())
    payload = {"contributions": result.contributions.to_payload()}
    if args.metric is not None:
        from .pipeline import cluster_series_payload

        payload["series"] = cluster_series_payload(
            tensor, result.embedding.labels, args.cluster, args.metric, smooth_window=args.smooth
        )
    _emit_json(payload, args.out)


def _parse_baseline_overrides(entries) -> dict[str, BaselineSpec]:
    overrides = {}
    for entry in entries or []:
        try:
            metric, window = entry.split("=", 1)
            lo, hi = window.split(":", 1)
            t_start, t_end = float(lo), float(hi)
        except ValueError:
            raise PreconditionError(f"baseline override must look like metric=start:end, got {entry!r}")
        if t_start > t_end:
            raise PreconditionError(f"baseline override window is inverted: {entry!r}")
        overrides[metric] = BaselineSpec(
            metric=metric, t_start=t_start, t_end=t_end, source="user"
        )
    return overrides


def _cmd_zscores(args) -> None:
    tensor, _, _ = _load_tensor(args)
    if args.nodes:
        rows = [tensor.node_index(v) if not v.isdigit() else int(v) for v in args.nodes]
    else:
        rows = list(range(len(tensor.node_ids)))
    session = SessionState(
        dataset_id="cli",
        analysis=AnalysisParams(impute_policy=args.impute),
        band=BandParams(
            levels=args.levels,
            rho=args.rho,
            min_bin_snapshots=args.min_bin_snapshots,
            f_lo=args.f_lo,
            f_hi=args.f_hi,
            power_quantile=args.quantile,
        ),
        baseline_overrides=_parse_baseline_overrides(args.baseline),
    )
    result = run_zscores(
        tensor, "cli", session, StageCache(), nodes=rows, metrics=args.metrics or None
    )
    _emit_json(result.to_payload(), args.out)


def _run_eval_seed(base_payload: dict, seed: int, args) -> dict:
    payload = dict(base_payload)
    payload["seed"] = seed
    spec = SynthSpec.from_payload(payload)
    started = time.perf_counter()
    tensor, truth = synth_generate(spec)
    cache = StageCache()
    session = SessionState(
        dataset_id=f"eval-{seed}",
        analysis=AnalysisParams(k=args.k if args.k else spec.groups, seed=seed),
    )
    result = run_analysis(tensor, session.dataset_id, session, cache)
    ari = adjusted_rand_index(truth, result.embedding.labels)
    record = {
        "seed": seed,
        "ari": ari,
        "clusters": int(len(np.unique(result.embedding.labels))),
    }

    bursts = [a for a in spec.anomalies if a.get("kind") == "frequency_burst"]
    if bursts:
        burst = bursts[0]
        metric = tensor.metric_names[int(burst["metric"])]
        # Bracket the injected frequency the way an analyst would brush a
        # band; outside it the group templates drown single-node energy.
        hz = float(burst.get("freq", 0.3)) / tensor.sample_interval
        nyquist = 1.0 / (2.0 * tensor.sample_interval)
        session.band = BandParams(
            f_lo=max(0.0, 0.75 * hz), f_hi=min(nyquist, 1.25 * hz), power_quantile=0.0
        )
        zres = run_zscores(
            tensor,
            session.dataset_id,
            session,
            cache,
            nodes=list(range(len(tensor.node_ids))),
            metrics=[metric],
        )
        row = np.abs(np.asarray(zres.matrix.z[0]))
        record["burst_node"] = int(burst["node"])
        record["top_z_node"] = int(np.argmax(row))
        record["burst_top1"] = bool(record["top_z_node"] == record["burst_node"])

    if args.quality:
        report = quality_report(result.features, result.embedding, k=args.quality_k)
        record["quality"] = report.to_payload()
    record["elapsed_ms"] = (time.perf_counter() - started) * 1e3
    return record


def _cmd_eval(args) -> None:
    with open(args.spec) as handle:
        base_payload = json.load(handle)
    seeds = args.seeds or [int(base_payload.get("seed", 42))]
    records = [_run_eval_seed(base_payload, seed, args) for seed in seeds]
    payload = {
        "spec": args.spec,
        "seeds": records,
        "ari_min": min(r["ari"] for r in records),
        "ari_mean": float(np.mean([r["ari"] for r in records])),
    }
    if records and all("burst_top1" in r for r in records):
        payload["burst_top1_hits"] = sum(1 for r in records if r["burst_top1"])
    _emit_json(payload, args.out)


def _cmd_bench(args) -> None:
    rows = bench(
        n_values=args.n,
        n_metrics=args.m,
        n_timestamps=args.t,
        groups=args.groups,
        k=args.k,
        repetitions=args.repetitions,
        seed=args.seed,
    )
    _emit(bench_rows_to_csv(rows), args.out)


def _cmd_serve(args) -> None:
    import uvicorn

    from .server import create_app

    app = create_app(data_dir=args.data_dir, cache_bytes=args.cache_bytes)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fleetscope", description="fleet telemetry clustering and anomaly scoring"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse CSVs and report the assembled tensor")
    p.add_argument("--csv", nargs="+", required=True)
    p.add_argument("--layout")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("analyze", help="cluster the fleet and rank metric contributions")
    _add_input_args(p)
    _add_analysis_args(p)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("explain", help="metric contributions plus cluster-average series")
    _add_input_args(p)
    _add_analysis_args(p)
    p.add_argument("--cluster", type=int, default=0)
    p.add_argument("--metric")
    p.add_argument("--smooth", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_explain)

    p = sub.add_parser("zscores", help="anomaly z-scores against per-metric baselines")
    _add_input_args(p)
    p.add_argument("--impute", default="forward-then-backward-fill")
    p.add_argument("--metrics", nargs="*")
    p.add_argument("--nodes", nargs="*", help="node ids (or indices) to score")
    p.add_argument("--f-lo", type=float, default=0.0)
    p.add_argument("--f-hi", type=float, default=None)
    p.add_argument("--quantile", type=float, default=0.5)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--min-bin-snapshots", type=int, default=16)
    p.add_argument("--baseline", action="append", help="override, metric=start:end")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_zscores)

    p = sub.add_parser("eval", help="generate fixtures and score pipeline recovery")
    p.add_argument("--spec", required=True, help="synthetic fixture spec JSON file")
    p.add_argument("--seeds", type=int, nargs="*")
    p.add_argument("--k", type=int)
    p.add_argument("--quality", action="store_true", help="include embedding quality metrics")
    p.add_argument("--quality-k", type=int, default=15)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("bench", help="cold/warm per-stage timing sweep (CSV)")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--m", type=int, default=46)
    p.add_argument("--t", type=int, default=1000)
    p.add_argument("--groups", type=int, default=4)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--repetitions", type=int, default=3)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("serve", help="start the HTTP JSON service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--data-dir")
    p.add_argument("--cache-bytes", type=int, default=2 * 2**30)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except FleetscopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
