"""Pipeline chaining, HTTP endpoints and the command line, end to end."""

from __future__ import annotations

import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from fleetscope.cache import StageCache
from fleetscope.cli import main
from fleetscope.errors import PreconditionError
from fleetscope.pipeline import (
    AnalysisParams,
    BandParams,
    SessionState,
    run_analysis,
    run_zscores,
)
from fleetscope.quality import SynthSpec, synth_generate
from fleetscope.server import create_app
from fleetscope.tensor import TensorSelection, export_csv

STAGES = ("ingest", "dr1", "dr2", "cluster", "ccpca")


@pytest.fixture(scope="module")
def fixture_tensor():
    spec = SynthSpec(n_nodes=48, n_metrics=6, n_timestamps=160, groups=4, noise=0.3, seed=5)
    tensor, truth = synth_generate(spec)
    return tensor, truth


def fresh_session(k=4):
    return SessionState(dataset_id="ds", analysis=AnalysisParams(k=k, seed=3))


class TestRunAnalysis:
    def test_cold_run_misses_then_warm_run_hits_everywhere(self, fixture_tensor):
        tensor, _ = fixture_tensor
        cache = StageCache()
        cold = run_analysis(tensor, "ds", fresh_session(), cache)
        assert [cold.tags[s] for s in STAGES] == ["miss"] * 5

        started = time.perf_counter()
        warm = run_analysis(tensor, "ds", fresh_session(), cache)
        warm_s = time.perf_counter() - started
        assert [warm.tags[s] for s in STAGES] == ["hit"] * 5
        assert np.array_equal(warm.embedding.labels, cold.embedding.labels)
        assert warm_s < 1.0

    def test_changing_k_reuses_both_reductions(self, fixture_tensor):
        tensor, _ = fixture_tensor
        cache = StageCache()
        run_analysis(tensor, "ds", fresh_session(k=4), cache)
        res = run_analysis(tensor, "ds", fresh_session(k=5), cache)
        assert res.tags["ingest"] == "hit"
        assert res.tags["dr1"] == "hit"
        assert res.tags["dr2"] == "hit"
        assert res.tags["cluster"] == "miss"
        assert res.tags["ccpca"] == "miss"
        assert len(np.unique(res.embedding.labels)) == 5

    def test_changing_selection_recomputes_from_dr1(self, fixture_tensor):
        tensor, _ = fixture_tensor
        cache = StageCache()
        run_analysis(tensor, "ds", fresh_session(), cache)
        narrowed = fresh_session()
        narrowed.selection = TensorSelection(time_window=(0.0, float(tensor.timestamps[80])))
        res = run_analysis(tensor, "ds", narrowed, cache)
        assert res.tags["ingest"] == "hit"
        assert res.tags["dr1"] == "miss"
        assert res.tags["dr2"] == "miss"

    def test_defaults_recover_the_four_groups(self, fixture_tensor):
        tensor, truth = fixture_tensor
        res = run_analysis(tensor, "ds", fresh_session(), StageCache())
        assert len(np.unique(res.embedding.labels)) == 4
        # Same partition as the ground truth, regardless of label names.
        from fleetscope.quality import adjusted_rand_index

        assert adjusted_rand_index(res.embedding.labels, truth) == 1.0

    def test_payload_is_json_serializable_with_provenance(self, fixture_tensor):
        tensor, _ = fixture_tensor
        res = run_analysis(tensor, "ds", fresh_session(), StageCache())
        payload = json.loads(json.dumps(res.to_payload()))
        assert set(payload["provenance"]["digests"]) == set(STAGES)
        assert set(payload["provenance"]["cache"].values()) == {"miss"}
        assert len(payload["embedding"]["coords"]) == len(tensor.node_ids)


class TestRunZscores:
    def test_needs_a_node_selection(self, fixture_tensor):
        tensor, _ = fixture_tensor
        with pytest.raises(PreconditionError):
            run_zscores(tensor, "ds", fresh_session(), StageCache(), nodes=[])

    def test_baseline_override_changes_z_but_not_embedding(self, fixture_tensor):
        tensor, _ = fixture_tensor
        cache = StageCache()
        session = fresh_session()
        before = run_analysis(tensor, "ds", session, cache)
        nodes = list(range(len(tensor.node_ids)))
        z_auto = run_zscores(tensor, "ds", session, cache, nodes=nodes, metrics=["m01"])
        assert z_auto.baselines["m01"].source in ("auto", "auto-widened")

        session.baseline_overrides["m01"] = z_auto.baselines["m01"].__class__(
            metric="m01",
            t_start=float(tensor.timestamps[10]),
            t_end=float(tensor.timestamps[30]),
            source="user",
        )
        z_user = run_zscores(tensor, "ds", session, cache, nodes=nodes, metrics=["m01"])
        assert z_user.baselines["m01"].source == "user"
        assert not np.allclose(z_user.matrix.z, z_auto.matrix.z)

        after = run_analysis(tensor, "ds", session, cache)
        assert np.array_equal(after.embedding.coords, before.embedding.coords)
        assert all(tag == "hit" for tag in after.tags.values())

    def test_self_baseline_zeroes_the_row_mean(self, fixture_tensor):
        tensor, _ = fixture_tensor
        session = fresh_session()
        # The whole series as its own baseline: the population mean shift is 0.
        session.baseline_overrides["m02"] = __import__(
            "fleetscope.dynamics", fromlist=["BaselineSpec"]
        ).BaselineSpec(
            metric="m02",
            t_start=float(tensor.timestamps[0]),
            t_end=float(tensor.timestamps[-1]),
            source="user",
        )
        res = run_zscores(
            tensor, "ds", session, StageCache(), nodes=list(range(48)), metrics=["m02"]
        )
        assert abs(float(res.matrix.z[0].mean())) < 1e-9

    def test_zscore_rerun_hits_cache(self, fixture_tensor):
        tensor, _ = fixture_tensor
        cache = StageCache()
        session = fresh_session()
        nodes = list(range(10))
        cold = run_zscores(tensor, "ds", session, cache, nodes=nodes, metrics=["m00"])
        assert cold.tags["zscore"] == "miss"
        warm = run_zscores(tensor, "ds", session, cache, nodes=nodes, metrics=["m00"])
        assert warm.tags["zscore"] == "hit"
        assert np.array_equal(cold.matrix.z, warm.matrix.z)


@pytest.fixture(scope="module")
def client(fixture_tensor):
    app = create_app()
    with TestClient(app) as c:
        yield c


@pytest.fixture(scope="module")
def dataset_id(client):
    synth = SynthSpec(
        n_nodes=32, n_metrics=5, n_timestamps=128, groups=2, noise=0.3, seed=9
    ).to_payload()
    r = client.post("/datasets", json={"synth": synth})
    assert r.status_code == 201
    return r.json()["dataset"]


class TestServer:
    def test_health(self, client):
        assert client.get("/health").json() == {"status": "ok"}

    def test_csv_upload_round_trip(self, client, fixture_tensor, tmp_path_factory):
        tensor, _ = fixture_tensor
        path = tmp_path_factory.mktemp("csv") / "fleet.csv"
        export_csv(tensor, str(path))
        r = client.post("/datasets", json={"csv": path.read_text()})
        assert r.status_code == 201
        info = client.get(f"/datasets/{r.json()['dataset']}").json()
        assert info["nodes"] == len(tensor.node_ids)
        assert info["metrics"] == len(tensor.metric_names)

    def test_dataset_body_must_name_a_source(self, client):
        r = client.post("/datasets", json={"foo": 1})
        assert r.status_code == 422
        assert "csv" in r.json()["detail"]

    def test_unknown_dataset_and_session_are_404(self, client):
        assert client.get("/datasets/nope").status_code == 404
        assert client.get("/sessions/nope/contributions").status_code == 404

    def test_analysis_then_views(self, client, dataset_id):
        r = client.post(
            "/sessions/s1/analysis",
            json={"dataset": dataset_id, "params": {"k": 2, "seed": 3}},
        )
        assert r.status_code == 200
        body = r.json()
        assert sorted(set(body["embedding"]["labels"])) == [0, 1]
        assert body["dataset"] == dataset_id

        contributions = client.get("/sessions/s1/contributions").json()
        assert len(contributions["clusters"]) == 2
        assert set(contributions["ranking"]) == set(contributions["metrics"])

        series = client.get(
            "/sessions/s1/series", params={"metric": "m00", "cluster": 0}
        ).json()
        assert len(series["t"]) == 128

        raw = client.get(
            "/sessions/s1/raw", params={"metric": "m00", "nodes": body["nodes"][0]}
        ).json()
        assert list(raw["series"]) == [body["nodes"][0]]

    def test_second_analysis_is_served_from_cache(self, client, dataset_id):
        payload = {"dataset": dataset_id, "params": {"k": 2, "seed": 3}}
        r = client.post("/sessions/s2/analysis", json=payload)
        tags = r.json()["provenance"]["cache"]
        assert all(tag == "hit" for tag in tags.values())

    def test_baseline_round_trip_and_zscores(self, client, dataset_id):
        client.post(
            "/sessions/s3/analysis",
            json={"dataset": dataset_id, "params": {"k": 2, "seed": 3}},
        )
        auto = client.get("/sessions/s3/baseline", params={"metric": "m01"}).json()
        assert auto["source"] in ("auto", "auto-widened", "degenerate")

        put = client.put(
            "/sessions/s3/baseline",
            json={"metric": "m01", "t_start": 150.0, "t_end": 600.0},
        )
        assert put.status_code == 200
        got = client.get("/sessions/s3/baseline", params={"metric": "m01"}).json()
        assert got == {"metric": "m01", "t_start": 150.0, "t_end": 600.0, "source": "user"}

        z = client.post(
            "/sessions/s3/zscores", json={"nodes": [0, 1, 2], "metrics": ["m01"]}
        ).json()
        assert z["baselines"]["m01"]["source"] == "user"
        assert len(z["zscores"]["z"]) == 1
        assert len(z["zscores"]["z"][0]) == 3

    def test_baseline_survives_reanalysis_of_same_dataset(self, client, dataset_id):
        client.post(
            "/sessions/s3/analysis",
            json={"dataset": dataset_id, "params": {"k": 3, "seed": 3}},
        )
        got = client.get("/sessions/s3/baseline", params={"metric": "m01"}).json()
        assert got["source"] == "user"

    def test_zscores_validation_maps_to_422(self, client, dataset_id):
        client.post("/sessions/s4/analysis", json={"dataset": dataset_id})
        r = client.post("/sessions/s4/zscores", json={"nodes": []})
        assert r.status_code == 422
        assert "node selection" in r.json()["detail"]

    def test_malformed_json_body_maps_to_422(self, client):
        r = client.post(
            "/datasets",
            content=b'{"synth": }',
            headers={"Content-Type": "application/json"},
        )
        assert r.status_code == 422
        assert "valid JSON" in r.json()["detail"]

    def test_baseline_put_rejects_bad_windows(self, client, dataset_id):
        client.post("/sessions/s5/analysis", json={"dataset": dataset_id})
        inverted = client.put(
            "/sessions/s5/baseline",
            json={"metric": "m01", "t_start": 600.0, "t_end": 150.0},
        )
        assert inverted.status_code == 422
        assert "t_start <= t_end" in inverted.json()["detail"]
        non_numeric = client.put(
            "/sessions/s5/baseline",
            json={"metric": "m01", "t_start": "abc", "t_end": 150.0},
        )
        assert non_numeric.status_code == 422

    def test_null_activity_window(self, client, dataset_id):
        rows = client.get(
            f"/datasets/{dataset_id}/null-activity", params={"from": 0, "to": 150}
        ).json()
        assert len(rows) == 11  # dt 15s: timestamps 0..150 inclusive
        assert all(r["nodes"] == [] for r in rows)  # no downtime injected

    def test_cache_stats_shape(self, client):
        stats = client.get("/cache/stats").json()
        assert {"entries", "bytes", "hits", "misses"} <= set(stats)


@pytest.fixture(scope="module")
def csv_path(fixture_tensor, tmp_path_factory):
    tensor, _ = fixture_tensor
    path = tmp_path_factory.mktemp("cli") / "fleet.csv"
    export_csv(tensor, str(path))
    return str(path)


@pytest.fixture(scope="module")
def synth_spec_path(tmp_path_factory):
    spec = SynthSpec(
        n_nodes=36,
        n_metrics=5,
        n_timestamps=128,
        groups=3,
        noise=0.3,
        seed=11,
        anomalies=[
            {
                "kind": "frequency_burst",
                "node": 7,
                "metric": 1,
                "t_start": 30,
                "t_end": 100,
                "freq": 0.3,
                "amplitude": 4.0,
            }
        ],
    )
    path = tmp_path_factory.mktemp("cli") / "spec.json"
    path.write_text(json.dumps(spec.to_payload()))
    return str(path)


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


class TestCli:
    def test_ingest_reports_dimensions(self, capsys, csv_path):
        code, out = run_cli(capsys, "ingest", "--csv", csv_path)
        assert code == 0
        payload = json.loads(out)
        assert (payload["nodes"], payload["metrics"], payload["timestamps"]) == (48, 6, 160)
        assert payload["duplicates"] == 0

    def test_analyze_from_csv(self, capsys, csv_path):
        code, out = run_cli(capsys, "analyze", "--csv", csv_path, "--k", "4")
        assert code == 0
        payload = json.loads(out)
        assert len(payload["embedding"]["labels"]) == 48
        assert len(set(payload["embedding"]["labels"])) == 4

    def test_analyze_rejects_both_inputs(self, capsys, csv_path, synth_spec_path):
        code, _ = run_cli(
            capsys, "analyze", "--csv", csv_path, "--synth", synth_spec_path
        )
        assert code == 1

    def test_zscores_with_override(self, capsys, csv_path):
        code, out = run_cli(
            capsys,
            "zscores",
            "--csv",
            csv_path,
            "--metrics",
            "m01",
            "--baseline",
            "m01=150:600",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["baselines"]["m01"]["source"] == "user"
        assert len(payload["zscores"]["z"][0]) == 48

    def test_eval_recovers_groups_and_burst(self, capsys, synth_spec_path):
        code, out = run_cli(
            capsys, "eval", "--spec", synth_spec_path, "--seeds", "0", "1"
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["ari_min"] == 1.0
        assert payload["burst_top1_hits"] == 2

    def test_bench_emits_csv(self, capsys, tmp_path):
        out_path = tmp_path / "bench.csv"
        code, _ = run_cli(
            capsys,
            "bench",
            "--n",
            "30",
            "--m",
            "5",
            "--t",
            "96",
            "--repetitions",
            "1",
            "--out",
            str(out_path),
        )
        assert code == 0
        lines = out_path.read_text().strip().splitlines()
        assert lines[0] == "stage,N,M,cold_ms,warm_ms"
        stages = [line.split(",")[0] for line in lines[1:]]
        for stage in ("ingest", "dr1", "dr2", "cluster", "ccpca", "recluster", "total"):
            assert stage in stages
        # Warm totals must be dramatically cheaper than cold.
        total = next(line for line in lines[1:] if line.startswith("total,"))
        _, _, _, cold_ms, warm_ms = total.split(",")
        assert float(warm_ms) < float(cold_ms)

    def test_missing_file_fails_cleanly(self, capsys):
        code, _ = run_cli(capsys, "analyze", "--csv", "/nonexistent.csv")
        assert code == 1

    def test_malformed_baseline_override_fails_cleanly(self, capsys, csv_path):
        for bad in ("m01=abc:def", "m01=600:150"):
            code = main(["zscores", "--csv", csv_path, "--baseline", bad])
            assert code == 1
        err = capsys.readouterr().err
        assert "metric=start:end" in err
        assert "inverted" in err
