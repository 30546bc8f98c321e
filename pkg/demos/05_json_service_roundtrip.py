"""Drive the HTTP JSON surface end to end without leaving the process."""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from fleetscope.quality.synth import SynthSpec, synth_generate
from fleetscope.server import create_app
from fleetscope.tensor import export_csv

# --- 1. Boot the service and upload a fleet as CSV ------------------------

client = TestClient(create_app())
print("health:", client.get("/health").json())

tensor, _ = synth_generate(SynthSpec(n_nodes=40, n_metrics=5, n_timestamps=200,
                                     groups=3, noise=0.3, seed=2))
export_csv(tensor, "/tmp/demo_fleet.csv")
upload = client.post("/datasets", json={"csv": Path("/tmp/demo_fleet.csv").read_text()})
dataset = upload.json()["dataset"]
print("uploaded dataset", dataset[:12], "...")

# --- 2. Cluster it and pull the pieces a UI would render ------------------

analysis = client.post("/sessions/s1/analysis",
                       json={"dataset": dataset, "params": {"k": 3}}).json()
print("clusters:", sorted(set(analysis["embedding"]["labels"])))
print("top ranked metric:", analysis["contributions"]["ranking"][0])

series = client.get("/sessions/s1/series", params={"cluster": 0, "metric": "m01"}).json()
print("cluster-0 average series has", len(series["v"]), "points")

# --- 3. Adjust a baseline and rescore -------------------------------------

put = client.put("/sessions/s1/baseline",
                 json={"metric": "m01", "t_start": 0.0, "t_end": 900.0})
print("baseline override source:", put.json()["source"])

scores = client.post("/sessions/s1/zscores",
                     json={"metrics": ["m01"], "nodes": analysis["nodes"][:5]}).json()
row = scores["zscores"]["z"][0]
print("z for five nodes:", json.dumps([round(v, 2) for v in row]))
print("baseline used:", scores["baselines"]["m01"]["source"])
