/**
 * Demo entry point: mounts the dashboard against a running service and
 * loads a small synthetic fleet so every view has something to show.
 *
 * Serve this directory statically, start the API with
 * `python3 -m fleetscope.cli serve`, then open
 * index.html?api=http://127.0.0.1:8000
 */

import { ApiClient } from "./api.js";
import { Dashboard } from "./app.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("api") ?? "http://127.0.0.1:8000";

const container = document.getElementById("app") ?? document.body;
const dashboard = new Dashboard(container as HTMLElement, new ApiClient(base));

void dashboard.loadDataset({
  synth: {
    n_nodes: 60,
    n_metrics: 8,
    n_timestamps: 400,
    groups: 3,
    noise: 0.5,
    seed: 7,
    dt: 15.0,
    anomalies: [
      {
        kind: "frequency_burst",
        node: 5,
        metric: 2,
        t_start: 120,
        t_end: 280,
        freq: 0.3,
        amplitude: 4.0,
      },
    ],
  },
});

declare global {
  interface Window {
    fleetscope: { dashboard: Dashboard };
  }
}
window.fleetscope = { dashboard };
