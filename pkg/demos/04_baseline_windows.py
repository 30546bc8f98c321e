"""How quiet reference windows are discovered, widened, or given up on."""

import numpy as np

from fleetscope.dynamics import auto_baseline
from fleetscope.tensor import MonitoringTensor


def tensor_from(series: np.ndarray, nulls: np.ndarray | None = None) -> MonitoringTensor:
    n, t = series.shape
    return MonitoringTensor(
        node_ids=[f"n{i:02d}" for i in range(n)],
        metric_names=["load"],
        timestamps=60.0 * np.arange(t),
        values=series[:, None, :],
        null_mask=np.zeros((n, 1, t), dtype=bool) if nulls is None else nulls[:, None, :],
        sample_interval=60.0,
    )


def show(label, tensor):
    spec = auto_baseline(tensor, "load")
    print(f"{label:<34} [{spec.t_start:7.0f}, {spec.t_end:7.0f}]  source={spec.source}")


# --- 1. Flat telemetry: the whole range is a valid reference --------------

flat = np.full((4, 120), 3.2)
show("constant readings", tensor_from(flat))

# --- 2. A maintenance spike splits the range; the longer side wins --------

spiked = flat.copy()
spiked[1, 80] = 250.0
show("single spike at t=80", tensor_from(spiked))

# --- 3. Rowdy data: the quartile band fails, Tukey fences catch it --------
# A rotating duty cycle: readings cycle through {0, 1, 2, 3}, so every
# timestamp has one node at each extreme. The quartile band [0.75, 2.25]
# never holds the whole fleet, but the fences [-1.5, 4.5] always do.

rowdy = ((np.arange(120)[None, :] + np.arange(4)[:, None]) % 4).astype(float)
show("rotating duty cycle", tensor_from(rowdy))

# --- 4. Gaps never disqualify a window ------------------------------------

gappy = flat.copy()
nulls = np.zeros_like(gappy, dtype=bool)
nulls[2, 30:50] = True  # node 2 went dark for a while
show("20-sample outage on one node", tensor_from(gappy, nulls))
