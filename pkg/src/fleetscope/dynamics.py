"""Temporal dynamics: mode decomposition, baseline discovery, anomaly scores.

A snapshot matrix (nodes by time) is factored into spatial modes with
complex frequencies via dynamic mode decomposition. The multi-resolution
variant runs DMD on a binary tree of time bins, keeping each bin's slow
modes and recursing on the residual, so both long trends and short bursts
land in some bin at the right scale.

Anomaly scoring compares per-node spectral signatures of the observed data
against a baseline window tiled to the same length: nodes whose isolated
modes carry unusual energy get large z-scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .tensor import MonitoringTensor

SVD_CUTOFF = 1e-12
EIG_CUTOFF = 1e-12
ENERGY_TARGET = 0.999
MAX_RANK = 64
STD_FLOOR_SCALE = 1e-9


@dataclass
class ModeSet:
    """A bag of DMD modes: spatial shapes, continuous frequencies, powers."""

    modes: np.ndarray  # complex (n_space, r), unit columns
    omegas: np.ndarray  # complex (r,), continuous time: log(lambda)/dt
    eigenvalues: np.ndarray  # complex (r,), discrete propagator spectrum
    amplitudes: np.ndarray  # complex (r,)

    @property
    def rank(self) -> int:
        return self.modes.shape[1]

    @property
    def powers(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def frequencies(self) -> np.ndarray:
        """Oscillation rate in cycles per second, sign discarded."""
        return np.abs(self.omegas.imag) / (2.0 * np.pi)

    @staticmethod
    def empty(n_space: int) -> "ModeSet":
        return ModeSet(
            modes=np.zeros((n_space, 0), dtype=complex),
            omegas=np.zeros(0, dtype=complex),
            eigenvalues=np.zeros(0, dtype=complex),
            amplitudes=np.zeros(0, dtype=complex),
        )

    def take(self, mask: np.ndarray) -> "ModeSet":
        return ModeSet(
            modes=self.modes[:, mask],
            omegas=self.omegas[mask],
            eigenvalues=self.eigenvalues[mask],
            amplitudes=self.amplitudes[mask],
        )

    @staticmethod
    def concat(parts: list["ModeSet"], n_space: int) -> "ModeSet":
        parts = [p for p in parts if p.rank]
        if not parts:
            return ModeSet.empty(n_space)
        return ModeSet(
            modes=np.concatenate([p.modes for p in parts], axis=1),
            omegas=np.concatenate([p.omegas for p in parts]),
            eigenvalues=np.concatenate([p.eigenvalues for p in parts]),
            amplitudes=np.concatenate([p.amplitudes for p in parts]),
        )


def dmd(snapshots: np.ndarray, dt: float, rank: int | None = None) -> ModeSet:
    """Dynamic mode decomposition of a (space x time) snapshot matrix.

    Rank defaults to the smallest truncation keeping 99.9 percent of the
    squared singular-value energy, capped at 64. A numerically zero matrix
    yields an empty mode set.
    """
    m = np.asarray(snapshots, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] < 2:
        raise PreconditionError("dmd needs a 2-d matrix with at least two snapshots")
    if dt <= 0:
        raise PreconditionError("dt must be positive")
    x, y = m[:, :-1], m[:, 1:]

    u, s, vh = np.linalg.svd(x, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        return ModeSet.empty(m.shape[0])
    keep = s > SVD_CUTOFF * s[0]
    s = s[keep]
    if rank is None:
        energy = np.cumsum(s**2) / np.sum(s**2)
        r = int(np.searchsorted(energy, ENERGY_TARGET) + 1)
    else:
        r = rank
    r = min(r, s.size, MAX_RANK)
    if r == 0:
        return ModeSet.empty(m.shape[0])

    u = u[:, :r]
    s = s[:r]
    v = vh[:r].conj().T

    atilde = u.conj().T @ y @ v / s
    eigvals, w = np.linalg.eig(atilde)
    eigvals = eigvals.astype(complex)

    modes = (y @ v @ np.diag(1.0 / s) @ w).astype(complex)
    strong = np.abs(eigvals) > EIG_CUTOFF * np.abs(eigvals).max()
    eigvals, modes = eigvals[strong], modes[:, strong]
    norms = np.linalg.norm(modes, axis=0)
    ok = norms > 0
    eigvals, modes, norms = eigvals[ok], modes[:, ok], norms[ok]
    if eigvals.size == 0:
        return ModeSet.empty(m.shape[0])
    modes = modes / norms

    amplitudes = np.linalg.lstsq(modes, m[:, 0].astype(complex), rcond=None)[0]
    omegas = np.log(eigvals) / dt
    return ModeSet(modes=modes, omegas=omegas, eigenvalues=eigvals, amplitudes=amplitudes)


def reconstruct(modeset: ModeSet, n_snapshots: int) -> np.ndarray:
    """Real part of the mode expansion over snapshot indices 0..n-1."""
    if modeset.rank == 0:
        return np.zeros((modeset.modes.shape[0], n_snapshots))
    steps = np.arange(n_snapshots)
    dynamics = modeset.eigenvalues[:, None] ** steps[None, :] * modeset.amplitudes[:, None]
    return np.real(modeset.modes @ dynamics)


@dataclass
class ModeBin:
    level: int
    index: int
    start: int  # snapshot offsets into the full matrix
    stop: int
    slow: ModeSet
    fast: ModeSet
    is_leaf: bool


@dataclass
class ModeTree:
    bins: list[ModeBin]
    n_space: int
    dt: float

    def spectrum(self) -> ModeSet:
        """Slow modes from every bin, fast modes only from leaf bins.

        Inner bins' fast content reappears refined in their children, so
        counting it once at the leaves avoids double counting.
        """
        parts = [b.slow for b in self.bins]
        parts += [b.fast for b in self.bins if b.is_leaf]
        return ModeSet.concat(parts, self.n_space)


def mrdmd(
    snapshots: np.ndarray,
    dt: float,
    levels: int = 4,
    rho: float = 1.0,
    min_bin_snapshots: int = 16,
) -> ModeTree:
    """Multi-resolution DMD over a binary tree of time bins.

    A mode is slow for its bin when it oscillates at most rho cycles across
    the bin's span. Slow content is removed before the two halves recurse,
    while halving stops once a child would fall under min_bin_snapshots or
    the level cap is reached.
    """
    m = np.asarray(snapshots, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] < 2:
        raise PreconditionError("mrdmd needs a 2-d matrix with at least two snapshots")
    if levels < 1 or min_bin_snapshots < 2:
        raise PreconditionError("levels must be >= 1 and min_bin_snapshots >= 2")
    bins: list[ModeBin] = []

    def recurse(chunk: np.ndarray, level: int, index: int, start: int) -> None:
        t_bin = chunk.shape[1]
        modeset = dmd(chunk, dt)
        span_seconds = t_bin * dt
        slow_mask = modeset.frequencies <= rho / span_seconds
        slow = modeset.take(slow_mask)
        fast = modeset.take(~slow_mask)

        can_split = level + 1 < levels and t_bin // 2 >= min_bin_snapshots
        bins.append(
            ModeBin(
                level=level,
                index=index,
                start=start,
                stop=start + t_bin,
                slow=slow,
                fast=fast,
                is_leaf=not can_split,
            )
        )
        if not can_split:
            return
        residual = chunk - reconstruct(slow, t_bin)
        half = t_bin // 2
        recurse(residual[:, :half], level + 1, 2 * index, start)
        recurse(residual[:, half:], level + 1, 2 * index + 1, start + half)

    recurse(m, 0, 0, 0)
    return ModeTree(bins=bins, n_space=m.shape[0], dt=dt)


def isolate_modes(
    modeset: ModeSet,
    nyquist: float,
    f_lo: float = 0.0,
    f_hi: float | None = None,
    power_quantile: float = 0.5,
) -> ModeSet:
    """Band-pass modes by frequency, then gate on a power quantile.

    Keeps modes whose |frequency| lies in [f_lo, f_hi] and whose power is at
    least the power_quantile quantile among the band-passers.
    """
    if f_hi is None:
        f_hi = nyquist
    if not 0.0 <= power_quantile < 1.0:
        raise PreconditionError("power_quantile must be in [0, 1)")
    if f_lo < 0 or f_hi < f_lo:
        raise PreconditionError("need 0 <= f_lo <= f_hi")
    freq = modeset.frequencies
    band = (freq >= f_lo) & (freq <= f_hi)
    if not band.any():
        return modeset.take(band)
    threshold = np.quantile(modeset.powers[band], power_quantile)
    return modeset.take(band & (modeset.powers >= threshold))


# ---------------------------------------------------------------------------
# Baseline discovery and synthesis.


@dataclass
class BaselineSpec:
    """A reference window for one metric, tiled when scoring.

    source records how the window was found: "auto" (quartile band scan),
    "auto-widened" (scan against Tukey fences), "user" (explicit window),
    or "degenerate" (no quiet window exists; per-node medians stand in).
    """

    metric: str
    t_start: float
    t_end: float
    source: str = "auto"

    @property
    def degenerate(self) -> bool:
        return self.source == "degenerate"

    def to_payload(self) -> dict:
        return {
            "metric": self.metric,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "source": self.source,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "BaselineSpec":
        return cls(
            metric=payload["metric"],
            t_start=float(payload["t_start"]),
            t_end=float(payload["t_end"]),
            source=payload.get("source", "user"),
        )


def longest_quiet_run(in_band: np.ndarray) -> tuple[int, int] | None:
    """Bounds [start, stop) of the longest True run, earliest on ties."""
    best_start, best_len = 0, 0
    run_start = None
    for i, ok in enumerate(in_band):
        if ok and run_start is None:
            run_start = i
        elif not ok and run_start is not None:
            if i - run_start > best_len:
                best_start, best_len = run_start, i - run_start
            run_start = None
    if run_start is not None and len(in_band) - run_start > best_len:
        best_start, best_len = run_start, len(in_band) - run_start
    if best_len == 0:
        return None
    return best_start, best_start + best_len


def auto_baseline(
    tensor: MonitoringTensor,
    metric: str,
    node_subset: "list[int] | None" = None,
    window_hint: tuple[float, float] | None = None,
) -> BaselineSpec:
    """Find the longest window where every node reads inside the quartile band.

    Null readings never violate the band. If no timestamp qualifies, the band
    widens to the Tukey fences [Q1 - 1.5 IQR, Q3 + 1.5 IQR]; if that also
    fails the spec degrades to per-node medians.
    """
    j = tensor.metric_index(metric)
    if window_hint is not None:
        lo, hi = float(window_hint[0]), float(window_hint[1])
        if tensor.time_indices(lo, hi).size == 0:
            raise PreconditionError("baseline window does not intersect the tensor")
        return BaselineSpec(metric=metric, t_start=lo, t_end=hi, source="user")

    vals = tensor.values[:, j, :]
    nulls = tensor.null_mask[:, j, :]
    if node_subset is not None:
        vals = vals[np.asarray(node_subset, dtype=int)]
        nulls = nulls[np.asarray(node_subset, dtype=int)]
    observed = vals[~nulls]
    if observed.size < 4:
        raise PreconditionError("baseline discovery needs at least 4 observed readings")
    ts = tensor.timestamps

    q1, q3 = np.percentile(observed, [25.0, 75.0])
    for lo_b, hi_b in ((q1, q3), (q1 - 1.5 * (q3 - q1), q3 + 1.5 * (q3 - q1))):
        ok = nulls | ((vals >= lo_b) & (vals <= hi_b))
        run = longest_quiet_run(ok.all(axis=0))
        if run is not None:
            source = "auto" if (lo_b, hi_b) == (q1, q3) else "auto-widened"
            return BaselineSpec(
                metric=metric,
                t_start=float(ts[run[0]]),
                t_end=float(ts[run[1] - 1]),
                source=source,
            )
    return BaselineSpec(metric=metric, t_start=float(ts[0]), t_end=float(ts[-1]), source="degenerate")


def tile_window(window: np.ndarray, length: int) -> np.ndarray:
    """Repeat a (space x W) window left to right, truncating the last copy."""
    if window.ndim != 2 or window.shape[1] == 0:
        raise PreconditionError("window must be 2-d and non-empty")
    return window[:, np.arange(length) % window.shape[1]]


def baseline_matrix(
    tensor: MonitoringTensor,
    spec: BaselineSpec,
    nodes: "list[int] | None" = None,
) -> np.ndarray:
    """The (nodes x W) reference block a spec denotes, from dense readings."""
    j = tensor.metric_index(spec.metric)
    rows = np.arange(len(tensor.node_ids)) if nodes is None else np.asarray(nodes, dtype=int)
    if spec.degenerate:
        meds = np.median(tensor.values[rows, j, :], axis=1)
        return meds[:, None]
    idx = tensor.time_indices(spec.t_start, spec.t_end)
    if idx.size == 0:
        raise PreconditionError("baseline window does not intersect the tensor")
    return tensor.values[np.ix_(rows, [j], idx)][:, 0, :]


# ---------------------------------------------------------------------------
# Z-scores.


@dataclass
class ZScoreMatrix:
    metrics: list[str]
    nodes: list[str]
    z: np.ndarray  # (metrics, nodes)
    flags: dict[str, list[str]] = field(default_factory=dict)

    def to_payload(self) -> dict:
        return {
            "metrics": self.metrics,
            "nodes": self.nodes,
            "z": self.z.tolist(),
            "flags": self.flags,
        }


def spectral_signature(modeset: ModeSet) -> np.ndarray:
    """Per-space-point energy: sum of power-weighted mode magnitudes."""
    if modeset.rank == 0:
        return np.zeros(modeset.modes.shape[0])
    return np.abs(modeset.modes) @ modeset.powers


def zscores(
    tensor: MonitoringTensor,
    baselines: dict[str, BaselineSpec],
    metrics: list[str] | None = None,
    nodes: "list[int] | None" = None,
    f_lo: float = 0.0,
    f_hi: float | None = None,
    power_quantile: float = 0.5,
    levels: int = 4,
    rho: float = 1.0,
    min_bin_snapshots: int = 16,
) -> ZScoreMatrix:
    """Per-node anomaly z-scores against tiled baselines, one row per metric.

    Both the observed matrix and the tiled baseline are decomposed with
    multi-resolution DMD; modes are band-passed and power-gated, then each
    node's signature is normalized by the baseline population's mean and
    standard deviation. If the band isolates nothing on either side it is
    widened to [0, Nyquist] and the metric is flagged.
    """
    if tensor.null_mask.any():
        raise PreconditionError("zscores requires an imputed tensor")
    metrics = list(metrics) if metrics is not None else list(tensor.metric_names)
    missing = [m for m in metrics if m not in baselines]
    if missing:
        raise PreconditionError(f"no baseline for metrics {missing}")
    if nodes is None:
        node_rows = np.arange(len(tensor.node_ids))
    else:
        node_rows = np.asarray(list(nodes), dtype=int)
        if node_rows.size == 0:
            raise PreconditionError("zscores needs a non-empty node selection")

    dt = tensor.sample_interval
    nyquist = 1.0 / (2.0 * dt)
    t = len(tensor.timestamps)
    z = np.zeros((len(metrics), node_rows.size))
    flags: dict[str, list[str]] = {}

    for row, metric in enumerate(metrics):
        j = tensor.metric_index(metric)
        data = tensor.values[node_rows, j, :]
        base = tile_window(baseline_matrix(tensor, baselines[metric], list(node_rows)), t)

        spec_d = mrdmd(data, dt, levels=levels, rho=rho, min_bin_snapshots=min_bin_snapshots).spectrum()
        spec_b = mrdmd(base, dt, levels=levels, rho=rho, min_bin_snapshots=min_bin_snapshots).spectrum()

        iso_d = isolate_modes(spec_d, nyquist, f_lo, f_hi, power_quantile)
        iso_b = isolate_modes(spec_b, nyquist, f_lo, f_hi, power_quantile)
        metric_flags = []
        if iso_d.rank == 0 or iso_b.rank == 0:
            iso_d = isolate_modes(spec_d, nyquist, 0.0, nyquist, power_quantile)
            iso_b = isolate_modes(spec_b, nyquist, 0.0, nyquist, power_quantile)
            metric_flags.append("band_widened")
        if baselines[metric].degenerate:
            metric_flags.append("degenerate_baseline")

        sig_d = spectral_signature(iso_d)
        sig_b = spectral_signature(iso_b)
        mean_b = float(sig_b.mean())
        std_b = float(sig_b.std())  # ddof 0: self-comparison rows get exact unit spread
        floor = STD_FLOOR_SCALE * max(1.0, mean_b)
        z[row] = (sig_d - mean_b) / max(std_b, floor)
        if metric_flags:
            flags[metric] = metric_flags

    return ZScoreMatrix(
        metrics=metrics,
        nodes=[tensor.node_ids[i] for i in node_rows],
        z=z,
        flags=flags,
    )
