"""Time-stepping search loop, Monte-Carlo harness, and evaluation metrics.

Each step runs control -> motion -> coverage stamp -> occurrence update ->
stochastic per-target detection, in that fixed order, so the detection draw
and the coverage accumulation use the same sensing sample. Wall-clock is
measured around the control computation only.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .controllers import make_controller
from .grid import ScalarField
from .motion import step_agent
from .scenarios import Scenario, sample_targets
from .sensing import (
    CoverageField,
    OccurrenceField,
    stamp_coverage,
    total_presence,
    update_occurrence,
)

# Ensemble initial poses stay this far from the walls (capped on small domains).
POSE_MARGIN_M = 50.0


@dataclass
class RunMetrics:
    """Per-step series of one simulation run (row 0 is the initial state)."""

    times: np.ndarray
    E_series: np.ndarray
    D_series: np.ndarray
    detections: list[tuple[int, float]]
    step_wallclock: np.ndarray
    trajectories: np.ndarray | None
    targets: np.ndarray
    detected_time: np.ndarray

    @property
    def final_E(self) -> float:
        return float(self.E_series[-1])

    @property
    def final_D(self) -> float:
        return float(self.D_series[-1])


@dataclass
class EnsembleResult:
    """Envelope statistics of repeated runs on one scenario."""

    times: np.ndarray
    E_mean: np.ndarray
    E_min: np.ndarray
    E_max: np.ndarray
    t90: float
    per_run: list[RunMetrics]


def run_simulation(s: Scenario, rng=None, record_trajectories: bool = True,
                   max_steps: int | None = None,
                   early_stop_E: float | None = None,
                   on_step=None) -> RunMetrics:
    """Simulate one run; deterministic for a given scenario and rng state."""
    if rng is None:
        rng = np.random.default_rng(s.seed)
    grid = s.grid
    agents = list(s.fleet)
    controller = make_controller(s)
    coverage = CoverageField.zeros(grid)
    occurrence = OccurrenceField.from_prior(s.prior)
    targets = sample_targets(s.prior, s.n_targets, rng)
    detected_time = np.full(s.n_targets, math.nan)
    detections: list[tuple[int, float]] = []

    n_steps = s.n_steps if max_steps is None else min(s.n_steps, max_steps)
    times = [0.0]
    e_series = [total_presence(occurrence)]
    d_series = [0.0]
    walls = [0.0]
    traj = [np.array([[a.z[0], a.z[1], a.theta] for a in agents])] \
        if record_trajectories else None

    for k in range(n_steps):
        t_next = (k + 1) * s.dt

        tic = time.perf_counter()
        dirs = controller.directions(agents, occurrence, coverage, k)
        wall = time.perf_counter() - tic

        agents = [step_agent(a, d, s.dt, grid) for a, d in zip(agents, dirs)]
        stamp_coverage(coverage, agents, s.dt)
        occurrence = update_occurrence(occurrence, coverage)

        undet = np.flatnonzero(np.isnan(detected_time))
        if undet.size and agents:
            exposure = _target_exposure(targets[undet], agents, s.dt)
            hits = rng.random(undet.size) < -np.expm1(-exposure)
            for j in undet[hits]:
                detected_time[j] = t_next
                detections.append((int(j), t_next))

        times.append(t_next)
        e_series.append(total_presence(occurrence))
        d_series.append(len(detections) / s.n_targets if s.n_targets else 0.0)
        walls.append(wall)
        if traj is not None:
            traj.append(np.array([[a.z[0], a.z[1], a.theta] for a in agents]))
        if on_step is not None:
            on_step(k + 1, agents, occurrence, coverage)
        if early_stop_E is not None and e_series[-1] <= early_stop_E:
            break

    return RunMetrics(
        times=np.array(times),
        E_series=np.array(e_series),
        D_series=np.array(d_series),
        detections=detections,
        step_wallclock=np.array(walls),
        trajectories=np.stack(traj) if traj is not None else None,
        targets=targets,
        detected_time=detected_time)


def _target_exposure(points: np.ndarray, agents, dt: float) -> np.ndarray:
    """Summed gamma_i * dt at exact target positions, for this step's poses."""
    total = np.zeros(len(points))
    for a in agents:
        d = points - a.z
        r = a.sensor.support_radius
        near = (d * d).sum(axis=1) <= r * r
        if not near.any():
            continue
        c, s = math.cos(a.theta), math.sin(a.theta)
        wx, wy = d[near, 0], d[near, 1]
        total[near] += a.sensor.evaluate(c * wx + s * wy, -s * wx + c * wy) * dt
    return total


def randomize_poses(s: Scenario, rng) -> Scenario:
    """Uniform interior positions and headings for every agent."""
    margin = min(POSE_MARGIN_M, 0.25 * min(s.grid.width_m, s.grid.height_m))
    fleet = []
    for a in s.fleet:
        x = rng.uniform(margin, s.grid.width_m - margin)
        y = rng.uniform(margin, s.grid.height_m - margin)
        theta = rng.uniform(0.0, 2.0 * math.pi)
        fleet.append(replace(a, z=np.array([x, y]), theta=theta))
    return replace(s, fleet=fleet)


def _ensemble_worker(payload):
    s, seed_seq, randomize, record_traj, early_stop = payload
    rng = np.random.default_rng(seed_seq)
    run_scenario = randomize_poses(s, rng) if randomize else s
    return run_simulation(run_scenario, rng,
                          record_trajectories=record_traj,
                          early_stop_E=early_stop)


def run_ensemble(s: Scenario, n_runs: int, base_seed: int | None = None,
                 workers: int = 1, randomize: bool = True,
                 record_trajectories: bool = True,
                 early_stop_E: float | None = None) -> EnsembleResult:
    """Independent runs with derived seeds and randomized initial poses."""
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    if base_seed is None:
        base_seed = s.seed
    children = np.random.SeedSequence(base_seed).spawn(n_runs)
    payloads = [(s, child, randomize, record_trajectories, early_stop_E)
                for child in children]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_ensemble_worker, payloads))
    else:
        runs = [_ensemble_worker(p) for p in payloads]
    return aggregate_ensemble(runs)


def aggregate_ensemble(runs: list[RunMetrics]) -> EnsembleResult:
    """Envelope and mean E; early-stopped runs extend with their final value."""
    length = max(len(r.times) for r in runs)
    longest = max(runs, key=lambda r: len(r.times))
    e = np.vstack([_pad(r.E_series, length) for r in runs])
    e_mean = e.mean(axis=0)
    times = longest.times
    return EnsembleResult(
        times=times,
        E_mean=e_mean,
        E_min=e.min(axis=0),
        E_max=e.max(axis=0),
        t90=t90(e_mean, times),
        per_run=runs)


def _pad(series: np.ndarray, length: int) -> np.ndarray:
    if len(series) >= length:
        return series
    return np.concatenate([series, np.full(length - len(series), series[-1])])


def t90(e_mean, times, threshold: float = 0.1) -> float:
    """First crossing of the threshold by linear interpolation; nan if never."""
    e = np.asarray(e_mean, dtype=float)
    t = np.asarray(times, dtype=float)
    below = np.flatnonzero(e <= threshold)
    if below.size == 0:
        return math.nan
    i = int(below[0])
    if i == 0:
        return float(t[0])
    e0, e1 = e[i - 1], e[i]
    if e0 == e1:
        return float(t[i])
    frac = (e0 - threshold) / (e0 - e1)
    return float(t[i - 1] + frac * (t[i] - t[i - 1]))


def benchmark_step(s: Scenario, n_steps: int = 100) -> float:
    """Mean control-computation time (s) over the first ``n_steps`` steps.

    Only direction determination is timed; motion, field updates, metrics
    and any output are excluded.
    """
    metrics = run_simulation(s, record_trajectories=False, max_steps=n_steps)
    return float(metrics.step_wallclock[1:].mean())


def scalability_study(base: Scenario, ns, n_runs: int = 20,
                      base_seed: int | None = None, workers: int = 1,
                      randomize: bool = True,
                      early_stop_E: float | None = None) -> list[dict]:
    """Fleet-size sweep: rows of N, t90, cumulative agent-time and efficiency.

    Agent 1 is replicated N times; efficiency eta(N) compares cumulative
    agent-time against the single-agent row, so it is defined only when the
    sweep includes N = 1.
    """
    from .scenarios import replicate_fleet

    if base_seed is None:
        base_seed = base.seed
    rows = []
    for n in ns:
        ens = run_ensemble(replicate_fleet(base, n), n_runs,
                           base_seed=base_seed + 7919 * n, workers=workers,
                           randomize=randomize, early_stop_E=early_stop_E,
                           record_trajectories=False)
        t = ens.t90
        rows.append({"N": int(n), "t90": t,
                     "T90": t * n,
                     "times": ens.times.tolist(),
                     "E_mean": ens.E_mean.tolist()})
    t90_single = next((r["T90"] for r in rows if r["N"] == 1), math.nan)
    for r in rows:
        r["eta"] = t90_single / r["T90"] if not math.isnan(t90_single) else math.nan
    return rows
