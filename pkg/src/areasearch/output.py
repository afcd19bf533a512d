"""File emission: per-run CSVs, summaries, snapshots and the output manifest.

All numbers are written with shortest round-trip formatting, so identical
metrics produce byte-identical files. Timing columns are zeroed unless timing
capture is requested, keeping default outputs reproducible run-to-run.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .engine import EnsembleResult, RunMetrics
from .grid import save_field


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(float(x))


def write_run_csv(path: Path, m: RunMetrics, timing: bool = False) -> None:
    with open(path, "w") as fh:
        fh.write("t,E,D,step_ms\n")
        for i in range(len(m.times)):
            ms = m.step_wallclock[i] * 1000.0 if timing else 0.0
            fh.write(f"{_fmt(m.times[i])},{_fmt(m.E_series[i])},"
                     f"{_fmt(m.D_series[i])},{_fmt(ms)}\n")


def write_traj_csv(path: Path, m: RunMetrics, agent: int) -> None:
    with open(path, "w") as fh:
        fh.write("t,x,y,theta\n")
        for i in range(len(m.times)):
            x, y, th = m.trajectories[i, agent]
            fh.write(f"{_fmt(m.times[i])},{_fmt(x)},{_fmt(y)},{_fmt(th)}\n")


def write_targets_csv(path: Path, m: RunMetrics) -> None:
    with open(path, "w") as fh:
        fh.write("x,y,t_detect\n")
        for i in range(len(m.targets)):
            fh.write(f"{_fmt(m.targets[i, 0])},{_fmt(m.targets[i, 1])},"
                     f"{_fmt(m.detected_time[i])}\n")


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def write_run_outputs(outdir: Path, k: int, m: RunMetrics,
                      timing: bool = False) -> dict:
    """Emit one run's file set; returns its manifest entry."""
    metrics_name = f"run_{k}.csv"
    write_run_csv(outdir / metrics_name, m, timing=timing)
    entry = {"metrics": metrics_name}
    targets_name = f"targets_{k}.csv"
    write_targets_csv(outdir / targets_name, m)
    entry["targets"] = targets_name
    if m.trajectories is not None:
        names = []
        for a in range(m.trajectories.shape[1]):
            name = f"traj_{k}_{a}.csv"
            write_traj_csv(outdir / name, m, a)
            names.append(name)
        entry["trajectories"] = names
    return entry


def ensemble_summary(ens: EnsembleResult) -> dict:
    return {
        "n_runs": len(ens.per_run),
        "t90": ens.t90,
        "times": ens.times.tolist(),
        "E_mean": ens.E_mean.tolist(),
        "E_min": ens.E_min.tolist(),
        "E_max": ens.E_max.tolist(),
    }


def snapshot_writer(outdir: Path, every: int, run_idx: int, manifest_list: list):
    """on_step callback dumping the undetected-target field every N steps."""
    def hook(step, agents, occurrence, coverage):
        if every > 0 and step % every == 0:
            name = f"field_m_run{run_idx}_step{step:06d}.txt"
            save_field(occurrence.current, outdir / name)
            manifest_list.append(name)
    return hook
