"""Readers for the simulator's emitted file formats.

This package never recomputes physics: everything here parses the documented
CSV/JSON/snapshot formats and validates basic shape expectations. Paths
inside a manifest resolve relative to the manifest's directory.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


class ReportDataError(Exception):
    """An input file is missing or violates its documented format."""


def load_manifest(path) -> tuple[dict, Path]:
    path = Path(path)
    if not path.exists():
        raise ReportDataError(f"manifest not found: {path}")
    with open(path) as fh:
        manifest = json.load(fh)
    if not isinstance(manifest, dict):
        raise ReportDataError(f"manifest must be a JSON object: {path}")
    return manifest, path.parent


def _load_csv(path, expected_header: str) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise ReportDataError(f"missing file: {path}")
    with open(path) as fh:
        header = fh.readline().strip()
        if header != expected_header:
            raise ReportDataError(
                f"{path}: expected header {expected_header!r}, got {header!r}")
        data = np.genfromtxt(fh, delimiter=",")
    if data.size == 0:
        raise ReportDataError(f"{path}: no data rows")
    return np.atleast_2d(data)


def load_run_csv(path) -> dict:
    data = _load_csv(path, "t,E,D,step_ms")
    return {"t": data[:, 0], "E": data[:, 1], "D": data[:, 2],
            "step_ms": data[:, 3]}


def load_traj_csv(path) -> dict:
    data = _load_csv(path, "t,x,y,theta")
    return {"t": data[:, 0], "x": data[:, 1], "y": data[:, 2],
            "theta": data[:, 3]}


def load_targets_csv(path) -> dict:
    data = _load_csv(path, "x,y,t_detect")
    return {"x": data[:, 0], "y": data[:, 1], "t_detect": data[:, 2]}


def load_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ReportDataError(f"missing file: {path}")
    with open(path) as fh:
        return json.load(fh)


def load_field_snapshot(path) -> dict:
    """Field snapshot: header ``nx ny dx dy`` then row-major node values."""
    path = Path(path)
    if not path.exists():
        raise ReportDataError(f"missing file: {path}")
    with open(path) as fh:
        parts = fh.readline().split()
        if len(parts) != 4:
            raise ReportDataError(f"{path}: bad snapshot header")
        nx, ny = int(parts[0]), int(parts[1])
        dx, dy = float(parts[2]), float(parts[3])
        values = np.loadtxt(fh).reshape(ny, nx)
    return {"nx": nx, "ny": ny, "dx": dx, "dy": dy, "values": values}


def load_ensemble(manifest_path) -> dict:
    """Summary plus per-run series from one run/ensemble manifest."""
    manifest, base = load_manifest(manifest_path)
    if "summary" not in manifest:
        raise ReportDataError(f"{manifest_path}: manifest has no summary")
    summary = load_json(base / manifest["summary"])
    runs = [load_run_csv(base / entry["metrics"])
            for entry in manifest.get("runs", [])]
    return {"summary": summary, "runs": runs, "manifest": manifest,
            "base": base}


def assert_envelopes_bound_runs(summary: dict, runs: list[dict]) -> None:
    """Every run's E series must lie inside the stored min/max envelope."""
    e_min = np.asarray(summary["E_min"])
    e_max = np.asarray(summary["E_max"])
    for k, run in enumerate(runs):
        e = run["E"]
        n = len(e)
        if n > len(e_min):
            raise ReportDataError(
                f"run {k} is longer than the envelope series")
        if np.any(e < e_min[:n] - 1e-12) or np.any(e > e_max[:n] + 1e-12):
            raise ReportDataError(
                f"run {k} E series escapes the stored envelope")
