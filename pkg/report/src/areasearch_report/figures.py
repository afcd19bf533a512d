"""The four figure families rendered from emitted simulation files.

Marker conventions on trajectory plots: dots are undetected targets, crosses
are detected targets, black circles are the agents' final positions.
Rendering is deterministic for fixed inputs and format.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import readers  # noqa: E402
from .readers import ReportDataError  # noqa: E402

FIGURE_NAMES = ("convergence", "trajectories", "bench", "scalability")

plt.rcParams["svg.hashsalt"] = "areasearch-report"

METHOD_COLORS = {
    "lawnmower": "tab:orange",
    "smc": "tab:green",
    "rhc": "tab:red",
    "hedac": "tab:blue",
}


@dataclass
class ReportSpec:
    """What to render, from which manifest, into which directory."""

    manifest_path: Path
    output_dir: Path
    figures: tuple[str, ...] = FIGURE_NAMES
    fmt: str = "png"

    def __post_init__(self):
        self.manifest_path = Path(self.manifest_path)
        self.output_dir = Path(self.output_dir)
        unknown = set(self.figures) - set(FIGURE_NAMES)
        if unknown:
            raise ValueError(f"unknown figures: {sorted(unknown)}")
        if self.fmt not in ("png", "svg"):
            raise ValueError("format must be png or svg")


def _color(label: str):
    return METHOD_COLORS.get(label.lower().split()[0], None)


def _save(fig, spec: ReportSpec, name: str) -> Path:
    out = spec.output_dir / f"{name}.{spec.fmt}"
    fig.savefig(out, dpi=120, metadata={"Date": None} if spec.fmt == "svg" else None)
    plt.close(fig)
    return out


def _resolve_ensembles(manifest: dict, base: Path) -> dict[str, dict]:
    """Label -> loaded ensemble, from a collection or a single manifest."""
    if manifest.get("kind") == "collection":
        out = {}
        for label, rel in manifest.get("ensembles", {}).items():
            out[label] = readers.load_ensemble(base / rel)
        return out
    return {manifest.get("name") or "ensemble":
            {"summary": readers.load_json(base / manifest["summary"]),
             "runs": [readers.load_run_csv(base / e["metrics"])
                      for e in manifest.get("runs", [])],
             "manifest": manifest, "base": base}}


def render_convergence(manifest: dict, base: Path, spec: ReportSpec) -> Path:
    ensembles = _resolve_ensembles(manifest, base)
    if not ensembles:
        raise ReportDataError("no ensembles referenced by the manifest")
    fig, ax = plt.subplots(figsize=(8, 5))
    for label, ens in sorted(ensembles.items()):
        summary = ens["summary"]
        readers.assert_envelopes_bound_runs(summary, ens["runs"])
        t = summary["times"]
        color = _color(label)
        line, = ax.plot(t, summary["E_mean"], lw=2.2, label=label, color=color)
        ax.fill_between(t, summary["E_min"], summary["E_max"],
                        color=line.get_color(), alpha=0.2, lw=0)
        t90 = summary.get("t90")
        if t90 is not None and not (isinstance(t90, float) and math.isnan(t90)):
            ax.axvline(t90, color=line.get_color(), ls="--", lw=1.0)
            ax.annotate(f"t90={t90:.0f}s", (t90, 0.5),
                        color=line.get_color(), rotation=90,
                        ha="right", va="center", fontsize=8)
    ax.axhline(0.1, color="0.4", lw=0.8, ls=":")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("undetected target probability E")
    ax.set_ylim(0.0, 1.02)
    ax.legend(loc="upper right")
    ax.set_title("Search convergence (mean and min/max envelope)")
    fig.tight_layout()
    return _save(fig, spec, "convergence")


def _trajectory_manifest(manifest: dict, base: Path) -> tuple[dict, Path]:
    if manifest.get("kind") == "collection":
        rel = manifest.get("trajectories")
        if rel is None:
            ensembles = manifest.get("ensembles", {})
            if not ensembles:
                raise ReportDataError("collection has no trajectory source")
            rel = sorted(ensembles.values())[0]
        return readers.load_manifest(base / rel)
    return manifest, base


def render_trajectories(manifest: dict, base: Path, spec: ReportSpec) -> Path:
    manifest, base = _trajectory_manifest(manifest, base)
    entries = manifest.get("runs")
    if not entries:
        raise ReportDataError("manifest lists no runs")
    entry = entries[0]
    if "trajectories" not in entry:
        raise ReportDataError("first run carries no trajectory files")
    fig, ax = plt.subplots(figsize=(7, 6.5))

    snapshots = manifest.get("snapshots") or []
    if snapshots:
        snap = readers.load_field_snapshot(base / snapshots[-1])
        w = snap["nx"] * snap["dx"]
        h = snap["ny"] * snap["dy"]
        ax.imshow(snap["values"], origin="lower", extent=(0, w, 0, h),
                  cmap="Greys", alpha=0.6)

    if "targets" in entry:
        tg = readers.load_targets_csv(base / entry["targets"])
        undet = [math.isnan(t) for t in tg["t_detect"]]
        undet = [bool(u) for u in undet]
        det = [not u for u in undet]
        ax.plot(tg["x"][undet], tg["y"][undet], ".", color="tab:red", ms=3,
                label="undetected targets")
        ax.plot(tg["x"][det], tg["y"][det], "x", color="tab:green", ms=4,
                label="detected targets")

    for k, name in enumerate(entry["trajectories"]):
        tr = readers.load_traj_csv(base / name)
        ax.plot(tr["x"], tr["y"], lw=1.0, label=f"agent {k}")
        ax.plot(tr["x"][-1], tr["y"][-1], "o", color="black", ms=7,
                mfc="none", mew=1.6)

    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=7)
    ax.set_title(f"Agent trajectories: {manifest.get('name') or 'run'}")
    fig.tight_layout()
    return _save(fig, spec, "trajectories")


def _resolve_bench(manifest: dict, base: Path) -> list[dict]:
    if manifest.get("kind") == "collection":
        rows = []
        for rel in manifest.get("bench", []):
            rows.append(readers.load_json(base / rel))
        return rows
    if "bench" in manifest:
        return [readers.load_json(base / manifest["bench"])]
    return []


def render_bench(manifest: dict, base: Path, spec: ReportSpec) -> Path:
    rows = _resolve_bench(manifest, base)
    if not rows:
        raise ReportDataError("no bench results referenced by the manifest")
    scenarios = sorted({r["scenario"] for r in rows})
    methods = sorted({r["method"] for r in rows})
    fig, ax = plt.subplots(figsize=(8, 4.5))
    width = 0.8 / len(methods)
    for mi, method in enumerate(methods):
        xs, ys = [], []
        for si, scen in enumerate(scenarios):
            match = [r for r in rows
                     if r["method"] == method and r["scenario"] == scen]
            if match:
                xs.append(si + (mi - (len(methods) - 1) / 2) * width)
                ys.append(match[0]["mean_step_s"] * 1000.0)
        ax.bar(xs, ys, width=width, label=method, color=_color(method))
    ax.set_yscale("log")
    ax.set_xticks(range(len(scenarios)))
    ax.set_xticklabels(scenarios)
    ax.set_ylabel("mean control step [ms]")
    ax.legend()
    ax.set_title("Control-step execution time")
    fig.tight_layout()
    return _save(fig, spec, "bench")


def _resolve_scale(manifest: dict, base: Path) -> dict:
    if manifest.get("kind") == "collection":
        rel = manifest.get("scale")
        if rel is None:
            raise ReportDataError("collection has no scale entry")
        sub, sub_base = readers.load_manifest(base / rel)
        return readers.load_json(sub_base / sub["summary"])
    return readers.load_json(base / manifest["summary"])


def render_scalability(manifest: dict, base: Path, spec: ReportSpec) -> Path:
    summary = _resolve_scale(manifest, base)
    rows = summary.get("scalability")
    if not rows:
        raise ReportDataError("summary carries no scalability table")
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.5))
    for r in rows:
        ax1.plot(r["times"], r["E_mean"], lw=1.6, label=f"N={r['N']}")
    ax1.axhline(0.1, color="0.4", lw=0.8, ls=":")
    ax1.set_xlabel("time [s]")
    ax1.set_ylabel("mean undetected probability E")
    ax1.legend(fontsize=8)
    ax1.set_title("Convergence by fleet size")

    ns = [r["N"] for r in rows]
    etas = [r["eta"] for r in rows]
    ax2.plot(ns, etas, "o-", color="tab:blue")
    if 1 in ns:
        ax2.plot([1], [etas[ns.index(1)]], "s", color="black", ms=8,
                 mfc="none", label="reference N=1")
        ax2.legend(fontsize=8)
    ax2.set_xlabel("number of agents N")
    ax2.set_ylabel("search efficiency eta(N)")
    ax2.set_ylim(0.0, 1.1)
    ax2.set_title("Scalability efficiency")
    fig.tight_layout()
    return _save(fig, spec, "scalability")


_RENDERERS = {
    "convergence": render_convergence,
    "trajectories": render_trajectories,
    "bench": render_bench,
    "scalability": render_scalability,
}


def render(spec: ReportSpec) -> dict[str, Path]:
    """Render the selected figures; skip (with a warning) whatever lacks data.

    Returns the produced files by figure name. Raises ReportDataError only if
    every selected figure failed.
    """
    manifest, base = readers.load_manifest(spec.manifest_path)
    spec.output_dir.mkdir(parents=True, exist_ok=True)
    produced: dict[str, Path] = {}
    failures: list[str] = []
    for name in spec.figures:
        try:
            produced[name] = _RENDERERS[name](manifest, base, spec)
        except ReportDataError as err:
            print(f"warning: skipping {name}: {err}", file=sys.stderr)
            failures.append(name)
    if not produced:
        raise ReportDataError(
            f"no figures could be rendered (failed: {', '.join(failures)})")
    return produced
