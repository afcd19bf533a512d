"""Command-line entry point.

Subcommands: run (one simulation), ensemble (Monte-Carlo protocol), bench
(mean control-step time), scale (fleet-size sweep), validate-config. Exit
codes: 0 success, 2 malformed config or invocation, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import engine, output
from .errors import ConfigError, SolverFailureError
from .scenarios import build_scenario, scenario_to_config, set_by_path


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="areasearch",
                                  description=__doc__.splitlines()[0])
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, needs_out=True):
        p.add_argument("--config", required=True, help="scenario YAML file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE",
                       help="dotted config override, e.g. hedac.beta=4")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")
            p.add_argument("--force", action="store_true",
                           help="write into a non-empty output directory")

    p = sub.add_parser("run", help="single simulation")
    common(p)
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock in the step_ms column "
                        "(makes outputs non-reproducible)")
    p.add_argument("--snapshot-every", type=int, default=0, metavar="M",
                   help="dump the undetected-target field every M steps")

    p = sub.add_parser("ensemble", help="Monte-Carlo ensemble")
    common(p)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--timing", action="store_true")

    p = sub.add_parser("bench", help="mean control-step time")
    common(p, needs_out=False)
    p.add_argument("--out", default=None, help="optional output directory")
    p.add_argument("--force", action="store_true")
    p.add_argument("--steps", type=int, default=100)

    p = sub.add_parser("scale", help="fleet-size scalability sweep")
    common(p)
    p.add_argument("--Ns", default="1,2,3,4,5,6,8,10,12,16,20",
                   help="comma-separated fleet sizes")
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("validate-config", help="parse and build, then exit")
    common(p, needs_out=False)
    return top


def _load_config(args) -> tuple[dict, Path]:
    path = Path(args.config)
    try:
        cfg = yaml.safe_load(path.read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from e
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark else ""
        raise ConfigError(f"invalid YAML in {path}{where}: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        set_by_path(cfg, key.strip(), yaml.safe_load(raw))
    if args.seed is not None:
        cfg["seed"] = args.seed
    return cfg, path.parent


def _prepare_outdir(args) -> Path:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    if any(outdir.iterdir()) and not args.force:
        raise ConfigError(f"output directory {outdir} is not empty "
                          "(pass --force to reuse it)")
    return outdir


def _echo_config(outdir: Path, scenario) -> str:
    cfg = scenario_to_config(scenario)
    (outdir / "effective_config").write_text(
        yaml.safe_dump(cfg, sort_keys=True))
    return "effective_config"


def _fmt_t90(t: float) -> str:
    return "not reached" if math.isnan(t) else f"{t:.1f} s"


def _cmd_run(args) -> int:
    cfg, base = _load_config(args)
    scenario = build_scenario(cfg, base)
    outdir = _prepare_outdir(args)
    manifest = {"kind": "run", "name": scenario.name,
                "effective_config": _echo_config(outdir, scenario)}
    snapshots: list[str] = []
    hook = output.snapshot_writer(outdir, args.snapshot_every, 0, snapshots)
    metrics = engine.run_simulation(scenario, np.random.default_rng(scenario.seed),
                                    on_step=hook)
    manifest["runs"] = [output.write_run_outputs(outdir, 0, metrics,
                                                 timing=args.timing)]
    if snapshots:
        manifest["snapshots"] = snapshots
    t_run = engine.t90(metrics.E_series, metrics.times)
    output.write_json(outdir / "summary.json", {
        "t90": t_run, "final_E": metrics.final_E, "final_D": metrics.final_D,
        "times": metrics.times.tolist(), "E_mean": metrics.E_series.tolist(),
        "E_min": metrics.E_series.tolist(), "E_max": metrics.E_series.tolist(),
        "n_runs": 1})
    manifest["summary"] = "summary.json"
    output.write_json(outdir / "manifest.json", manifest)
    print(f"run complete: t90 = {_fmt_t90(t_run)}")
    return 0


def _cmd_ensemble(args) -> int:
    cfg, base = _load_config(args)
    scenario = build_scenario(cfg, base)
    outdir = _prepare_outdir(args)
    manifest = {"kind": "ensemble", "name": scenario.name,
                "effective_config": _echo_config(outdir, scenario)}
    ens = engine.run_ensemble(scenario, args.runs, workers=max(1, args.workers))
    manifest["runs"] = [output.write_run_outputs(outdir, k, m, timing=args.timing)
                        for k, m in enumerate(ens.per_run)]
    output.write_json(outdir / "summary.json", output.ensemble_summary(ens))
    manifest["summary"] = "summary.json"
    output.write_json(outdir / "manifest.json", manifest)
    print(f"ensemble of {args.runs} complete: t90 = {_fmt_t90(ens.t90)}")
    return 0


def _cmd_bench(args) -> int:
    cfg, base = _load_config(args)
    scenario = build_scenario(cfg, base)
    mean_s = engine.benchmark_step(scenario, n_steps=args.steps)
    payload = {"method": scenario.controller.kind, "scenario": scenario.name,
               "steps": args.steps, "mean_step_s": mean_s}
    if args.out:
        outdir = _prepare_outdir(args)
        output.write_json(outdir / "bench.json", payload)
        manifest = {"kind": "bench", "name": scenario.name,
                    "bench": "bench.json",
                    "effective_config": _echo_config(outdir, scenario)}
        output.write_json(outdir / "manifest.json", manifest)
    print(f"mean control step: {mean_s * 1000.0:.3f} ms "
          f"({scenario.controller.kind}, first {args.steps} steps)")
    return 0


def _cmd_scale(args) -> int:
    cfg, base = _load_config(args)
    scenario = build_scenario(cfg, base)
    try:
        ns = [int(x) for x in args.Ns.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"--Ns must be comma-separated integers, got {args.Ns!r}")
    if not ns:
        raise ConfigError("--Ns must name at least one fleet size")
    outdir = _prepare_outdir(args)
    manifest = {"kind": "scale", "name": scenario.name,
                "effective_config": _echo_config(outdir, scenario)}
    rows = engine.scalability_study(scenario, ns, n_runs=args.runs,
                                    workers=max(1, args.workers))
    output.write_json(outdir / "summary.json", {"scalability": rows})
    manifest["summary"] = "summary.json"
    output.write_json(outdir / "manifest.json", manifest)
    for r in rows:
        eta = "n/a" if math.isnan(r["eta"]) else f"{r['eta']:.3f}"
        print(f"N={r['N']:>3}  t90={_fmt_t90(r['t90']):>12}  eta={eta}")
    return 0


def _cmd_validate(args) -> int:
    cfg, base = _load_config(args)
    scenario = build_scenario(cfg, base)
    print(f"config OK: {scenario.name or 'unnamed scenario'} "
          f"({len(scenario.fleet)} agents, {scenario.controller.kind})")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "ensemble": _cmd_ensemble,
    "bench": _cmd_bench,
    "scale": _cmd_scale,
    "validate-config": _cmd_validate,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        key = f" (key: {e.key})" if getattr(e, "key", None) else ""
        print(f"config error: {e}{key}", file=sys.stderr)
        return 2
    except SolverFailureError as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
