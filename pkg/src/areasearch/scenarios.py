"""Scenario construction: target priors, fleets, and config (de)serialization.

A scenario bundles everything one simulation needs. Configs are YAML
documents (key/value with nested tables); circle and road geometry can sit
inline or in referenced geometry files. The three shipped test cases mirror
a common benchmark setup: a Gaussian hot spot, a regionally uniform island
group, and a road-network prior. The island and road geometries are
representative reconstructions and are meant to be edited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .controllers import (
    ControllerSpec,
    LawnmowerParams,
    RhcParams,
    SmcParams,
)
from .errors import ConfigError, DegeneratePriorError
from .grid import GridSpec, ScalarField, scale_to_unit_mass, zeros_field
from .heat import HedacParams
from .motion import MOTION_MODELS, AgentState
from .sensing import SENSOR_KINDS, SensorModel, calibrate_gain


@dataclass(frozen=True)
class CircleSet:
    """Union of minuend discs minus union of subtrahend discs; (cx, cy, r) rows."""

    minuends: tuple[tuple[float, float, float], ...]
    subtrahends: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        for cx, cy, r in (*self.minuends, *self.subtrahends):
            if r <= 0:
                raise ValueError("circle radii must be positive")


@dataclass(frozen=True)
class RoadNetwork:
    """Straight road segments plus the Gaussian scattering width around them."""

    segments: tuple[tuple[float, float, float, float], ...]
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("road sigma must be positive")
        for x1, y1, x2, y2 in self.segments:
            if math.hypot(x2 - x1, y2 - y1) <= 0:
                raise ValueError("road segments must have positive length")


def gaussian_prior(grid: GridSpec, center, sigma_x: float,
                   sigma_y: float) -> ScalarField:
    """Normalized Gaussian bump."""
    if sigma_x <= 0 or sigma_y <= 0:
        raise ValueError("sigmas must be positive")
    X, Y = grid.mesh()
    v = np.exp(-((X - center[0]) ** 2 / (2 * sigma_x ** 2)
                 + (Y - center[1]) ** 2 / (2 * sigma_y ** 2)))
    return scale_to_unit_mass(ScalarField(grid, v))


def region_prior(grid: GridSpec, circles: CircleSet) -> ScalarField:
    """Uniform density over the circle-set region, by node-center membership."""
    X, Y = grid.mesh()
    inside = np.zeros(X.shape, dtype=bool)
    for cx, cy, r in circles.minuends:
        inside |= (X - cx) ** 2 + (Y - cy) ** 2 <= r * r
    for cx, cy, r in circles.subtrahends:
        inside &= (X - cx) ** 2 + (Y - cy) ** 2 > r * r
    if not inside.any():
        raise DegeneratePriorError("circle set leaves no grid node inside the region")
    return scale_to_unit_mass(ScalarField(grid, inside.astype(float)))


def road_prior(grid: GridSpec, net: RoadNetwork,
               samples_per_sigma: float = 4.0) -> ScalarField:
    """Gaussian radial falloff from the road axis, integrated along segments.

    Each segment's line integral uses composite midpoints at arclength steps
    of at most sigma / samples_per_sigma (default sigma / 4).
    """
    out = zeros_field(grid)
    v = out.values
    sig = net.sigma
    cut = 4.0 * sig
    xs = grid.x_centers()
    ys = grid.y_centers()
    for x1, y1, x2, y2 in net.segments:
        length = math.hypot(x2 - x1, y2 - y1)
        n_sub = max(1, math.ceil(length / (sig / samples_per_sigma)))
        w = length / n_sub
        for m in range(n_sub):
            t = (m + 0.5) / n_sub
            px = x1 + t * (x2 - x1)
            py = y1 + t * (y2 - y1)
            i0 = np.searchsorted(xs, px - cut)
            i1 = np.searchsorted(xs, px + cut, side="right")
            j0 = np.searchsorted(ys, py - cut)
            j1 = np.searchsorted(ys, py + cut, side="right")
            if i0 >= i1 or j0 >= j1:
                continue
            dx2 = (xs[i0:i1] - px) ** 2
            dy2 = (ys[j0:j1] - py) ** 2
            v[j0:j1, i0:i1] += w * np.exp(-(dy2[:, None] + dx2[None, :])
                                          / (2 * sig * sig))
    return scale_to_unit_mass(out)


def sample_targets(prior: ScalarField, n: int, rng) -> np.ndarray:
    """Draw target positions: cell by mass, then uniform within the cell."""
    if n == 0:
        return np.zeros((0, 2))
    g = prior.spec
    p = prior.values.ravel()
    p = p / p.sum()
    idx = rng.choice(p.size, size=n, p=p)
    j, i = np.divmod(idx, g.nx)
    x = (i + rng.random(n)) * g.dx
    y = (j + rng.random(n)) * g.dy
    return np.column_stack([x, y])


@dataclass
class Scenario:
    """Everything one search simulation needs, rebuildable from its config."""

    grid: GridSpec
    prior: ScalarField
    fleet: list[AgentState]
    controller: ControllerSpec
    dt: float
    t_end: float
    n_targets: int
    seed: int
    prior_spec: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("dt must be positive", key="dt")
        if self.t_end < self.dt:
            raise ConfigError("t_end must be at least one step", key="t_end")
        if self.n_targets < 0:
            raise ConfigError("n_targets must be nonnegative", key="n_targets")

    @property
    def n_steps(self) -> int:
        return max(1, round(self.t_end / self.dt))


# -- geometry files -----------------------------------------------------------

def load_circles(path, sign_scale: float = 1.0) -> CircleSet:
    """Parse a circle geometry file: lines of ``+|- xc yc r``."""
    plus, minus = [], []
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4 or parts[0] not in "+-":
            raise ConfigError(f"{path}:{line_no}: expected '+|- xc yc r'")
        row = tuple(float(x) * sign_scale for x in parts[1:])
        (plus if parts[0] == "+" else minus).append(row)
    return CircleSet(tuple(plus), tuple(minus))


def load_roads(path, sigma: float, scale: float = 1.0) -> RoadNetwork:
    """Parse a road geometry file: lines of ``x1 y1 x2 y2``."""
    segs = []
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ConfigError(f"{path}:{line_no}: expected 'x1 y1 x2 y2'")
        segs.append(tuple(float(x) * scale for x in parts))
    return RoadNetwork(tuple(segs), sigma)


def _data_path(name: str) -> Path:
    return Path(resources.files("areasearch").joinpath("data", name))


# -- config <-> scenario ------------------------------------------------------

def _table(cfg: dict, key: str, required=True) -> dict:
    v = cfg.get(key)
    if v is None:
        if required:
            raise ConfigError(f"missing table {key!r}", key=key)
        return {}
    if not isinstance(v, dict):
        raise ConfigError(f"{key!r} must be a table", key=key)
    return v


def _num(table: dict, key: str, path: str, default=None):
    v = table.get(key, default)
    if v is None:
        raise ConfigError(f"missing value {path!r}", key=path)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path!r} must be a number, got {v!r}", key=path)
    return float(v)


def build_prior(grid: GridSpec, spec: dict, base_dir: Path | None = None) -> tuple[ScalarField, dict]:
    """Build a prior field from its config table.

    Returns the field plus a resolved, self-contained copy of the table
    (geometry files folded inline) for faithful re-serialization.
    """
    kind = spec.get("kind")
    base = Path(base_dir) if base_dir else Path.cwd()
    if kind == "gaussian":
        center = spec.get("center")
        sigma = spec.get("sigma")
        if not (isinstance(center, (list, tuple)) and len(center) == 2):
            raise ConfigError("prior.center must be [x, y]", key="prior.center")
        if not (isinstance(sigma, (list, tuple)) and len(sigma) == 2):
            raise ConfigError("prior.sigma must be [sx, sy]", key="prior.sigma")
        fld = gaussian_prior(grid, center, float(sigma[0]), float(sigma[1]))
        resolved = {"kind": "gaussian",
                    "center": [float(center[0]), float(center[1])],
                    "sigma": [float(sigma[0]), float(sigma[1])]}
        return fld, resolved
    if kind == "regions":
        if "geometry_file" in spec:
            circles = load_circles(base / spec["geometry_file"])
        else:
            circles = CircleSet(
                tuple(tuple(map(float, row)) for row in spec.get("minuends", [])),
                tuple(tuple(map(float, row)) for row in spec.get("subtrahends", [])))
        fld = region_prior(grid, circles)
        resolved = {"kind": "regions",
                    "minuends": [list(r) for r in circles.minuends],
                    "subtrahends": [list(r) for r in circles.subtrahends]}
        return fld, resolved
    if kind == "roads":
        sigma = _num(spec, "sigma", "prior.sigma")
        if "geometry_file" in spec:
            net = load_roads(base / spec["geometry_file"], sigma)
        else:
            net = RoadNetwork(tuple(tuple(map(float, row))
                                    for row in spec.get("segments", [])), sigma)
        fld = road_prior(grid, net)
        resolved = {"kind": "roads", "sigma": sigma,
                    "segments": [list(s) for s in net.segments]}
        return fld, resolved
    raise ConfigError(f"unknown prior kind {kind!r}", key="prior.kind")


def _sensor_from_config(table: dict, path: str) -> SensorModel:
    kind = table.get("kind")
    if kind not in SENSOR_KINDS:
        raise ConfigError(f"{path}.kind must be one of {SENSOR_KINDS}", key=f"{path}.kind")
    kwargs = {}
    for name in ("sigma", "offset", "semi_major", "semi_minor"):
        if name in table:
            kwargs[name] = _num(table, name, f"{path}.{name}")
    sensor = SensorModel(kind=kind, gain=float(table.get("gain", 1.0)), **kwargs)
    if "gain" not in table:
        if "target_intensity" not in table:
            raise ConfigError(f"{path} needs 'gain' or 'target_intensity'", key=path)
        sensor = calibrate_gain(sensor, _num(table, "target_intensity",
                                             f"{path}.target_intensity"))
    return sensor


def _sensor_to_config(s: SensorModel) -> dict:
    out = {"kind": s.kind, "gain": float(s.gain)}
    if s.kind in ("gaussian_disc", "offset_gaussian"):
        out["sigma"] = s.sigma
    if s.kind in ("offset_gaussian", "forward_ellipse"):
        out["offset"] = s.offset
    if s.kind == "forward_ellipse":
        out["semi_major"] = s.semi_major
        out["semi_minor"] = s.semi_minor
    return out


def build_scenario(cfg: dict, base_dir=None) -> Scenario:
    """Validate a config dict and construct the scenario it describes."""
    gt = _table(cfg, "grid")
    grid = GridSpec(width_m=_num(gt, "width_m", "grid.width_m"),
                    height_m=_num(gt, "height_m", "grid.height_m"),
                    nx=int(_num(gt, "nx", "grid.nx")),
                    ny=int(_num(gt, "ny", "grid.ny")))
    prior, prior_spec = build_prior(grid, _table(cfg, "prior"), base_dir)

    fleet_cfg = cfg.get("fleet")
    if not isinstance(fleet_cfg, list) or not fleet_cfg:
        raise ConfigError("fleet must be a non-empty list", key="fleet")
    fleet = []
    for i, at in enumerate(fleet_cfg):
        path = f"fleet[{i}]"
        if not isinstance(at, dict):
            raise ConfigError(f"{path} must be a table", key=path)
        z0 = at.get("z0")
        if not (isinstance(z0, (list, tuple)) and len(z0) == 2):
            raise ConfigError(f"{path}.z0 must be [x, y]", key=f"{path}.z0")
        model = at.get("model", "dubins")
        if model not in MOTION_MODELS:
            raise ConfigError(f"{path}.model must be one of {MOTION_MODELS}",
                              key=f"{path}.model")
        r_turn = at.get("r_turn")
        fleet.append(AgentState(
            z=np.array([float(z0[0]), float(z0[1])]),
            theta=_num(at, "theta0", f"{path}.theta0", default=0.0),
            v=_num(at, "v", f"{path}.v"),
            r_turn=float(r_turn) if r_turn is not None else None,
            model=model,
            sensor=_sensor_from_config(_table(at, "sensor"), f"{path}.sensor")))

    ct = _table(cfg, "controller", required=False) or {"kind": "hedac"}
    kind = ct.get("kind", "hedac")
    ht = _table(cfg, "hedac", required=False)
    lt = _table(cfg, "lawnmower", required=False)
    st = _table(cfg, "smc", required=False)
    rt = _table(cfg, "rhc", required=False)
    try:
        controller = ControllerSpec(
            kind=kind,
            hedac=HedacParams(
                alpha=_num(ht, "alpha", "hedac.alpha", default=0.03),
                beta=_num(ht, "beta", "hedac.beta", default=2.0),
                solver_tol=_num(ht, "tol", "hedac.tol", default=1e-6),
                max_iters=int(ht["max_iters"]) if "max_iters" in ht else None),
            lawnmower=LawnmowerParams(
                lane_spacing=(float(lt["lane_spacing"])
                              if lt.get("lane_spacing") is not None else None),
                orientation=lt.get("orientation", "horizontal")),
            smc=SmcParams(
                k_modes=int(_num(st, "k_modes", "smc.k_modes", default=50)),
                exponent=_num(st, "exponent", "smc.exponent", default=1.5),
                use_log_prior=bool(st.get("use_log_prior", True)),
                log_floor_ratio=_num(st, "log_floor_ratio",
                                     "smc.log_floor_ratio", default=1e-3)),
            rhc=RhcParams(
                horizon_steps=int(_num(rt, "horizon_steps", "rhc.horizon_steps", default=10)),
                swarm_size=int(_num(rt, "swarm_size", "rhc.swarm_size", default=40)),
                pso_iters=int(_num(rt, "pso_iters", "rhc.pso_iters", default=30)),
                inertia=_num(rt, "inertia", "rhc.inertia", default=0.7),
                cognitive=_num(rt, "cognitive", "rhc.cognitive", default=1.5),
                social=_num(rt, "social", "rhc.social", default=1.5),
                rng_seed=int(_num(rt, "rng_seed", "rhc.rng_seed", default=0)),
                dim_cap=int(_num(rt, "dim_cap", "rhc.dim_cap", default=512))))
    except ValueError as e:
        raise ConfigError(str(e), key="controller") from e

    return Scenario(
        grid=grid, prior=prior, fleet=fleet, controller=controller,
        dt=_num(cfg, "dt", "dt"),
        t_end=_num(cfg, "t_end", "t_end"),
        n_targets=int(_num(cfg, "n_targets", "n_targets", default=1000)),
        seed=int(_num(cfg, "seed", "seed", default=0)),
        prior_spec=prior_spec,
        name=str(cfg.get("name", "")))


def scenario_to_config(s: Scenario) -> dict:
    """The self-contained config dict that rebuilds this scenario."""
    c = s.controller
    return {
        "name": s.name,
        "grid": {"width_m": s.grid.width_m, "height_m": s.grid.height_m,
                 "nx": s.grid.nx, "ny": s.grid.ny},
        "prior": dict(s.prior_spec),
        "fleet": [{
            "z0": [float(a.z[0]), float(a.z[1])],
            "theta0": float(a.theta),
            "v": a.v,
            "r_turn": a.r_turn,
            "model": a.model,
            "sensor": _sensor_to_config(a.sensor),
        } for a in s.fleet],
        "controller": {"kind": c.kind},
        "hedac": {"alpha": c.hedac.alpha, "beta": c.hedac.beta,
                  "tol": c.hedac.solver_tol,
                  **({"max_iters": c.hedac.max_iters}
                     if c.hedac.max_iters is not None else {})},
        "lawnmower": {"lane_spacing": c.lawnmower.lane_spacing,
                      "orientation": c.lawnmower.orientation},
        "smc": {"k_modes": c.smc.k_modes, "exponent": c.smc.exponent,
                "use_log_prior": c.smc.use_log_prior,
                "log_floor_ratio": c.smc.log_floor_ratio},
        "rhc": {"horizon_steps": c.rhc.horizon_steps,
                "swarm_size": c.rhc.swarm_size, "pso_iters": c.rhc.pso_iters,
                "inertia": c.rhc.inertia, "cognitive": c.rhc.cognitive,
                "social": c.rhc.social, "rng_seed": c.rhc.rng_seed,
                "dim_cap": c.rhc.dim_cap},
        "dt": s.dt,
        "t_end": s.t_end,
        "n_targets": s.n_targets,
        "seed": s.seed,
    }


def set_by_path(cfg: dict, dotted: str, value) -> None:
    """Assign into nested tables by a dotted key path (creates tables)."""
    parts = dotted.split(".")
    node = cfg
    for p in parts[:-1]:
        nxt = node.get(p)
        if nxt is None:
            nxt = {}
            node[p] = nxt
        if not isinstance(nxt, dict):
            raise ConfigError(f"cannot descend into non-table {p!r} in {dotted!r}",
                              key=dotted)
        node = nxt
    node[parts[-1]] = value


# -- shipped test cases -------------------------------------------------------

def ring_poses(center, radius_step: float, n: int, max_radius: float | None = None):
    """Initial poses fanned around a center, radius growing per agent.

    ``max_radius`` caps the outermost agent's distance so large fleets stay
    inside the domain.
    """
    if max_radius is not None:
        radius_step = min(radius_step, max_radius / n)
    poses = []
    for i in range(1, n + 1):
        ang = (i - 1) * 2.0 * math.pi / n
        poses.append((center[0] + radius_step * i * math.cos(ang),
                      center[1] + radius_step * i * math.sin(ang),
                      (i - 1) * math.pi / n + math.pi))
    return poses


TEST2_POSES = ((1000.0, 500.0, 0.0),
               (400.0, 1000.0, math.pi / 6),
               (1500.0, 1000.0, math.pi / 3),
               (1500.0, 2000.0, math.pi / 2),
               (2700.0, 2000.0, 2 * math.pi / 3),
               (2300.0, 2600.0, 5 * math.pi / 6))

# Entry points of the default road network (where roads meet the boundary),
# headings along the inward normal.
TEST3_POSES = ((0.0, 1500.0, 0.0),
               (4000.0, 1700.0, math.pi),
               (2700.0, 0.0, math.pi / 2),
               (900.0, 0.0, math.pi / 2),
               (2200.0, 2000.0, -math.pi / 2))


def _agent_cfg(pose, v, r_turn, sensor_cfg, model):
    x, y, th = pose
    return {"z0": [x, y], "theta0": th, "v": v, "r_turn": r_turn,
            "model": model, "sensor": sensor_cfg}


def preset_config(which: str, scale: float = 1.0,
                  n_agents: int | None = None,
                  model: str = "dubins") -> dict:
    """Config dict for one of the shipped test cases.

    ``scale`` shrinks domain, grid and geometry together (0.5 gives the
    desk-scale variants used in the fast evaluation suite); sensors and agent
    motion parameters keep their physical values.
    """
    if which == "test1":
        w = 1000.0 * scale
        n = n_agents if n_agents is not None else 5
        sensor = {"kind": "gaussian_disc", "sigma": 5.0,
                  "target_intensity": 316.91}
        poses = ring_poses((w / 2, w / 2), 70.0 * scale, n, max_radius=0.4 * w)
        return {
            "name": "test1",
            "grid": {"width_m": w, "height_m": w,
                     "nx": round(250 * scale), "ny": round(250 * scale)},
            "prior": {"kind": "gaussian", "center": [w / 2, w / 2],
                      "sigma": [150.0 * scale, 150.0 * scale]},
            "fleet": [_agent_cfg(p, 20.0, 30.0, dict(sensor), model)
                      for p in poses],
            "controller": {"kind": "hedac"},
            "hedac": {"alpha": 0.03, "beta": 4.0, "tol": 1e-6},
            "dt": 0.25, "t_end": 600.0, "n_targets": 1000, "seed": 1,
        }
    if which == "test2":
        w = 3000.0 * scale
        circles = load_circles(_data_path("test2_circles.txt"), sign_scale=scale)
        sensors = ({"kind": "gaussian_disc", "sigma": 8.0,
                    "target_intensity": 937.76},
                   {"kind": "offset_gaussian", "sigma": 6.0, "offset": 8.0,
                    "target_intensity": 800.24},
                   {"kind": "forward_ellipse", "semi_major": 12.0,
                    "semi_minor": 6.0, "offset": 10.0,
                    "target_intensity": 641.25})
        motion = ((16.0, 26.0), (20.0, 29.0), (31.0, 43.0))
        fleet = []
        for pair in range(3):
            v, r_turn = motion[pair]
            for k in range(2):
                pose = TEST2_POSES[pair * 2 + k]
                pose = (pose[0] * scale, pose[1] * scale, pose[2])
                fleet.append(_agent_cfg(pose, v, r_turn, dict(sensors[pair]), model))
        if n_agents is not None:
            fleet = [dict(fleet[i % len(fleet)]) for i in range(n_agents)]
        return {
            "name": "test2",
            "grid": {"width_m": w, "height_m": w,
                     "nx": round(600 * scale), "ny": round(600 * scale)},
            "prior": {"kind": "regions",
                      "minuends": [list(r) for r in circles.minuends],
                      "subtrahends": [list(r) for r in circles.subtrahends]},
            "fleet": fleet,
            "controller": {"kind": "hedac"},
            "hedac": {"alpha": 0.03, "beta": 2.0, "tol": 1e-6},
            "dt": 0.5, "t_end": 1800.0, "n_targets": 1000, "seed": 1,
        }
    if which == "test3":
        roads = load_roads(_data_path("test3_roads.txt"), sigma=100.0 * scale,
                           scale=scale)
        sensors = ({"kind": "gaussian_disc", "sigma": 9.0,
                    "target_intensity": 1096.06},
                   {"kind": "offset_gaussian", "sigma": 7.0, "offset": 10.0,
                    "target_intensity": 1428.25})
        fleet = []
        for i, pose in enumerate(TEST3_POSES):
            slow = i < 3
            pose = (pose[0] * scale, pose[1] * scale, pose[2])
            fleet.append(_agent_cfg(pose, 20.0 if slow else 34.0,
                                    36.0 if slow else 48.0,
                                    dict(sensors[0 if slow else 1]), model))
        if n_agents is not None:
            fleet = [dict(fleet[i % len(fleet)]) for i in range(n_agents)]
        return {
            "name": "test3",
            "grid": {"width_m": 4000.0 * scale, "height_m": 2000.0 * scale,
                     "nx": round(800 * scale), "ny": round(400 * scale)},
            "prior": {"kind": "roads", "sigma": 100.0 * scale,
                      "segments": [list(s) for s in roads.segments]},
            "fleet": fleet,
            "controller": {"kind": "hedac"},
            "hedac": {"alpha": 0.03, "beta": 2.0, "tol": 1e-6},
            "dt": 0.5, "t_end": 3000.0, "n_targets": 1000, "seed": 1,
        }
    raise ConfigError(f"unknown test id {which!r}")


def build_test_scenario(which: str, scale: float = 1.0,
                        n_agents: int | None = None, model: str = "dubins",
                        overrides: dict | None = None) -> Scenario:
    """Construct a shipped test scenario, optionally overriding config keys."""
    cfg = preset_config(which, scale=scale, n_agents=n_agents, model=model)
    for key, value in (overrides or {}).items():
        set_by_path(cfg, key, value)
    return build_scenario(cfg)


def replicate_fleet(s: Scenario, n: int) -> Scenario:
    """A copy of the scenario whose fleet is n clones of agent 1, fanned out."""
    base = s.fleet[0]
    short = min(s.grid.width_m, s.grid.height_m)
    center = (s.grid.width_m / 2.0, s.grid.height_m / 2.0)
    poses = ring_poses(center, 0.07 * short, n, max_radius=0.4 * short)
    fleet = [replace(base, z=np.array([x, y]), theta=th) for x, y, th in poses]
    return replace(s, fleet=fleet)
