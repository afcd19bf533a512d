"""Per-step desired-direction computation for the four search strategies.

All controllers satisfy one interface: ``directions(agents, occurrence,
coverage, step)`` returns one entry per agent, either a unit vector or None
(the explicit "no preference, keep heading" sentinel). Controllers may keep
internal state between steps (warm starts, waypoint progress); the simulation
loop stays identical whichever strategy is plugged in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dctn

from .errors import ConfigError
from .grid import GridSpec, ScalarField, gradient, interpolate, unit
from .heat import HedacParams, PotentialField, degenerate_threshold, solve_potential
from .motion import AgentState
from .sensing import OccurrenceField, CoverageField, add_exposure

CONTROLLER_KINDS = ("hedac", "lawnmower", "smc", "rhc")


@dataclass(frozen=True)
class LawnmowerParams:
    """Boustrophedon lanes over the prior's bounding box.

    ``lane_spacing`` defaults to the fleet-average effective sensor width.
    """

    lane_spacing: float | None = None
    orientation: str = "horizontal"

    def __post_init__(self):
        if self.lane_spacing is not None and self.lane_spacing <= 0:
            raise ValueError("lane_spacing must be positive")
        if self.orientation not in ("horizontal", "vertical"):
            raise ValueError("orientation must be horizontal or vertical")


@dataclass(frozen=True)
class SmcParams:
    """Spectral coverage-error steering in a cosine basis."""

    k_modes: int = 50
    exponent: float = 1.5
    use_log_prior: bool = True
    log_floor_ratio: float = 1e-3

    def __post_init__(self):
        if self.k_modes < 1:
            raise ValueError("k_modes must be at least 1")
        if not (0 < self.log_floor_ratio < 1):
            raise ValueError("log_floor_ratio must lie in (0, 1)")


@dataclass(frozen=True)
class RhcParams:
    """Receding-horizon turn-sequence optimization by particle swarm."""

    horizon_steps: int = 10
    swarm_size: int = 40
    pso_iters: int = 30
    inertia: float = 0.7
    cognitive: float = 1.5
    social: float = 1.5
    rng_seed: int = 0
    dim_cap: int = 512

    def __post_init__(self):
        if min(self.horizon_steps, self.swarm_size) < 1 or self.pso_iters < 0:
            raise ValueError("horizon_steps and swarm_size must be >= 1, pso_iters >= 0")


@dataclass(frozen=True)
class ControllerSpec:
    """Which strategy drives the fleet, with every strategy's parameter table."""

    kind: str = "hedac"
    hedac: HedacParams = field(default_factory=HedacParams)
    lawnmower: LawnmowerParams = field(default_factory=LawnmowerParams)
    smc: SmcParams = field(default_factory=SmcParams)
    rhc: RhcParams = field(default_factory=RhcParams)

    def __post_init__(self):
        if self.kind not in CONTROLLER_KINDS:
            raise ValueError(f"unknown controller kind {self.kind!r}")


class HedacController:
    """Ascend the gradient of the heat potential sourced by the undetected density."""

    def __init__(self, params: HedacParams):
        self.params = params
        self.potential: PotentialField | None = None

    def directions(self, agents, occurrence: OccurrenceField,
                   coverage: CoverageField, step: int):
        u = solve_potential(occurrence.current, self.params,
                            warm_start=self.potential)
        self.potential = u
        gx, gy = gradient(u.field)
        eps = max(degenerate_threshold(u), np.finfo(float).tiny)
        out = []
        for a in agents:
            vx = interpolate(gx, a.z)
            vy = interpolate(gy, a.z)
            mag = math.hypot(vx, vy)
            out.append(None if mag < eps else np.array([vx / mag, vy / mag]))
        return out


class LawnmowerController:
    """Precomputed serpentine lanes, partitioned among the fleet."""

    def __init__(self, params: LawnmowerParams, grid: GridSpec,
                 prior: ScalarField, fleet, dt: float):
        spacing = params.lane_spacing
        if spacing is None:
            widths = [a.sensor.effective_width() for a in fleet]
            spacing = float(np.mean(widths)) if widths else grid.dx * 4
        self.capture = [a.v * dt for a in fleet]
        lo, hi = _support_bbox(prior)
        self.paths = _partition_lanes(lo, hi, spacing, len(fleet),
                                      params.orientation)
        self.idx = [0] * len(fleet)
        self.anchor: list[np.ndarray | None] = [None] * len(fleet)

    def directions(self, agents, occurrence, coverage, step: int):
        out = []
        for i, a in enumerate(agents):
            path = self.paths[i]
            if self.anchor[i] is None:
                self.anchor[i] = np.asarray(a.z, dtype=float).copy()
            for _ in range(len(path)):
                wp = path[self.idx[i] % len(path)]
                to_wp = wp - a.z
                dist = math.hypot(to_wp[0], to_wp[1])
                seg = wp - self.anchor[i]
                # Advance on capture, or once the finish line through the
                # waypoint (perpendicular to the approach leg) is crossed;
                # the latter keeps turn-limited agents from orbiting.
                passed = float(seg @ (a.z - wp)) >= 0.0 and seg @ seg > 0.0
                if dist > self.capture[i] and not passed:
                    break
                self.anchor[i] = wp
                self.idx[i] += 1
            wp = path[self.idx[i] % len(path)]
            out.append(unit(wp - a.z))
        return out


def _support_bbox(prior: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    v = prior.values
    live = v > v.max() * 1e-12
    js, is_ = np.nonzero(live)
    g = prior.spec
    lo = np.array([(is_.min() + 0.5) * g.dx, (js.min() + 0.5) * g.dy])
    hi = np.array([(is_.max() + 0.5) * g.dx, (js.max() + 0.5) * g.dy])
    return lo, hi


def _partition_lanes(lo, hi, spacing: float, n_agents: int, orientation: str):
    """Serpentine waypoint cycles; lane sets are disjoint and cover the box.

    Each agent's cycle is an up-sweep over its lanes followed by a down-sweep
    over half-spacing-offset lanes, so repeated passes interleave instead of
    retracing themselves and the gaps between adjacent lanes get filled.
    """
    if n_agents == 0:
        return []
    along, across = (0, 1) if orientation == "horizontal" else (1, 0)
    span = hi[across] - lo[across]
    n_lanes = max(1, int(math.ceil(span / spacing)))
    pad = (span - (n_lanes - 1) * spacing) / 2.0
    levels = lo[across] + pad + spacing * np.arange(n_lanes)
    if n_lanes == 1:
        levels = np.array([(lo[across] + hi[across]) / 2.0])

    def lane_points(level_block, flip_start=False):
        pts = []
        ends = (lo[along], hi[along])
        for k, lev in enumerate(level_block):
            a, b = ends if (k % 2 == 0) != flip_start else ends[::-1]
            p0, p1 = np.empty(2), np.empty(2)
            p0[along], p0[across] = a, lev
            p1[along], p1[across] = b, lev
            pts.extend([p0, p1])
        return pts

    def cycle(level_block):
        up = lane_points(level_block)
        shifted = np.clip(np.asarray(level_block) + spacing / 2.0,
                          lo[across], hi[across])
        down = lane_points(shifted[::-1], flip_start=len(level_block) % 2 == 0)
        pts = up + down
        return [p for i, p in enumerate(pts)
                if i == 0 or not np.array_equal(p, pts[i - 1])]

    if n_lanes >= n_agents:
        blocks = np.array_split(levels, n_agents)
        return [cycle(b) for b in blocks]
    # More agents than lanes: stagger full cycles so agents spread out.
    paths = []
    full = cycle(levels)
    for i in range(n_agents):
        off = (i * len(full)) // n_agents
        paths.append(full[off:] + full[:off])
    return paths


class SmcController:
    """Steer down the gradient of a low-mode-weighted coverage-error potential."""

    def __init__(self, params: SmcParams, grid: GridSpec, prior: ScalarField):
        self.grid = grid
        k = min(params.k_modes, grid.nx, grid.ny)
        self.kx = np.arange(k)
        self.ky = np.arange(k)
        kx2 = self.kx[None, :] ** 2 + self.ky[:, None] ** 2
        self.lam = (1.0 + kx2) ** (-params.exponent)
        cx = np.where(self.kx == 0, grid.nx, grid.nx / 2.0)
        cy = np.where(self.ky == 0, grid.ny, grid.ny / 2.0)
        self.hk2 = cy[:, None] * cx[None, :] * grid.cell_area
        self.goal = _goal_density(prior, params)

    def coefficients(self, err_values: np.ndarray) -> np.ndarray:
        """Normalized cosine-mode coefficients <err, f_k> / h_k of a field."""
        k = len(self.kx)
        s = dctn(err_values, type=2)[:k, :k] / 4.0
        return s * self.grid.cell_area / np.sqrt(self.hk2)

    def _weights(self, coverage: CoverageField) -> np.ndarray:
        cov = coverage.field.values
        total = cov.sum() * self.grid.cell_area
        cbar = cov / total if total > 0 else np.zeros_like(cov)
        err = cbar - self.goal
        k = len(self.kx)
        s = dctn(err, type=2)[:k, :k] / 4.0
        # Potential Phi = sum_k lam_k <err, f_k/h_k> f_k/h_k.
        return self.lam * s * self.grid.cell_area / self.hk2

    def directions(self, agents, occurrence, coverage, step: int):
        w = self._weights(coverage)
        gw, gh = self.grid.width_m, self.grid.height_m
        out = []
        for a in agents:
            ax = math.pi * self.kx * float(a.z[0]) / gw
            ay = math.pi * self.ky * float(a.z[1]) / gh
            cxv, sxv = np.cos(ax), np.sin(ax)
            cyv, syv = np.cos(ay), np.sin(ay)
            dphi_dx = -(math.pi / gw) * float(cyv @ w @ (self.kx * sxv))
            dphi_dy = -(math.pi / gh) * float((self.ky * syv) @ w @ cxv)
            out.append(unit(np.array([-dphi_dx, -dphi_dy])))
        return out


def _goal_density(prior: ScalarField, params: SmcParams) -> np.ndarray:
    v = prior.values
    if params.use_log_prior:
        # Effort proportional to log of the prior (exponential detection law):
        # relu(log(m0 / floor)) with the floor a fraction of the peak.
        floor = v.max() * params.log_floor_ratio
        with np.errstate(divide="ignore"):
            g = np.where(v > floor, np.log(np.maximum(v, floor) / floor), 0.0)
    else:
        g = v.copy()
    total = g.sum() * prior.spec.cell_area
    if total <= 0:
        return np.zeros_like(v)
    return g / total


class RhcController:
    """Optimize bounded turn-rate sequences over a finite horizon with PSO.

    Fitness of a candidate is the predicted undetected-target probability
    after rolling the fleet out and stamping preview coverage on a scratch
    window; only the first step of the winner is executed.
    """

    def __init__(self, params: RhcParams, grid: GridSpec, dt: float):
        self.params = params
        self.grid = grid
        self.dt = dt

    def directions(self, agents, occurrence: OccurrenceField,
                   coverage: CoverageField, step: int):
        if not agents:
            return []
        p = self.params
        n = len(agents)
        dim = n * p.horizon_steps
        if dim > p.dim_cap:
            raise ConfigError(
                f"RHC search space {dim} exceeds cap {p.dim_cap}; "
                "reduce horizon_steps or fleet size", key="rhc.horizon_steps")
        bounds = np.repeat(
            [min(a.omega_max, math.pi / self.dt) for a in agents],
            p.horizon_steps)
        rng = np.random.default_rng([p.rng_seed & 0x7FFFFFFF, step])

        pos = rng.uniform(-bounds, bounds, size=(p.swarm_size, dim))
        vel = np.zeros_like(pos)
        cost = np.array([self._rollout_cost(x, agents, occurrence) for x in pos])
        pbest, pcost = pos.copy(), cost.copy()
        g = int(np.argmin(pcost))
        gbest, gcost = pbest[g].copy(), float(pcost[g])

        for _ in range(p.pso_iters):
            r1 = rng.random((p.swarm_size, dim))
            r2 = rng.random((p.swarm_size, dim))
            vel = (p.inertia * vel
                   + p.cognitive * r1 * (pbest - pos)
                   + p.social * r2 * (gbest - pos))
            pos = np.clip(pos + vel, -bounds, bounds)
            cost = np.array([self._rollout_cost(x, agents, occurrence)
                             for x in pos])
            better = cost < pcost
            pbest[better] = pos[better]
            pcost[better] = cost[better]
            g = int(np.argmin(pcost))
            if pcost[g] < gcost:
                gbest, gcost = pbest[g].copy(), float(pcost[g])

        out = []
        for i, a in enumerate(agents):
            theta = a.theta + gbest[i * p.horizon_steps] * self.dt
            out.append(np.array([math.cos(theta), math.sin(theta)]))
        return out

    def _rollout_cost(self, omegas: np.ndarray, agents,
                      occurrence: OccurrenceField) -> float:
        """Predicted remaining presence probability change (lower is better)."""
        p = self.params
        g = self.grid
        reach = max(a.v * self.dt * p.horizon_steps + a.sensor.support_radius
                    for a in agents)
        xs = [float(a.z[0]) for a in agents]
        ys = [float(a.z[1]) for a in agents]
        i0 = max(0, int((min(xs) - reach) / g.dx))
        i1 = min(g.nx - 1, int((max(xs) + reach) / g.dx))
        j0 = max(0, int((min(ys) - reach) / g.dy))
        j1 = min(g.ny - 1, int((max(ys) + reach) / g.dy))
        scratch = np.zeros((j1 - j0 + 1, i1 - i0 + 1))
        origin = (i0 * g.dx, j0 * g.dy)

        for i, a in enumerate(agents):
            x, y, th = float(a.z[0]), float(a.z[1]), a.theta
            for h in range(p.horizon_steps):
                th += omegas[i * p.horizon_steps + h] * self.dt
                x += a.v * self.dt * math.cos(th)
                y += a.v * self.dt * math.sin(th)
                if x < 0.0 or x > g.width_m:
                    x = min(max(x, 0.0), g.width_m)
                    th = math.atan2(math.sin(th), -math.cos(th))
                if y < 0.0 or y > g.height_m:
                    y = min(max(y, 0.0), g.height_m)
                    th = math.atan2(-math.sin(th), math.cos(th))
                add_exposure(scratch, g.dx, g.dy, (x, y), th, a.sensor,
                             self.dt, origin=origin)

        m_local = occurrence.current.values[j0:j1 + 1, i0:i1 + 1]
        drop = float((m_local * -np.expm1(-scratch)).sum()) * g.cell_area
        return -drop


def make_controller(scenario):
    """Instantiate the controller a scenario asks for."""
    spec: ControllerSpec = scenario.controller
    if spec.kind == "hedac":
        return HedacController(spec.hedac)
    if spec.kind == "lawnmower":
        return LawnmowerController(spec.lawnmower, scenario.grid,
                                   scenario.prior, scenario.fleet, scenario.dt)
    if spec.kind == "smc":
        return SmcController(spec.smc, scenario.grid, scenario.prior)
    if spec.kind == "rhc":
        return RhcController(spec.rhc, scenario.grid, scenario.dt)
    raise ConfigError(f"unknown controller kind {spec.kind!r}", key="controller.kind")
