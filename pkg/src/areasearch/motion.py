"""Agent state and single-step motion models.

Two models share one contract: given a desired unit direction (or None for
"keep heading"), advance the agent by one step of length v * dt and keep it
inside the domain. The kinematic model turns instantly; the Dubins model
bounds the turn rate by v / r_turn.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .grid import GridSpec, Vec2
from .sensing import SensorModel

MOTION_MODELS = ("kinematic", "dubins")


@dataclass(frozen=True)
class AgentState:
    """Pose plus the motion and sensing parameters of one search agent."""

    z: np.ndarray
    theta: float
    v: float
    sensor: SensorModel
    r_turn: float | None = None
    model: str = "dubins"

    def __post_init__(self):
        if self.model not in MOTION_MODELS:
            raise ValueError(f"unknown motion model {self.model!r}")
        if self.v <= 0:
            raise ValueError("agent speed must be positive")
        if self.model == "dubins" and not (self.r_turn and self.r_turn > 0):
            raise ValueError("dubins model needs a positive turning radius")
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float))

    @property
    def omega_max(self) -> float:
        """Maximal turn rate; unbounded for the kinematic model."""
        if self.r_turn and self.r_turn > 0:
            return self.v / self.r_turn
        return math.inf

    def heading_vector(self) -> Vec2:
        return np.array([math.cos(self.theta), math.sin(self.theta)])


def signed_turn(theta: float, direction) -> float:
    """Signed angle from the heading at ``theta`` to ``direction``, in (-pi, pi]."""
    hx, hy = math.cos(theta), math.sin(theta)
    dx, dy = float(direction[0]), float(direction[1])
    return math.atan2(hx * dy - hy * dx, hx * dx + hy * dy)


def step_kinematic(a: AgentState, direction, dt: float,
                   domain: GridSpec) -> AgentState:
    """Instant turn toward the desired direction, then straight advance."""
    if direction is None:
        theta = a.theta
    else:
        theta = math.atan2(float(direction[1]), float(direction[0]))
    z = a.z + a.v * dt * np.array([math.cos(theta), math.sin(theta)])
    return enforce_boundary(replace(a, z=z, theta=theta), domain)


def step_dubins(a: AgentState, direction, dt: float,
                domain: GridSpec) -> AgentState:
    """Turn-rate-limited step: clamp the aspired turn, advance on the new heading."""
    if direction is None:
        omega = 0.0
    else:
        aspired = signed_turn(a.theta, direction) / dt
        omega = math.copysign(min(abs(aspired), a.omega_max), aspired)
    theta = a.theta + omega * dt
    z = a.z + a.v * dt * np.array([math.cos(theta), math.sin(theta)])
    return enforce_boundary(replace(a, z=z, theta=theta), domain)


def step_agent(a: AgentState, direction, dt: float, domain: GridSpec) -> AgentState:
    if a.model == "kinematic":
        return step_kinematic(a, direction, dt, domain)
    return step_dubins(a, direction, dt, domain)


def enforce_boundary(a: AgentState, domain: GridSpec) -> AgentState:
    """Clamp the position into the domain, reflecting the heading on contact."""
    x, y = float(a.z[0]), float(a.z[1])
    hx, hy = math.cos(a.theta), math.sin(a.theta)
    hit = False
    if x < 0.0:
        x, hx, hit = 0.0, -hx, True
    elif x > domain.width_m:
        x, hx, hit = domain.width_m, -hx, True
    if y < 0.0:
        y, hy, hit = 0.0, -hy, True
    elif y > domain.height_m:
        y, hy, hit = domain.height_m, -hy, True
    if not hit:
        return a
    return replace(a, z=np.array([x, y]), theta=math.atan2(hy, hx))
