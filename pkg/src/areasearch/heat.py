"""Stationary heat equation for the search potential.

Solves  alpha * lap(u) = beta * u - m  with zero-Neumann walls, i.e. the SPD
system (beta I - alpha L) u = m, where L is the 5-point Laplacian with
mirror-ghost boundary closure. The Laplacian acts on domain-normalized
coordinates (lengths divided by the longest domain side), so alpha and beta
are dimensionless knobs that transfer across domain sizes; alpha/beta sets
the squared interaction range as a fraction of the domain.

On a uniform cell-centered grid the mirror-ghost Neumann operator is exactly
diagonalized by the DCT-II cosine modes, so the solve is spectral and direct:
machine-precision accurate, deterministic, and fast enough to run inside the
per-step control loop without warm starts. A final constant shift pins the
discrete balance identity beta * int(u) = int(m) to the last bit (the
Laplacian annihilates constants under mirror ghosts).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import dctn, idctn

from .errors import NumericDomainError, SolverFailureError
from .grid import GridSpec, ScalarField, gradient

# |grad u| below this fraction of max|u| counts as a degenerate direction.
DEGENERATE_GRAD_RATIO = 1e-12


@dataclass(frozen=True)
class HedacParams:
    """Tunable coefficients of the potential-field control."""

    alpha: float = 0.03
    beta: float = 2.0
    solver_tol: float = 1e-6
    max_iters: int | None = None

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")
        if not (0.0 < self.solver_tol < 1.0):
            raise ValueError("solver_tol must lie in (0, 1)")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class PotentialField:
    """A solved potential with the residual actually achieved."""

    field: ScalarField
    residual: float
    iters: int


def _normalized_spacings(spec: GridSpec) -> tuple[float, float]:
    scale = max(spec.width_m, spec.height_m)
    return spec.dx / scale, spec.dy / scale


def apply_operator(values: np.ndarray, spec: GridSpec, alpha: float,
                   beta: float) -> np.ndarray:
    """(beta I - alpha L) applied to a field array, mirror-ghost walls."""
    hx, hy = _normalized_spacings(spec)
    p = np.pad(values, 1, mode="edge")
    lap = ((p[1:-1, :-2] - 2.0 * values + p[1:-1, 2:]) / (hx * hx)
           + (p[:-2, 1:-1] - 2.0 * values + p[2:, 1:-1]) / (hy * hy))
    return beta * values - alpha * lap


@lru_cache(maxsize=16)
def _mode_symbol(spec: GridSpec, alpha: float, beta: float) -> np.ndarray:
    """Operator eigenvalues on the DCT-II modes of the grid."""
    hx, hy = _normalized_spacings(spec)
    lx = (2.0 - 2.0 * np.cos(np.pi * np.arange(spec.nx) / spec.nx)) / (hx * hx)
    ly = (2.0 - 2.0 * np.cos(np.pi * np.arange(spec.ny) / spec.ny)) / (hy * hy)
    return beta + alpha * (ly[:, None] + lx[None, :])


def solve_potential(m: ScalarField, params: HedacParams,
                    warm_start: PotentialField | None = None) -> PotentialField:
    """Solve the potential for a nonnegative source m.

    ``warm_start`` is accepted for interface stability but the direct solve
    does not need it; results are identical either way.
    """
    v = m.values
    if not np.all(np.isfinite(v)):
        raise NumericDomainError("source field contains non-finite values")
    if np.any(v < 0):
        raise NumericDomainError("source field must be nonnegative")
    spec = m.spec
    if not v.any():
        return PotentialField(ScalarField(spec, np.zeros_like(v)), 0.0, 0)

    lam = _mode_symbol(spec, params.alpha, params.beta)
    u = idctn(dctn(v, type=2, norm="ortho") / lam, type=2, norm="ortho")

    # Pin the k=0 balance mode exactly: beta * sum(u) = sum(m).
    u += (v.sum() / params.beta - u.sum()) / spec.n_nodes

    r = v - apply_operator(u, spec, params.alpha, params.beta)
    residual = float(np.linalg.norm(r) / np.linalg.norm(v))
    if residual > params.solver_tol:
        raise SolverFailureError(
            f"potential solve residual {residual:.3e} exceeds tolerance "
            f"{params.solver_tol:.1e}", residual=residual, iters=1)
    return PotentialField(ScalarField(spec, u), residual, 1)


def degenerate_threshold(u: PotentialField) -> float:
    return DEGENERATE_GRAD_RATIO * float(np.abs(u.field.values).max())


def direction_field(u: PotentialField) -> tuple[ScalarField, ScalarField]:
    """Per-node unit gradient of the potential.

    Nodes where |grad u| falls below the degeneracy threshold get the zero
    vector, the explicit degenerate marker (all other nodes are unit length).
    """
    gx, gy = gradient(u.field)
    mag = np.hypot(gx.values, gy.values)
    eps = max(degenerate_threshold(u), np.finfo(float).tiny)
    live = mag >= eps
    safe = np.where(live, mag, 1.0)
    ux = np.where(live, gx.values / safe, 0.0)
    uy = np.where(live, gy.values / safe, 0.0)
    return ScalarField(u.field.spec, ux), ScalarField(u.field.spec, uy)
