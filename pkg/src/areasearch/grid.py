"""Uniform rectangular grid with cell-centered scalar fields.

Samples live at cell centers, stored row-major with y varying slowest
(``values[j, i]`` is the node at ``x = (i + 0.5) dx``, ``y = (j + 0.5) dy``).
Provides midpoint quadrature, bilinear interpolation and finite-difference
gradients, which every other module builds on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegeneratePriorError,
    GridMismatchError,
    NumericDomainError,
    OutOfDomainError,
)

# Points and direction vectors are plain length-2 float arrays throughout.
Vec2 = np.ndarray


def vec2(x: float, y: float) -> Vec2:
    return np.array([float(x), float(y)])


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a uniform rectangular grid over [0, width] x [0, height]."""

    width_m: float
    height_m: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid needs at least two cells per axis")
        if not (self.width_m > 0 and self.height_m > 0):
            raise ValueError("domain extents must be positive")

    @property
    def dx(self) -> float:
        return self.width_m / self.nx

    @property
    def dy(self) -> float:
        return self.height_m / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny

    def x_centers(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.dx

    def y_centers(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.dy

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) node-center coordinate arrays, each of shape (ny, nx)."""
        return np.meshgrid(self.x_centers(), self.y_centers())

    def contains(self, p) -> bool:
        return 0.0 <= p[0] <= self.width_m and 0.0 <= p[1] <= self.height_m


@dataclass
class ScalarField:
    """A scalar quantity sampled at the grid's cell centers."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.spec.ny, self.spec.nx):
            raise GridMismatchError(
                f"values shape {v.shape} does not match grid ({self.spec.ny}, {self.spec.nx})"
            )
        self.values = v

    def copy(self) -> "ScalarField":
        return ScalarField(self.spec, self.values.copy())


def zeros_field(spec: GridSpec) -> ScalarField:
    return ScalarField(spec, np.zeros((spec.ny, spec.nx)))


def full_field(spec: GridSpec, value: float) -> ScalarField:
    return ScalarField(spec, np.full((spec.ny, spec.nx), float(value)))


def field_from_function(spec: GridSpec, fn) -> ScalarField:
    """Evaluate ``fn(X, Y)`` on the node-center mesh."""
    X, Y = spec.mesh()
    return ScalarField(spec, np.asarray(fn(X, Y), dtype=float))


def integrate(field: ScalarField) -> float:
    """Midpoint-rule integral of the field over the domain."""
    v = field.values
    if not np.all(np.isfinite(v)):
        raise NumericDomainError("field contains non-finite values")
    return float(v.sum() * field.spec.cell_area)


def interpolate(field: ScalarField, p) -> float:
    """Bilinear interpolation at a point inside the domain rectangle.

    The point is clamped to the hull of cell centers first, so queries in the
    half-cell rim next to the boundary return the nearest-edge stencil value.
    """
    g = field.spec
    x, y = float(p[0]), float(p[1])
    if not (0.0 <= x <= g.width_m and 0.0 <= y <= g.height_m):
        raise OutOfDomainError(f"point ({x}, {y}) outside domain "
                               f"[0, {g.width_m}] x [0, {g.height_m}]")
    fx = min(max(x / g.dx - 0.5, 0.0), g.nx - 1.0)
    fy = min(max(y / g.dy - 0.5, 0.0), g.ny - 1.0)
    i0 = min(int(fx), g.nx - 2)
    j0 = min(int(fy), g.ny - 2)
    tx = fx - i0
    ty = fy - j0
    v = field.values
    return float(
        (1 - tx) * (1 - ty) * v[j0, i0]
        + tx * (1 - ty) * v[j0, i0 + 1]
        + (1 - tx) * ty * v[j0 + 1, i0]
        + tx * ty * v[j0 + 1, i0 + 1]
    )


def gradient(field: ScalarField) -> tuple[ScalarField, ScalarField]:
    """(df/dx, df/dy): central differences inside, one-sided at the boundary."""
    gy, gx = np.gradient(field.values, field.spec.dy, field.spec.dx, edge_order=1)
    return ScalarField(field.spec, gx), ScalarField(field.spec, gy)


def scale_to_unit_mass(field: ScalarField) -> ScalarField:
    """Rescale a nonnegative field so it integrates to one."""
    v = field.values
    if np.any(v < 0):
        raise DegeneratePriorError("field has negative values; cannot normalize")
    total = integrate(field)
    if total <= 0.0:
        raise DegeneratePriorError("field has zero total mass; cannot normalize")
    return ScalarField(field.spec, v / total)


def save_field(field: ScalarField, path) -> None:
    """Write the snapshot format: header ``nx ny dx dy``, then row-major values."""
    g = field.spec
    with open(path, "w") as fh:
        fh.write(f"{g.nx} {g.ny} {float(g.dx)!r} {float(g.dy)!r}\n")
        for row in field.values:
            fh.write(" ".join(repr(float(x)) for x in row))
            fh.write("\n")


def load_field(path) -> ScalarField:
    with open(path) as fh:
        header = fh.readline().split()
        nx, ny = int(header[0]), int(header[1])
        dx, dy = float(header[2]), float(header[3])
        data = np.loadtxt(fh).reshape(ny, nx)
    spec = GridSpec(width_m=nx * dx, height_m=ny * dy, nx=nx, ny=ny)
    return ScalarField(spec, data)


def unit(v) -> Vec2 | None:
    """Normalize a vector; None for (near-)zero input."""
    n = math.hypot(float(v[0]), float(v[1]))
    if n == 0.0:
        return None
    return np.array([v[0] / n, v[1] / n])
