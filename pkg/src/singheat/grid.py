"""Uniform 1D grid on [0, 1] with trapezoid quadrature and discrete calculus.

Everything downstream (profiles, norms, energies) lives on node-centered
fields over this grid, so the quadrature and differencing conventions here
fix the discrete conservation structure of the whole package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid


@dataclass(frozen=True)
class Grid:
    """Uniform node-centered grid on [0, 1] with n >= 3 nodes."""

    n: int
    dx: float = field(init=False)
    nodes: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"grid needs at least 3 nodes, got n={self.n}")
        object.__setattr__(self, "dx", 1.0 / (self.n - 1))
        nodes = np.linspace(0.0, 1.0, self.n)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)


@dataclass(frozen=True)
class Field:
    """Real nodal samples on a Grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise ValueError(
                f"field has {values.shape} values for a grid of {self.grid.n} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite values")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        return cls(grid, fn(grid.nodes))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "Field":
        return cls(grid, np.full(grid.n, float(value)))

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)

    def __add__(self, other):
        return self.with_values(self.values + _vals(other))

    def __sub__(self, other):
        return self.with_values(self.values - _vals(other))

    def __mul__(self, other):
        return self.with_values(self.values * _vals(other))

    __rmul__ = __mul__


def _vals(x):
    return x.values if isinstance(x, Field) else x


def trapezoid_integral(g: Field) -> float:
    """Composite trapezoid rule for the integral over [0, 1].

    Exact for piecewise-linear fields; this is the quadrature against which
    mass conservation and all mean-zero projections are defined.
    """
    return float(np.trapezoid(g.values, dx=g.grid.dx))


def derivative(g: Field) -> Field:
    """Second-order derivative: central interior, one-sided at the endpoints."""
    return g.with_values(np.gradient(g.values, g.grid.dx, edge_order=2))


def antiderivative(g: Field) -> Field:
    """Cumulative trapezoid primitive with result(0) = 0."""
    return g.with_values(
        cumulative_trapezoid(g.values, dx=g.grid.dx, initial=0.0)
    )


def l2_norm(g: Field) -> float:
    return float(np.sqrt(trapezoid_integral(g * g)))


def h1_norm(g: Field) -> float:
    gx = derivative(g)
    return float(np.sqrt(trapezoid_integral(g * g) + trapezoid_integral(gx * gx)))


def write_field_csv(path, g: Field, header=("x", "value")) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for x, v in zip(g.grid.nodes, g.values):
            fh.write(f"{x:.17g},{v:.17g}\n")


def read_field_csv(path) -> Field:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    x, v = data[:, 0], data[:, 1]
    grid = Grid(len(x))
    if not np.allclose(x, grid.nodes, atol=1e-12):
        raise ValueError(f"{path}: nodes are not a uniform grid on [0, 1]")
    return Field(grid, v)
