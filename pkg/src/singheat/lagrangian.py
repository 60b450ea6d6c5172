"""Dictionary between the scalar equation for u and the thin-sheet system.

The map y(x, t) satisfies y_x = M/h(y, t) and y_t = v(y, t); along it the
sheet height and velocity are h = M/u and v = primitive of u_t.  The module
also carries a deliberately low-order staggered-grid solver for the sheet
system itself (h transported conservatively upwind, v advected explicitly
with an implicit viscous solve), used only to cross-validate the transform
at the percent level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .errors import ConfigError, SolverError
from .grid import Field, Grid, antiderivative, derivative, trapezoid_integral
from .source import project_mean_zero
from .steady import SteadyState


@dataclass(frozen=True)
class SheetState:
    """Sheet height and velocity on the Eulerian y-grid at one time."""

    t: float
    grid: Grid
    h: Field
    v: Field
    M: float
    nu: float

    def __post_init__(self):
        if np.any(self.h.values <= 0):
            raise ValueError("sheet height must be positive")

    def mass(self) -> float:
        return trapezoid_integral(self.h)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("y,h,v\n")
            for y, h, v in zip(self.grid.nodes, self.h.values, self.v.values):
                fh.write(f"{y:.17g},{h:.17g},{v:.17g}\n")


@dataclass(frozen=True)
class LagrangianMap:
    """Monotone map y(x) with its derivative u = y_x = M/h(y)."""

    y_of_x: Field
    u: Field

    def __post_init__(self):
        y = self.y_of_x.values
        if np.any(np.diff(y) <= 0):
            raise ValueError("Lagrangian map must be strictly increasing")


@dataclass(frozen=True)
class SheetView:
    """Sheet quantities sampled along the Lagrangian map (indexed by x)."""

    x_grid: Grid
    y_of_x: Field
    h_on_map: Field
    v_on_map: Field
    M: float


def initial_map(h0: Field, M: float) -> LagrangianMap:
    """Solve y' = M/h0(y), y(0) = 0 on the x-grid (classical RK4).

    h0 is interpolated cubically between its nodes.  The mass constraint
    makes y(1) = 1; a deviation beyond 1e-6 means h0 and M are inconsistent.
    """
    if np.any(h0.values <= 0):
        raise ValueError("h0 must be positive")
    grid = h0.grid
    spline = CubicSpline(grid.nodes, h0.values)

    def slope(y):
        return M / float(spline(np.clip(y, 0.0, 1.0)))

    y = np.empty(grid.n)
    y[0] = 0.0
    dx = grid.dx
    for i in range(grid.n - 1):
        k1 = slope(y[i])
        k2 = slope(y[i] + 0.5 * dx * k1)
        k3 = slope(y[i] + 0.5 * dx * k2)
        k4 = slope(y[i] + dx * k3)
        y[i + 1] = y[i] + dx * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    if abs(y[-1] - 1.0) > 1e-6:
        raise ConfigError(
            f"map endpoint y(1)={y[-1]!r}: h0 mass and M are inconsistent"
        )
    y[-1] = 1.0
    u = M / spline(np.clip(y, 0.0, 1.0))
    return LagrangianMap(y_of_x=Field(grid, y), u=Field(grid, u))


def source_from_sheet(h0: Field, v0: Field, M: float, nu: float) -> Field:
    """Forcing profile induced by thin-sheet initial data.

    Uses the identity (M/h0) d/dy = d/dx along the initial map, so the
    bracket v0 + nu h0'/h0 is composed with the map and differentiated in x.
    """
    if abs(v0.values[0]) > 1e-12 or abs(v0.values[-1]) > 1e-12:
        raise ValueError("v0 must vanish at both ends")
    lmap = initial_map(h0, M)
    grid = h0.grid
    y = lmap.y_of_x.values
    h_spline = CubicSpline(grid.nodes, h0.values)
    v_spline = CubicSpline(grid.nodes, v0.values)
    bracket = v_spline(y) + nu * h_spline(y, 1) / h_spline(y)
    f0 = derivative(Field(grid, bracket))
    return project_mean_zero(f0)


def sheet_from_u(u: Field, u_t: Field, M: float) -> SheetView:
    """Reconstruct (y, h, v) along the map from u and its time derivative.

    v is integrated from v_x = u_t (v(0) = 0), which follows from y_x = u
    and y_t = v.
    """
    if np.any(u.values <= 0):
        raise ValueError("u must be positive")
    y = antiderivative(u)
    return SheetView(
        x_grid=u.grid,
        y_of_x=y,
        h_on_map=u.with_values(M / u.values),
        v_on_map=antiderivative(u_t),
        M=M,
    )


def limit_sheet(steady: SteadyState, M: float) -> SheetView:
    """Limit map and height profile of the sheet (velocity zero)."""
    u_inf = steady.u_infinity
    view = sheet_from_u(u_inf, u_inf.with_values(np.zeros(u_inf.grid.n)), M)
    y = view.y_of_x.values.copy()
    assert abs(y[-1] - 1.0) <= 1e-10
    return view


def pde_time_derivative(u: Field, f: Field, nu: float) -> Field:
    """u_t from the spatial operator, on the solver's flux stencil."""
    from .solver import _rhs

    return u.with_values(_rhs(u.values, f.values, nu, u.grid.dx))


def _tridiag_solve(lower, diag, upper, rhs):
    n = len(diag)
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, rhs)


def solve_ssm(initial: SheetState, dt: float, t_end: float,
              sample_times=None) -> list[SheetState]:
    """Validation-grade staggered-grid march of the sheet system.

    h lives on cell centers and is transported by first-order upwind fluxes
    evaluated at the velocity nodes (mass conserved to round-off); v lives on
    nodes, advected explicitly upwind and relaxed by an implicit viscous
    solve of (nu/h)(h v_y)_y with v = 0 at both ends.  The time step is
    lowered adaptively to keep the advective CFL at 0.4.
    """
    grid = initial.grid
    n = grid.n
    dx = grid.dx
    nu, M = initial.nu, initial.M
    if sample_times is None:
        sample_times = [t_end]
    sample_times = sorted(sample_times)

    # cell-center heights chosen so the cell sum reproduces the trapezoid mass
    h_nodes = initial.h.values
    hc = 0.5 * (h_nodes[:-1] + h_nodes[1:])
    v = initial.v.values.copy()
    v[0] = v[-1] = 0.0

    states: list[SheetState] = []
    t = 0.0
    min_dt = dt * 1e-6

    def emit(t_now):
        # back to nodes: interior averages; endpoint values from the parabola
        # with zero slope at the wall (consistent with h_y = 0 there)
        hn = np.empty(n)
        hn[1:-1] = 0.5 * (hc[:-1] + hc[1:])
        hn[0] = (9.0 * hc[0] - hc[1]) / 8.0
        hn[-1] = (9.0 * hc[-1] - hc[-2]) / 8.0
        states.append(
            SheetState(t=t_now, grid=grid, h=Field(grid, hn),
                       v=Field(grid, v.copy()), M=M, nu=nu)
        )

    for target in sample_times:
        while t < target - 1e-12:
            vmax = float(np.max(np.abs(v)))
            step_dt = dt if vmax == 0 else min(dt, 0.4 * dx / vmax)
            step_dt = min(step_dt, target - t)
            if step_dt < min_dt:
                raise SolverError(f"CFL floor reached at t={t:.6g}")

            # conservative upwind transport of h; v=0 at the ends gives zero flux
            flux = np.zeros(n)
            up = np.where(v[1:-1] > 0, hc[:-1], hc[1:])
            flux[1:-1] = v[1:-1] * up
            hc_new = hc - step_dt * (flux[1:] - flux[:-1]) / dx
            if np.any(hc_new <= 0):
                raise SolverError(f"sheet height lost positivity at t={t:.6g}")

            # explicit upwind advection of v
            dv_minus = np.zeros(n)
            dv_plus = np.zeros(n)
            dv_minus[1:] = (v[1:] - v[:-1]) / dx
            dv_plus[:-1] = (v[1:] - v[:-1]) / dx
            adv = np.where(v > 0, v * dv_minus, v * dv_plus)
            v_star = v - step_dt * adv
            v_star[0] = v_star[-1] = 0.0

            # implicit viscous solve on the new height field
            h_node = np.empty(n)
            h_node[1:-1] = 0.5 * (hc_new[:-1] + hc_new[1:])
            h_node[0] = hc_new[0]
            h_node[-1] = hc_new[-1]
            c = step_dt * nu / (h_node * dx**2)
            lower = np.zeros(n)
            diag = np.ones(n)
            upper = np.zeros(n)
            lower[1:-1] = -c[1:-1] * hc_new[:-1]
            upper[1:-1] = -c[1:-1] * hc_new[1:]
            diag[1:-1] = 1.0 + c[1:-1] * (hc_new[:-1] + hc_new[1:])
            v = _tridiag_solve(lower, diag, upper, v_star)
            v[0] = v[-1] = 0.0

            hc = hc_new
            t += step_dt
        emit(t)
    return states


def crosscheck_heights(ssm_state: SheetState, u: Field, u_t: Field,
                       M: float) -> float:
    """Max relative height mismatch between the direct sheet solve and M/u.

    The SSM height is interpolated at the map points y(x, t) reconstructed
    from u, and compared with h = M/u there.
    """
    view = sheet_from_u(u, u_t, M)
    h_ssm = np.interp(view.y_of_x.values, ssm_state.grid.nodes,
                      ssm_state.h.values)
    h_u = view.h_on_map.values
    return float(np.max(np.abs(h_ssm - h_u) / np.abs(h_u)))
