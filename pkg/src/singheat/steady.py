"""Explicit steady states of the singular heat equation.

The limit profile is u_inf = nu / (F2 + C), where F2 is the double primitive
of the forcing and C is the unique constant making the profile integrate to
one.  G(C) = integral of (F2 + C)^-1 is strictly decreasing, so the constant
is found by guarded bisection; the profile is always rebuilt from this closed
form, never by time-integrating the PDE.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import NoRootError, SingularSteadyStateError
from .grid import (
    Field,
    antiderivative,
    derivative,
    l2_norm,
    trapezoid_integral,
    write_field_csv,
)
from .source import SourceTerm

_CNU_TOL = 1e-12
_MAX_BISECT = 200


@dataclass(frozen=True)
class SteadyState:
    """Limit profile with its normalization constant and diagnostics."""

    u_infinity: Field
    C_nu: float
    nu: float
    F2: Field
    residual_l2: float
    mass_defect: float

    def q_infinity(self) -> Field:
        """Minimizer of the energy functional, sqrt(nu)/u_inf."""
        return self.u_infinity.with_values(
            np.sqrt(self.nu) / self.u_infinity.values
        )

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(
                {
                    "C_nu": self.C_nu,
                    "nu": self.nu,
                    "residual_l2": self.residual_l2,
                    "mass_defect": self.mass_defect,
                },
                fh,
                indent=2,
            )
            fh.write("\n")

    def profile_csv(self, path) -> None:
        write_field_csv(path, self.u_infinity, header=("x", "u_infinity"))


def double_primitive(f0: Field) -> Field:
    """Twice-iterated primitive of the forcing, vanishing at x = 0."""
    return antiderivative(antiderivative(f0))


def _mass_integral(F2: Field, c: float) -> float:
    return trapezoid_integral(F2.with_values(1.0 / (F2.values + c)))


def solve_cnu(F2: Field, nu: float) -> float:
    """Root of integral((F2 + C)^-1) = 1/nu by bisection.

    The integrand is singular as C approaches -min(F2); the bracket starts
    just above that end (where G is large) and doubles outward until G drops
    below 1/nu.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    target = 1.0 / nu
    fmin = float(np.min(F2.values))
    span = float(np.ptp(F2.values))
    scale = max(span, 1.0)
    lo = -fmin + 1e-3 * scale
    # walk toward the singular end until G(lo) exceeds the target
    for _ in range(60):
        if _mass_integral(F2, lo) > target:
            break
        lo = -fmin + 0.5 * (lo + fmin)
        if lo + fmin < 1e-300:
            raise NoRootError("mass integral never exceeds 1/nu near the bracket end")
    else:
        raise NoRootError("mass integral never exceeds 1/nu near the bracket end")
    hi = lo + scale
    for _ in range(200):
        if _mass_integral(F2, hi) < target:
            break
        hi *= 2.0
    else:
        raise NoRootError("mass integral never drops below 1/nu")
    g_lo = _mass_integral(F2, lo)
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        g_mid = _mass_integral(F2, mid)
        if abs(g_mid - target) <= _CNU_TOL:
            return mid
        # G is strictly decreasing in C on the bracket
        assert g_mid < g_lo + 1e-15
        if g_mid > target:
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pde_residual(u: Field, f: Field, nu: float) -> float:
    """L2 norm of the discrete nu*(u^-2 u_x)_x + f (diagnostic only)."""
    ux = derivative(u)
    flux = u.with_values(ux.values / u.values**2)
    return l2_norm(derivative(flux) * nu + f)


def steady_profile(src: SourceTerm, nu: float, which: str = "limit") -> SteadyState:
    """Steady state for the source's initial or limit profile."""
    if which == "initial":
        f = src.f_initial()
    elif which == "limit":
        f = src.f_limit()
    else:
        raise ValueError(f"which must be 'initial' or 'limit', got {which!r}")
    F2 = double_primitive(f)
    c = solve_cnu(F2, nu)
    denom = F2.values + c
    if np.any(denom <= 0):
        raise SingularSteadyStateError("steady-state denominator loses positivity")
    u_inf = F2.with_values(nu / denom)
    return SteadyState(
        u_infinity=u_inf,
        C_nu=c,
        nu=nu,
        F2=F2,
        residual_l2=pde_residual(u_inf, f, nu),
        mass_defect=abs(trapezoid_integral(u_inf) - 1.0),
    )
