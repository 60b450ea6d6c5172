"""Admissibility constants and predicted decay rates of the two theorems.

The homogeneous theorem needs R0 < 1 and nu > 2*P0/(1 - R0) and predicts the
rate lambda = pi^2 [nu(1-R0) - 2*P0]^2 / nu.  The inhomogeneous theorem needs
nu above the threshold nu_plus, yields pointwise bounds A- <= u <= A+, and
predicts the rate B = nu pi^2 / (2 A+^2) with prefactor
C = nu^{-1/2} (A-^{-2} + A+^{-2}).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import HypothesisError
from .grid import Field, derivative, l2_norm
from .source import SourceTerm, compute_N_infinity, compute_P0


def compute_R0(u0: Field) -> float:
    """L2 norm of the derivative of 1/u0."""
    if np.any(u0.values <= 0):
        raise ValueError("u0 must be positive nodewise")
    return l2_norm(derivative(u0.with_values(1.0 / u0.values)))


def compute_nu_plus(R0: float, P0: float, N_inf: float) -> float:
    """Viscosity threshold of the inhomogeneous theorem."""
    if R0 >= 1:
        raise HypothesisError(f"R0={R0} must be below 1")
    disc = (2 * N_inf + P0 * (1 + R0)) ** 2 - N_inf**2 * (1 - R0**2)
    # (2N + P(1+R))^2 >= (2N)^2 >= N^2 (1 - R^2) for R in [0, 1)
    assert disc >= 0
    return (2 * N_inf + (1 + R0) * P0 + math.sqrt(disc)) / (1 - R0**2)


def _pointwise_bracket(R0: float, P0: float, N_inf: float, nu: float) -> float:
    s = N_inf + P0
    return 2 * N_inf + P0 + math.sqrt(
        s**2 + 2 * s * N_inf + nu**2 * R0**2 + 2 * nu * P0 * R0
    )


def compute_A_bounds(R0, P0, N_inf, nu):
    """Uniform pointwise solution bounds (A_minus, A_plus)."""
    if R0 >= 1 or nu <= compute_nu_plus(R0, P0, N_inf):
        raise HypothesisError(
            f"inhomogeneous hypotheses fail: R0={R0}, nu={nu} "
            f"<= nu_plus={compute_nu_plus(R0, P0, N_inf) if R0 < 1 else float('inf')}"
        )
    k = _pointwise_bracket(R0, P0, N_inf, nu)
    return nu / (nu + k), nu / (nu - k)


def homogeneous_rate(R0: float, P0: float, nu: float) -> float:
    """Decay-rate exponent of the homogeneous H1 estimate."""
    if R0 >= 1 or nu <= 2 * P0 / (1 - R0):
        raise HypothesisError(
            f"homogeneous hypotheses fail: R0={R0}, nu={nu} <= {2 * P0 / (1 - R0) if R0 < 1 else float('inf')}"
        )
    return math.pi**2 * (nu * (1 - R0) - 2 * P0) ** 2 / nu


@dataclass(frozen=True)
class TheoremConstants:
    """All constants of both theorems for one data set (u0, f, nu)."""

    R0: float
    P0: float
    N_infinity: float
    nu: float
    nu_plus: float
    hom_ok: bool
    inhom_ok: bool
    A_minus: float = float("nan")
    A_plus: float = float("nan")
    lambda_hom: float = float("nan")
    B: float = float("nan")
    C_big: float = float("nan")

    @classmethod
    def from_values(cls, R0, P0, N_inf, nu) -> "TheoremConstants":
        if R0 < 0 or P0 < 0 or N_inf < 0 or nu <= 0:
            raise ValueError("constants must be nonnegative and nu positive")
        nu_plus = compute_nu_plus(R0, P0, N_inf) if R0 < 1 else float("inf")
        hom_ok = bool(R0 < 1 and nu > 2 * P0 / (1 - R0))
        inhom_ok = bool(R0 < 1 and nu > nu_plus)
        fields = dict(
            R0=R0, P0=P0, N_infinity=N_inf, nu=nu, nu_plus=nu_plus,
            hom_ok=hom_ok, inhom_ok=inhom_ok,
        )
        if hom_ok:
            fields["lambda_hom"] = homogeneous_rate(R0, P0, nu)
        if inhom_ok:
            a_minus, a_plus = compute_A_bounds(R0, P0, N_inf, nu)
            fields["A_minus"] = a_minus
            fields["A_plus"] = a_plus
            fields["B"] = nu * math.pi**2 / (2 * a_plus**2)
            fields["C_big"] = (1 / a_minus**2 + 1 / a_plus**2) / math.sqrt(nu)
        return cls(**fields)

    @classmethod
    def from_problem(cls, u0: Field, src: SourceTerm, nu: float,
                     mode: str = "homogeneous") -> "TheoremConstants":
        """Evaluate the constants for initial data and a forcing.

        The caller picks the theorem mode; a time-dependent source is
        rejected in homogeneous mode because the two admissibility sets
        differ and must never be silently swapped.
        """
        if mode not in ("homogeneous", "inhomogeneous"):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == "homogeneous" and src.time_dependent:
            raise HypothesisError(
                "time-dependent source passed in homogeneous theorem mode"
            )
        R0 = compute_R0(u0)
        P0 = compute_P0(src)
        if mode == "homogeneous":
            N_inf = 0.0
        else:
            N_inf, _ = compute_N_infinity(src)
        return cls.from_values(R0, P0, N_inf, nu)

    def homogeneous_bounds(self):
        """Pointwise solution bounds of the homogeneous theorem."""
        if not self.hom_ok:
            raise HypothesisError("homogeneous hypotheses do not hold")
        lo = self.nu / (self.nu * (1 + self.R0) + 2 * self.P0)
        hi = self.nu / (self.nu * (1 - self.R0) - 2 * self.P0)
        return lo, hi

    def as_dict(self) -> dict:
        return {
            "R0": self.R0,
            "P0": self.P0,
            "N_infinity": self.N_infinity,
            "nu": self.nu,
            "nu_plus": self.nu_plus,
            "A_minus": self.A_minus,
            "A_plus": self.A_plus,
            "lambda_hom": self.lambda_hom,
            "B": self.B,
            "C_big": self.C_big,
            "hypotheses": {"hom": self.hom_ok, "inhom": self.inhom_ok},
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=2, default=float)
            fh.write("\n")
