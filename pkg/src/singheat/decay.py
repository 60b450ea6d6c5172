"""Empirical decay rates and the proved exponential envelopes.

Fits are ordinary least squares on log(error) over a window that starts once
the error has halved and stops above a noise floor, so neither the initial
transient nor the discretization plateau pollutes the slope.  Envelope checks
compare the recorded H1 error of 1/u against the theorems' right-hand sides
with a 5% tolerance absorbing discretization bias.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import HypothesisError, SolverError
from .constants import TheoremConstants
from .grid import Field, h1_norm, l2_norm
from .solver import SimulationRecord
from .source import SourceTerm

ENVELOPE_TOL = 0.05
DEFAULT_FLOOR = 1e-9


@dataclass(frozen=True)
class DecayReport:
    fitted_rate: float
    fitted_prefactor: float
    theory_rate: float
    envelope_ok: bool
    envelope_margin: float
    fit_window: tuple
    floor: float

    def as_dict(self) -> dict:
        return {
            "fitted_rate": self.fitted_rate,
            "fitted_prefactor": self.fitted_prefactor,
            "theory_rate": self.theory_rate,
            "envelope_ok": self.envelope_ok,
            "envelope_margin": self.envelope_margin,
            "fit_window": list(self.fit_window),
            "floor": self.floor,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=2, default=float)
            fh.write("\n")


def fit_rate(times, errors, floor: float = DEFAULT_FLOOR):
    """Least-squares exponential fit; returns (rate, prefactor, window).

    The window runs from the first sample at or below half the initial error
    to the last sample above the floor.
    """
    times = np.asarray(times, dtype=float)
    errors = np.asarray(errors, dtype=float)
    above = errors > floor
    half = errors <= 0.5 * errors[0]
    start_candidates = np.nonzero(half & above)[0]
    if len(start_candidates) == 0:
        raise SolverError("no samples below half the initial error and above the floor")
    start = start_candidates[0]
    end = np.nonzero(above)[0][-1]
    sel = slice(start, end + 1)
    if end + 1 - start < 10:
        raise SolverError(
            f"only {end + 1 - start} samples in the fit window, need at least 10"
        )
    slope, intercept = np.polyfit(times[sel], np.log(errors[sel]), 1)
    return -float(slope), float(np.exp(intercept)), (float(times[start]), float(times[end]))


def _envelope_report(times, observed, bound, theory_rate, floor, tol=ENVELOPE_TOL):
    observed = np.asarray(observed, dtype=float)
    bound = np.asarray(bound, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = observed / ((1 + tol) * bound)
    # samples at or below the noise floor carry no envelope information
    # (they also dodge 0/0 on degenerate runs that start at the steady state)
    ratios = np.where(observed <= floor, 0.0, ratios)
    margin = float(np.max(ratios))
    try:
        rate, prefactor, window = fit_rate(times, observed, floor)
    except SolverError:
        rate, prefactor, window = float("nan"), float("nan"), (np.nan, np.nan)
    return DecayReport(
        fitted_rate=rate,
        fitted_prefactor=prefactor,
        theory_rate=theory_rate,
        envelope_ok=bool(margin <= 1.0),
        envelope_margin=margin,
        fit_window=window,
        floor=floor,
    )


def check_homogeneous_envelope(record: SimulationRecord,
                               consts: TheoremConstants,
                               floor: float = DEFAULT_FLOOR,
                               rate: float | None = None) -> DecayReport:
    """H1 error of 1/u against its initial value times exp(-lambda t)."""
    if not consts.hom_ok:
        raise HypothesisError("homogeneous theorem hypotheses do not hold")
    lam = consts.lambda_hom if rate is None else rate
    times = np.asarray(record.times)
    err = np.asarray(record.h1_error_inverse)
    bound = err[0] * np.exp(-lam * times)
    return _envelope_report(times, err, bound, lam, floor)


def _forcing_gap_sq(record: SimulationRecord, src: SourceTerm) -> np.ndarray:
    f_inf = src.f_limit()
    return np.array(
        [l2_norm(src.evaluate(t) - f_inf) ** 2 for t in record.times]
    )


def check_inhomogeneous_envelope(record: SimulationRecord,
                                 consts: TheoremConstants,
                                 src: SourceTerm,
                                 floor: float = DEFAULT_FLOOR) -> DecayReport:
    """Literal inhomogeneous H1 envelope with rate B and prefactor C."""
    if not consts.inhom_ok:
        raise HypothesisError("inhomogeneous theorem hypotheses do not hold")
    times = np.asarray(record.times)
    err = np.asarray(record.h1_error_inverse)
    gap_sq = _forcing_gap_sq(record, src)
    weighted = _exp_weighted_cumulative(times, gap_sq, consts.B)
    bound = np.exp(-consts.B * times) * err[0] + consts.C_big * weighted
    return _envelope_report(times, err, bound, consts.B, floor)


def check_gradient_energy_envelope(record: SimulationRecord,
                                   consts: TheoremConstants,
                                   src: SourceTerm,
                                   floor: float = DEFAULT_FLOOR) -> DecayReport:
    """Squared-gradient envelope: the inequality the energy argument yields.

    Twice the relative energy (the squared L2 norm of the gradient of
    q - q_inf) is bounded by e^{-Bt} [initial value + integral of
    (A-^{-2} + A+^{-2}) ||f - f_inf||_2^2 e^{Bs} ds].
    """
    if not consts.inhom_ok:
        raise HypothesisError("inhomogeneous theorem hypotheses do not hold")
    times = np.asarray(record.times)
    wx_sq = 2.0 * np.asarray(record.relative_energy)
    gap_sq = _forcing_gap_sq(record, src)
    d_coeff = 1 / consts.A_minus**2 + 1 / consts.A_plus**2
    weighted = _exp_weighted_cumulative(times, gap_sq, consts.B)
    bound = np.exp(-consts.B * times) * wx_sq[0] + d_coeff * weighted
    return _envelope_report(times, wx_sq, bound, consts.B, floor)


def _exp_weighted_cumulative(times, gap_sq, B):
    """e^{-Bt} * cumulative trapezoid of gap_sq * e^{Bs}, overflow-safe."""
    times = np.asarray(times, dtype=float)
    pieces = 0.5 * (
        gap_sq[1:] * np.exp(-B * (times[-1] - times[1:]))
        + gap_sq[:-1] * np.exp(-B * (times[-1] - times[:-1]))
    ) * np.diff(times)
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    return cum * np.exp(-B * (times - times[-1]))


def check_direct_convergence(record: SimulationRecord,
                             theory_rate: float,
                             floor: float = DEFAULT_FLOOR) -> DecayReport:
    """Fit the decay of ||u - u_inf||_H1 from the recorded snapshots.

    The corollaries' prefactors are not explicit, so only the rate is
    checked (observed at least the theory rate up to fit tolerance); the
    observed prefactor is reported.
    """
    u_inf = record.steady.u_infinity
    times = np.asarray(record.snapshot_times)
    err = np.array([h1_norm(u - u_inf) for u in record.snapshots])
    rate, prefactor, window = fit_rate(times, err, floor)
    return DecayReport(
        fitted_rate=rate,
        fitted_prefactor=prefactor,
        theory_rate=theory_rate,
        envelope_ok=bool(rate >= 0.95 * theory_rate),
        envelope_margin=float(theory_rate / rate) if rate > 0 else float("inf"),
        fit_window=window,
        floor=floor,
    )


def envelope_csv(path, times, bound, observed) -> None:
    with open(path, "w") as fh:
        fh.write("t,bound,observed\n")
        for t, b, o in zip(times, bound, observed):
            fh.write(f"{t:.17g},{b:.17g},{o:.17g}\n")
