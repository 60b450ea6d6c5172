"""Forcing terms f(x, t) with zero spatial mean, and their size functionals.

Every evaluated field is mean-zero projected against the trapezoid quadrature:
nodal sampling of an analytically mean-zero function is not discretely
mean-zero, and the discrete zero mean is what makes the solver conserve mass
exactly.  The functionals P0, P(t), N(t), N_infinity computed here are the
data constants entering the convergence theorems.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import Field, Grid, antiderivative, l2_norm, trapezoid_integral


def project_mean_zero(g: Field) -> Field:
    """Subtract the trapezoid mean so the result integrates to zero exactly."""
    return g.with_values(g.values - trapezoid_integral(g))


class SourceTerm(ABC):
    """Time-dependent forcing with declared initial and limit profiles."""

    kind: str = "abstract"

    def __init__(self, grid: Grid):
        self.grid = grid

    @abstractmethod
    def _raw(self, t: float) -> np.ndarray:
        """Nodal samples of f(., t) before mean-zero projection."""

    @property
    def time_dependent(self) -> bool:
        return True

    def evaluate(self, t: float) -> Field:
        if t < 0:
            raise ValueError(f"source evaluated at negative time t={t}")
        return project_mean_zero(Field(self.grid, self._raw(t)))

    def f_initial(self) -> Field:
        return self.evaluate(0.0)

    def f_limit(self) -> Field:
        """Strong L2 limit of f(., t) as t -> infinity."""
        raise ConfigError(f"source kind '{self.kind}' declares no limit profile")

    def dfdt(self, t: float) -> np.ndarray:
        """Nodal samples of the time derivative (one-sided off kinks)."""
        raise ConfigError(f"source kind '{self.kind}' has no time derivative")

    #: times where f(., t) is not smooth in t; the N-quadrature splits there
    breakpoints: tuple = ()

    def tail_norm_integral(self, t_cut: float):
        """Closed-form tail of the N-integral past t_cut, or None."""
        return None


class HomogeneousSource(SourceTerm):
    """Time-independent forcing f(x, t) = f0(x)."""

    kind = "homogeneous"

    def __init__(self, f0: Field):
        super().__init__(f0.grid)
        self._f0 = project_mean_zero(f0)

    @property
    def time_dependent(self) -> bool:
        return False

    def _raw(self, t: float) -> np.ndarray:
        return self._f0.values

    def f_limit(self) -> Field:
        return self._f0

    def dfdt(self, t: float) -> np.ndarray:
        return np.zeros(self.grid.n)

    def tail_norm_integral(self, t_cut: float):
        return 0.0


class CosineStaticSource(HomogeneousSource):
    """f(x, t) = amplitude * cos(pi x), time-independent."""

    kind = "cosine_static"

    def __init__(self, grid: Grid, amplitude: float):
        self.amplitude = float(amplitude)
        super().__init__(Field(grid, amplitude * np.cos(np.pi * grid.nodes)))


class CosineDecaySource(SourceTerm):
    """f(x, t) = min(1, 1/t) cos(pi x), decaying to zero.

    f is only piecewise smooth at t = 1; the time derivative is taken
    piecewise (0 for t < 1, -cos(pi x)/t^2 for t > 1).
    """

    kind = "cosine_decay"
    breakpoints = (1.0,)

    def __init__(self, grid: Grid):
        super().__init__(grid)
        self._cos = np.cos(np.pi * grid.nodes)

    def _raw(self, t: float) -> np.ndarray:
        return min(1.0, 1.0 / t if t > 0 else 1.0) * self._cos

    def f_limit(self) -> Field:
        return project_mean_zero(Field(self.grid, np.zeros(self.grid.n)))

    def dfdt(self, t: float) -> np.ndarray:
        if t <= 1.0:
            return np.zeros(self.grid.n)
        return -self._cos / t**2

    def tail_norm_integral(self, t_cut: float):
        if t_cut < 1.0:
            return None
        # integrand is ||primitive of cos(pi x)||_2 / t^2 for t > 1
        amp = l2_norm(antiderivative(Field(self.grid, self._cos)))
        return amp / t_cut


class CosineExpSource(SourceTerm):
    """f(x, t) = exp(-rate * t) cos(pi x), decaying to zero."""

    kind = "cosine_exp"

    def __init__(self, grid: Grid, rate: float = 1.0):
        if rate <= 0:
            raise ConfigError("cosine_exp needs a positive decay rate")
        super().__init__(grid)
        self.rate = float(rate)
        self._cos = np.cos(np.pi * grid.nodes)

    def _raw(self, t: float) -> np.ndarray:
        return np.exp(-self.rate * t) * self._cos

    def f_limit(self) -> Field:
        return project_mean_zero(Field(self.grid, np.zeros(self.grid.n)))

    def dfdt(self, t: float) -> np.ndarray:
        return -self.rate * np.exp(-self.rate * t) * self._cos

    def tail_norm_integral(self, t_cut: float):
        amp = l2_norm(antiderivative(Field(self.grid, self._cos)))
        return amp * np.exp(-self.rate * t_cut)


class CallableSource(SourceTerm):
    """Forcing given by a Python callable f(x, t) (vectorized in x).

    Used for manufactured solutions; optional callables supply the limit
    profile and the analytic time derivative.
    """

    kind = "callable"

    def __init__(self, grid: Grid, fn, f_limit_fn=None, dfdt_fn=None):
        super().__init__(grid)
        self._fn = fn
        self._f_limit_fn = f_limit_fn
        self._dfdt_fn = dfdt_fn

    def _raw(self, t: float) -> np.ndarray:
        return np.asarray(self._fn(self.grid.nodes, t), dtype=float)

    def f_limit(self) -> Field:
        if self._f_limit_fn is None:
            return super().f_limit()
        return project_mean_zero(
            Field(self.grid, self._f_limit_fn(self.grid.nodes))
        )

    def dfdt(self, t: float) -> np.ndarray:
        if self._dfdt_fn is None:
            return super().dfdt(t)
        return np.asarray(self._dfdt_fn(self.grid.nodes, t), dtype=float)


class TabulatedSource(SourceTerm):
    """Forcing tabulated at time stamps, linearly interpolated in t."""

    kind = "tabulated"

    def __init__(self, times, fields):
        times = np.asarray(times, dtype=float)
        if len(times) < 1 or len(times) != len(fields):
            raise ConfigError("tabulated source needs matching times and fields")
        if np.any(np.diff(times) <= 0):
            raise ConfigError("tabulated source times must increase")
        super().__init__(fields[0].grid)
        self.times = times
        self._table = np.stack([f.values for f in fields])
        self.breakpoints = tuple(times[1:-1])

    def _raw(self, t: float) -> np.ndarray:
        if t < self.times[0] - 1e-12 or t > self.times[-1] + 1e-12:
            raise ConfigError(
                f"t={t} outside tabulated range [{self.times[0]}, {self.times[-1]}]"
            )
        t = min(max(t, self.times[0]), self.times[-1])
        k = np.searchsorted(self.times, t, side="right") - 1
        k = min(k, len(self.times) - 2) if len(self.times) > 1 else 0
        if len(self.times) == 1:
            return self._table[0]
        w = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        return (1 - w) * self._table[k] + w * self._table[k + 1]

    def f_limit(self) -> Field:
        return project_mean_zero(Field(self.grid, self._table[-1]))

    def dfdt(self, t: float) -> np.ndarray:
        if len(self.times) < 2:
            raise ConfigError("tabulated source has no time resolution")
        t = min(max(t, self.times[0]), self.times[-1])
        k = np.searchsorted(self.times, t, side="right") - 1
        k = min(k, len(self.times) - 2)
        dt = self.times[k + 1] - self.times[k]
        return (self._table[k + 1] - self._table[k]) / dt


@dataclass(frozen=True)
class SourceFunctionals:
    """P0, N_infinity and sampled P(t), N(t) for a forcing."""

    P0: float
    N_infinity: float
    tail_truncated: bool
    times: np.ndarray
    P_of_t: np.ndarray
    N_of_t: np.ndarray


def compute_P0(src: SourceTerm) -> float:
    """L2 norm of the primitive of the initial forcing profile."""
    return l2_norm(antiderivative(src.f_initial()))


def compute_P(src: SourceTerm, t: float) -> float:
    return l2_norm(antiderivative(src.evaluate(t)))


def _norm_of_primitive_dfdt(src: SourceTerm, t: float) -> float:
    return l2_norm(antiderivative(Field(src.grid, src.dfdt(t))))


def _segments(src: SourceTerm, t_cut: float):
    cuts = sorted({0.0, t_cut, *(b for b in src.breakpoints if 0.0 < b < t_cut)})
    return list(zip(cuts[:-1], cuts[1:]))


def compute_N_infinity(
    src: SourceTerm, t_cut: float = 100.0, dt_quad: float = 1e-2
):
    """Time integral of ||primitive of f_t||_2 over (0, infinity).

    Composite trapezoid on [0, t_cut], split exactly at the source's kinks;
    a closed-form tail is added when the family provides one, otherwise the
    result is flagged as tail-truncated.

    Returns (value, tail_truncated).
    """
    if not src.time_dependent:
        return 0.0, False
    if t_cut <= 0:
        raise ValueError("t_cut must be positive")
    total = 0.0
    for a, b in _segments(src, t_cut):
        m = max(2, int(np.ceil((b - a) / dt_quad)) + 1)
        ts = np.linspace(a, b, m)
        # keep samples strictly inside the smooth segment
        eps = 1e-9 * (b - a)
        ts_eval = ts.copy()
        ts_eval[0] += eps
        ts_eval[-1] -= eps
        vals = np.array([_norm_of_primitive_dfdt(src, t) for t in ts_eval])
        total += np.trapezoid(vals, ts)
    tail = src.tail_norm_integral(t_cut)
    if tail is None:
        return total, True
    return total + tail, False


def compute_functionals(
    src: SourceTerm, times, t_cut: float = 100.0, dt_quad: float = 1e-2
) -> SourceFunctionals:
    """Sample P(t) and N(t) at the given times and compute P0, N_infinity."""
    times = np.asarray(times, dtype=float)
    P0 = compute_P0(src)
    if src.time_dependent:
        P = np.array([compute_P(src, t) for t in times])
        rates = np.array([_norm_of_primitive_dfdt(src, t) for t in times])
        N = np.concatenate(
            [[0.0], np.cumsum(0.5 * (rates[1:] + rates[:-1]) * np.diff(times))]
        )
    else:
        P = np.full(len(times), P0)
        N = np.zeros(len(times))
    n_inf, truncated = compute_N_infinity(src, t_cut=t_cut, dt_quad=dt_quad)
    return SourceFunctionals(
        P0=P0,
        N_infinity=n_inf,
        tail_truncated=truncated,
        times=times,
        P_of_t=P,
        N_of_t=N,
    )


def make_source(grid: Grid, spec: str) -> SourceTerm:
    """Build a named analytic source from a config string.

    Recognized forms: "zero", "cosine_static AMPLITUDE", "cosine_decay",
    "cosine_exp RATE", "csv PATH" (tabulated, columns t, x, f).
    """
    parts = spec.split()
    if not parts:
        raise ConfigError("empty source spec")
    name, args = parts[0], parts[1:]
    if name == "zero":
        return HomogeneousSource(Field(grid, np.zeros(grid.n)))
    if name == "cosine_static":
        if len(args) != 1:
            raise ConfigError("cosine_static needs exactly one amplitude")
        return CosineStaticSource(grid, float(args[0]))
    if name == "cosine_decay":
        return CosineDecaySource(grid)
    if name == "cosine_exp":
        rate = float(args[0]) if args else 1.0
        return CosineExpSource(grid, rate)
    if name == "csv":
        if len(args) != 1:
            raise ConfigError("csv source needs a path")
        return load_tabulated_csv(grid, args[0])
    raise ConfigError(f"unknown source '{name}'")


def load_tabulated_csv(grid: Grid, path) -> TabulatedSource:
    """Load a tabulated source from CSV rows (t, x, f)."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    times = np.unique(data[:, 0])
    fields = []
    for t in times:
        rows = data[np.isclose(data[:, 0], t)]
        order = np.argsort(rows[:, 1])
        if len(rows) != grid.n:
            raise ConfigError(
                f"{path}: {len(rows)} samples at t={t}, expected {grid.n}"
            )
        fields.append(Field(grid, rows[order, 2]))
    return TabulatedSource(times, fields)
