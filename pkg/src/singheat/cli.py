"""Command-line front end: wires config files to the modules and writes
CSV/JSON artifacts, including one-command reproductions of the two worked
examples (constant-height sheet with a sine kick; decaying cosine forcing).

Exit codes: 0 success, 2 hypothesis violation, 3 solver failure, 4 config
error.  All commands are deterministic: identical configs give byte-identical
outputs.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import lagrangian
from .constants import TheoremConstants, compute_R0
from .decay import (
    check_gradient_energy_envelope,
    check_homogeneous_envelope,
    check_inhomogeneous_envelope,
    envelope_csv,
)
from .errors import ConfigError, HypothesisError, SingheatError, SolverError
from .grid import Field, Grid, read_field_csv, write_field_csv
from .solver import SimulationConfig, simulate
from .source import compute_N_infinity, compute_P0, make_source
from .steady import steady_profile

EXIT_OK = 0
EXIT_HYPOTHESIS = 2
EXIT_SOLVER = 3
EXIT_CONFIG = 4


def read_config(path) -> dict:
    """Flat key = value text file; later keys override earlier ones."""
    cfg = {}
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        cfg[key.strip()] = value.strip()
    return cfg


def _require(cfg: dict, key: str) -> str:
    if key not in cfg:
        raise ConfigError(f"missing config key '{key}'")
    return cfg[key]


def _make_u0(grid: Grid, spec: str) -> Field:
    parts = spec.split()
    if parts[0] == "constant":
        return Field(grid, np.full(grid.n, float(parts[1]) if len(parts) > 1 else 1.0))
    if parts[0] == "inverse_sine":
        # 1/(1 + eps sin(pi x)): unit mass to round-off is restored by scaling
        eps = float(parts[1])
        vals = 1.0 / (1.0 + eps * np.sin(np.pi * grid.nodes))
        f = Field(grid, vals)
        from .grid import trapezoid_integral

        return Field(grid, vals / trapezoid_integral(f))
    if parts[0] == "csv":
        return read_field_csv(parts[1])
    raise ConfigError(f"unknown u0 spec '{spec}'")


def _build_sim_config(cfg: dict, args) -> SimulationConfig:
    n = args.n or int(cfg.get("n", 401))
    grid = Grid(n)
    source = make_source(grid, _require(cfg, "source"))
    u0 = _make_u0(grid, cfg.get("u0", "constant 1"))
    return SimulationConfig(
        nu=float(_require(cfg, "nu")),
        grid=grid,
        u0=u0,
        source=source,
        dt=args.dt or float(cfg.get("dt", 1e-3)),
        t_end=args.t_end or float(cfg.get("t_end", 1.0)),
        snapshot_stride=int(cfg.get("snapshot_stride", 100)),
        newton_tol=float(cfg.get("newton_tol", 1e-12)),
        newton_max_iter=int(cfg.get("newton_max_iter", 50)),
        positivity_floor=float(cfg.get("positivity_floor", 1e-8)),
    )


def _write_manifest(out: Path, command: str, config_path) -> None:
    manifest = {
        "command": command,
        "config_path": str(config_path) if config_path else None,
        "output_dir": str(out),
        "seedless": True,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def cmd_steady(args) -> int:
    cfg = read_config(args.config)
    out = _prepare_out(args, "steady")
    n = args.n or int(cfg.get("n", 4097))
    grid = Grid(n)
    source = make_source(grid, _require(cfg, "source"))
    nu = float(_require(cfg, "nu"))
    which = cfg.get("which", "limit" if source.time_dependent else "initial")
    state = steady_profile(source, nu, which=which)
    state.to_json(out / "steady.json")
    state.profile_csv(out / "u_infinity.csv")
    # sheet-side constant: h_inf(y_inf(x)) = M/u_inf scaled into 2 pi h form
    report = {
        "C_nu": state.C_nu,
        "C_infinity": 2 * math.pi * state.C_nu + 1,
        "residual_l2": state.residual_l2,
        "mass_defect": state.mass_defect,
    }
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    print(f"C_nu = {state.C_nu:.10g}  residual_l2 = {state.residual_l2:.3g}")
    return EXIT_OK


def cmd_constants(args) -> int:
    cfg = read_config(args.config)
    out = _prepare_out(args, "constants")
    n = args.n or int(cfg.get("n", 2001))
    grid = Grid(n)
    source = make_source(grid, _require(cfg, "source"))
    u0 = _make_u0(grid, cfg.get("u0", "constant 1"))
    nu = float(_require(cfg, "nu"))
    mode = cfg.get("mode", "inhomogeneous" if source.time_dependent else "homogeneous")
    consts = TheoremConstants.from_problem(u0, source, nu, mode=mode)
    consts.to_json(out / "constants.json")
    print(
        f"R0={consts.R0:.6g} P0={consts.P0:.6g} N_inf={consts.N_infinity:.6g} "
        f"nu_plus={consts.nu_plus:.6g} hom={consts.hom_ok} inhom={consts.inhom_ok}"
    )
    if mode == "homogeneous" and not consts.hom_ok:
        raise HypothesisError("homogeneous admissibility conditions fail")
    if mode == "inhomogeneous" and not consts.inhom_ok:
        raise HypothesisError("inhomogeneous admissibility conditions fail")
    return EXIT_OK


def _run_and_report(sim_cfg: SimulationConfig, out: Path, mode: str,
                    assert_literal_envelope: bool) -> int:
    record = simulate(sim_cfg)
    if record.failure:
        raise SolverError(f"{record.failure} (t={record.failure_time})")
    record.diagnostics_csv(out / "diagnostics.csv")
    for t, snap in zip(record.snapshot_times, record.snapshots):
        write_field_csv(out / f"u_t{t:010.4f}.csv", snap, header=("x", "u"))
    consts = TheoremConstants.from_problem(
        sim_cfg.u0, sim_cfg.source, sim_cfg.nu, mode=mode
    )
    consts.to_json(out / "constants.json")
    ok = True
    if mode == "homogeneous":
        report = check_homogeneous_envelope(record, consts)
        report.to_json(out / "decay_report.json")
        times = np.asarray(record.times)
        bound = record.h1_error_inverse[0] * np.exp(-consts.lambda_hom * times)
        envelope_csv(out / "envelope.csv", times, bound, record.h1_error_inverse)
        lo, hi = consts.homogeneous_bounds()
        bounds_ok = min(record.min_u) >= lo - 1e-12 and max(record.max_u) <= hi + 1e-12
        ok = report.envelope_ok and bounds_ok
        print(f"envelope_ok={report.envelope_ok} bounds_ok={bounds_ok} "
              f"rate={consts.lambda_hom:.4f}")
    else:
        literal = check_inhomogeneous_envelope(record, consts, sim_cfg.source)
        literal.to_json(out / "decay_report.json")
        energy = check_gradient_energy_envelope(record, consts, sim_cfg.source)
        energy.to_json(out / "energy_envelope_report.json")
        bounds_ok = (
            min(record.min_u) >= consts.A_minus - 1e-12
            and max(record.max_u) <= consts.A_plus + 1e-12
        )
        ok = bounds_ok and energy.envelope_ok
        if assert_literal_envelope:
            ok = ok and literal.envelope_ok
        print(
            f"bounds_ok={bounds_ok} energy_envelope_ok={energy.envelope_ok} "
            f"literal_envelope_ok={literal.envelope_ok} B={consts.B:.4f}"
        )
    return EXIT_OK if ok else EXIT_SOLVER


def cmd_simulate(args) -> int:
    cfg = read_config(args.config)
    out = _prepare_out(args, "simulate")
    sim_cfg = _build_sim_config(cfg, args)
    mode = cfg.get(
        "mode", "inhomogeneous" if sim_cfg.source.time_dependent else "homogeneous"
    )
    return _run_and_report(sim_cfg, out, mode, assert_literal_envelope=False)


def cmd_example(args) -> int:
    out = _prepare_out(args, f"example-{args.name}")
    if args.name == "ex-2-4":
        n = args.n or 401
        grid = Grid(n)
        sim_cfg = SimulationConfig(
            nu=1.0,
            grid=grid,
            u0=Field(grid, np.ones(n)),
            source=make_source(grid, f"cosine_static {math.pi / 2}"),
            dt=args.dt or 1e-3,
            t_end=args.t_end or 8.0,
        )
        return _run_and_report(sim_cfg, out, "homogeneous",
                               assert_literal_envelope=True)
    if args.name == "ex-3-3":
        n = args.n or 201
        grid = Grid(n)
        sim_cfg = SimulationConfig(
            nu=10.0,
            grid=grid,
            u0=Field(grid, np.ones(n)),
            source=make_source(grid, "cosine_decay"),
            dt=args.dt or 1e-3,
            t_end=args.t_end or 3.0,
        )
        return _run_and_report(sim_cfg, out, "inhomogeneous",
                               assert_literal_envelope=False)
    raise ConfigError(f"unknown example '{args.name}'")


def cmd_transform(args) -> int:
    cfg = read_config(args.config)
    out = _prepare_out(args, "transform")
    n = args.n or int(cfg.get("n", 401))
    grid = Grid(n)
    M = float(cfg.get("M", 1.0))
    nu = float(_require(cfg, "nu"))
    h0 = _sheet_profile(grid, cfg.get("h0", "constant 1"), M)
    v0 = _sheet_velocity(grid, cfg.get("v0", "zero"))
    f0 = lagrangian.source_from_sheet(h0, v0, M, nu)
    write_field_csv(out / "f0.csv", f0, header=("x", "f0"))
    print(f"P0 = {compute_P0_from_field(f0):.6g}")
    return EXIT_OK


def compute_P0_from_field(f0: Field) -> float:
    from .grid import antiderivative, l2_norm

    return l2_norm(antiderivative(f0))


def _sheet_profile(grid: Grid, spec: str, M: float) -> Field:
    parts = spec.split()
    if parts[0] == "constant":
        return Field(grid, np.full(grid.n, float(parts[1]) if len(parts) > 1 else M))
    if parts[0] == "cosine_bump":
        # M (1 + eps cos(pi y)) / (1 + eps * mean correction): unit-interval mass M
        eps = float(parts[1])
        vals = 1.0 + eps * np.cos(np.pi * grid.nodes)
        from .grid import trapezoid_integral

        f = Field(grid, vals)
        return Field(grid, M * vals / trapezoid_integral(f))
    if parts[0] == "csv":
        return read_field_csv(parts[1])
    raise ConfigError(f"unknown h0 spec '{spec}'")


def _sheet_velocity(grid: Grid, spec: str) -> Field:
    parts = spec.split()
    if parts[0] == "zero":
        return Field(grid, np.zeros(grid.n))
    if parts[0] == "sine":
        amp = float(parts[1]) if len(parts) > 1 else 0.5
        return Field(grid, amp * np.sin(np.pi * grid.nodes))
    if parts[0] == "csv":
        return read_field_csv(parts[1])
    raise ConfigError(f"unknown v0 spec '{spec}'")


def cmd_ssm_crosscheck(args) -> int:
    cfg = read_config(args.config) if args.config else {}
    out = _prepare_out(args, "ssm-crosscheck")
    n = args.n or int(cfg.get("n", 201))
    grid = Grid(n)
    M = float(cfg.get("M", 1.0))
    nu = float(cfg.get("nu", 1.0))
    t_check = args.t_end or float(cfg.get("t_check", 1.0))
    h0 = _sheet_profile(grid, cfg.get("h0", "constant 1"), M)
    v0 = _sheet_velocity(grid, cfg.get("v0", "sine 0.5"))
    dt_ssm = args.dt or float(cfg.get("dt_ssm", 2e-3))

    f0 = lagrangian.source_from_sheet(h0, v0, M, nu)
    from .source import HomogeneousSource

    lmap = lagrangian.initial_map(h0, M)
    sim_cfg = SimulationConfig(
        nu=nu, grid=grid, u0=lmap.u, source=HomogeneousSource(f0),
        dt=float(cfg.get("dt", 1e-3)), t_end=t_check,
        snapshot_stride=max(1, int(round(t_check / float(cfg.get("dt", 1e-3))))),
    )
    record = simulate(sim_cfg)
    if record.failure:
        raise SolverError(record.failure)
    u_final = record.snapshots[-1]
    f_final = sim_cfg.source.evaluate(t_check)
    u_t = lagrangian.pde_time_derivative(u_final, f_final, nu)

    initial = lagrangian.SheetState(t=0.0, grid=grid, h=h0, v=v0, M=M, nu=nu)
    states = lagrangian.solve_ssm(initial, dt=dt_ssm, t_end=t_check)
    mismatch = lagrangian.crosscheck_heights(states[-1], u_final, u_t, M)
    states[-1].to_csv(out / "sheet_final.csv")
    with open(out / "crosscheck.json", "w") as fh:
        json.dump({"t": t_check, "max_rel_error_h": mismatch}, fh, indent=2)
        fh.write("\n")
    print(f"max relative height mismatch at t={t_check}: {mismatch:.4f}")
    return EXIT_OK if mismatch <= float(cfg.get("tolerance", 0.02)) else EXIT_SOLVER


def _prepare_out(args, command: str) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_manifest(out, command, getattr(args, "config", None))
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="singheat",
        description="Singular heat equation laboratory: steady states, "
        "convergence constants, simulations, and the thin-sheet transform.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        if config_required:
            sp.add_argument("--config", required=True, help="key = value config file")
        else:
            sp.add_argument("--config", default=None)
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--n", type=int, default=None, help="grid node count")
        sp.add_argument("--dt", type=float, default=None, help="time step")
        sp.add_argument("--t-end", dest="t_end", type=float, default=None)

    sp = sub.add_parser("steady", help="closed-form steady state and constants")
    common(sp)
    sp.set_defaults(fn=cmd_steady)

    sp = sub.add_parser("constants", help="theorem constants and hypotheses")
    common(sp)
    sp.set_defaults(fn=cmd_constants)

    sp = sub.add_parser("simulate", help="time integration with diagnostics")
    common(sp)
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("example", help="one-command reproduction of a worked example")
    sp.add_argument("name", choices=["ex-2-4", "ex-3-3"])
    common(sp, config_required=False)
    sp.set_defaults(fn=cmd_example)

    sp = sub.add_parser("transform", help="sheet data to forcing profile")
    common(sp)
    sp.set_defaults(fn=cmd_transform)

    sp = sub.add_parser("ssm-crosscheck", help="direct sheet solve vs transform")
    common(sp, config_required=False)
    sp.set_defaults(fn=cmd_ssm_crosscheck)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except HypothesisError as err:
        print(f"hypothesis violated: {err}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except SolverError as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, ValueError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SingheatError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
