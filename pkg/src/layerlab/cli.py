"""Command-line entry point.

Usage::

    layerlab <subcommand> [--config PATH] [--out DIR] [--eps LIST] [--quiet]

Subcommands: ``solve-full``, ``solve-outer``, ``solve-layers``, ``assemble``,
``sweep`` and ``check``. Exit codes: 0 success, 1 invariant failure,
2 configuration or usage error, 3 numerical abort.

Initial data: ``model.preset = paper_poly8`` (u0 = x^8 (1-x)^8,
v0 = v_star + x^6 (1-x)^6) or ``model.preset = tabulated`` with
``model.u0_path`` and ``model.v0_path`` pointing at two-column text tables
(x, value) whose first line names the field; columns may be separated by
whitespace or commas, and the abscissae must cover [0, 1].
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from .analysis import RunArtifacts, SweepPlan, _json_default, build_profiles, invariant_battery, run_sweep
from .config import ConfigError, RunConfig, _to_float, dump_config, parse_config
from .expansion import assemble
from .grids import GridError, make_halfline_grid, make_interval_grid
from .interval import SolverError, make_stepper, solve_full, solve_outer0, solve_outer1
from .layers import solve_layer_order2, solve_layer_v0
from .model import ModelError, ModelParams, build_initial_data, check_compatibility
from .tables import write_table

log = logging.getLogger("layerlab")

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
SUBCOMMANDS = ("solve-full", "solve-outer", "solve-layers", "assemble", "sweep", "check")


class UsageError(Exception):
    pass


def _plan(cfg: RunConfig) -> SweepPlan:
    return SweepPlan(
        epsilons=cfg.epsilon_list, v_star=cfg.v_star, T=cfg.T, preset=cfg.preset, data_paths=cfg.data_paths,
        cells_per_width=cfg.cells_per_width, n_cap=cfg.n_cap, grading=cfg.grading, stretch=cfg.stretch,
        z_max=cfg.z_max, m=cfg.m, n_out=cfg.n_out, dt_safety=cfg.safety, min_steps=cfg.min_steps,
        threshold=cfg.threshold, delta=cfg.delta,
    )


def _cells(cfg: RunConfig, eps: float) -> int:
    if cfg.n:
        return cfg.n
    if eps <= 0:
        return 256
    return _plan(cfg).cells_for(eps)


def _setup(cfg: RunConfig, eps: float):
    params = ModelParams(eps, cfg.v_star, cfg.T, cfg.preset)
    grid = make_interval_grid(_cells(cfg, eps), cfg.grading, cfg.stretch)
    data = build_initial_data(cfg.preset, params, grid, cfg.data_paths)
    stepper = make_stepper(grid, cfg.T, data.v0, cfg.n_out, cfg.safety, cfg.min_steps, cfg.dt or None)
    return params, data, stepper


def _tag(eps: float) -> str:
    return format(eps, ".6g").replace("-", "m")


def cmd_solve_full(cfg, out: Path) -> int:
    if any(e <= 0 for e in cfg.epsilon_list):
        raise UsageError("solve-full needs epsilon > 0; use solve-outer for the zero-diffusion problem")
    for eps in cfg.epsilon_list:
        params, data, stepper = _setup(cfg, eps)
        t0 = time.perf_counter()
        with warnings.catch_warnings():
            if cfg.strict_resolution:
                warnings.simplefilter("error")
            tr = solve_full(params, data, stepper, cfg.strict_resolution)
        log.info("eps=%g n=%d steps=%d mass drift %.2e (%.1fs)", eps, data.grid.n, stepper.n_steps,
                 tr.relative_mass_drift, time.perf_counter() - t0)
        write_table(out / f"full_eps{_tag(eps)}.csv", *tr.columns())
    return EXIT_OK


def _profiles(cfg, eps):
    params, data, stepper = _setup(cfg, eps)
    outer0 = solve_outer0(params, data, stepper)
    hl = make_halfline_grid(cfg.z_max, cfg.m)
    left = solve_layer_v0("left", outer0, hl)
    right = solve_layer_v0("right", outer0, hl.reflected())
    outer = outer0
    if cfg.order >= 1:
        outer = solve_outer1(outer0, data, (left.step_times, left.phi1_trace), (right.step_times, right.phi1_trace))
    if cfg.order >= 2:
        left = solve_layer_order2("left", left, outer)
        right = solve_layer_order2("right", right, outer)
    return params, data, stepper, outer0, outer, left, right


def _write_outer(out: Path, outer):
    nt, nx = outer.u.shape
    cols = {"t": np.repeat(outer.times, nx), "x": np.tile(outer.grid.nodes, nt), "u": outer.u.ravel(),
            "v": outer.v.ravel(), "phi": outer.phi.ravel()}
    if outer.has_first_order:
        cols["phi1"] = outer.phi1.ravel()
        cols["v1"] = outer.v1.ravel()
    write_table(out / "outer.csv", list(cols), np.column_stack(list(cols.values())))
    names = list(outer.traces)
    write_table(out / "outer_traces.csv", ["t"] + names,
                np.column_stack([outer.step_times] + [outer.traces[k] for k in names]))


def cmd_solve_outer(cfg, out: Path) -> int:
    eps = cfg.epsilon_list[-1]
    params, data, stepper, outer0, outer, left, right = _profiles(cfg, eps)
    report = check_compatibility(data, cfg.v_star)
    if not report.passed:
        log.warning("initial data fail the compatibility conditions: %s", report.failures())
    log.info("outer: n=%d steps=%d mass drift %.2e", data.grid.n, stepper.n_steps, outer0.relative_mass_drift)
    _write_outer(out, outer)
    return EXIT_OK


def cmd_solve_layers(cfg, out: Path) -> int:
    eps = cfg.epsilon_list[-1]
    *_, outer, left, right = _profiles(cfg, eps)
    for lay in (left, right):
        write_table(out / f"layer_{lay.side}.csv", *lay.columns())
        log.info("%s layer: max v0 %.3e, bracket [%.2e, %.2e]", lay.side, lay.v0.max(), lay.v_min, lay.v_max)
    return EXIT_OK


def cmd_assemble(cfg, out: Path) -> int:
    if any(e <= 0 for e in cfg.epsilon_list):
        raise UsageError("assemble needs epsilon > 0")
    order = {0: 0, 1: 1, 2: "full"}[cfg.order]
    for eps in cfg.epsilon_list:
        params, data, stepper, outer0, outer, left, right = _profiles(cfg, eps)
        asm = assemble(order, outer, left, right, eps)
        write_table(out / f"assembly_eps{_tag(eps)}.csv", *asm.columns())
        if cfg.profiles:
            _write_outer(out / f"profiles_eps{_tag(eps)}", outer)
    return EXIT_OK


def _band_checks(cfg, rep) -> dict:
    def slope(name):
        f = rep.fits.get(name)
        return None if f is None else f.slope

    out = {}
    sv, su, sb = slope("E_v"), slope("E_u"), slope("boundary_residual")
    out["slope_E_v"] = None if sv is None else sv >= cfg.slope_v_min
    out["slope_E_u"] = None if su is None else su >= cfg.slope_u_min
    out["slope_boundary"] = None if sb is None else sb >= cfg.slope_boundary_min
    for side in ("left", "right"):
        s = slope(f"thickness_{side}")
        out[f"thickness_{side}"] = None if s is None else cfg.thickness_lo <= s <= cfg.thickness_hi
    return out


def cmd_sweep(cfg, out: Path) -> int:
    if any(e <= 0 for e in cfg.epsilon_list):
        raise UsageError("sweep needs epsilon > 0")
    rep = run_sweep(_plan(cfg), progress=lambda r: log.info(
        "eps=%g n=%d E_u=%.3e E_v=%.3e E_phi=%.3e", r["epsilon"], r["n"], r["E_u"], r["E_v"], r["E_phi"]))
    rep.write_csv(out / "report.csv")
    summary = rep.summary()
    summary["acceptance_bands"] = _band_checks(cfg, rep)
    (out / "report.json").write_text(json.dumps(summary, indent=2, default=_json_default))
    for note in rep.notes:
        log.warning(note)
    for name, fit in rep.fits.items():
        if fit is not None:
            log.info("slope %-18s %.3f (R^2 %.4f)", name, fit.slope, fit.r2)
    if rep.incomplete:
        log.error("sweep incomplete: %s", rep.error)
        return EXIT_NUMERICAL
    failed = [r for r in rep.ledger if not r.passed]
    for r in failed:
        log.error("invariant failed: %s = %.3e > %.3e (%s)", r.name, r.value, r.bound, r.context)
    return EXIT_INVARIANT if failed else EXIT_OK


def cmd_check(cfg, out: Path) -> int:
    eps = cfg.epsilon_list[0]
    params = ModelParams(max(eps, 0.0), cfg.v_star, cfg.T, cfg.preset)
    n = cfg.n or 256
    grid = make_interval_grid(n, cfg.grading, cfg.stretch)
    data = build_initial_data(cfg.preset, params, grid, cfg.data_paths)
    rep = check_compatibility(data, cfg.v_star)
    lines = rep.lines()
    if not rep.reliable:
        lines.append(f"UNRELIABLE  {rep.note}")
    (out / "compatibility.txt").write_text("\n".join(lines) + "\n")
    for line in lines:
        log.info("%s", line)
    ok = rep.passed
    # invariant battery on a coarse run of the first eps
    if eps > 0:
        n_small = cfg.n or 64
        small = SweepPlan(epsilons=(eps,), v_star=cfg.v_star, T=cfg.T, preset=cfg.preset, data_paths=cfg.data_paths,
                          z_max=cfg.z_max, m=cfg.m, n_out=cfg.n_out, dt_safety=cfg.safety, min_steps=cfg.min_steps)
        ps = build_profiles(params, n_small, small)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            tr = solve_full(params, ps.data, ps.stepper)
        asm = assemble("full", ps.outer, ps.left, ps.right, eps)
        ledger = invariant_battery(RunArtifacts(params, ps, tr, asm))
        with open(out / "invariants.txt", "w") as fh:
            for r in ledger:
                line = f"{'pass' if r.passed else 'FAIL'}  {r.name:<44s} {r.value:.3e} <= {r.bound:.3e}"
                fh.write(line + "\n")
                log.info("%s", line)
        ok = ok and all(r.passed for r in ledger)
    return EXIT_OK if ok else EXIT_INVARIANT


COMMANDS = {
    "solve-full": cmd_solve_full,
    "solve-outer": cmd_solve_outer,
    "solve-layers": cmd_solve_layers,
    "assemble": cmd_assemble,
    "sweep": cmd_sweep,
    "check": cmd_check,
}


def _parse_eps(text):
    try:
        return [_to_float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"--eps: cannot parse {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="layerlab", description=__doc__.split("\n\n")[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="section.key = value file (defaults if omitted)")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--eps", help="comma-separated epsilon list (overrides model.epsilon_list)")
    p.add_argument("--quiet", action="store_true", help="only warnings and errors")
    return p


def run(subcommand: str, cfg: RunConfig, out: Path | None = None) -> int:
    out = Path(out or cfg.dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.echo").write_text(dump_config(cfg))
    return COMMANDS[subcommand](cfg, out)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr, force=True)
    try:
        cfg = parse_config(args.config)
        if args.eps:
            cfg = cfg.with_epsilons(_parse_eps(args.eps))
        return run(args.subcommand, cfg, args.out)
    except (ConfigError, UsageError, ModelError, GridError) as exc:
        log.error("%s: %s", args.subcommand, exc)
        return EXIT_CONFIG
    except SolverError as exc:
        log.error("%s: numerical abort: %s", args.subcommand, exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
