"""Batch front end: ``plan``, ``simulate``, ``verify`` and ``profile``.

Exit codes: 0 success, 1 verification failure, 2 usage/config error,
3 runtime abort (boundary breach).
"""

from __future__ import annotations

import argparse
import configparser
import datetime
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from relaxblowup import diagnostics as dg
from relaxblowup.model import ModelParams
from relaxblowup.planner import (
    InitialData,
    PlanningError,
    PlanPolicy,
    ProfileSpec,
    TheoremPlan,
    constant_density,
    density_bump,
    evaluate_plan,
    plan,
    profile_norm_sq,
    stress_bump,
    velocity_profile,
    zero_stress,
)
from relaxblowup.solver import ConfigurationError, SimConfig, run

log = logging.getLogger("relaxblowup")

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_ABORT = 0, 1, 2, 3

DEFAULTS = {
    "model": {"gamma": "2", "tau": "1"},
    "data": {"kind": "profile", "R": "1", "variant": "corrected",
             "rho_amp": "0", "rho_width": "0.5", "S_amp": "0", "S_width": "0.5"},
    "grid": {"dx": "0.03125"},
    "run": {"t_end": "0.2", "cfl": "0.4", "order": "2", "splitting": "strang",
            "record_every": "1", "snapshot_every": "0"},
    "diagnostics": {"eps_support": "1e-6", "grad_cells": "10", "rho_limit": "1e-8"},
}

# flag dest -> (section, key)
OVERRIDES = {
    "gamma": ("model", "gamma"), "tau": ("model", "tau"),
    "L": ("data", "L"), "M": ("data", "M"), "R": ("data", "R"),
    "profile_variant": ("data", "variant"),
    "dx": ("grid", "dx"), "cfl": ("run", "cfl"), "t_end": ("run", "t_end"),
    "order": ("run", "order"), "splitting": ("run", "splitting"),
}


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--gamma", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--L", type=float)
    p.add_argument("--M", type=float)
    p.add_argument("--R", type=float)
    p.add_argument("--dx", type=float)
    p.add_argument("--cfl", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--order", type=int, choices=(1, 2))
    p.add_argument("--splitting", choices=("godunov", "strang"))
    p.add_argument("--profile-variant", dest="profile_variant",
                   choices=("corrected", "printed"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relaxblowup", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="construct and check the theorem constants")
    _common(p)
    p.add_argument("--max-L", dest="max_L", type=float, default=PlanPolicy.max_L)
    p.add_argument("--max-M", dest="max_M", type=int, default=PlanPolicy.max_M)

    s = sub.add_parser("simulate", help="run the solver and write diagnostics")
    _common(s)

    v = sub.add_parser("verify", help="check a simulate output directory")
    _common(v)
    v.add_argument("run_dir", nargs="?", type=Path)

    pr = sub.add_parser("profile", help="sample the velocity profile")
    _common(pr)
    pr.add_argument("--step", type=float, default=0.01)
    return ap


# ---------------------------------------------------------------------------
# configuration


def load_config(args) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser()
    cfg.optionxform = str
    cfg.read_dict(DEFAULTS)
    if args.config is not None:
        if not args.config.is_file():
            raise UsageError(f"config file not found: {args.config}")
        try:
            cfg.read(args.config)
        except configparser.Error as exc:
            raise UsageError(f"cannot parse {args.config}: {exc}")
    for dest, (section, key) in OVERRIDES.items():
        val = getattr(args, dest, None)
        if val is not None:
            cfg[section][key] = repr(val) if isinstance(val, float) else str(val)
    return cfg


def _get(cfg, section, key, kind=float, default=None):
    raw = cfg[section].get(key, None)
    if raw is None or raw.strip() == "":
        return default
    try:
        if kind is int:
            v = float(raw)
            if v != int(v):
                raise ValueError
            return int(v)
        return kind(raw)
    except ValueError:
        raise UsageError(f"[{section}] {key} = {raw!r} is not a valid {kind.__name__}")


def model_from(cfg) -> ModelParams:
    try:
        return ModelParams(_get(cfg, "model", "gamma"), _get(cfg, "model", "tau"))
    except ValueError as exc:
        raise UsageError(str(exc))


def data_from(cfg, L=None, M=None) -> InitialData:
    R = _get(cfg, "data", "R")
    variant = cfg["data"]["variant"]
    L = L if L is not None else _get(cfg, "data", "L", default=2.0)
    M = M if M is not None else _get(cfg, "data", "M", float, default=max(4.0, R))
    rho_amp = _get(cfg, "data", "rho_amp")
    S_amp = _get(cfg, "data", "S_amp")
    rho_w = _get(cfg, "data", "rho_width")
    S_w = _get(cfg, "data", "S_width")
    if max(rho_w, S_w) > R:
        raise UsageError("bump widths must not exceed R")
    rho0 = density_bump(rho_amp, rho_w) if rho_amp else constant_density()
    S0 = stress_bump(S_amp, S_w) if S_amp else zero_stress()
    try:
        spec = ProfileSpec(L, M, R, variant)
        data = InitialData(spec, rho0, S0)
    except ValueError as exc:
        raise UsageError(str(exc))
    if cfg["data"]["kind"] == "equilibrium":
        data.zero_velocity = True
    elif cfg["data"]["kind"] != "profile":
        raise UsageError(f"unknown data kind {cfg['data']['kind']!r}")
    return data


def resolve_plan(cfg, policy: PlanPolicy = PlanPolicy()) -> tuple[TheoremPlan, InitialData]:
    """Use ``[data] L, M`` when both are given, otherwise choose them."""
    params = model_from(cfg)
    has_L = cfg["data"].get("L", "").strip() != ""
    has_M = cfg["data"].get("M", "").strip() != ""
    if has_L and has_M:
        data = data_from(cfg)
        return evaluate_plan(params, data, policy.cells_per_unit), data
    # placeholder profile only carries R and the variant into the planner
    R = _get(cfg, "data", "R")
    probe = data_from(cfg, L=2.0, M=2 * math.ceil(max(4.0, R) / 2))
    pl = plan(params, probe, policy)
    return pl, probe.with_profile(pl.L, pl.M)


def sim_config_from(cfg, params: ModelParams) -> SimConfig:
    try:
        return SimConfig(
            params=params,
            dx=_get(cfg, "grid", "dx"),
            half_width=_get(cfg, "grid", "half_width", default=None),
            t_end=_get(cfg, "run", "t_end"),
            cfl=_get(cfg, "run", "cfl"),
            order=_get(cfg, "run", "order", int),
            splitting=cfg["run"]["splitting"],
            record_every=_get(cfg, "run", "record_every", int),
            eps_support=_get(cfg, "diagnostics", "eps_support"),
            grad_limit=_get(cfg, "diagnostics", "grad_limit", default=None),
            grad_cells=_get(cfg, "diagnostics", "grad_cells"),
            rho_limit=_get(cfg, "diagnostics", "rho_limit"),
        )
    except ConfigurationError as exc:
        raise UsageError(str(exc))


def config_echo(cfg) -> dict:
    return {s: dict(cfg[s]) for s in cfg.sections()}


def _write_json(path: Path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=False, allow_nan=False)
        fh.write("\n")


# ---------------------------------------------------------------------------
# commands


def print_plan(pl: TheoremPlan, out=None):
    out = out or sys.stdout
    keys = ("sigma", "sigma_tilde", "L", "M", "H0", "norm_sq", "c1", "c2", "c3",
            "c4", "c5", "F0", "F0_threshold", "F0_critical", "t_star")
    for k in keys:
        print(f"{k:>14} = {getattr(pl, k):.10g}", file=out)
    print("inequalities:", file=out)
    for c in pl.checks:
        mark = "ok  " if c.passed else "FAIL"
        print(f"  {mark} {c.name:<18} {c.lhs:.10g} {c.op} {c.rhs:.10g}  "
              f"(margin {c.margin:.4g})", file=out)
    print("admissible" if pl.admissible else
          "NOT admissible: " + ", ".join(pl.violated), file=out)


def cmd_plan(args) -> int:
    cfg = load_config(args)
    policy = PlanPolicy(max_L=args.max_L, max_M=args.max_M)
    try:
        pl, _ = resolve_plan(cfg, policy)
    except PlanningError as exc:
        print(f"infeasible: {exc} [binding: {exc.binding}]", file=sys.stderr)
        return EXIT_USAGE
    print_plan(pl)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        _write_json(args.out / "plan.json", pl.to_dict())
    if not pl.admissible:
        print("binding constraint(s): " + ", ".join(pl.violated), file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def _write_snapshot(path: Path, f):
    rho, u, S = f.primitive
    x = f.grid.centers
    with open(path, "w") as fh:
        fh.write("x,rho,u,S\n")
        for row in zip(x, rho, u, S):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


SERIES_PLOT = """\
# gnuplot script; run with: gnuplot -p plot_series.gp
set datafile separator ','
set key autotitle columnhead
set multiplot layout 2,2
plot 'series.csv' using 1:4 with lines title 'F(t)'
plot 'series.csv' using 1:5 with lines title 'E(t)', '' using 1:($5+$7) with lines title 'E+D_cum'
plot 'series.csv' using 1:8 with lines title 'support radius'
set logscale y
plot 'series.csv' using 1:9 with lines title 'max |du/dx|'
unset multiplot
"""


def cmd_simulate(args) -> int:
    started = time.time()
    if args.out is None:
        raise UsageError("simulate needs --out DIR")
    cfg = load_config(args)
    params = model_from(cfg)
    try:
        pl, data = resolve_plan(cfg)
    except PlanningError as exc:
        raise UsageError(f"{exc} [binding: {exc.binding}]")
    sim = sim_config_from(cfg, params)
    snap_every = _get(cfg, "run", "snapshot_every", int)

    out: Path = args.out
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    manifest = out / "manifest.json"
    if manifest.exists():
        manifest.unlink()

    rec = dg.Recorder(params, sim.eps_support, ball=(pl.M, pl.sigma_tilde),
                      keep_every=snap_every)
    try:
        outcome = run(sim, data, rec)
    except ConfigurationError as exc:
        raise UsageError(str(exc))
    records = rec.records

    files = ["plan.json", "series.csv", "functionals.csv", "plot_series.gp"]
    _write_json(out / "plan.json", pl.to_dict())
    dg.write_series(out / "series.csv", records)
    dg.write_functionals(out / "functionals.csv", records)
    (out / "plot_series.gp").write_text(SERIES_PLOT)
    snaps = list(rec.snapshots)
    last = rec.final_snapshot()
    if last is not None and (not snaps or snaps[-1][0] != last[0]):
        snaps.append(last)
    for k, f in snaps:
        name = f"snapshots/{k:04d}.csv"
        _write_snapshot(out / name, f)
        files.append(name)

    t_s = outcome.t if outcome.blowup else None
    result = {
        "config": config_echo(cfg),
        "grid": {"dx": outcome.field.grid.dx, "n_cells": outcome.field.grid.n_cells,
                 "x_min": outcome.field.grid.x_min, "x_max": outcome.field.grid.x_max},
        "plan": {"L": pl.L, "M": pl.M, "admissible": pl.admissible,
                 "t_star": pl.t_star if math.isfinite(pl.t_star) else None},
        "outcome": {
            "status": outcome.status,
            "t": outcome.t,
            "t_s": t_s,
            "x": outcome.x,
            "steps": outcome.steps,
            "reason": outcome.reason,
            "grad_limit": outcome.grad_limit,
            "max_grad": outcome.max_grad,
            "t_singular_estimate": (dg.singularity_time_estimate(records, outcome.grad_limit)
                                    if outcome.blowup else None),
            "t_s_before_deadline": (t_s < pl.t_star) if t_s is not None else None,
        },
        "files": files,
        "wall_seconds": time.time() - started,
        "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    _write_json(manifest, result)
    print(f"{outcome.status}: t={outcome.t:.6g} steps={outcome.steps} "
          f"records={len(records)} -> {out}")
    if outcome.blowup:
        print(f"  {outcome.reason}; t* = {pl.t_star:.6g}")
    if outcome.status == "boundary_breach":
        print(f"  {outcome.reason}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


def cmd_verify(args) -> int:
    run_dir = args.run_dir or args.out
    if run_dir is None:
        raise UsageError("verify needs a run directory")
    paths = {n: run_dir / n for n in ("manifest.json", "plan.json", "series.csv",
                                      "functionals.csv")}
    for n, p in paths.items():
        if not p.is_file():
            raise UsageError(f"missing {p}")
    try:
        manifest = json.loads(paths["manifest.json"].read_text())
        pl = TheoremPlan.from_dict(json.loads(paths["plan.json"].read_text()))
        records = dg.read_series(paths["series.csv"], paths["functionals.csv"])
        dx = float(manifest["grid"]["dx"])
        grad_limit = float(manifest["outcome"]["grad_limit"])
        t_s = manifest["outcome"]["t_s"]
    except (KeyError, ValueError, TypeError, dg.DiagnosticError) as exc:
        raise UsageError(f"schema mismatch: {exc}")
    if len(records) < 1:
        raise UsageError("series.csv has no records")
    reports = dg.run_checks(records, pl, dx, grad_limit, t_s)
    print(f"verify {run_dir}: {len(records)} records, outcome "
          f"{manifest['outcome']['status']}")
    for r in reports:
        print("  " + r.line())
    ok = all(r.passed for r in reports if r.applicable)
    print("ALL APPLICABLE CHECKS PASS" if ok else "VERIFICATION FAILED")
    return EXIT_OK if ok else EXIT_VERIFY


PROFILE_PLOT = """\
# gnuplot script; run with: gnuplot -p {name}
set datafile separator ','
set key autotitle columnhead
set xlabel 'x'
set ylabel 'u'
plot '{csv}' using 1:2 with lines title 'u_{{L,M}}'
"""


def cmd_profile(args) -> int:
    L = args.L if args.L is not None else 2.0
    M = args.M if args.M is not None else 8
    R = args.R if args.R is not None else 1.0
    variant = args.profile_variant or "corrected"
    if not args.step > 0:
        raise UsageError("--step must be positive")
    try:
        spec = ProfileSpec(L, M, R, variant)
    except ValueError as exc:
        raise UsageError(str(exc))
    n = int(round(2 * spec.M / args.step))
    x = np.linspace(-spec.M, spec.M, n + 1)
    u = velocity_profile(spec, x)
    lines = ["x,u"] + [f"{a:.17g},{b:.17g}" for a, b in zip(x, u)]
    if args.out is None:
        sys.stdout.write("\n".join(lines) + "\n")
    else:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "profile.csv").write_text("\n".join(lines) + "\n")
        (args.out / "profile.gp").write_text(
            PROFILE_PLOT.format(name="profile.gp", csv="profile.csv"))
    nsq = profile_norm_sq(spec)
    print(f"rows={n + 1} norm_sq={nsq:.10g} bound={2 * L * L * spec.M:.10g}",
          file=sys.stderr if args.out is None else sys.stdout)
    return EXIT_OK


COMMANDS = {"plan": cmd_plan, "simulate": cmd_simulate, "verify": cmd_verify,
            "profile": cmd_profile}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
