"""Numbered acceptance criteria.  Each test prints one PASS/FAIL line; the
lines are repeated in the terminal summary."""

import filecmp
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from relaxblowup import diagnostics as dg
from relaxblowup.model import ModelParams, PointState, char_speeds, quasilinear_matrices
from relaxblowup.planner import InitialData, ProfileSpec, plan, velocity_profile
from relaxblowup.solver import SimConfig, equilibrium, run, stencil_reach

pytestmark = pytest.mark.acceptance

ROOT = Path(__file__).resolve().parents[1]
P2 = ModelParams(2.0, 1.0)
RESULTS: dict[int, str] = {}


def report(n, parts, seconds, limit):
    """``parts`` is a list of (label, ok, detail)."""
    timing_ok = seconds < limit
    parts = list(parts) + [("runtime", timing_ok, f"{seconds:.2f}s < {limit:g}s")]
    ok = all(p[1] for p in parts)
    failed = [p[0] for p in parts if not p[1]]
    body = "; ".join(f"{label} {'ok' if good else 'FAILED'} ({detail})"
                     for label, good, detail in parts)
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}: {body}"
    RESULTS[n] = line
    print(line)
    assert ok, f"criterion {n} failed: {', '.join(failed)}"


# ---------------------------------------------------------------------------

def test_criterion_1_eigenvalues():
    t0 = time.perf_counter()
    s3 = math.sqrt(3.0)
    lam = char_speeds(PointState(1.0, 0.0, 0.0), P2)
    err0 = max(abs(float(a) - b) for a, b in zip(lam, (-s3, 0.0, s3)))
    rng = np.random.default_rng(20261016)
    worst = 0.0
    for _ in range(1000):
        params = ModelParams(rng.uniform(1.05, 3.0), rng.uniform(0.05, 5.0))
        st = PointState(rng.uniform(0.1, 10.0), rng.uniform(-5, 5), rng.uniform(-5, 5))
        A0, A1, _ = quasilinear_matrices(st, params)
        ref = np.sort(np.linalg.eigvals(np.linalg.solve(A0, A1)).real)
        got = np.array(char_speeds(st, params), dtype=float)
        rel = np.max(np.abs(got - ref) / np.maximum(np.abs(ref), np.max(np.abs(ref))))
        worst = max(worst, rel)
    report(1, [("rest state", err0 <= 1e-12, f"err {err0:.1e}"),
               ("1000 random states", worst <= 1e-8, f"max rel {worst:.1e}")],
           time.perf_counter() - t0, 1.0)


def test_criterion_2_profile_norm():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst, bound_ok = 0.0, True
    for _ in range(20):
        L = float(rng.uniform(0.1, 60.0))
        M = 2 * int(rng.integers(2, 200))
        spec = ProfileSpec(L, M)
        pts = sorted({-M, -M + 1, -1, 0, 1, M - 1, M})
        quad = sum(integrate.quad(lambda x: float(velocity_profile(spec, x)) ** 2, a, b,
                                  epsabs=0, epsrel=1e-13, limit=200)[0]
                   for a, b in zip(pts[:-1], pts[1:]))
        closed = 2 * L * L * M - 2.25 * L * L
        worst = max(worst, abs(quad - closed) / closed)
        bound_ok &= quad <= 2 * L * L * M
    spec = ProfileSpec(2.0, 8)
    ex = integrate.quad(lambda x: float(velocity_profile(spec, x)) ** 2, -8, 8,
                        points=[-7, -1, 0, 1, 7], limit=200)[0]
    report(2, [("quadrature vs closed form", worst <= 1e-8, f"max rel {worst:.1e}"),
               ("never exceeds 2L^2M", bound_ok, "20 specs"),
               ("(2,8) example", abs(ex - 55) < 1e-9 and ex <= 64, f"{ex:.10g} <= 64")],
           time.perf_counter() - t0, 1.0)


def test_criterion_3_conservation(smoke):
    t0 = time.perf_counter()
    rec = smoke.records
    n_cells = smoke.outcome.field.grid.n_cells
    total = [r.mass_dev + n_cells * smoke.dx for r in rec]
    d_mass = max(abs(m - total[0]) for m in total) / total[0]
    mom_scale = max(abs(rec[0].total_mom), rec[0].abs_mom)
    d_mom = max(abs(r.total_mom - rec[0].total_mom) for r in rec) / mom_scale
    d_m = max(abs(r.mass_dev - rec[0].mass_dev) for r in rec)
    report(3, [("completed", smoke.outcome.status == "completed", smoke.outcome.status),
               ("sum rho dx drift", d_mass < 1e-10, f"{d_mass:.1e}"),
               ("sum rho u dx drift", d_mom < 1e-10, f"{d_mom:.1e} rel. to int|rho u|"),
               ("m(t) constant", d_m < 1e-10, f"{d_m:.1e}")],
           smoke.seconds + time.perf_counter() - t0, 10.0)


def test_criterion_4_entropy(smoke, smoke_fine):
    t0 = time.perf_counter()
    parts = []
    residuals = []
    for s in (smoke, smoke_fine):
        E0 = s.records[0].E
        slack = min(E0 + 1e-8 - (r.E + r.D_cum) for r in s.records)
        parts.append((f"E + D_cum <= E0 + 1e-8 at dx={s.dx:g}", slack >= 0, f"slack {slack:.2e}"))
        residuals.append(max(abs(r.E + r.D_cum - E0) for r in s.records))
    ratio = residuals[0] / residuals[1]
    parts.append(("residual shrink", ratio >= 1.5,
                  f"{residuals[0]:.3g} -> {residuals[1]:.3g}, x{ratio:.2f}"))
    report(4, parts, smoke.seconds + smoke_fine.seconds + time.perf_counter() - t0, 30.0)


def test_criterion_5_cone(smoke, smoke_fine):
    t0 = time.perf_counter()
    parts = []
    over = []
    for s in (smoke, smoke_fine):
        c = dg.cone_check(s.records, s.plan, s.dx)
        parts.append((f"within cone + 10dx at dx={s.dx:g}", c.passed, f"slack {c.margin:.3g}"))
        over.append(dg.cone_overshoot(s.records, s.plan))
    ratio = over[0] / over[1]
    parts.append(("overshoot halves", over[1] <= 0.5 * over[0],
                  f"{over[0]:.4g} -> {over[1]:.4g}, ratio {ratio:.2f}"))

    # step-by-step check that cells beyond the stencil cone are untouched
    data = smoke.data
    cfg = SimConfig(P2, dx=smoke.dx, t_end=0.2, order=2, splitting="strang")
    reach = stencil_reach(2, "strang")
    eq = equilibrium(P2)
    checked = 0
    identical = True

    def obs(f, n):
        nonlocal checked, identical
        x = f.grid.centers
        far = np.abs(x) - 0.5 * f.grid.dx >= data.profile.M + reach * n * f.grid.dx
        if far.any():
            checked += int(far.sum())
            identical &= bool(np.all(f.cells[:, far] == eq[:, None]))

    run(cfg, data, obs)
    parts.append(("outside stencil cone bit-identical", identical and checked > 0,
                  f"{checked} cell-steps"))
    report(5, parts, smoke.seconds + smoke_fine.seconds + time.perf_counter() - t0, 30.0)


def test_criterion_6_planner():
    t0 = time.perf_counter()
    p = plan(P2, InitialData(ProfileSpec(2.0, 8)))
    s3 = math.sqrt(3.0)
    # independent recomputation of every hypothesis from the raw constants
    L, M, st, rmax, rmin = p.L, p.M, p.sigma_tilde, p.rho_max, p.rho_min
    c2 = st / M
    c3 = 1 / (2 * rmax * M ** 3)
    c1 = 2 * c2 / c3
    c4 = p.H0 / (2 * c1 ** 2)
    c5 = rmax / (4 * c1 ** 2)
    nsq = 2 * L * L * M - 2.25 * L * L
    mid = c3 ** 2 / (8 * c2 ** 2) * (p.H0 + rmax * L * L * M)
    thr = max(16 * st * M ** 2 * rmax, M ** 2 * math.sqrt(8 * rmax))
    margins = {
        "largedata": 0.5 * L * rmin - max(math.sqrt(8 * rmax), 16 * st * rmax),
        "largesupport": 2 * st * M ** 2 * rmax - (p.H0 + rmax * L * L * M),
        "chain_lower": mid - (c4 + c5 * nsq),
        "chain_upper": c3 / (8 * c2) - mid,
        "threshold": p.F0 - thr,
        "critical": p.F0 - 8 * c2 / c3,
        "apriori1_anchor": p.F0 - 2 * c1,
        "apriori3_anchor": p.F0 ** 2 - 4 * M / c3,
    }
    parts = [
        ("sigma_tilde", abs(st - s3) < 1e-12, f"{st:.12g}"),
        ("L, M", (L, M) == (56.0, 906), f"L={L:g}, M={M}"),
        ("F0 ~ 4.59e7", abs(p.F0 / 4.59e7 - 1) < 5e-3, f"F0={p.F0:.6g}"),
        ("threshold ~ 2.27e7", abs(thr / 2.27e7 - 1) < 5e-3, f"{thr:.6g}"),
        ("t* finite", math.isfinite(p.t_star), f"t*={p.t_star:.6g}"),
        ("plan admissible", p.admissible, ",".join(p.violated) or "all checks"),
    ]
    for name, m in margins.items():
        parts.append((name, m > 0, f"margin {m:.3g}"))
    report(6, parts, time.perf_counter() - t0, 5.0)


def test_criterion_7_blowup(theorem, theorem_fine):
    t0 = time.perf_counter()
    a, b = theorem, theorem_fine
    parts = [("detector fires at dx=0.05", a.outcome.blowup, a.outcome.reason or a.outcome.status),
             ("detector fires at dx=0.025", b.outcome.blowup, b.outcome.reason or b.outcome.status)]
    if a.outcome.blowup and b.outcome.blowup:
        ta, tb = a.t_s, b.t_s
        change = abs(tb - ta) / ta
        parts.append(("t_s < t*", ta < a.plan.t_star and tb < b.plan.t_star,
                      f"t_s={ta:.5g}, {tb:.5g}; t*={a.plan.t_star:.4g}"))
        parts.append(("t_s change < 10%", change < 0.10, f"{100 * change:.1f}%"))
        g = b.outcome.max_grad / a.outcome.max_grad
        parts.append(("max gradient doubles", g >= 2.0,
                      f"{a.outcome.max_grad:.4g} -> {b.outcome.max_grad:.4g}, x{g:.3f}"))
    env = dg.EnvelopeParams.from_plan(a.plan)
    for s in (a, b):
        sm = dg.smooth_mask(s.records, s.outcome.grad_limit)
        e = dg.envelope_check(s.records, env, sm)
        ap = dg.apriori_check(s.records, env, sm)
        parts.append((f"envelope within 1% at dx={s.dx:g}", e.passed and e.applicable,
                      f"{int(sm.sum())} smooth records"))
        parts.append((f"a-priori bounds at dx={s.dx:g}", ap.passed and ap.applicable,
                      f"slack {ap.margin:.3g}"))
    report(7, parts, a.seconds + b.seconds + time.perf_counter() - t0, 60.0)


def test_criterion_8_f_identity(smoke, theorem):
    t0 = time.perf_counter()
    parts = []
    for label, s in (("smoke", smoke), ("theorem", theorem)):
        sm = dg.smooth_mask(s.records, s.outcome.grad_limit)
        ident, lower = dg.f_derivative_check(s.records, s.plan, sm)
        parts.append((f"{label} F' identity within 5%", ident.passed and ident.applicable,
                      ident.detail))
        parts.append((f"{label} weakened F' bound", lower.passed and lower.applicable,
                      f"slack {lower.margin:.3g}"))
    report(8, parts, smoke.seconds + theorem.seconds + time.perf_counter() - t0, 10.0)


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "relaxblowup", *map(str, args)],
                          capture_output=True, text=True, cwd=ROOT)


def test_criterion_9_cli(tmp_path):
    t0 = time.perf_counter()
    cfg = ROOT / "configs" / "smoke.ini"
    r1 = _cli("simulate", "--config", cfg, "--out", tmp_path / "a")
    r2 = _cli("simulate", "--config", cfg, "--out", tmp_path / "b")
    same = (r1.returncode == r2.returncode == 0
            and filecmp.cmp(tmp_path / "a" / "series.csv", tmp_path / "b" / "series.csv",
                            shallow=False))
    parts = [("byte-identical series.csv", same, f"exit {r1.returncode}/{r2.returncode}")]
    for ini in sorted((ROOT / "configs").glob("*.ini")):
        out = tmp_path / ini.stem
        s = _cli("simulate", "--config", ini, "--out", out)
        v = _cli("verify", out)
        parts.append((f"verify {ini.name}", s.returncode == 0 and v.returncode == 0,
                      f"simulate {s.returncode}, verify {v.returncode}"))
    report(9, parts, time.perf_counter() - t0, 60.0)
