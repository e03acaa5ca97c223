"""Functionals of a solution and checks of the inequalities of the blow-up argument.

All integrals are midpoint sums over cells.  A record series is a list of
:class:`DiagRecord` in time order; ``D_cum`` is accumulated with the
trapezoid rule in that order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Optional, Sequence

import numpy as np

from relaxblowup.model import ModelParams, PointState, entropy_density, pressure
from relaxblowup.planner import TheoremPlan
from relaxblowup.solver import Field

SERIES_COLUMNS = ("t", "mass_dev", "total_mom", "F", "E", "D", "D_cum",
                  "support_radius", "max_grad", "min_rho")
FUNCTIONAL_COLUMNS = ("t", "kinetic", "pressure_excess", "stress", "abs_mom",
                      "x2rho_ball", "kinetic_ball", "pressure_excess_ball", "ball_radius")


class DiagnosticError(RuntimeError):
    pass


@dataclass(frozen=True)
class DiagRecord:
    t: float
    mass_dev: float
    total_mom: float
    F: float
    E: float
    D: float
    D_cum: float
    support_radius: float
    max_grad: float
    min_rho: float
    # integrals that back the F-identity, Hoelder and Jensen checks
    kinetic: float = math.nan
    pressure_excess: float = math.nan
    stress: float = math.nan
    abs_mom: float = math.nan
    x2rho_ball: float = math.nan
    kinetic_ball: float = math.nan
    pressure_excess_ball: float = math.nan
    ball_radius: float = math.nan

    def series_row(self) -> list[str]:
        return [f"{getattr(self, c):.17g}" for c in SERIES_COLUMNS]

    def functional_row(self) -> list[str]:
        return [f"{getattr(self, c):.17g}" for c in FUNCTIONAL_COLUMNS]


def record(f: Field, params: ModelParams, eps_support: float = 1e-6,
           prev: Optional[DiagRecord] = None,
           ball: Optional[tuple[float, float]] = None) -> DiagRecord:
    """Diagnostics of one snapshot.

    ``ball = (M, sigma_tilde)`` selects the cells with ``|x| < M + sigma_tilde t``
    for the ball-restricted integrals; the whole grid is used otherwise.
    """
    cells = f.cells
    if not np.all(np.isfinite(cells)):
        i = int(np.flatnonzero(~np.all(np.isfinite(cells), axis=0))[0])
        raise DiagnosticError(f"non-finite cell {i} at x={f.grid.centers[i]} t={f.time}")
    dx = f.grid.dx
    x = f.grid.centers
    rho, mom, rw = cells
    u = mom / rho
    S = rw / rho
    rb = params.rho_bar

    dev = np.maximum(np.maximum(np.abs(rho - rb), np.abs(u)), np.abs(S))
    off = dev > eps_support
    support = float(np.max(np.abs(x[off]))) if off.any() else 0.0
    grad = float(np.max(np.abs(np.diff(u)))) / dx if u.size > 1 else 0.0

    E = float(np.sum(entropy_density(PointState(rho, u, S), params))) * dx
    D = float(np.sum(S * S)) * dx
    D_cum = 0.0
    if prev is not None:
        D_cum = prev.D_cum + 0.5 * (f.time - prev.t) * (D + prev.D)

    kin = rho * u * u
    pex = pressure(rho, params) - pressure(rb, params)
    if ball is None:
        radius = float(np.max(np.abs(x)) + dx)
    else:
        radius = ball[0] + ball[1] * f.time
    inb = np.abs(x) < radius

    return DiagRecord(
        t=float(f.time),
        mass_dev=float(np.sum(rho - rb)) * dx,
        total_mom=float(np.sum(mom)) * dx,
        F=float(np.sum(x * mom)) * dx,
        E=E, D=D, D_cum=D_cum,
        support_radius=support,
        max_grad=grad,
        min_rho=float(np.min(rho)),
        kinetic=float(np.sum(kin)) * dx,
        pressure_excess=float(np.sum(pex)) * dx,
        stress=float(np.sum(S)) * dx,
        abs_mom=float(np.sum(np.abs(mom))) * dx,
        x2rho_ball=float(np.sum((x * x * rho)[inb])) * dx,
        kinetic_ball=float(np.sum(kin[inb])) * dx,
        pressure_excess_ball=float(np.sum(pex[inb])) * dx,
        ball_radius=radius,
    )


class Recorder:
    """Observer that turns solver snapshots into a record series."""

    def __init__(self, params: ModelParams, eps_support: float = 1e-6,
                 ball: Optional[tuple[float, float]] = None, keep_every: int = 0):
        self.params = params
        self.eps_support = eps_support
        self.ball = ball
        self.records: list[DiagRecord] = []
        self.snapshots: list[tuple[int, Field]] = []
        self.keep_every = keep_every

    def __call__(self, f: Field, n: int):
        prev = self.records[-1] if self.records else None
        if prev is not None and f.time == prev.t:
            return
        self.records.append(record(f, self.params, self.eps_support, prev, self.ball))
        k = len(self.records) - 1
        if k == 0 or (self.keep_every and k % self.keep_every == 0):
            self.snapshots.append((k, f))
        self._last = (k, f)

    def final_snapshot(self):
        return getattr(self, "_last", None)


# ---------------------------------------------------------------------------
# CSV round trip


def write_series(path, records: Sequence[DiagRecord]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_COLUMNS)
        for r in records:
            w.writerow(r.series_row())


def write_functionals(path, records: Sequence[DiagRecord]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FUNCTIONAL_COLUMNS)
        for r in records:
            w.writerow(r.functional_row())


def _read(path, columns):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != tuple(columns):
        raise DiagnosticError(f"{path}: header {rows[0] if rows else None} "
                              f"does not match {list(columns)}")
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(columns):
            raise DiagnosticError(f"{path}:{i}: expected {len(columns)} fields")
        out.append(dict(zip(columns, map(float, row))))
    return out


def read_series(path, functionals_path=None) -> list[DiagRecord]:
    base = _read(path, SERIES_COLUMNS)
    if functionals_path is not None:
        extra = _read(functionals_path, FUNCTIONAL_COLUMNS)
        if len(extra) != len(base):
            raise DiagnosticError("series and functionals differ in length")
        for b, e in zip(base, extra):
            if b["t"] != e["t"]:
                raise DiagnosticError("series and functionals are not aligned in t")
            b.update(e)
    return [DiagRecord(**b) for b in base]


# ---------------------------------------------------------------------------
# checks


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    margin: float = math.nan     # worst signed slack (>= 0 means satisfied)
    detail: str = ""
    applicable: bool = True

    def line(self) -> str:
        status = "n/a " if not self.applicable else ("PASS" if self.passed else "FAIL")
        return f"{status}  {self.name:<24} margin={self.margin:<12.4g} {self.detail}"


def _na(name, why):
    return CheckReport(name, True, math.nan, why, applicable=False)


def conservation_check(records: Sequence[DiagRecord], tol: float = 1e-10) -> CheckReport:
    """Drift of the mass deviation and total momentum, relative to
    ``max(|Q(0)|, int |rho u| dx at t=0, 1)``."""
    r0 = records[0]
    mass_scale = max(abs(r0.mass_dev), 1.0)
    abs_mom = r0.abs_mom if math.isfinite(r0.abs_mom) else 0.0
    mom_scale = max(abs(r0.total_mom), abs_mom, 1.0)
    dm = max(abs(r.mass_dev - r0.mass_dev) for r in records) / mass_scale
    dp = max(abs(r.total_mom - r0.total_mom) for r in records) / mom_scale
    worst = max(dm, dp)
    return CheckReport("conservation", worst <= tol, tol - worst,
                       f"mass drift {dm:.3g}, momentum drift {dp:.3g} (tol {tol:g})")


def entropy_check(records: Sequence[DiagRecord], tol: float = 1e-8) -> CheckReport:
    """``E(t) + D_cum(t) <= E(0) + tol * max(1, E(0))`` at every record."""
    E0 = records[0].E
    bound = E0 + tol * max(1.0, E0)
    slack = min(bound - (r.E + r.D_cum) for r in records)
    neg = min(min(r.E, r.D) for r in records)
    ok = slack >= 0 and neg >= 0
    return CheckReport("entropy_dissipation", ok, slack,
                       f"E0={E0:.6g}, min slack {slack:.3g}")


def entropy_balance_residual(records: Sequence[DiagRecord]) -> np.ndarray:
    """Per interval ``dE/dt + (D_k + D_{k+1}) / 2``."""
    t = np.array([r.t for r in records])
    E = np.array([r.E for r in records])
    D = np.array([r.D for r in records])
    return np.diff(E) / np.diff(t) + 0.5 * (D[1:] + D[:-1])


def s2_bound_check(records: Sequence[DiagRecord], plan: TheoremPlan) -> CheckReport:
    """``int S^2 dx <= H0 + (max rho0 / 2) ||u_{L,M}||^2`` at every record."""
    bound = plan.H0 + 0.5 * plan.rho_max * plan.norm_sq
    worst_i = int(np.argmax([r.D for r in records]))
    margin = bound - records[worst_i].D
    detail = f"bound {bound:.6g}, max D {records[worst_i].D:.6g}"
    if margin < 0:
        detail += f" at record {worst_i} (t={records[worst_i].t:.6g})"
    return CheckReport("s2_bound", margin >= 0, margin, detail)


def cone_check(records: Sequence[DiagRecord], plan: TheoremPlan, dx: float,
               margin_cells: float = 10.0) -> CheckReport:
    """``support_radius(t) <= max(R, M) + sigma_tilde t + margin_cells dx``."""
    base = max(plan.R, plan.M)
    slack = [base + plan.sigma_tilde * r.t + margin_cells * dx - r.support_radius
             for r in records]
    i = int(np.argmin(slack))
    return CheckReport("cone", slack[i] >= 0, slack[i],
                       f"worst at t={records[i].t:.6g}, radius {records[i].support_radius:.6g}")


def cone_overshoot(records: Sequence[DiagRecord], plan: TheoremPlan) -> float:
    """Largest excess of the support radius over ``max(R, M) + sigma_tilde t``."""
    base = max(plan.R, plan.M)
    return max(r.support_radius - base - plan.sigma_tilde * r.t for r in records)


def jensen_check(records: Sequence[DiagRecord], tol: float = 1e-10) -> CheckReport:
    """Pressure excess over the ball is nonnegative whenever ``m(t) >= 0``."""
    vals = [r.pressure_excess_ball for r in records if r.mass_dev >= -tol]
    if not vals or not all(map(math.isfinite, vals)):
        return _na("jensen", "no ball integrals recorded")
    worst = min(vals)
    return CheckReport("jensen", worst >= -tol, worst + tol, f"min excess {worst:.3g}")


def holder_check(records: Sequence[DiagRecord], rel_tol: float = 1e-10) -> CheckReport:
    """``F^2 <= (int_B x^2 rho)(int_B rho u^2)`` with relative slack ``rel_tol``."""
    if not all(math.isfinite(r.x2rho_ball) for r in records):
        return _na("holder", "no ball integrals recorded")
    slack = []
    for r in records:
        rhs = r.x2rho_ball * r.kinetic_ball
        slack.append(rhs * (1 + rel_tol) - r.F * r.F + 1e-300)
    worst = min(slack)
    return CheckReport("holder", worst >= 0, worst, "")


def smooth_mask(records: Sequence[DiagRecord], grad_limit: float) -> np.ndarray:
    """Records whose gradient is below half the blow-up threshold."""
    return np.array([r.max_grad < 0.5 * grad_limit for r in records])


def f_derivative_errors(records: Sequence[DiagRecord], smooth: Optional[np.ndarray] = None):
    """Central-difference ``dF/dt`` against ``int rho u^2 + (p - p(rho_bar)) - S dx``.

    Returns ``(times, dF, identity, rel_err)`` for interior records whose
    neighbours are smooth.
    """
    n = len(records)
    if smooth is None:
        smooth = np.ones(n, bool)
    t = np.array([r.t for r in records])
    F = np.array([r.F for r in records])
    ident = np.array([r.kinetic + r.pressure_excess - r.stress for r in records])
    idx = [k for k in range(1, n - 1) if smooth[k - 1] and smooth[k] and smooth[k + 1]]
    idx = np.array(idx, dtype=int)
    if idx.size == 0:
        return np.array([]), np.array([]), np.array([]), np.array([])
    dF = (F[idx + 1] - F[idx - 1]) / (t[idx + 1] - t[idx - 1])
    scale = np.maximum(np.abs(ident[idx]), 1e-300)
    rel = np.abs(dF - ident[idx]) / scale
    # both sides vanish identically at equilibrium
    rel = np.where((np.abs(dF) < 1e-12) & (np.abs(ident[idx]) < 1e-12), 0.0, rel)
    return t[idx], dF, ident[idx], rel


def f_derivative_check(records: Sequence[DiagRecord], plan: TheoremPlan,
                       smooth: Optional[np.ndarray] = None,
                       rel_tol: float = 0.05) -> tuple[CheckReport, CheckReport]:
    """F-identity within ``rel_tol`` and the weakened lower bound
    ``F' >= int rho u^2 - D/2 - (M + sigma_tilde t)`` at every smooth record."""
    ts, dF, ident, rel = f_derivative_errors(records, smooth)
    if ts.size == 0:
        na = _na("f_identity", "fewer than three smooth records")
        return na, _na("f_lower_bound", "fewer than three smooth records")
    worst = float(np.max(rel))
    ident_report = CheckReport("f_identity", worst <= rel_tol, rel_tol - worst,
                               f"max rel err {worst:.3g} over {ts.size} records")
    by_t = {r.t: r for r in records}
    slack = []
    for t, d in zip(ts, dF):
        r = by_t[t]
        slack.append(d - (r.kinetic - 0.5 * r.D - (plan.M + plan.sigma_tilde * t)))
    w = float(min(slack))
    return ident_report, CheckReport("f_lower_bound", w >= 0, w, "")


# ---------------------------------------------------------------------------
# Riccati envelope and a-priori bounds


@dataclass(frozen=True)
class EnvelopeParams:
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    F0: float
    norm_sq: float
    M: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("c4", "c5") and v == 0:
                continue
            if not v > 0:
                raise ValueError(f"{f.name} must be positive, got {v}")

    @classmethod
    def from_plan(cls, plan: TheoremPlan) -> "EnvelopeParams":
        return cls(plan.c1, plan.c2, plan.c3, plan.c4, plan.c5, plan.F0,
                   plan.norm_sq, plan.M)


def riccati_bracket(t, env: EnvelopeParams):
    t = np.asarray(t, dtype=float)
    return (1.0 / env.F0 + env.c3 / (4 * env.c2 * (1 + env.c2 * t) ** 2)
            - env.c3 / (4 * env.c2) + env.c4 + env.c5 * env.norm_sq)


def riccati_envelope(t, env: EnvelopeParams):
    """Lower envelope for ``F(t)``; ``inf`` once the bracket is no longer positive."""
    b = riccati_bracket(t, env)
    with np.errstate(divide="ignore"):
        out = np.where(b > 0, 1.0 / np.where(b > 0, b, 1.0), np.inf)
    return out if out.ndim else float(out)


def envelope_check(records: Sequence[DiagRecord], env: EnvelopeParams,
                   smooth: Optional[np.ndarray] = None, rel_tol: float = 0.01) -> CheckReport:
    """``F(t) >= envelope(t) - rel_tol * F(t)`` on smooth records."""
    if smooth is None:
        smooth = np.ones(len(records), bool)
    slack = [r.F - riccati_envelope(r.t, env) + rel_tol * abs(r.F)
             for r, s in zip(records, smooth) if s]
    if not slack:
        return _na("riccati_envelope", "no smooth records")
    w = float(min(slack))
    return CheckReport("riccati_envelope", w >= 0, w, f"{len(slack)} smooth records")


def apriori_check(records: Sequence[DiagRecord], env: EnvelopeParams,
                  smooth: Optional[np.ndarray] = None) -> CheckReport:
    """``F >= c1`` and ``M(1 + c2 t) <= c3 F^2 / (2 (1 + c2 t)^3)`` on smooth records."""
    if smooth is None:
        smooth = np.ones(len(records), bool)
    if records[0].F < env.c1:
        return CheckReport("apriori", False, records[0].F - env.c1,
                           "not a theorem run: F(0) < c1")
    s1, s2 = [], []
    for r, s in zip(records, smooth):
        if not s:
            continue
        q = 1 + env.c2 * r.t
        s1.append(r.F - env.c1)
        s2.append(env.c3 / (2 * q ** 3) * r.F ** 2 - env.M * q)
    if not s1:
        return _na("apriori", "no smooth records")
    w = min(min(s1), min(s2) / env.M)
    return CheckReport("apriori", w >= 0, w,
                       f"min F-c1 {min(s1):.4g}, min cone slack {min(s2):.4g}")


def deadline_check(t_s: Optional[float], plan: TheoremPlan) -> CheckReport:
    if t_s is None:
        return _na("blowup_before_deadline", "no blow-up detected")
    return CheckReport("blowup_before_deadline", t_s < plan.t_star, plan.t_star - t_s,
                       f"t_s={t_s:.6g}, t*={plan.t_star:.6g}")


def singularity_time_estimate(records: Sequence[DiagRecord], grad_limit: float,
                              window: int = 5) -> float:
    """Extrapolated time at which ``1 / max_grad`` reaches zero.

    Fits a line to ``1/max_grad`` over the last ``window`` smooth records;
    gradient catastrophes of Burgers type make this quantity linear in time.
    """
    sm = smooth_mask(records, grad_limit)
    pts = [(r.t, 1.0 / r.max_grad) for r, s in zip(records, sm) if s and r.max_grad > 0]
    if len(pts) < 2:
        return math.nan
    pts = np.array(pts[-window:])
    slope, icpt = np.polyfit(pts[:, 0], pts[:, 1], 1)
    if slope >= 0:
        return math.inf
    return float(-icpt / slope)


def run_checks(records: Sequence[DiagRecord], plan: TheoremPlan, dx: float,
               grad_limit: float, t_s: Optional[float] = None) -> list[CheckReport]:
    """Every check that applies to a run started from ``plan``'s data."""
    smooth = smooth_mask(records, grad_limit)
    out = [
        conservation_check(records),
        entropy_check(records),
        cone_check(records, plan, dx),
        jensen_check(records),
        holder_check(records),
        s2_bound_check(records, plan),
    ]
    out.extend(f_derivative_check(records, plan, smooth))
    if plan.admissible:
        env = EnvelopeParams.from_plan(plan)
        out.append(envelope_check(records, env, smooth))
        out.append(apriori_check(records, env, smooth))
        out.append(deadline_check(t_s, plan))
    else:
        why = "plan not admissible: " + ",".join(plan.violated)
        out += [_na("riccati_envelope", why), _na("apriori", why),
                _na("blowup_before_deadline", why)]
    return out


def as_dicts(records: Iterable[DiagRecord]) -> list[dict]:
    return [asdict(r) for r in records]
