"""Large-data construction for the blow-up theorem.

Builds the odd plateau/ramp velocity profile ``u_{L,M}``, evaluates every
constant of the blow-up argument for given initial density and stress, picks
the smallest admissible ``(L, M)`` and computes the deadline ``t*`` after
which no smooth solution can survive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from relaxblowup.model import ModelParams, pressure

PROFILE_VARIANTS = ("corrected", "printed")


class PlanningError(ValueError):
    """No admissible ``(L, M)`` exists under the given policy."""

    def __init__(self, message: str, binding: str):
        super().__init__(message)
        self.binding = binding


@dataclass(frozen=True)
class ProfileSpec:
    L: float
    M: int
    R: float = 1.0
    variant: str = "corrected"

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if float(self.M) != int(self.M) or int(self.M) % 2:
            raise ValueError(f"M must be even, got {self.M}")
        if not self.M > 2:
            raise ValueError(f"M must exceed 2, got {self.M}")
        if not self.R > 0:
            raise ValueError(f"R must be positive, got {self.R}")
        if self.M < max(4, self.R):
            raise ValueError(f"M must be >= max(4, R) = {max(4, self.R)}, got {self.M}")
        if self.variant not in PROFILE_VARIANTS:
            raise ValueError(f"unknown profile variant {self.variant!r}")
        object.__setattr__(self, "M", int(self.M))


def velocity_profile(spec: ProfileSpec, x):
    """Evaluate ``u_{L,M}`` at ``x`` (scalar or array).

    The corrected variant is C^1 and odd.  The ``printed`` variant uses
    ``L cos(pi(x+M))`` on ``(-1, 1]`` and ``(L/2)cos(pi(x+M)) + L/2`` on
    ``(M-1, M]``, which jump at ``x = +-1`` and ``x = M-1``.
    """
    L, M = spec.L, spec.M
    x = np.asarray(x, dtype=float)
    if spec.variant == "corrected":
        # evaluated on |x| so that oddness holds bit for bit
        a = np.abs(x)
        out = np.sign(x) * np.select(
            [a <= 1, a <= M - 1, a <= M],
            [L * np.sin(0.5 * np.pi * a), L, 0.5 * L * (1.0 + np.cos(np.pi * (a - (M - 1))))],
            default=0.0,
        )
        return out if out.ndim else float(out)
    # for integer M, cos(pi(x+M)) = (-1)^M cos(pi x)
    left_ramp = 0.5 * L * np.cos(np.pi * (x + M)) - 0.5 * L
    middle = L * np.cos(np.pi * (x + M))
    right_ramp = 0.5 * L * np.cos(np.pi * (x + M)) + 0.5 * L
    out = np.select(
        [x <= -M, x <= -M + 1, x <= -1, x <= 1, x <= M - 1, x <= M],
        [0.0, left_ramp, -L, middle, L, right_ramp],
        default=0.0,
    )
    return out if out.ndim else float(out)


def profile_breakpoints(spec: ProfileSpec):
    M = spec.M
    return (-M, -M + 1, -1, 1, M - 1, M)


def profile_norm_sq(spec: ProfileSpec) -> float:
    """Exact ``||u_{L,M}||_{L^2}^2 = 2 L^2 M - 9 L^2 / 4`` (same for both variants)."""
    L, M = spec.L, spec.M
    val = 2.0 * L * L * M - 2.25 * L * L
    assert val <= 2.0 * L * L * M
    return val


def profile_moment(spec: ProfileSpec) -> float:
    """Exact ``int x u_{L,M}(x) dx`` for the corrected profile (``rho0 = 1``)."""
    if spec.variant != "corrected":
        raise ValueError("closed-form moment is only available for the corrected profile")
    L, M = spec.L, spec.M
    return L * (M * M - 2 * M) + 0.5 * L * (2 * M - 1) + 6.0 * L / math.pi ** 2


# ---------------------------------------------------------------------------
# initial density / stress


def _unit_bump(z):
    # C^1 cosine-squared bump supported on |z| < 1
    z = np.asarray(z, dtype=float)
    return np.where(np.abs(z) < 1.0, np.cos(0.5 * np.pi * z) ** 2, 0.0)


def constant_density(rho_bar: float = 1.0) -> Callable:
    return lambda x: np.full_like(np.asarray(x, dtype=float), rho_bar)


def zero_stress() -> Callable:
    return lambda x: np.zeros_like(np.asarray(x, dtype=float))


def density_bump(amplitude: float, width: float, rho_bar: float = 1.0,
                 center: float = 0.0) -> Callable:
    """``rho_bar + amplitude * cos^2`` bump of half-width ``width``."""
    return lambda x: rho_bar + amplitude * _unit_bump((np.asarray(x) - center) / width)


def stress_bump(amplitude: float, width: float, center: float = 0.0) -> Callable:
    return lambda x: amplitude * _unit_bump((np.asarray(x) - center) / width)


@dataclass
class InitialData:
    """Initial state ``(rho0, u_{L,M}, S0)``.

    ``rho0 - rho_bar`` and ``S0`` must vanish outside ``(-R, R)``.
    ``rho_min``/``rho_max`` are sampled on construction unless given.
    """

    profile: ProfileSpec
    rho0: Callable = field(default_factory=constant_density)
    S0: Callable = field(default_factory=zero_stress)
    rho_bar: float = 1.0
    rho_min: float | None = None
    rho_max: float | None = None
    samples_per_unit: int = 256
    zero_velocity: bool = False

    def __post_init__(self):
        R = self.profile.R
        n = max(int(math.ceil(2 * R * self.samples_per_unit)), 2)
        xs = np.linspace(-R, R, n + 1)
        r = np.asarray(self.rho0(xs), dtype=float)
        if self.rho_min is None:
            self.rho_min = float(min(r.min(), self.rho_bar))
        if self.rho_max is None:
            self.rho_max = float(max(r.max(), self.rho_bar))
        if not self.rho_min > 0:
            raise ValueError("rho0 must be positive everywhere")

    @property
    def R(self) -> float:
        return self.profile.R

    def u0(self, x):
        if self.zero_velocity:
            return np.zeros_like(np.asarray(x, dtype=float))
        return velocity_profile(self.profile, x)

    def primitive(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) < self.R
        rho = np.where(inside, self.rho0(x), self.rho_bar)
        S = np.where(inside, self.S0(x), 0.0)
        return rho, self.u0(x), S

    def with_profile(self, L: float, M: int) -> "InitialData":
        spec = ProfileSpec(L, M, self.profile.R, self.profile.variant)
        return InitialData(spec, self.rho0, self.S0, self.rho_bar, self.rho_min,
                           self.rho_max, self.samples_per_unit, self.zero_velocity)


def _midpoint(f, a: float, b: float, cells_per_unit: int) -> float:
    n = max(int(math.ceil((b - a) * cells_per_unit)), 1)
    h = (b - a) / n
    x = a + (np.arange(n) + 0.5) * h
    return float(np.sum(f(x)) * h)


def initial_mass(data: InitialData, cells_per_unit: int = 64) -> float:
    R = data.R
    return _midpoint(lambda x: data.rho0(x) - data.rho_bar, -R, R, cells_per_unit)


def compute_H0(data: InitialData, params: ModelParams, cells_per_unit: int = 64) -> float:
    """Initial entropy of ``(rho0, S0)``: integral of
    ``(p(rho0) - 1 - gamma(rho0 - 1))/(gamma - 1) + tau rho0 S0^2 / 2``."""
    if cells_per_unit < 64:
        raise ValueError("quadrature needs at least 64 cells per unit length")
    g, tau = params.gamma, params.tau

    def integrand(x):
        r = np.asarray(data.rho0(x), dtype=float)
        s = np.asarray(data.S0(x), dtype=float)
        return (pressure(r, params) - 1.0 - g * (r - 1.0)) / (g - 1.0) + 0.5 * tau * r * s * s

    val = _midpoint(integrand, -data.R, data.R, cells_per_unit)
    if val < -1e-12:
        raise RuntimeError(f"H0 quadrature returned {val}; rho0 or quadrature is broken")
    return max(val, 0.0)


def initial_moment(data: InitialData, cells_per_unit: int = 64) -> float:
    """``F(0) = int x rho0(x) u0(x) dx`` by the composite midpoint rule."""
    M = data.profile.M

    def integrand(x):
        rho, u, _ = data.primitive(x)
        return x * rho * u

    return _midpoint(integrand, -float(M), float(M), cells_per_unit)


# ---------------------------------------------------------------------------
# theorem constants


@dataclass(frozen=True)
class Check:
    """One inequality ``lhs <op> rhs`` with its signed slack."""

    name: str
    lhs: float
    rhs: float
    op: str
    margin: float
    passed: bool

    @classmethod
    def compare(cls, name: str, lhs: float, op: str, rhs: float, atol: float = 0.0):
        if op in (">", ">="):
            margin = lhs - rhs
        elif op in ("<", "<="):
            margin = rhs - lhs
        elif op == "==":
            margin = -abs(lhs - rhs)
        else:
            raise ValueError(op)
        if op in (">", "<"):
            passed = margin > 0
        elif op == "==":
            passed = -margin <= atol
        else:
            passed = margin >= -atol
        return cls(name, float(lhs), float(rhs), op, float(margin), bool(passed))


@dataclass(frozen=True)
class PlanPolicy:
    rel_margin: float = 1e-9
    max_L: float = 1e6
    max_M: int = 10 ** 7
    cells_per_unit: int = 64


@dataclass(frozen=True)
class TheoremPlan:
    gamma: float
    tau: float
    rho_min: float
    rho_max: float
    R: float
    mass0: float
    sigma: float
    sigma_tilde: float
    L: float
    M: int
    H0: float
    norm_sq: float
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    F0: float
    F0_threshold: float
    F0_critical: float
    t_star: float
    checks: tuple
    variant: str = "corrected"

    @property
    def admissible(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def violated(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        """Flat JSON-compatible report: constants then ``check.<name>.*`` keys."""
        out = {
            "gamma": self.gamma, "tau": self.tau, "rho_min": self.rho_min,
            "rho_max": self.rho_max, "R": self.R, "mass0": self.mass0,
            "sigma": self.sigma, "sigma_tilde": self.sigma_tilde, "L": self.L,
            "M": self.M, "H0": self.H0, "norm_sq": self.norm_sq,
            "c1": self.c1, "c2": self.c2, "c3": self.c3, "c4": self.c4, "c5": self.c5,
            "F0": self.F0, "F0_threshold": self.F0_threshold,
            "F0_critical": self.F0_critical,
            "t_star": self.t_star if math.isfinite(self.t_star) else None,
            "variant": self.variant,
            "admissible": self.admissible,
            "violated": ",".join(self.violated),
        }
        for c in self.checks:
            key = f"check.{c.name}"
            out[f"{key}.lhs"] = c.lhs
            out[f"{key}.op"] = c.op
            out[f"{key}.rhs"] = c.rhs
            out[f"{key}.margin"] = c.margin
            out[f"{key}.passed"] = c.passed
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "TheoremPlan":
        names = sorted({k.split(".")[1] for k in d if k.startswith("check.")},
                       key=lambda n: list(d).index(f"check.{n}.lhs"))
        checks = tuple(
            Check(n, d[f"check.{n}.lhs"], d[f"check.{n}.rhs"], d[f"check.{n}.op"],
                  d[f"check.{n}.margin"], bool(d[f"check.{n}.passed"]))
            for n in names)
        t_star = d["t_star"]
        return cls(
            gamma=d["gamma"], tau=d["tau"], rho_min=d["rho_min"], rho_max=d["rho_max"],
            R=d["R"], mass0=d["mass0"], sigma=d["sigma"], sigma_tilde=d["sigma_tilde"],
            L=d["L"], M=int(d["M"]), H0=d["H0"], norm_sq=d["norm_sq"],
            c1=d["c1"], c2=d["c2"], c3=d["c3"], c4=d["c4"], c5=d["c5"],
            F0=d["F0"], F0_threshold=d["F0_threshold"], F0_critical=d["F0_critical"],
            t_star=math.inf if t_star is None else t_star,
            checks=checks, variant=d.get("variant", "corrected"))


def speeds(params: ModelParams, rho_max: float) -> tuple[float, float]:
    """``sigma = sqrt(gamma + 1/tau)`` and the enlarged ``sigma_tilde``."""
    sigma = math.sqrt(params.gamma + 1.0 / params.tau)
    sigma_tilde = math.sqrt(max(sigma ** 2, 1.0 / (8.0 * rho_max)))
    return sigma, sigma_tilde


def deadline(F0: float, c2: float, c3: float) -> float:
    """Smallest ``t`` at which the integrated Riccati bound contradicts ``F0``."""
    if not F0 > 0:
        return math.inf
    gap = c3 / (8.0 * c2) - 1.0 / F0
    if not gap > 0:
        return math.inf
    return (math.sqrt((c3 / (4.0 * c2)) / gap) - 1.0) / c2


def blowup_deadline(plan: TheoremPlan) -> float:
    if not (plan.F0 > 0 and 1.0 / plan.F0 < plan.c3 / (8.0 * plan.c2)):
        raise ValueError("deadline undefined: F0 does not exceed 8 c2 / c3")
    return deadline(plan.F0, plan.c2, plan.c3)


def evaluate_plan(params: ModelParams, data: InitialData,
                  cells_per_unit: int = 64) -> TheoremPlan:
    """All constants and inequality checks for the ``(L, M)`` in ``data``."""
    spec = data.profile
    L, M, R = spec.L, spec.M, spec.R
    rmin, rmax = data.rho_min, data.rho_max
    sigma, st = speeds(params, rmax)
    H0 = compute_H0(data, params, cells_per_unit)
    mass0 = initial_mass(data, cells_per_unit)
    nsq = profile_norm_sq(spec)
    F0 = initial_moment(data, cells_per_unit)

    c2 = st / M
    c3 = 1.0 / (2.0 * rmax * M ** 3)
    c1 = 2.0 * c2 / c3
    c4 = H0 / (2.0 * c1 ** 2)
    c5 = rmax / (4.0 * c1 ** 2)
    threshold = max(16.0 * st * M ** 2 * rmax, M ** 2 * math.sqrt(8.0 * rmax))
    critical = 8.0 * c2 / c3
    t_star = deadline(F0, c2, c3)
    mid = (c3 ** 2 / (8.0 * c2 ** 2)) * (H0 + rmax * L * L * M)

    checks = (
        Check.compare("rho0_positive", rmin, ">", 0.0),
        Check.compare("initialmass", mass0, ">=", 0.0, atol=1e-12),
        Check.compare("support", M, ">=", max(4.0, R)),
        Check.compare("largespeed", st ** 2, "==", max(sigma ** 2, 1.0 / (8.0 * rmax)),
                      atol=1e-12 * st ** 2),
        Check.compare("largedata", 0.5 * L * rmin, ">",
                      max(math.sqrt(8.0 * rmax), 16.0 * st * rmax)),
        Check.compare("largesupport", H0 + rmax * L * L * M, "<=", 2.0 * st * M ** 2 * rmax),
        Check.compare("norm_bound", nsq, "<=", 2.0 * L * L * M),
        Check.compare("chain_lower", c4 + c5 * nsq, "<=", mid),
        Check.compare("chain_upper", mid, "<=", c3 / (8.0 * c2)),
        Check.compare("threshold", F0, ">", threshold),
        Check.compare("critical", F0, ">", critical),
        Check.compare("apriori1_anchor", F0, ">=", 2.0 * c1),
        Check.compare("apriori3_anchor", F0 ** 2, ">=", 4.0 * M / c3),
        Check.compare("deadline_finite", 1.0 if math.isfinite(t_star) else 0.0, "==", 1.0),
    )
    return TheoremPlan(
        gamma=params.gamma, tau=params.tau, rho_min=rmin, rho_max=rmax, R=R,
        mass0=mass0, sigma=sigma, sigma_tilde=st, L=float(L), M=int(M), H0=H0,
        norm_sq=nsq, c1=c1, c2=c2, c3=c3, c4=c4, c5=c5, F0=F0,
        F0_threshold=threshold, F0_critical=critical, t_star=t_star,
        checks=checks, variant=spec.variant)


def _even_ceil(v: float) -> int:
    n = int(math.ceil(v))
    return n + (n % 2)


def choose_L(rho_min: float, rho_max: float, sigma_tilde: float,
             rel_margin: float = 1e-9) -> int:
    """Smallest even ``L`` with ``(L/2) min rho0 > max(sqrt(8 max rho0), 16 st max rho0)``."""
    rhs = max(math.sqrt(8.0 * rho_max), 16.0 * sigma_tilde * rho_max)
    target = rhs * (1.0 + rel_margin)
    L = max(_even_ceil(2.0 * target / rho_min), 2)
    while not 0.5 * L * rho_min > target:
        L += 2
    return L


def choose_M(L: float, H0: float, rho_max: float, sigma_tilde: float, R: float,
             rel_margin: float = 1e-9) -> int:
    """Smallest even ``M >= max(4, R)`` with ``H0 + max rho0 L^2 M <= 2 st M^2 max rho0``."""
    a = 2.0 * sigma_tilde * rho_max
    b = rho_max * L * L
    root = (b + math.sqrt(b * b + 4.0 * a * H0)) / (2.0 * a)
    M = _even_ceil(max(4.0, R, root))

    def ok(m):
        return (H0 + b * m) * (1.0 + rel_margin) <= a * m * m

    while M > 4 and ok(M - 2) and M - 2 >= max(4.0, R):
        M -= 2
    while not ok(M):
        M += 2
    return M


def plan(params: ModelParams, data: InitialData,
         policy: PlanPolicy = PlanPolicy()) -> TheoremPlan:
    """Pick the smallest even ``(L, M)`` satisfying the hypotheses and evaluate."""
    if not data.rho_min > 0:
        raise PlanningError("rho0 must be positive", "rho0_positive")
    mass0 = initial_mass(data, policy.cells_per_unit)
    if mass0 < -1e-12:
        raise PlanningError(f"initial mass deviation {mass0} is negative", "initialmass")
    _, st = speeds(params, data.rho_max)
    L = choose_L(data.rho_min, data.rho_max, st, policy.rel_margin)
    if L > policy.max_L:
        raise PlanningError(f"L = {L} exceeds cap {policy.max_L}", "largedata")
    H0 = compute_H0(data, params, policy.cells_per_unit)
    M = choose_M(L, H0, data.rho_max, st, data.R, policy.rel_margin)
    if M > policy.max_M:
        raise PlanningError(
            f"M = {M} exceeds cap {policy.max_M} (binding constraint: largesupport)",
            "largesupport")
    return evaluate_plan(params, data.with_profile(L, M), policy.cells_per_unit)
