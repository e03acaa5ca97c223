"""Split finite-volume solver.

Each step advances the homogeneous divergence-form system with a local
Lax-Friedrichs flux (first order) or MUSCL-Hancock with minmod slopes
(second order), then integrates the relaxation ODE
``tau rho S_t = u_x - S`` exactly with ``rho`` and ``u_x`` frozen.

Cell arrays have shape ``(3, n_cells)`` with rows ``rho, mom, rw``
(``mom = rho u``, ``rw = rho S``).  The far field is held at the equilibrium
``(rho_bar, 0, 0)`` through ghost cells; any disturbance reaching the last
five cells aborts the run instead of reflecting.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from relaxblowup.model import ConsTriple, DomainError, ModelParams, physical_flux
from relaxblowup.planner import InitialData

log = logging.getLogger(__name__)

BREACH_CELLS = 5


class ConfigurationError(ValueError):
    pass


class BlowupDetected(RuntimeError):
    def __init__(self, t: float, index: int, x: float, reason: str):
        super().__init__(f"blow-up detected at t={t:.6g}, x={x:.6g} (cell {index}): {reason}")
        self.t, self.index, self.x, self.reason = t, index, x, reason


class BoundaryBreach(RuntimeError):
    def __init__(self, t: float, side: str):
        super().__init__(f"disturbance reached the {side} boundary at t={t:.6g}")
        self.t, self.side = t, side


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self):
        if self.n_cells <= 0 or not self.x_max > self.x_min:
            raise ConfigurationError(f"invalid grid {self}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx

    @classmethod
    def symmetric(cls, half_width: float, dx: float) -> "Grid":
        """Grid on ``[-H, H]`` with ``H >= half_width`` a whole number of cells
        from the origin, so ``x = 0`` is a face."""
        k = int(math.ceil(half_width / dx - 1e-9))
        return cls(-k * dx, k * dx, 2 * k)

    @classmethod
    def for_cone(cls, M: float, sigma_tilde: float, t_end: float, dx: float) -> "Grid":
        """Domain holding ``|x| <= M + sigma_tilde t_end`` plus ``20 dx + 2``."""
        return cls.symmetric(M + sigma_tilde * t_end + 20.0 * dx + 2.0, dx)


@dataclass(frozen=True)
class Field:
    grid: Grid
    cells: np.ndarray
    time: float = 0.0

    def snapshot(self) -> "Field":
        c = self.cells.copy()
        c.flags.writeable = False
        return Field(self.grid, c, self.time)

    @property
    def primitive(self):
        rho, mom, rw = self.cells
        return rho, mom / rho, rw / rho


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    dx: float
    t_end: float
    cfl: float = 0.4
    order: int = 1
    splitting: str = "godunov"
    record_every: int = 1
    eps_support: float = 1e-6
    # absolute limit on max|du/dx|; None -> grad_cells-based default
    grad_limit: Optional[float] = None
    # default limit: the data's velocity range spread over grad_cells cells
    grad_cells: float = 10.0
    rho_limit: float = 1e-8
    half_width: Optional[float] = None
    max_steps: int = 10 ** 7

    def __post_init__(self):
        if not 0.0 < self.cfl < 1.0:
            raise ConfigurationError(f"cfl must lie in (0, 1), got {self.cfl}")
        if not self.t_end > 0:
            raise ConfigurationError(f"t_end must be positive, got {self.t_end}")
        if not self.dx > 0:
            raise ConfigurationError(f"dx must be positive, got {self.dx}")
        if self.order not in (1, 2):
            raise ConfigurationError(f"order must be 1 or 2, got {self.order}")
        if self.splitting not in ("godunov", "strang"):
            raise ConfigurationError(f"unknown splitting {self.splitting!r}")
        if self.record_every < 1:
            raise ConfigurationError("record_every must be >= 1")
        for name in ("eps_support", "grad_cells", "rho_limit"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.grad_limit is not None and not self.grad_limit > 0:
            raise ConfigurationError("grad_limit must be positive")

    def resolved_grad_limit(self, data: InitialData) -> float:
        if self.grad_limit is not None:
            return self.grad_limit
        vel_range = 2.0 * data.profile.L
        return vel_range / (self.grad_cells * self.dx)

    def grid_for(self, data: InitialData, sigma_tilde: float) -> Grid:
        if self.half_width is not None:
            return Grid.symmetric(self.half_width, self.dx)
        return Grid.for_cone(data.profile.M, sigma_tilde, self.t_end, self.dx)


# ---------------------------------------------------------------------------


def equilibrium(params: ModelParams) -> np.ndarray:
    return np.array([params.rho_bar, 0.0, 0.0])


def init_state(grid: Grid, data: InitialData, params: ModelParams) -> Field:
    """Cell averages of ``(rho0, rho0 u0, rho0 S0)`` from four midpoint samples."""
    M = data.profile.M
    dx = grid.dx
    if dx > 1.0 / 16.0 + 1e-12:
        raise ConfigurationError(f"dx = {dx} is coarser than 16 cells per unit ramp")
    if grid.x_min > -M or grid.x_max < M:
        raise ConfigurationError("grid does not cover the data support")
    xc = grid.centers
    offsets = (np.arange(4) + 0.5) / 4.0 - 0.5
    xs = xc[None, :] + offsets[:, None] * dx
    rho, u, S = data.primitive(xs)
    cells = np.stack([rho.mean(0), (rho * u).mean(0), (rho * S).mean(0)])
    outside = (xc - 0.5 * dx >= M) | (xc + 0.5 * dx <= -M)
    cells[:, outside] = equilibrium(params)[:, None]
    return Field(grid, cells, 0.0)


def max_speed(cells: np.ndarray, params: ModelParams) -> np.ndarray:
    rho, mom, _ = cells
    u = mom / rho
    a = np.sqrt(params.gamma * rho ** (params.gamma - 1.0) + 1.0 / (params.tau * rho * rho))
    return np.abs(u) + a


def stable_dt(f: Field, cfl: float, params: ModelParams) -> float:
    """``cfl * dx / max |lambda|`` over all cells."""
    rho = f.cells[0]
    if not np.all(rho > 0):
        i = int(np.argmin(rho))
        raise BlowupDetected(f.time, i, float(f.grid.centers[i]), "non-positive density")
    s = max_speed(f.cells, params)
    smax = float(np.max(s))
    if not math.isfinite(smax):
        i = int(np.argmax(~np.isfinite(s)))
        raise BlowupDetected(f.time, i, float(f.grid.centers[i]), "non-finite wave speed")
    return cfl * f.grid.dx / smax


def _flux(U: np.ndarray, params: ModelParams) -> np.ndarray:
    return np.stack(physical_flux(ConsTriple(*U), params))


def _llf(UL: np.ndarray, UR: np.ndarray, params: ModelParams) -> np.ndarray:
    alpha = np.maximum(max_speed(UL, params), max_speed(UR, params))
    return 0.5 * (_flux(UL, params) + _flux(UR, params)) - 0.5 * alpha * (UR - UL)


def _pad(cells: np.ndarray, params: ModelParams, n: int) -> np.ndarray:
    ghost = np.repeat(equilibrium(params)[:, None], n, axis=1)
    return np.concatenate([ghost, cells, ghost], axis=1)


def _minmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.where(a * b > 0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def interface_fluxes(cells: np.ndarray, dt: float, dx: float, params: ModelParams,
                     order: int = 1) -> np.ndarray:
    """Numerical fluxes at the ``n_cells + 1`` faces, shape ``(3, n + 1)``."""
    if order == 1:
        U = _pad(cells, params, 1)
        return _llf(U[:, :-1], U[:, 1:], params)
    U = _pad(cells, params, 2)
    slope = _minmod(U[:, 1:-1] - U[:, :-2], U[:, 2:] - U[:, 1:-1])
    Uc = U[:, 1:-1]
    lo = Uc - 0.5 * slope
    hi = Uc + 0.5 * slope
    # Hancock half-step predictor
    corr = 0.5 * dt / dx * (_flux(hi, params) - _flux(lo, params))
    lo -= corr
    hi -= corr
    return _llf(hi[:, :-1], lo[:, 1:], params)


def hyperbolic_step(f: Field, dt: float, params: ModelParams, order: int = 1) -> Field:
    """Conservative update of the homogeneous system over ``dt``."""
    dx = f.grid.dx
    try:
        F = interface_fluxes(f.cells, dt, dx, params, order)
    except DomainError as exc:
        raise BlowupDetected(f.time, -1, float("nan"), f"reconstruction lost positivity: {exc}")
    cells = f.cells - dt / dx * (F[:, 1:] - F[:, :-1])
    rho = cells[0]
    bad = ~(rho > 0) | ~np.all(np.isfinite(cells), axis=0)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise BlowupDetected(f.time + dt, i, float(f.grid.centers[i]),
                             "non-positive or non-finite state")
    return Field(f.grid, cells, f.time)


def relaxation_step(f: Field, dt: float, params: ModelParams) -> Field:
    """Exact solve of ``tau rho S_t = u_x - S`` with ``rho`` and ``u_x`` frozen."""
    rho, mom, rw = f.cells
    u = mom / rho
    S = rw / rho
    ux = np.gradient(u, f.grid.dx)
    S_new = ux + (S - ux) * np.exp(-dt / (params.tau * rho))
    return Field(f.grid, np.stack([rho, mom, rho * S_new]), f.time)


def step(f: Field, dt: float, params: ModelParams, order: int = 1,
         splitting: str = "godunov") -> Field:
    if splitting == "strang":
        g = relaxation_step(f, 0.5 * dt, params)
        g = hyperbolic_step(g, dt, params, order)
        g = relaxation_step(g, 0.5 * dt, params)
    else:
        g = hyperbolic_step(f, dt, params, order)
        g = relaxation_step(g, dt, params)
    return Field(g.grid, g.cells, f.time + dt)


def stencil_reach(order: int, splitting: str) -> int:
    """Cells per step a disturbance can move through the update stencil."""
    hyp = 1 if order == 1 else 2
    relax = 2 if splitting == "strang" else 1
    return hyp + relax


def max_gradient(f: Field):
    """``max |u_{i+1} - u_i| / dx`` and the face position where it occurs."""
    _, u, _ = f.primitive
    g = np.abs(np.diff(u)) / f.grid.dx
    if g.size == 0:
        return 0.0, 0.0
    i = int(np.argmax(g))
    return float(g[i]), float(f.grid.x_min + (i + 1) * f.grid.dx)


def _deviation(f: Field, params: ModelParams) -> np.ndarray:
    rho, u, S = f.primitive
    return np.maximum(np.maximum(np.abs(rho - params.rho_bar), np.abs(u)), np.abs(S))


@dataclass
class RunOutcome:
    status: str                      # completed | blowup | boundary_breach
    t: float
    steps: int
    field: Field
    x: Optional[float] = None
    reason: str = ""
    grad_limit: float = math.nan
    max_grad: float = math.nan
    dt_history: list = field(default_factory=list)

    @property
    def blowup(self) -> bool:
        return self.status == "blowup"


def run(config: SimConfig, data: InitialData,
        observer: Optional[Callable[[Field, int], None]] = None,
        grid: Optional[Grid] = None) -> RunOutcome:
    """Evolve ``data`` to ``config.t_end`` or until a blow-up threshold trips.

    ``observer(snapshot, step)`` is called with read-only snapshots every
    ``record_every`` steps, at the start, and at the final state.
    """
    params = config.params
    if grid is None:
        from relaxblowup.planner import speeds
        _, st = speeds(params, data.rho_max)
        grid = config.grid_for(data, st)
    f = init_state(grid, data, params)
    limit = config.resolved_grad_limit(data)

    def emit(fld, n):
        if observer is not None:
            observer(fld.snapshot(), n)

    emit(f, 0)
    n = 0
    dts = []
    g, xg = max_gradient(f)
    last_emitted = 0
    try:
        while f.time < config.t_end:
            if n >= config.max_steps:
                raise ConfigurationError(f"max_steps={config.max_steps} reached")
            dt = stable_dt(f, config.cfl, params)
            if f.time + dt >= config.t_end:
                dt = config.t_end - f.time
            f = step(f, dt, params, config.order, config.splitting)
            if f.time > config.t_end - 1e-14 * max(1.0, config.t_end):
                f = Field(f.grid, f.cells, config.t_end)
            n += 1
            dts.append(dt)
            dev = _deviation(f, params)
            for side, block in (("left", dev[:BREACH_CELLS]), ("right", dev[-BREACH_CELLS:])):
                if np.any(block > config.eps_support):
                    raise BoundaryBreach(f.time, side)
            g, xg = max_gradient(f)
            rmin = float(np.min(f.cells[0]))
            if g > limit or rmin < config.rho_limit:
                reason = (f"max|du/dx| = {g:.6g} exceeds {limit:.6g}" if g > limit
                          else f"min density {rmin:.3g} below {config.rho_limit:.3g}")
                emit(f, n)
                idx = int(round((xg - grid.x_min) / grid.dx))
                raise BlowupDetected(f.time, idx, xg, reason)
            if n % config.record_every == 0:
                emit(f, n)
                last_emitted = n
    except BlowupDetected as exc:
        log.info("%s", exc)
        return RunOutcome("blowup", exc.t, n, f, exc.x, exc.reason, limit, g, dts)
    except BoundaryBreach as exc:
        log.warning("%s", exc)
        return RunOutcome("boundary_breach", exc.t, n, f, None, str(exc), limit, g, dts)
    if last_emitted != n:
        emit(f, n)
    return RunOutcome("completed", f.time, n, f, None, "", limit, g, dts)
