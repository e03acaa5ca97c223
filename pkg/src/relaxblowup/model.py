"""Constitutive layer for the relaxed isentropic Euler system.

Unknowns are density ``rho``, velocity ``u`` and the Maxwell stress ``S``.
In divergence form the conserved densities are ``(rho, rho*u, rho*S)`` with

    rho_t    + (rho u)_x               = 0
    (rho u)_t + (rho u^2 + p(rho) - S)_x = 0
    (rho S)_t + (rho u S)_x            = (u_x - S) / tau

and pressure ``p(rho) = rho**gamma``.

Every function here accepts scalars or numpy arrays (broadcast elementwise)
and has no internal state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class DomainError(ValueError):
    """Raised when a state leaves the admissible set ``rho > 0``."""


@dataclass(frozen=True)
class ModelParams:
    gamma: float
    tau: float
    rho_bar: float = 1.0

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        if not self.tau > 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.rho_bar > 0.0:
            raise ValueError(f"rho_bar must be positive, got {self.rho_bar}")

    @property
    def rest_speed(self) -> float:
        """Characteristic speed of the equilibrium state ``(rho_bar, 0, 0)``."""
        return float(np.sqrt(pressure_derivative(self.rho_bar, self)
                             + 1.0 / (self.tau * self.rho_bar ** 2)))


class PointState(NamedTuple):
    rho: np.ndarray | float
    u: np.ndarray | float
    S: np.ndarray | float


class ConsTriple(NamedTuple):
    rho: np.ndarray | float
    mom: np.ndarray | float
    rw: np.ndarray | float


class FluxTriple(NamedTuple):
    f_rho: np.ndarray | float
    f_mom: np.ndarray | float
    f_rw: np.ndarray | float


def _check_rho(rho):
    rho = np.asarray(rho, dtype=float)
    # written as "not >" so NaN is rejected too
    if not np.all(rho > 0.0):
        bad = np.flatnonzero(~(rho.ravel() > 0.0))
        raise DomainError(
            f"density must be positive; {bad.size} offending value(s), "
            f"first at flat index {bad[0]}: {rho.ravel()[bad[0]]!r}")
    return rho


def pressure(rho, params: ModelParams):
    rho = _check_rho(rho)
    return rho ** params.gamma


def pressure_derivative(rho, params: ModelParams):
    rho = _check_rho(rho)
    return params.gamma * rho ** (params.gamma - 1.0)


def to_conservative(p: PointState) -> ConsTriple:
    rho = _check_rho(p.rho)
    return ConsTriple(rho, rho * p.u, rho * p.S)


def to_primitive(c: ConsTriple) -> PointState:
    rho = _check_rho(c.rho)
    return PointState(rho, c.mom / rho, c.rw / rho)


def physical_flux(c: ConsTriple, params: ModelParams) -> FluxTriple:
    rho = _check_rho(c.rho)
    u = c.mom / rho
    S = c.rw / rho
    return FluxTriple(c.mom, c.mom * u + rho ** params.gamma - S, c.mom * S)


def wave_speed(p: PointState, params: ModelParams):
    """Half-width ``sqrt(p'(rho) + 1/(tau rho^2))`` of the characteristic fan."""
    rho = _check_rho(p.rho)
    return np.sqrt(pressure_derivative(rho, params) + 1.0 / (params.tau * rho * rho))


def char_speeds(p: PointState, params: ModelParams):
    """Ordered characteristic speeds ``(u - a, u, u + a)``.

    The closed form is checked against an eigensolve of ``A0^{-1} A1`` in the
    test suite; at the rest state it gives ``0`` and ``+-rest_speed``.
    """
    a = wave_speed(p, params)
    u = np.asarray(p.u, dtype=float)
    return (u - a, u + 0.0 * a, u + a)


def quasilinear_matrices(p: PointState, params: ModelParams):
    """Return ``(A0, A1, B)`` of the symmetrizable form
    ``A0(U) U_t + A1(U) U_x + B U = 0`` in variables ``U = (rho, u, S)``.

    Scalar states only.
    """
    rho = float(_check_rho(p.rho))
    u, tau = float(p.u), params.tau
    A0 = np.diag([1.0, rho, tau * rho])
    A1 = np.array([
        [u, rho, 0.0],
        [float(pressure_derivative(rho, params)), rho * u, -1.0],
        [0.0, -1.0, tau * rho * u],
    ])
    B = np.diag([0.0, 0.0, 1.0])
    return A0, A1, B


def _pressure_excess(rho, params: ModelParams):
    # p(rho) - p(rho_bar) - p'(rho_bar)(rho - rho_bar) without cancellation:
    # with r = rho/rho_bar = 1 + d this is rho_bar^g * (expm1(g log1p d) - g d)
    g, rb = params.gamma, params.rho_bar
    d = (rho - rb) / rb
    val = rb ** g * (np.expm1(g * np.log1p(d)) - g * d)
    return np.maximum(val, 0.0)


def entropy_density(p: PointState, params: ModelParams):
    """Convex entropy ``eta`` vanishing only at ``(rho_bar, 0, 0)``."""
    rho = _check_rho(p.rho)
    u, S = np.asarray(p.u, dtype=float), np.asarray(p.S, dtype=float)
    return (_pressure_excess(rho, params) / (params.gamma - 1.0)
            + 0.5 * params.tau * rho * S * S + 0.5 * rho * u * u)


def entropy_flux(p: PointState, params: ModelParams, variant: str = "corrected"):
    """Entropy flux ``q`` paired with :func:`entropy_density`.

    ``variant="corrected"`` carries ``-p'(rho_bar)/(gamma-1) * rho u`` so that
    ``eta_t + q_x + S^2 = 0`` along smooth solutions.  ``variant="printed"``
    keeps the ``+`` sign of the commonly quoted form, which is not compatible
    with ``eta`` and exists only for comparison.
    """
    if variant not in ("corrected", "printed"):
        raise ValueError(f"unknown entropy flux variant {variant!r}")
    rho = _check_rho(p.rho)
    u, S = np.asarray(p.u, dtype=float), np.asarray(p.S, dtype=float)
    g = params.gamma
    affine = pressure_derivative(params.rho_bar, params) / (g - 1.0) * rho * u
    if variant == "corrected":
        affine = -affine
    return (g / (g - 1.0) * u * rho ** g + affine + 0.5 * rho * u ** 3
            + 0.5 * params.tau * rho * u * S * S - u * S)


def entropy_variables(c: ConsTriple, params: ModelParams):
    """Gradient of :func:`entropy_density` with respect to ``(rho, rho u, rho S)``."""
    p = to_primitive(c)
    g = params.gamma
    d_rho = ((pressure_derivative(p.rho, params)
              - pressure_derivative(params.rho_bar, params)) / (g - 1.0)
             - 0.5 * p.u ** 2 - 0.5 * params.tau * p.S ** 2)
    return d_rho, p.u, params.tau * p.S


def relaxation_rhs(p: PointState, u_x, params: ModelParams):
    """Source of the ``rho S`` balance law, ``(u_x - S) / tau``."""
    _check_rho(p.rho)
    return (np.asarray(u_x, dtype=float) - p.S) / params.tau
