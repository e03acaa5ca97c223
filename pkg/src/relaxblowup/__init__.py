"""Finite-volume simulation and blow-up verification for isentropic Euler
with a divergence-form Maxwell relaxation law.

Submodules:

* :mod:`relaxblowup.model` -- constitutive relations, fluxes, speeds, entropy pair
* :mod:`relaxblowup.planner` -- velocity profile, theorem constants, deadline
* :mod:`relaxblowup.solver` -- split finite-volume evolution
* :mod:`relaxblowup.diagnostics` -- functionals and inequality checks
* :mod:`relaxblowup.cli` -- ``plan``/``simulate``/``verify``/``profile`` front end
"""

from relaxblowup.model import (
    ConsTriple,
    DomainError,
    FluxTriple,
    ModelParams,
    PointState,
)

__version__ = "0.1.0"

__all__ = [
    "ConsTriple",
    "DomainError",
    "FluxTriple",
    "ModelParams",
    "PointState",
]
