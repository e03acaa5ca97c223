"""Wave speeds of the relaxation system.

At the rest state the nonzero characteristic speeds are +-sqrt(gamma + 1/tau).
Away from rest the closed form u +- sqrt(p'(rho) + 1/(tau rho^2)) agrees with a
direct eigensolve of A0^{-1} A1.
"""

import numpy as np

from relaxblowup.model import ModelParams, PointState, char_speeds, quasilinear_matrices

params = ModelParams(gamma=2.0, tau=1.0)

print("rest state speeds:", char_speeds(PointState(1.0, 0.0, 0.0), params))

for state in [PointState(2.0, 1.0, 0.0), PointState(0.5, -0.3, 0.8)]:
    A0, A1, _ = quasilinear_matrices(state, params)
    numeric = np.sort(np.linalg.eigvals(np.linalg.solve(A0, A1)).real)
    closed = np.array(char_speeds(state, params), dtype=float)
    print(f"{state}: closed form {closed}, eigensolve {numeric}")

# smaller tau stiffens the stress and speeds up the outer waves
for tau in (1.0, 0.1, 0.01):
    p = ModelParams(2.0, tau)
    print(f"tau={tau:<5} rest speed {p.rest_speed:.4f}")
