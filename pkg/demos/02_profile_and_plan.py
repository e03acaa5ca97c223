"""From a velocity profile to a certified blow-up deadline.

The profile u_{L,M} is odd and C^1 with ||u||^2 = 2 L^2 M - 9 L^2 / 4.  The
planner picks the smallest even L and M that satisfy every size condition and
reports each inequality with its slack.
"""

from relaxblowup.model import ModelParams
from relaxblowup.planner import (InitialData, ProfileSpec, plan, profile_moment,
                                 profile_norm_sq)

spec = ProfileSpec(L=2.0, M=8)
print(f"(L, M) = (2, 8): ||u||^2 = {profile_norm_sq(spec):g} <= {2 * 4 * 8}, "
      f"F(0) = {profile_moment(spec):.4f}")

params = ModelParams(gamma=2.0, tau=1.0)
p = plan(params, InitialData(spec))
print(f"planned L = {p.L:g}, M = {p.M}, sigma_tilde = {p.sigma_tilde:.6f}")
print(f"F(0) = {p.F0:.6g} against threshold {p.F0_threshold:.6g}")
print(f"deadline t* = {p.t_star:.6g}")
for c in p.checks:
    print(f"  {'ok  ' if c.passed else 'FAIL'} {c.name:<16} margin {c.margin:.4g}")
