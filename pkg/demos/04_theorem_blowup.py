"""Blow-up of the planned large data.

The theorem-scale data steepen on the outer ramps within a few hundredths of a
time unit, long before the certified deadline.  The moment F(t) stays above
the Riccati envelope the whole time.  The last lines show how the detection
time moves with the grid.
"""

import math

from relaxblowup import diagnostics as dg
from relaxblowup.model import ModelParams
from relaxblowup.planner import InitialData, ProfileSpec, plan
from relaxblowup.solver import SimConfig, run

params = ModelParams(2.0, 1.0)
p = plan(params, InitialData(ProfileSpec(2.0, 8)))
data = InitialData(ProfileSpec(p.L, p.M))
env = dg.EnvelopeParams.from_plan(p)
print(f"L = {p.L:g}, M = {p.M}, t* = {p.t_star:.4g}")
print(f"Burgers estimate of the singular time: 2/(pi L) = {2 / (math.pi * p.L):.5f}")

for dx in (0.05, 0.025):
    cfg = SimConfig(params, dx=dx, t_end=1.0, order=2, splitting="strang", grad_cells=10)
    rec = dg.Recorder(params, ball=(p.M, p.sigma_tilde))
    out = run(cfg, data, rec)
    smooth = dg.smooth_mask(rec.records, out.grad_limit)
    print(f"dx = {dx}: {out.status} at t = {out.t:.5f} ({out.reason})")
    print("   ", dg.envelope_check(rec.records, env, smooth).line())
    print("   ", dg.apriori_check(rec.records, env, smooth).line())
    print(f"    extrapolated singular time "
          f"{dg.singularity_time_estimate(rec.records, out.grad_limit):.5f}")
