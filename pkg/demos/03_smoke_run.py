"""A small smooth run and the structural checks it must pass.

Mass and momentum are conserved to round-off, the entropy decreases by the
accumulated dissipation, and the disturbance stays inside the propagation cone.
"""

import math

from relaxblowup import diagnostics as dg
from relaxblowup.model import ModelParams
from relaxblowup.planner import InitialData, ProfileSpec, evaluate_plan
from relaxblowup.solver import SimConfig, run

params = ModelParams(2.0, 1.0)
data = InitialData(ProfileSpec(2.0, 8))
pl = evaluate_plan(params, data)

for dx in (1 / 32, 1 / 64):
    cfg = SimConfig(params, dx=dx, t_end=0.2, order=2, splitting="strang")
    rec = dg.Recorder(params, ball=(pl.M, math.sqrt(3)))
    out = run(cfg, data, rec)
    print(f"dx = {dx:g}: {out.status} after {out.steps} steps")
    for r in dg.run_checks(rec.records, pl, dx, out.grad_limit):
        print("   ", r.line())
    E0 = rec.records[0].E
    res = max(abs(r.E + r.D_cum - E0) for r in rec.records)
    print(f"    integrated entropy residual {res:.3g}, "
          f"cone overshoot {dg.cone_overshoot(rec.records, pl):.4f}")
