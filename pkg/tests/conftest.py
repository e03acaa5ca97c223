import functools
import time

import pytest

from relaxblowup.diagnostics import Recorder
from relaxblowup.model import ModelParams
from relaxblowup.planner import InitialData, ProfileSpec, evaluate_plan, plan
from relaxblowup.solver import SimConfig, run

P2 = ModelParams(2.0, 1.0)


class Simulation:
    def __init__(self, plan_, data, dx, config, outcome, records, seconds):
        self.plan = plan_
        self.data = data
        self.dx = dx
        self.config = config
        self.outcome = outcome
        self.records = records
        self.seconds = seconds

    @property
    def t_s(self):
        return self.outcome.t if self.outcome.blowup else None


@functools.lru_cache(maxsize=None)
def simulate(kind, dx, t_end, order=2, splitting="strang", grad_cells=10.0):
    base = InitialData(ProfileSpec(2.0, 8))
    if kind == "smoke":
        pl = evaluate_plan(P2, base)
        data = base
    else:
        pl = plan(P2, base)
        data = base.with_profile(pl.L, pl.M)
    cfg = SimConfig(P2, dx=dx, t_end=t_end, order=order, splitting=splitting,
                    grad_cells=grad_cells)
    rec = Recorder(P2, cfg.eps_support, ball=(pl.M, pl.sigma_tilde))
    t0 = time.perf_counter()
    out = run(cfg, data, rec)
    return Simulation(pl, data, dx, cfg, out, rec.records, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def smoke():
    return simulate("smoke", 1 / 32, 0.2)


@pytest.fixture(scope="session")
def smoke_fine():
    return simulate("smoke", 1 / 64, 0.2)


@pytest.fixture(scope="session")
def theorem():
    return simulate("theorem", 0.05, 1.0)


@pytest.fixture(scope="session")
def theorem_fine():
    return simulate("theorem", 0.025, 1.0)



def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
