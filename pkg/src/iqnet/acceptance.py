"""The fourteen acceptance criteria as runnable checks.

Each criterion builds its configuration through the same INI parser the
CLI uses and reuses the experiment verdict helpers, so ``iqnet verify`` and
``iqnet run`` judge identical quantities.  The stationary run at the
moderate-load setup feeds several criteria and is computed once.
"""

from __future__ import annotations

import functools
import time
from dataclasses import dataclass
from typing import Callable

from . import experiments as ex
from .config import ExperimentConfig, parse_text
from .dynamics import InitialCondition
from .interference import ones, second_moment_bound
from .stationary import StatReport

# moderate-load setup shared by criteria 1, 3, 4, 8 and 11
SETUP1 = """
[experiment]
kind = {kind}
lambda = 0.25
interference = ones:3
n = 50
seeds = 1-10
burn_in = 20000
horizon = 200000
"""


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number:2d} {self.title}: {self.detail} ({self.seconds:.1f}s)"


def config(text: str, **sections) -> ExperimentConfig:
    body = text.strip() + "\n"
    for name, keys in sections.items():
        body += f"\n[{name.replace('_', '-')}]\n" + "".join(f"{k} = {v}\n" for k, v in keys.items())
    return parse_text(body, source="<acceptance>")


def _summary(verdicts) -> tuple[bool, str]:
    return all(v.passed for v in verdicts), "; ".join(
        f"{v.name} {'ok' if v.passed else 'FAILED'} ({v.detail})" for v in verdicts
    )


@functools.lru_cache(maxsize=None)
def setup1() -> tuple[ExperimentConfig, StatReport]:
    cfg = config(SETUP1.format(kind="mean-vs-formula"))
    return cfg, ex._ergodic(cfg)


def c1_closed_form_mean():
    cfg, stat = setup1()
    return _summary(ex.mean_verdicts(cfg, stat, 1.0, 0.03))


def c2_covariance_figure():
    cfg = config("""
[experiment]
kind = covariance-figure
lambda = 0.1419
interference = ones:7
n = 25
seeds = 1-6
burn_in = 200000
horizon = 2000000
""", covariance_figure={"target": 21.18, "rel_tol": 0.10, "max_lag": 25, "decay_lag": 10})
    rep = ex.run_experiment(cfg, write=False)
    return _summary(rep.verdicts)


def c3_departure_rate():
    cfg, stat = setup1()
    return _summary(ex.balance_verdicts(cfg, stat, 0.02)[:1])


def c4_mass_transport():
    cfg, stat = setup1()
    return _summary([v for v in ex.balance_verdicts(cfg, stat, 0.02) if v.name == "mass_transport"])


def c5_coupling():
    cfg = config("""
[experiment]
kind = coupling-suite
lambda = 0.25
interference = ones:3
n = 50
seeds = 0-49
""", coupling_suite={"min_events": 10000})
    rows = [ex.coupling_seed(cfg, s) for s in cfg.seeds]
    return _summary(ex.coupling_verdicts(cfg, rows))


def c6_loynes():
    cfg = config("""
[experiment]
kind = loynes
lambda = 0.25
interference = ones:3
n = 50
seeds = 0-99
""", loynes={"T0": 1, "max_doublings": 11, "box_radii": "10,20,40", "min_fraction": 0.95})
    rows = [ex.loynes_seed(cfg, s) for s in cfg.seeds]
    return _summary(ex.loynes_verdicts(cfg, rows))


def c7_local_construction():
    cfg = config("""
[experiment]
kind = local-vs-box
lambda = 0.3
interference = ones:3
mode = box
seeds = 0-99
""", local_vs_box={"T": 5, "target_site": 0})
    rep = ex.run_experiment(cfg, write=False)
    return _summary(rep.verdicts)


def c8_second_moment():
    cfg, stat = setup1()
    bound = second_moment_bound(ones(3), 0.25).bound
    ok, detail = _summary([ex.second_moment_verdict(cfg, stat)])
    return ok and abs(bound - 8.298) < 5e-4, detail


def c9_k_shifted():
    cfg = config("""
[experiment]
kind = moment-bounds
lambda = 0.25
interference = ones:3
n = 50
seeds = 1-4
burn_in = 20000
horizon = 200000
""")
    stat = ex._ergodic(cfg, K=2, initial=InitialCondition.constant(2))
    return _summary(ex.k_shift_verdicts(cfg, stat, 2))


def c10_frozen_wall():
    cfg = config("""
[experiment]
kind = frozen-wall
lambda = 0.3
interference = ones:3
mode = box
n = 5
seeds = 0-19
""", frozen_wall={"wall": 5, "magnitude": "inf", "count_time": 10000,
                  "checkpoints": "2000,10000,50000"})
    rep = ex.run_experiment(cfg, write=False)
    return _summary(rep.verdicts)


def c11_bounded_start():
    cfg, low = setup1()
    high = ex._ergodic(cfg, initial=InitialCondition.constant(5))
    return _summary([ex.overlap_verdict(cfg, low, high)])


def c12_supercritical():
    cfg = config("""
[experiment]
kind = supercritical-growth
lambda = 0.5
interference = ones:3
n = 50
seeds = 0-2
horizon = 10000
""")
    rep = ex.run_experiment(cfg, write=False)
    return _summary(rep.verdicts)


def c13_fluid():
    cfg = config("""
[experiment]
kind = fluid-transience
lambda = 0.4
interference = ones:3
seeds = 0-1
""", fluid_transience={"N": 20, "step": 1e-4, "fluid_horizon": 200, "sub_lambda": 0.2})
    rep = ex.run_experiment(cfg, write=False)
    return _summary(rep.verdicts)


def c14_infinite_support():
    cfg = config("""
[experiment]
kind = infinite-support
lambda = 0.25
interference = geometric:1/2:16
n = 50
seeds = 1-2
burn_in = 20000
horizon = 100000
""", infinite_support={"radii": "8,16", "path_horizon": 10, "path_seeds": "0-99",
                       "min_fraction": 0.95, "rel_tol": 0.05})
    rep = ex.run_experiment(cfg, write=False)
    return _summary(rep.verdicts)


CRITERIA: list[tuple[int, str, Callable]] = [
    (1, "closed-form mean at moderate load", c1_closed_form_mean),
    (2, "covariance figure regime", c2_covariance_figure),
    (3, "departure rate at the origin", c3_departure_rate),
    (4, "mass-transport symmetry", c4_mass_transport),
    (5, "coupling suite", c5_coupling),
    (6, "Loynes audit", c6_loynes),
    (7, "local construction vs big box", c7_local_construction),
    (8, "second-moment bound", c8_second_moment),
    (9, "K-shifted floor and mean", c9_k_shifted),
    (10, "frozen wall", c10_frozen_wall),
    (11, "bounded-start convergence", c11_bounded_start),
    (12, "supercritical growth", c12_supercritical),
    (13, "fluid suite", c13_fluid),
    (14, "infinite support", c14_infinite_support),
]


def run_criterion(number: int) -> CriterionResult:
    for num, title, fn in CRITERIA:
        if num == number:
            start = time.perf_counter()
            ok, detail = fn()
            return CriterionResult(num, title, bool(ok), detail, time.perf_counter() - start)
    raise KeyError(f"no criterion {number}")


def run_all(numbers=None, log: Callable[[str], None] | None = print) -> list[CriterionResult]:
    results = []
    for num, _, _ in CRITERIA:
        if numbers is None or num in numbers:
            res = run_criterion(num)
            results.append(res)
            if log:
                log(res.line())
    return results


__all__ = ["CRITERIA", "CriterionResult", "run_all", "run_criterion", "setup1"]
