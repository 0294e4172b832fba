"""Empirical convergence-bound checks for SFW and SCGS on an interpolating quadratic.

    python scripts/rate_checks.py [--theorem 1a 1b 2a 2b] [--seeds 50] [--jobs N]

Prints the checkpoint table, fitted slopes and oracle-scaling exponents for
each requested bound.
"""

import argparse
from dataclasses import dataclass, field

from cgkit.bench import ExperimentConfig, run_experiment
from cgkit.core import FIRST_ORDER, ZEROTH_ORDER
from cgkit.scgs import scgs_rate_check
from cgkit.sfw import sfw_rate_check


@dataclass
class Check:
    solver: str
    mode: str
    T: int
    checkpoints: tuple
    d: int = 20
    slope_window: tuple = None
    extra: dict = field(default_factory=dict)


CHECKS = {
    "1a": Check("sfw", FIRST_ORDER, 1000, (10, 100, 1000), slope_window=(50, 1000)),
    "1b": Check("sfw", ZEROTH_ORDER, 100, (10, 100)),
    "2a": Check("scgs", FIRST_ORDER, 200, (10, 50, 200)),
    "2b": Check("scgs", ZEROTH_ORDER, 50, (10, 50), d=10),
}


def run(key: str, seeds: int, jobs):
    c = CHECKS[key]
    cfg = ExperimentConfig(problem="quadratic", n=20, d=c.d, condition=10.0, data_seed=7,
                           solver=c.solver, mode=c.mode, T=c.T, num_seeds=seeds)
    res = run_experiment(cfg, jobs=jobs, write=False)
    obj, D = res.problem.obj, res.problem.fset.diameter()
    if c.solver == "sfw":
        rep = sfw_rate_check(res.traces, obj, obj.rho, obj.L, D, c.checkpoints, c.mode, c.slope_window)
    else:
        rep = scgs_rate_check(res.traces, obj, obj.rho, obj.L, D, c.checkpoints, c.mode)
    print("\n".join(rep.lines()))
    print()
    return rep.passed


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--theorem", nargs="+", default=sorted(CHECKS), choices=sorted(CHECKS))
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--jobs", type=int)
    args = ap.parse_args()
    results = {k: run(k, args.seeds, args.jobs) for k in args.theorem}
    raise SystemExit(0 if all(results.values()) else 3)


if __name__ == "__main__":
    main()
