"""O(1/T) check for unconstrained zeroth-order SGD on interpolating least squares.

    python scripts/zo_sgd_rate.py [--seeds 50] [--d 10]
"""

import argparse
from dataclasses import dataclass

import numpy as np

from cgkit.core import RngStream
from cgkit.problems import make_quadratic
from cgkit.rates import loglog_slope
from cgkit.zo_sgd import ZoSgdConfig, expected_grad_sq, zo_sgd_run


@dataclass
class Setup:
    d: int = 10
    n: int = 20
    condition: float = 2.0
    seeds: int = 50
    horizons: tuple = (100, 1000, 10_000)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=Setup.seeds)
    ap.add_argument("--d", type=int, default=Setup.d)
    args = ap.parse_args()
    s = Setup(d=args.d, seeds=args.seeds)
    obj = make_quadratic(s.n, s.d, s.condition, np.zeros(s.d), RngStream(7, 0))
    averaged, drawn = [], []
    for T in s.horizons:
        e, r = [], []
        for k in range(s.seeds):
            rng = RngStream(1000 + k, 3)
            x0 = rng.generator.standard_normal(s.d)
            _, tr = zo_sgd_run(obj, x0 / np.linalg.norm(x0), ZoSgdConfig(T), rng)
            e.append(expected_grad_sq(tr))
            r.append(tr.grad_sq[tr.output_index])
        averaged.append(np.mean(e))
        drawn.append(np.mean(r))
        print(f"T={T:>6d}  E_R||grad||^2={averaged[-1]:.4e}  single draw={drawn[-1]:.4e}")
    print(f"slope (averaged over R) = {loglog_slope(s.horizons, averaged):.3f}")
    print(f"slope (one R per seed)  = {loglog_slope(s.horizons, drawn):.3f}")


if __name__ == "__main__":
    main()
