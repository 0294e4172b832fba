"""Desk-scale Figure-1 comparison: SFW on separable vs inseparable blobs.

    python scripts/figure1.py [--out results/figure1] [--jobs N]

Writes one result tree per dataset plus an overlay of both aggregate curves.
"""

import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from cgkit.bench import ExperimentConfig, fstar_note, plot_aggregates, read_csv, run_experiment


@dataclass
class Figure1:
    n: int = 2000
    d: int = 50
    T: int = 500
    num_seeds: int = 20
    out: str = "results/figure1"

    def config(self, separable: bool) -> ExperimentConfig:
        name = "separable" if separable else "inseparable"
        return ExperimentConfig(problem="blobs", n=self.n, d=self.d, separable=separable,
                                feasible_set="l1", radius=1.0, solver="sfw", T=self.T,
                                num_seeds=self.num_seeds, label=name,
                                out_dir=str(Path(self.out) / name))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=Figure1.out)
    ap.add_argument("--jobs", type=int)
    args = ap.parse_args()
    fig = Figure1(out=args.out)
    curves = {}
    for sep in (True, False):
        res = run_experiment(fig.config(sep), jobs=args.jobs)
        curves[sep] = res.aggregate.mean_subopt
        print(f"{res.config.label:>11}: {fstar_note(res.problem.fstar)}; "
              f"subopt(1) = {curves[sep][1]:.4g}, subopt(T) = {curves[sep][-1]:.4g}")
    s, i = curves[True], curves[False]
    print(f"separable below inseparable for every t >= 200: {bool(np.all(s[200:] < i[200:]))}")
    named = [(lab, read_csv(Path(args.out) / lab / "aggregate.csv"))
             for lab in ("separable", "inseparable")]
    for f in plot_aggregates(named, Path(args.out), stem="overlay"):
        print("wrote", f)


if __name__ == "__main__":
    main()
