"""Stochastic Frank-Wolfe with the open-loop step and growing-batch schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (FIRST_ORDER, MODES, OracleCounters, RngStream, RunTrace,
                   as_point, convex_combine)
from .feasible_sets import FeasibleSet
from .oracles import StochasticObjective, minibatch_gradient, zo_gradient
from .rates import RateReport, check_bound


@dataclass(frozen=True)
class SfwSchedule:
    """``gamma_t = 4/(t+3)``; batch ``ceil((t+3)/2)`` (first order) or ``(t+3)(d+4)``
    (zeroth order, with smoothing ``nu = D / ((T+3)(d+6)^{3/2})``)."""

    mode: str
    T: int
    d: int
    D: float

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.T < 0:
            raise ValueError("horizon T must be non-negative")

    def gamma(self, t: int) -> float:
        return 4.0 / (t + 3)

    def batch(self, t: int) -> int:
        if self.mode == FIRST_ORDER:
            return (t + 4) // 2
        return (t + 3) * (self.d + 4)

    @property
    def nu(self) -> float:
        if self.mode == FIRST_ORDER:
            return 0.0
        return self.D / ((self.T + 3) * (self.d + 6) ** 1.5)

    def oracle_calls(self, t: int) -> int:
        """Closed-form cumulative SFO (or SZO) calls after ``t`` iterations."""
        if self.mode == FIRST_ORDER:
            # sum_{s=1}^t ceil((s+3)/2)
            return sum((s + 4) // 2 for s in range(1, t + 1))
        return 2 * (self.d + 4) * (t * (t + 1) // 2 + 3 * t)

    @classmethod
    def for_problem(cls, mode: str, T: int, fset: FeasibleSet) -> "SfwSchedule":
        return cls(mode, T, fset.d, fset.diameter())


def initial_point(fset: FeasibleSet, rng: RngStream) -> np.ndarray:
    """Default start: the LMO vertex for a random Gaussian direction."""
    return fset.lmo(rng.generator.standard_normal(fset.d))


def _estimate(obj, x, b, mode, nu, rng, counters):
    if mode == FIRST_ORDER:
        return minibatch_gradient(obj, x, b, rng, counters).vector
    return zo_gradient(obj, x, b, nu, rng, counters).vector


def sfw_run(obj: StochasticObjective, fset: FeasibleSet, x0, schedule: SfwSchedule,
            rng: RngStream, keep_iterates: bool = False,
            counters: Optional[OracleCounters] = None) -> RunTrace:
    x = as_point(x0, obj.d)
    if schedule.d != obj.d:
        raise ValueError(f"schedule dimension {schedule.d} != objective dimension {obj.d}")
    if not fset.contains(x, 1e-9):
        raise ValueError("x0 is not feasible")
    counters = counters if counters is not None else OracleCounters()
    trace = RunTrace()
    trace.record(0, obj.value(x), obj.f_star, counters, 0.0, 0)
    if keep_iterates:
        trace.keep("x", x)
    for t in range(1, schedule.T + 1):
        b = schedule.batch(t)
        g = _estimate(obj, x, b, schedule.mode, schedule.nu, rng, counters)
        v = fset.lmo(g, counters)
        gamma = schedule.gamma(t)
        x = convex_combine(x, v, gamma)
        trace.record(t, obj.value(x), obj.f_star, counters, gamma, b)
        if keep_iterates:
            trace.keep("x", x)
    trace.x_final = x
    return trace


def sfw_bound(t: int, phi0: float, rho: float, L: float, D: float, mode: str = FIRST_ORDER) -> float:
    """Expected-suboptimality bound after ``t`` iterations."""
    if mode == FIRST_ORDER:
        const = rho + 1.0
    else:
        const = rho + 1.0 / rho + 1.0 if rho > 0 else math.inf
    return (2.0 * phi0 + 8.0 * const * L * D**2) / (t + 3)


def sfw_rate_check(traces: Sequence[RunTrace], obj: StochasticObjective, rho: float, L: float,
                   D: float, checkpoints: Sequence[int], mode: str = FIRST_ORDER,
                   slope_window: Optional[tuple] = None, min_seeds: int = 20) -> RateReport:
    """Compare averaged suboptimality (+2 standard errors) to the SFW bound."""
    if obj.f_star is None:
        raise ValueError("rate check needs f_star")
    phi0 = float(np.mean([tr.subopt[0] for tr in traces]))
    name = "SFW first-order" if mode == FIRST_ORDER else "SFW zeroth-order"
    report = check_bound(name, traces, lambda t: sfw_bound(t, phi0, rho, L, D, mode),
                         checkpoints, slope_window, min_seeds)
    report.notes.append(f"rho={rho:.4g} L={L:.4g} D={D:.4g} phi0={phi0:.4g} seeds={len(traces)}")
    return report
