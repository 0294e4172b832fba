"""Stochastic conditional gradient sliding and its inexact conditional-gradient
inner solver."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (FIRST_ORDER, MODES, IcgCapExceeded, OracleCounters, RngStream, RunTrace,
                   as_point, convex_combine)
from .feasible_sets import FeasibleSet
from .oracles import StochasticObjective, minibatch_gradient, zo_gradient
from .rates import RateReport, check_bound, first_reach, loglog_slope, mean_and_stderr, stack_column

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScgsSchedule:
    mode: str
    T: int
    L: float
    D: float
    rho: float
    d: int

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.T < 0 or not self.L > 0 or not self.D > 0 or self.rho < 0:
            raise ValueError("need T >= 0, L > 0, D > 0 and rho >= 0")

    def beta(self, t: int) -> float:
        return 4.0 * self.L / (t + 2)

    def gamma(self, t: int) -> float:
        return 3.0 / (t + 2)

    def eta(self, t: int) -> float:
        return self.L * self.D**2 / (t * (t + 1))

    def batch(self, t: int) -> int:
        # at least one sample even when rho = 0
        if self.mode == FIRST_ORDER:
            return max(1, math.ceil(3.0 * self.rho * t * (t + 1)))
        return max(1, math.ceil(6.0 * self.rho * (self.d + 4) * t * (t + 1)))

    @property
    def nu(self) -> float:
        if self.mode == FIRST_ORDER:
            return 0.0
        return self.D / ((self.T + 2) ** 2 * (self.d + 6) ** 1.5)

    def icg_cap(self, t: int) -> int:
        """``ceil(6 beta_t D^2 / eta_t)``, which reduces to ``ceil(24 t (t+1) / (t+2))``."""
        return -(-24 * t * (t + 1) // (t + 2))

    def oracle_calls(self, t: int) -> int:
        """Closed-form cumulative SFO (or SZO) calls after ``t`` iterations."""
        total = sum(self.batch(s) for s in range(1, t + 1))
        return total if self.mode == FIRST_ORDER else 2 * total


def resolve_rho(rho: Optional[float]) -> float:
    if rho is None:
        log.warning("growth constant rho unknown; using rho = 1 in the batch schedule")
        return 1.0
    return float(rho)


@dataclass
class IcgResult:
    point: np.ndarray
    inner_iterations: int
    final_gap: float


def icg(fset: FeasibleSet, g, u, beta: float, eta: float, cap: int,
        counters: OracleCounters) -> IcgResult:
    """Approximately minimise ``<g, x> + beta/2 ||x - u||^2`` over the set.

    Frank-Wolfe with exact line search, stopped once the Wolfe gap
    ``h_k(v_k) = <g + beta (u_k - u), u_k - v_k>`` is at most ``eta``.
    """
    if not beta > 0 or not eta > 0:
        raise ValueError("beta and eta must be positive")
    g = np.asarray(g, dtype=np.float64)
    anchor = np.asarray(u, dtype=np.float64)
    uk = anchor.copy()
    gap = math.inf
    for k in range(1, cap + 1):
        c = g + beta * (uk - anchor)
        v = fset.lmo(c, counters)
        step = v - uk
        gap = -float(c @ step)
        if gap <= eta:
            return IcgResult(uk, k, gap)
        sq = float(step @ step)
        if sq == 0.0:
            return IcgResult(uk, k, 0.0)
        alpha = min(1.0, gap / (beta * sq))
        uk = uk + alpha * step
    raise IcgCapExceeded(f"ICG did not reach gap {eta:.3e} within {cap} iterations "
                         f"(last gap {gap:.3e})", gap, cap)


def scgs_run(obj: StochasticObjective, fset: FeasibleSet, x0, schedule: ScgsSchedule,
             rng: RngStream, keep_iterates: bool = False,
             counters: Optional[OracleCounters] = None) -> RunTrace:
    x = as_point(x0, obj.d)
    if schedule.d != obj.d:
        raise ValueError(f"schedule dimension {schedule.d} != objective dimension {obj.d}")
    if not fset.contains(x, 1e-9):
        raise ValueError("x0 is not feasible")
    counters = counters if counters is not None else OracleCounters()
    y = x.copy()
    trace = RunTrace()
    trace.record(0, obj.value(x), obj.f_star, counters, 0.0, 0)
    if keep_iterates:
        trace.keep("x", x)
        trace.keep("y", y)
    for t in range(1, schedule.T + 1):
        gamma = schedule.gamma(t)
        z = convex_combine(x, y, gamma)
        b = schedule.batch(t)
        if schedule.mode == FIRST_ORDER:
            g = minibatch_gradient(obj, z, b, rng, counters).vector
        else:
            g = zo_gradient(obj, z, b, schedule.nu, rng, counters).vector
        res = icg(fset, g, y, schedule.beta(t), schedule.eta(t), schedule.icg_cap(t), counters)
        y = res.point
        x = convex_combine(x, y, gamma)
        trace.record(t, obj.value(x), obj.f_star, counters, gamma, b, res.inner_iterations)
        if keep_iterates:
            trace.keep("x", x)
            trace.keep("y", y)
            trace.keep("z", z)
    trace.x_final = x
    return trace


def scgs_bound(t: int, L: float, D: float, grad_norm_at_opt: float = 0.0,
               mode: str = FIRST_ORDER) -> float:
    """Expected-suboptimality bound after ``t`` outer iterations.

    The first-order constant ``15 L D^2 + 3 ||grad f(x*)|| D`` equals the
    ``(12 + 3K) L D^2`` form with ``K = ||grad f(x*)|| / (L D) + 1``.
    """
    if mode == FIRST_ORDER:
        return 6 * L * D**2 / (t + 2) ** 2 + (15 * L * D**2 + 3 * grad_norm_at_opt * D) / ((t + 1) * (t + 2))
    return 8 * L * D**2 / (t + 2) ** 2 + 32 * L * D**2 / ((t + 1) * (t + 2))


def oracle_scaling(traces: Sequence[RunTrace], eps_list: Sequence[float]) -> dict:
    """Mean SFO/SZO and LMO calls needed for the averaged suboptimality to reach each eps,
    and the log-log slopes of those counts against ``1/eps``."""
    mean, _ = mean_and_stderr(traces)
    sfo = stack_column(traces, "sfo").mean(axis=0) + stack_column(traces, "szo").mean(axis=0)
    lmo = stack_column(traces, "lmo").mean(axis=0)
    reached = {}
    for eps in eps_list:
        k = first_reach(mean, eps)
        if k is not None:
            reached[eps] = (k, float(sfo[k]), float(lmo[k]))
    inv = [1.0 / e for e in reached]
    out = {"reached": reached}
    if len(reached) >= 2:
        out["oracle_slope"] = loglog_slope(inv, [r[1] for r in reached.values()])
        out["lmo_slope"] = loglog_slope(inv, [r[2] for r in reached.values()])
    else:
        out["oracle_slope"] = out["lmo_slope"] = math.nan
    return out


def scgs_rate_check(traces: Sequence[RunTrace], obj: StochasticObjective, rho: float, L: float,
                    D: float, checkpoints: Sequence[int], mode: str = FIRST_ORDER,
                    grad_norm_at_opt: Optional[float] = None,
                    eps_list: Sequence[float] = (1e-2, 1e-3, 1e-4),
                    min_seeds: int = 20) -> RateReport:
    if obj.f_star is None:
        raise ValueError("rate check needs f_star")
    name = "SCGS first-order" if mode == FIRST_ORDER else "SCGS zeroth-order"
    source = "given"
    if grad_norm_at_opt is None:
        if obj.x_star is not None:
            grad_norm_at_opt = float(np.linalg.norm(obj.grad(obj.x_star)))
            source = "exact at x_star"
        else:
            raise ValueError("need x_star or an upper bound on ||grad f(x*)||")
    report = check_bound(name, traces, lambda t: scgs_bound(t, L, D, grad_norm_at_opt, mode),
                         checkpoints, None, min_seeds)
    scaling = oracle_scaling(traces, eps_list)
    report.slopes["oracle_vs_inv_eps"] = scaling["oracle_slope"]
    report.slopes["lmo_vs_inv_eps"] = scaling["lmo_slope"]
    for eps, (k, calls, lmos) in scaling["reached"].items():
        report.notes.append(f"eps={eps:g}: t={k} oracle calls={calls:.0f} lmo calls={lmos:.1f}")
    report.notes.append(f"rho={rho:.4g} L={L:.4g} D={D:.4g} ||grad f(x*)||={grad_norm_at_opt:.3g} "
                        f"({source}) seeds={len(traces)}")
    return report
