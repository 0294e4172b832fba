"""Zeroth-order SGD for unconstrained smooth (possibly non-convex) problems,
returning a uniformly sampled iterate."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import NonFiniteError, OracleCounters, RngStream, RunTrace, as_point
from .oracles import StochasticObjective, effective_nu


@dataclass(frozen=True)
class ZoSgdConfig:
    """Constant step ``eta`` and smoothing ``nu``.

    Unset values default to ``eta = 1 / (2 L (rho + 1) (d + 4))`` and
    ``nu = d_ref / sqrt(d T)``, using the objective's ``L`` and ``rho``.
    """

    T: int
    eta: Optional[float] = None
    nu: Optional[float] = None
    d_ref: float = 1.0
    rho: Optional[float] = None
    seed: int = 0

    def resolve(self, obj: StochasticObjective) -> "ZoSgdConfig":
        rho = self.rho if self.rho is not None else (obj.rho or 0.0)
        eta = self.eta if self.eta is not None else 1.0 / (2 * obj.L * (rho + 1) * (obj.d + 4))
        nu = self.nu if self.nu is not None else self.d_ref / math.sqrt(obj.d * max(self.T, 1))
        if not (eta > 0 and nu > 0):
            raise ValueError("eta and nu must be positive")
        return replace(self, eta=eta, nu=nu, rho=rho)


def zo_sgd_run(obj: StochasticObjective, x0, config: ZoSgdConfig,
               rng: Optional[RngStream] = None, counters: Optional[OracleCounters] = None):
    """Run ``T`` steps ``x_t = x_{t-1} - eta * [F(x + nu u, i) - F(x, i)] / nu * u``.

    Returns ``(x_R, trace)`` with ``R`` uniform on ``{0, ..., T-1}``; the trace
    holds the exact ``f(x_t)`` and ``||grad f(x_t)||^2`` for every ``t``.
    """
    cfg = config.resolve(obj)
    if cfg.T < 1:
        raise ValueError("ZO-SGD needs T >= 1")
    rng = rng if rng is not None else RngStream(cfg.seed, 0)
    counters = counters if counters is not None else OracleCounters()
    x = as_point(x0, obj.d).copy()
    eta, nu = cfg.eta, cfg.nu
    U = rng.generator.standard_normal((cfg.T, obj.d))
    idx = rng.generator.integers(0, obj.n, size=cfg.T)
    f_star = obj.f_star if obj.f_star is not None else 0.0
    trace = RunTrace()
    xs = np.empty((cfg.T + 1, obj.d))
    xs[0] = x
    g = obj.grad(x)
    trace.record(0, obj.value(x), f_star, counters, eta, 0)
    trace.grad_sq.append(float(g @ g))
    for t in range(1, cfg.T + 1):
        u = U[t - 1]
        i = int(idx[t - 1])
        h = effective_nu(nu, x)
        q = (obj.component_value(x + h * u, i) - obj.component_value(x, i)) / h
        counters.szo_calls += 2
        x = x - (eta * q) * u
        if not (math.isfinite(q) and np.all(np.isfinite(x))):
            raise NonFiniteError(f"ZO-SGD trajectory became non-finite at iteration {t}")
        xs[t] = x
        g = obj.grad(x)
        trace.record(t, obj.value(x), f_star, counters, eta, 1)
        trace.grad_sq.append(float(g @ g))
    R = int(rng.generator.integers(0, cfg.T))
    trace.output_index = R
    trace.x_final = x
    trace.iterates["x"] = list(xs)
    return xs[R].copy(), trace


def expected_grad_sq(trace: RunTrace) -> float:
    """``E_R ||grad f(x_R)||^2`` given the trajectory: the mean over rows ``0..T-1``.

    Same expectation as the sampled ``grad_sq[output_index]`` with far less
    variance across seeds.
    """
    g = trace.grad_sq[:-1]
    if not g:
        raise ValueError("trace has no ZO-SGD gradient rows")
    return float(np.mean(g))
