"""Finite-sum stochastic objectives, minibatch and Gaussian-smoothing gradient
estimators, and Monte-Carlo diagnostics for them.

Component indices are 0-based. Estimators sample component indices uniformly
with replacement, so batch sizes larger than ``n`` are fine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .core import FIRST_ORDER, ZEROTH_ORDER, NonFiniteError, OracleCounters, RngStream
from .feasible_sets import FeasibleSet

# rows per vectorised chunk in the zeroth-order estimator
ZO_CHUNK = 16384
NU_FLOOR = 1e-7


class StochasticObjective:
    """``f(x) = (1/n) sum_i F(x, i)`` with exact and per-component access.

    Subclasses implement ``value``, ``grad``, ``component_values_at`` and
    ``component_grads``; the rest have generic (slower) defaults.
    """

    n: int
    d: int
    L: float
    L_max: float
    f_star: Optional[float] = None
    x_star: Optional[np.ndarray] = None
    rho: Optional[float] = None

    def value(self, x) -> float:
        raise NotImplementedError

    def grad(self, x) -> np.ndarray:
        raise NotImplementedError

    def component_values_at(self, X: np.ndarray, idx: np.ndarray) -> np.ndarray:
        """``F(X[j], idx[j])`` for every row ``j``."""
        raise NotImplementedError

    def component_value(self, x, i: int) -> float:
        return float(self.component_values_at(np.asarray(x)[None, :], np.array([i]))[0])

    def component_values(self, x, idx) -> np.ndarray:
        idx = np.asarray(idx)
        return self.component_values_at(np.broadcast_to(x, (idx.shape[0], self.d)), idx)

    def component_grads(self, x, idx) -> np.ndarray:
        """Rows ``grad F(x, idx[j])``."""
        raise NotImplementedError

    def batch_grad(self, x, idx) -> np.ndarray:
        return self.component_grads(x, idx).mean(axis=0)

    def all_component_grads(self, x) -> np.ndarray:
        return self.component_grads(x, np.arange(self.n))

    def exact_line_search(self, x, direction) -> float:
        """argmin over ``gamma in [0, 1]`` of ``f(x + gamma * direction)``."""
        res = minimize_scalar(lambda g: self.value(x + g * direction), bounds=(0.0, 1.0),
                              method="bounded", options={"xatol": 1e-12})
        return float(res.x)


@dataclass(frozen=True)
class GradientEstimate:
    vector: np.ndarray
    batch_size: int
    mode: str
    nu: float = 0.0


def minibatch_gradient(obj: StochasticObjective, x, b: int, rng: RngStream,
                       counters: OracleCounters) -> GradientEstimate:
    if b < 1:
        raise ValueError(f"batch size must be >= 1, got {b}")
    idx = rng.generator.integers(0, obj.n, size=int(b))
    counters.sfo_calls += int(b)
    g = obj.batch_grad(x, idx)
    if not np.all(np.isfinite(g)):
        raise NonFiniteError("minibatch gradient is non-finite")
    return GradientEstimate(g, int(b), FIRST_ORDER)


def effective_nu(nu: float, x) -> float:
    """Smoothing radius with a floor that keeps ``F(x + nu u) - F(x)`` above round-off."""
    return max(float(nu), NU_FLOOR * (1.0 + float(np.max(np.abs(x)))))


def _zo_terms(obj, x, m, nu, rng):
    """Per-sample finite-difference quotients and directions for ``m`` samples."""
    u = rng.generator.standard_normal((m, obj.d))
    idx = rng.generator.integers(0, obj.n, size=m)
    f_plus = obj.component_values_at(x + nu * u, idx)
    f_base = obj.component_values(x, idx)
    q = (f_plus - f_base) / nu
    bad = ~np.isfinite(q)
    if bad.any():
        j = int(np.argmax(bad))
        raise NonFiniteError(f"non-finite function value in zeroth-order sample {j} "
                             f"(component {int(idx[j])})")
    return q, u


def zo_gradient(obj: StochasticObjective, x, b: int, nu: float, rng: RngStream,
                counters: OracleCounters) -> GradientEstimate:
    """Gaussian-smoothing estimate ``(1/b) sum_j [F(x + nu u_j, i_j) - F(x, i_j)] / nu * u_j``.

    Costs ``2b`` function evaluations. Its mean is the gradient of the
    Gaussian-smoothed objective, not of ``f`` itself.
    """
    if b < 1:
        raise ValueError(f"batch size must be >= 1, got {b}")
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    x = np.asarray(x, dtype=np.float64)
    nu = effective_nu(nu, x)
    total = np.zeros(obj.d)
    left = int(b)
    while left > 0:
        m = min(left, ZO_CHUNK)
        q, u = _zo_terms(obj, x, m, nu, rng)
        total += q @ u
        left -= m
    counters.szo_calls += 2 * int(b)
    return GradientEstimate(total / b, int(b), ZEROTH_ORDER, nu)


def zo_samples(obj: StochasticObjective, x, m: int, nu: float, rng: RngStream) -> np.ndarray:
    """``m`` independent single-sample estimates as rows (for Monte-Carlo diagnostics)."""
    if m < 1 or not nu > 0:
        raise ValueError("need m >= 1 and nu > 0")
    x = np.asarray(x, dtype=np.float64)
    nu = effective_nu(nu, x)
    out = np.empty((m, obj.d))
    for start in range(0, m, ZO_CHUNK):
        k = min(ZO_CHUNK, m - start)
        q, u = _zo_terms(obj, x, k, nu, rng)
        out[start:start + k] = q[:, None] * u
    return out


def zo_mse_samples(obj: StochasticObjective, x, b: int, nu: float, trials: int,
                   rng: RngStream) -> np.ndarray:
    """Squared errors ``||G_nu - grad f(x)||^2`` of ``trials`` independent estimates."""
    if trials < 100:
        raise ValueError(f"need at least 100 trials, got {trials}")
    if obj.f_star is None:
        raise ValueError("zo_mse_probe needs the objective's optimal value f_star")
    g = obj.grad(x)
    scratch = OracleCounters()
    out = np.empty(trials)
    for k in range(trials):
        est = zo_gradient(obj, x, b, nu, rng, scratch)
        out[k] = float(np.sum((est.vector - g) ** 2))
    return out


def zo_mse_probe(obj: StochasticObjective, x, b: int, nu: float, trials: int,
                 rng: RngStream) -> float:
    return float(zo_mse_samples(obj, x, b, nu, trials, rng).mean())


def growth_ratio(obj: StochasticObjective, x, kind: str = "variance") -> float:
    """``E||grad F - c||^2 / (2 L (f(x) - f*))``; ``c = grad f`` (variance) or 0 (moment).

    The expectation is the exact finite-sum average. Returns NaN when the
    suboptimality is below 1e-12.
    """
    if obj.f_star is None:
        raise ValueError("growth probe needs the objective's optimal value f_star")
    gap = obj.value(x) - obj.f_star
    if gap < 1e-12:
        return math.nan
    G = obj.all_component_grads(x)
    if kind == "variance":
        G = G - G.mean(axis=0)
    elif kind != "moment":
        raise ValueError(f"kind must be 'variance' or 'moment', got {kind!r}")
    second = float(np.mean(np.sum(G * G, axis=1)))
    return second / (2.0 * obj.L * gap)


def sample_feasible_points(fset: FeasibleSet, num_points: int, rng: RngStream) -> np.ndarray:
    return np.stack([fset.random_point(rng) for _ in range(num_points)])


def growth_probe(obj: StochasticObjective, fset: FeasibleSet, num_points: int, rng: RngStream,
                 kind: str = "variance") -> float:
    """Empirical weak-growth constant: the largest ratio over sampled feasible points.

    Normalised as ``E||.||^2 <= 2 rho L (f - f*)`` with ``L`` the smoothness
    constant of ``f``. Constants quoted with a different factor (for example
    ``L_max / L`` for the squared hinge) are comparable only up to that factor.
    """
    if obj.f_star is None:
        raise ValueError("growth probe needs the objective's optimal value f_star")
    if num_points < 10:
        raise ValueError(f"need at least 10 probe points, got {num_points}")
    ratios = [growth_ratio(obj, x, kind) for x in sample_feasible_points(fset, num_points, rng)]
    ratios = [r for r in ratios if not math.isnan(r)]
    return max(ratios) if ratios else 0.0
