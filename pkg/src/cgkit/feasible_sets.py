"""Compact convex sets with exact linear minimization oracles.

Ties in argmin/argmax are broken by lowest index and a zero direction maps to
the first canonical extreme point, so LMO outputs are deterministic.
"""

from __future__ import annotations

import itertools
import math
from typing import Optional

import numpy as np

from .core import NonFiniteError, OracleCounters, RngStream


class FeasibleSet:
    kind = "abstract"

    def __init__(self, d: int):
        if d < 1:
            raise ValueError(f"dimension must be >= 1, got {d}")
        self.d = int(d)

    def lmo(self, g, counters: Optional[OracleCounters] = None) -> np.ndarray:
        g = np.asarray(g, dtype=np.float64)
        if g.shape != (self.d,):
            raise ValueError(f"direction has shape {g.shape}, set has dimension {self.d}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteError("lmo received a non-finite direction")
        if counters is not None:
            counters.lmo_calls += 1
        return self._lmo(g)

    def _lmo(self, g: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def contains(self, x, tol: float = 0.0) -> bool:
        raise NotImplementedError

    def vertices(self) -> np.ndarray:
        """All extreme points as rows (polytopes only)."""
        raise NotImplementedError(f"{self.kind} has no finite vertex set")

    def random_vertex(self, rng: RngStream) -> np.ndarray:
        raise NotImplementedError

    def random_point(self, rng: RngStream, k: int = 3) -> np.ndarray:
        """Uniform (Dirichlet(1,...,1)) convex combination of ``k`` random extreme points."""
        weights = rng.generator.dirichlet(np.ones(k))
        vs = np.stack([self.random_vertex(rng) for _ in range(k)])
        return weights @ vs

    def spec(self) -> dict:
        raise NotImplementedError

    def __repr__(self) -> str:
        params = ", ".join(f"{k}={v}" for k, v in self.spec().items() if k != "kind")
        return f"{type(self).__name__}({params})"


class L1Ball(FeasibleSet):
    kind = "l1"

    def __init__(self, d: int, radius: float = 1.0):
        super().__init__(d)
        if not radius > 0:
            raise ValueError(f"radius must be positive, got {radius}")
        self.radius = float(radius)

    def _lmo(self, g):
        out = np.zeros(self.d)
        i = int(np.argmax(np.abs(g)))
        if g[i] == 0.0:
            out[0] = self.radius
        else:
            out[i] = -self.radius * math.copysign(1.0, g[i])
        return out

    def diameter(self):
        return 2.0 * self.radius

    def contains(self, x, tol=0.0):
        return float(np.abs(np.asarray(x)).sum()) <= self.radius + tol

    def vertices(self):
        eye = np.eye(self.d) * self.radius
        return np.concatenate([eye, -eye])

    def random_vertex(self, rng):
        out = np.zeros(self.d)
        i = int(rng.generator.integers(self.d))
        out[i] = self.radius if rng.generator.random() < 0.5 else -self.radius
        return out

    def spec(self):
        return {"kind": self.kind, "d": self.d, "radius": self.radius}


class L2Ball(FeasibleSet):
    kind = "l2"

    def __init__(self, d: int, radius: float = 1.0):
        super().__init__(d)
        if not radius > 0:
            raise ValueError(f"radius must be positive, got {radius}")
        self.radius = float(radius)

    def _lmo(self, g):
        norm = float(np.linalg.norm(g))
        if norm == 0.0:
            out = np.zeros(self.d)
            out[0] = self.radius
            return out
        return -self.radius * g / norm

    def diameter(self):
        return 2.0 * self.radius

    def contains(self, x, tol=0.0):
        return float(np.linalg.norm(np.asarray(x))) <= self.radius + tol

    def random_vertex(self, rng):
        u = rng.generator.standard_normal(self.d)
        return self.radius * u / np.linalg.norm(u)

    def spec(self):
        return {"kind": self.kind, "d": self.d, "radius": self.radius}


class Simplex(FeasibleSet):
    """``{x >= 0, sum(x) = scale}``."""

    kind = "simplex"

    def __init__(self, d: int, scale: float = 1.0):
        super().__init__(d)
        if not scale > 0:
            raise ValueError(f"scale must be positive, got {scale}")
        self.scale = float(scale)

    def _lmo(self, g):
        out = np.zeros(self.d)
        out[int(np.argmin(g))] = self.scale
        return out

    def diameter(self):
        return self.scale * math.sqrt(2.0) if self.d > 1 else 0.0

    def contains(self, x, tol=0.0):
        # coordinatewise tolerance on the sign constraints and the sum
        x = np.asarray(x)
        return bool(x.min() >= -tol and abs(x.sum() - self.scale) <= tol + 1e-15 * self.d * self.scale)

    def vertices(self):
        return np.eye(self.d) * self.scale

    def random_vertex(self, rng):
        out = np.zeros(self.d)
        out[int(rng.generator.integers(self.d))] = self.scale
        return out

    def spec(self):
        return {"kind": self.kind, "d": self.d, "scale": self.scale}


class Box(FeasibleSet):
    kind = "box"

    def __init__(self, lower, upper):
        lower = np.asarray(lower, dtype=np.float64)
        upper = np.asarray(upper, dtype=np.float64)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("lower and upper must be 1-D arrays of equal length")
        if not np.all(lower < upper):
            raise ValueError("box needs lower_i < upper_i for every coordinate")
        super().__init__(lower.shape[0])
        self.lower = lower
        self.upper = upper

    def _lmo(self, g):
        return np.where(g > 0, self.lower, self.upper)

    def diameter(self):
        return float(np.linalg.norm(self.upper - self.lower))

    def contains(self, x, tol=0.0):
        x = np.asarray(x)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def vertices(self):
        corners = itertools.product(*zip(self.lower, self.upper))
        return np.array(list(corners), dtype=np.float64)

    def random_vertex(self, rng):
        pick = rng.generator.random(self.d) < 0.5
        return np.where(pick, self.lower, self.upper)

    def spec(self):
        return {"kind": self.kind, "d": self.d, "lower": self.lower.tolist(), "upper": self.upper.tolist()}


def lmo(fset: FeasibleSet, g, counters: OracleCounters) -> np.ndarray:
    return fset.lmo(g, counters)


def contains(fset: FeasibleSet, x, tol: float = 0.0) -> bool:
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return fset.contains(x, tol)


def fw_gap(fset: FeasibleSet, x, grad, counters: Optional[OracleCounters] = None) -> float:
    """Frank-Wolfe gap ``max_{y in set} <grad, x - y>``; one LMO call."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    v = fset.lmo(grad, counters)
    return float(grad @ (x - v))


def make_set(kind: str, d: int, **params) -> FeasibleSet:
    """Build a set from its config description (``kind`` plus parameters)."""
    kind = kind.lower()
    if kind in ("l1", "l1ball"):
        return L1Ball(d, float(params.get("radius", 1.0)))
    if kind in ("l2", "l2ball"):
        return L2Ball(d, float(params.get("radius", 1.0)))
    if kind == "simplex":
        return Simplex(d, float(params.get("scale", 1.0)))
    if kind == "box":
        lower = params.get("lower", -1.0)
        upper = params.get("upper", 1.0)
        lower = np.full(d, float(lower)) if np.isscalar(lower) else np.asarray(lower, float)
        upper = np.full(d, float(upper)) if np.isscalar(upper) else np.asarray(upper, float)
        return Box(lower, upper)
    raise ValueError(f"unknown set kind {kind!r}")
