"""Shared types: points, oracle counters, seeded random streams and run traces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

FIRST_ORDER = "first_order"
ZEROTH_ORDER = "zeroth_order"
MODES = (FIRST_ORDER, ZEROTH_ORDER)


class NonFiniteError(ArithmeticError):
    """Raised when an objective value, gradient or iterate stops being finite."""


class IcgCapExceeded(RuntimeError):
    """The inner conditional-gradient loop used more iterations than its cap."""

    def __init__(self, message: str, final_gap: float, inner_iterations: int):
        super().__init__(message)
        self.final_gap = final_gap
        self.inner_iterations = inner_iterations


def as_point(x, d: Optional[int] = None) -> np.ndarray:
    """Return ``x`` as a 1-D float64 array, checking length and finiteness."""
    p = np.asarray(x, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError(f"a point must be one-dimensional, got shape {p.shape}")
    if d is not None and p.shape[0] != d:
        raise ValueError(f"point has length {p.shape[0]}, expected {d}")
    if not np.all(np.isfinite(p)):
        raise NonFiniteError("point has non-finite entries")
    return p


def dot(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0] if a.ndim else a.shape} vs "
                         f"{b.shape[0] if b.ndim else b.shape}")
    return float(np.dot(a, b))


def convex_combine(x, y, gamma: float) -> np.ndarray:
    """``(1 - gamma) * x + gamma * y`` for ``gamma`` in [0, 1]."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if gamma == 0.0:
        return x.copy()
    if gamma == 1.0:
        return y.copy()
    return (1.0 - gamma) * x + gamma * y


@dataclass
class OracleCounters:
    sfo_calls: int = 0
    szo_calls: int = 0
    lmo_calls: int = 0

    def snapshot(self) -> tuple[int, int, int]:
        return self.sfo_calls, self.szo_calls, self.lmo_calls


class RngStream:
    """A reproducible random stream keyed by ``(seed, stream_id)``.

    Backed by the counter-based Philox generator; the pair is hashed through
    ``SeedSequence`` so distinct stream ids give independent streams.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if not (0 <= seed < 2**64 and 0 <= stream_id < 2**64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(ss))

    def child(self, stream_id: int) -> "RngStream":
        """A fresh stream sharing this seed; independent of every other stream id."""
        return RngStream(self.seed, stream_id)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def gaussian_direction(rng: RngStream, d: int) -> np.ndarray:
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return rng.generator.standard_normal(d)


@dataclass
class RunTrace:
    """Per-iteration log of a solver run; row ``k`` describes iterate ``x_k``."""

    t: list = field(default_factory=list)
    f: list = field(default_factory=list)
    subopt: list = field(default_factory=list)
    sfo: list = field(default_factory=list)
    szo: list = field(default_factory=list)
    lmo: list = field(default_factory=list)
    gamma: list = field(default_factory=list)
    b: list = field(default_factory=list)
    inner: list = field(default_factory=list)
    x_final: Optional[np.ndarray] = None
    iterates: dict = field(default_factory=dict)
    # zeroth-order SGD only: exact ||grad f(x_t)||^2 per row and the sampled output index
    grad_sq: list = field(default_factory=list)
    output_index: Optional[int] = None

    COLUMNS = ("t", "f", "subopt", "sfo", "szo", "lmo", "gamma", "b")

    def record(self, t, f, f_star, counters: OracleCounters, gamma, b, inner=0):
        if not math.isfinite(f):
            raise NonFiniteError(f"objective is non-finite at iteration {t}")
        self.t.append(int(t))
        self.f.append(float(f))
        self.subopt.append(float(f - f_star) if f_star is not None else math.nan)
        self.sfo.append(counters.sfo_calls)
        self.szo.append(counters.szo_calls)
        self.lmo.append(counters.lmo_calls)
        self.gamma.append(float(gamma))
        self.b.append(int(b))
        self.inner.append(int(inner))

    def keep(self, name: str, x: np.ndarray):
        self.iterates.setdefault(name, []).append(np.array(x, copy=True))

    def column(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name))

    def __len__(self) -> int:
        return len(self.t)
