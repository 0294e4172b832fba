"""Multi-seed averaging and empirical checks of convergence-rate bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import RunTrace


@dataclass
class CheckpointCheck:
    t: int
    mean: float
    stderr: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.mean + 2.0 * self.stderr <= self.bound

    def line(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        return (f"t={self.t:>6d}  mean={self.mean:.4e}  +2se={self.mean + 2 * self.stderr:.4e}  "
                f"bound={self.bound:.4e}  {verdict}")


@dataclass
class RateReport:
    name: str
    checks: list = field(default_factory=list)
    slopes: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list:
        out = [f"[{self.name}]"]
        out += [c.line() for c in self.checks]
        out += [f"slope {k} = {v:.3f}" for k, v in self.slopes.items()]
        out += [f"note: {n}" for n in self.notes]
        out.append("overall: " + ("pass" if self.passed else "FAIL"))
        return out


def stack_column(traces: Sequence[RunTrace], name: str) -> np.ndarray:
    lengths = {len(tr) for tr in traces}
    if len(lengths) != 1:
        raise ValueError(f"traces have different lengths {sorted(lengths)}")
    return np.stack([tr.column(name) for tr in traces]).astype(np.float64)


def mean_and_stderr(traces: Sequence[RunTrace], name: str = "subopt"):
    """Per-row mean and standard error of a trace column across seeds."""
    M = stack_column(traces, name)
    mean = M.mean(axis=0)
    if M.shape[0] > 1:
        se = M.std(axis=0, ddof=1) / math.sqrt(M.shape[0])
    else:
        se = np.zeros_like(mean)
    return mean, se


def loglog_slope(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def first_reach(mean: np.ndarray, eps: float) -> Optional[int]:
    """Index of the first row whose mean suboptimality is at most ``eps``."""
    hits = np.nonzero(mean <= eps)[0]
    return int(hits[0]) if hits.size else None


def check_bound(name: str, traces: Sequence[RunTrace], bound: Callable[[int], float],
                checkpoints: Sequence[int], slope_window: Optional[tuple] = None,
                min_seeds: int = 20) -> RateReport:
    if len(traces) < min_seeds:
        raise ValueError(f"rate checks average over at least {min_seeds} seeds, got {len(traces)}")
    mean, se = mean_and_stderr(traces)
    t = traces[0].column("t")
    report = RateReport(name)
    for c in checkpoints:
        k = int(np.searchsorted(t, c))
        if k >= len(t) or t[k] != c:
            raise ValueError(f"checkpoint {c} is beyond the run horizon {int(t[-1])}")
        report.checks.append(CheckpointCheck(int(c), float(mean[k]), float(se[k]), float(bound(c))))
    if slope_window is not None:
        lo, hi = slope_window
        sel = (t >= lo) & (t <= hi)
        report.slopes[f"subopt_vs_t[{lo},{hi}]"] = loglog_slope(t[sel], mean[sel])
    return report
