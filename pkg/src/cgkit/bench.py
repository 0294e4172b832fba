"""Experiment harness: configs, problem construction, f* certification, multi-seed
runs, CSV traces and deterministic SVG plots."""

import concurrent.futures
import dataclasses
import math
import os
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import FIRST_ORDER, MODES, RngStream, RunTrace
from .feasible_sets import FeasibleSet, make_set
from .oracles import StochasticObjective
from .problems import (BlobsConfig, HingeSquaredObjective, certify_separable, generate_blobs,
                       load_dataset_csv, make_quadratic)
from .rates import mean_and_stderr, stack_column
from .scgs import ScgsSchedule, resolve_rho, scgs_run
from .sfw import SfwSchedule, sfw_run
from .zo_sgd import ZoSgdConfig, zo_sgd_run

TRACE_HEADER = RunTrace.COLUMNS
AGGREGATE_HEADER = ("t", "mean_subopt", "stderr_subopt", "sfo", "szo", "lmo")
SOLVERS = ("sfw", "scgs", "zosgd")
PROBLEMS = ("quadratic", "blobs", "csv")


class ConfigError(ValueError):
    """Bad or unreadable experiment configuration."""


class RunError(RuntimeError):
    """A seeded run failed; the message names the seed."""


@dataclass
class ExperimentConfig:
    # problem
    problem: str = "quadratic"
    data_path: Optional[str] = None
    n: int = 20
    d: int = 20
    condition: float = 10.0
    quad_scale: float = 1.0
    x_star_coef: float = 0.3
    mean_shift: float = 2.0
    sigma: float = 1.0
    separable: bool = True
    margin_floor: float = 0.1
    feature_scale: Optional[float] = None
    data_seed: int = 0
    f_star: Optional[float] = None
    fstar_budget: int = 100_000
    # feasible set
    feasible_set: str = "l1"
    radius: float = 1.0
    lower: float = -1.0
    upper: float = 1.0
    # solver
    solver: str = "sfw"
    mode: str = FIRST_ORDER
    T: int = 100
    rho: Optional[float] = None
    zo_eta: Optional[float] = None
    zo_nu: Optional[float] = None
    zo_d_ref: float = 1.0
    # protocol
    num_seeds: int = 20
    base_seed: int = 0
    out_dir: str = "results"
    checkpoints: tuple = ()
    label: Optional[str] = None

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        if self.problem == "csv" and not self.data_path:
            raise ConfigError("problem = csv needs data_path")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.T < 1 or self.num_seeds < 1:
            raise ConfigError("need T >= 1 and num_seeds >= 1")
        self.checkpoints = tuple(int(c) for c in self.checkpoints)
        bad = [c for c in self.checkpoints if not 0 <= c <= self.T]
        if bad:
            raise ConfigError(f"checkpoints {bad} outside [0, T={self.T}]")

    def blobs(self) -> BlobsConfig:
        return BlobsConfig(n=self.n, d=self.d, mean_shift=self.mean_shift, sigma=self.sigma,
                           separable=self.separable, margin_floor=self.margin_floor,
                           feature_scale=self.feature_scale, seed=self.data_seed)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def _coerce(name: str, raw: str, kind):
    text = raw.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        text = text[1:-1]
    args = typing.get_args(kind)
    if type(None) in args:
        if text.lower() in ("", "none", "null"):
            return None
        kind = next(a for a in args if a is not type(None))
    try:
        if kind is bool:
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        if kind is int:
            return int(float(text)) if float(text).is_integer() else int(text)
        if kind is float:
            return float(text)
        if kind is tuple:
            text = text.strip("[]()")
            return tuple(int(float(p)) for p in text.replace(",", " ").split())
        return text
    except ValueError:
        raise ConfigError(f"config key {name!r}: cannot read {raw.strip()!r} as {kind.__name__}")


def config_from_pairs(pairs: dict, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    hints = typing.get_type_hints(ExperimentConfig)
    unknown = sorted(set(pairs) - set(hints))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    values = {k: _coerce(k, v, hints[k]) for k, v in pairs.items()}
    if base is None:
        return ExperimentConfig(**values)
    return dataclasses.replace(base, **values)


def parse_config_text(text: str, source: str = "<string>") -> ExperimentConfig:
    """Read ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = (s.strip() for s in body.split("=", 1))
        if key in pairs:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        pairs[key] = value
    return config_from_pairs(pairs)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {str(path)!r}: {exc.strerror or exc}")
    return parse_config_text(text, str(path))


# -- f* certification ---------------------------------------------------------

@dataclass
class FStarCertificate:
    lower: float
    best_f: float
    gap: float
    iterations: int
    source: str = "estimated"


def fstar_certificate(obj: StochasticObjective, fset: FeasibleSet, budget: int,
                      tol: float = 1e-13) -> FStarCertificate:
    """Deterministic full-gradient Frank-Wolfe with exact line search.

    Every iterate gives the convex lower bound ``f* >= f(x_k) - G(x_k)``; the
    largest one is returned. Stops early once the best bound is within ``tol``
    of the best value.
    """
    if budget < 1:
        raise ValueError("budget must be positive")
    x = fset.lmo(np.zeros(fset.d))
    lower, best = -math.inf, math.inf
    gap = math.inf
    k = 0
    for k in range(1, budget + 1):
        f = obj.value(x)
        g = obj.grad(x)
        v = fset.lmo(g)
        gap = float(g @ (x - v))
        best = min(best, f)
        lower = max(lower, f - gap)
        if best - lower <= tol * max(1.0, abs(best)):
            break
        x = x + obj.exact_line_search(x, v - x) * (v - x)
    return FStarCertificate(lower, best, best - lower, k)


def estimate_f_star(obj: StochasticObjective, fset: FeasibleSet, budget: int = 100_000) -> float:
    """A certified lower bound on ``min f`` over the set (see ``fstar_certificate``)."""
    if budget < 10_000:
        raise ValueError(f"f* estimation needs a budget of at least 10^4, got {budget}")
    return fstar_certificate(obj, fset, budget).lower


# -- problems -----------------------------------------------------------------

@dataclass
class Problem:
    obj: StochasticObjective
    fset: FeasibleSet
    fstar: FStarCertificate


def build_set(cfg: ExperimentConfig, d: int) -> FeasibleSet:
    try:
        return make_set(cfg.feasible_set, d, radius=cfg.radius, scale=cfg.radius,
                        lower=cfg.lower, upper=cfg.upper)
    except ValueError as exc:
        raise ConfigError(str(exc))


def _hinge_problem(X, y, cfg, certified: bool) -> Problem:
    fset = build_set(cfg, X.shape[1])
    obj = HingeSquaredObjective(X, y)
    if certified:
        cert = FStarCertificate(0.0, 0.0, 0.0, 0, "interpolation certificate")
    elif cfg.f_star is not None:
        cert = FStarCertificate(cfg.f_star, cfg.f_star, 0.0, 0, "config")
    else:
        cert = fstar_certificate(obj, fset, cfg.fstar_budget)
    obj.f_star = cert.lower
    return Problem(obj, fset, cert)


def build_problem(cfg: ExperimentConfig) -> Problem:
    if cfg.problem == "quadratic":
        fset = build_set(cfg, cfg.d)
        x_star = np.zeros(cfg.d)
        x_star[0] = cfg.x_star_coef * cfg.radius
        if not fset.contains(x_star, 1e-12):
            raise ConfigError("quadratic minimiser lies outside the feasible set")
        obj = make_quadratic(cfg.n, cfg.d, cfg.condition, x_star, RngStream(cfg.data_seed, 1),
                             scale=cfg.quad_scale)
        return Problem(obj, fset, FStarCertificate(0.0, 0.0, 0.0, 0, "interpolation certificate"))
    if cfg.problem == "blobs":
        X, y, cert = generate_blobs(cfg.blobs())
        ok = cert is not None and cfg.feasible_set in ("l1", "l1ball") and cfg.radius >= 1.0
        return _hinge_problem(X, y, cfg, ok)
    try:
        X, y = load_dataset_csv(cfg.data_path)
    except OSError as exc:
        raise ConfigError(f"cannot read data file {cfg.data_path!r}: {exc.strerror or exc}")
    ok = cfg.feasible_set in ("l1", "l1ball") and certify_separable(X, y, cfg.radius) is not None
    return _hinge_problem(X, y, cfg, ok)


# -- runs ---------------------------------------------------------------------

def run_seed(problem: Problem, cfg: ExperimentConfig, seed: int) -> RunTrace:
    """One run: ``x0`` from stream 1 of ``seed``, solver randomness from stream 2."""
    obj, fset = problem.obj, problem.fset
    root = RngStream(seed, 0)
    x0 = fset.random_point(root.child(1), k=3)
    rng = root.child(2)
    try:
        if cfg.solver == "sfw":
            return sfw_run(obj, fset, x0, SfwSchedule.for_problem(cfg.mode, cfg.T, fset), rng)
        if cfg.solver == "scgs":
            rho = cfg.rho if cfg.rho is not None else resolve_rho(obj.rho)
            sched = ScgsSchedule(cfg.mode, cfg.T, obj.L, fset.diameter(), rho, obj.d)
            return scgs_run(obj, fset, x0, sched, rng)
        zcfg = ZoSgdConfig(cfg.T, cfg.zo_eta, cfg.zo_nu, cfg.zo_d_ref, cfg.rho, seed)
        return zo_sgd_run(obj, x0, zcfg, rng)[1]
    except Exception as exc:
        raise RunError(f"seed {seed}: {type(exc).__name__}: {exc}") from exc


@dataclass
class AggregateTrace:
    t: np.ndarray
    mean_subopt: np.ndarray
    stderr_subopt: np.ndarray
    sfo: np.ndarray
    szo: np.ndarray
    lmo: np.ndarray
    num_seeds: int

    @classmethod
    def from_traces(cls, traces) -> "AggregateTrace":
        mean, se = mean_and_stderr(traces)
        # counters agree across seeds except SCGS LMO calls, which are averaged
        return cls(traces[0].column("t"), mean, se, stack_column(traces, "sfo").mean(axis=0),
                   stack_column(traces, "szo").mean(axis=0),
                   stack_column(traces, "lmo").mean(axis=0), len(traces))

    def at(self, t: int) -> int:
        k = int(np.searchsorted(self.t, t))
        if k >= len(self.t) or self.t[k] != t:
            raise KeyError(t)
        return k


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    problem: Problem
    traces: list
    aggregate: AggregateTrace
    files: list = field(default_factory=list)


def resolve_jobs(jobs: Optional[int]) -> int:
    if jobs is None:
        env = os.environ.get("CGKIT_JOBS")
        if env:
            try:
                jobs = int(env)
            except ValueError:
                raise ConfigError(f"CGKIT_JOBS must be an integer, got {env!r}")
        else:
            jobs = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count()
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    return int(jobs)


def _run_seed_task(args):
    return run_seed(*args)


def run_traces(problem: Problem, cfg: ExperimentConfig, jobs: Optional[int] = None) -> list:
    seeds = [cfg.base_seed + k for k in range(cfg.num_seeds)]
    jobs = min(resolve_jobs(jobs), len(seeds))
    if jobs == 1:
        return [run_seed(problem, cfg, s) for s in seeds]
    with concurrent.futures.ProcessPoolExecutor(jobs) as pool:
        # map preserves seed order whatever the completion order
        return list(pool.map(_run_seed_task, [(problem, cfg, s) for s in seeds]))


def run_experiment(cfg: ExperimentConfig, jobs: Optional[int] = None, write: bool = True,
                   problem: Optional[Problem] = None) -> ExperimentResult:
    problem = problem if problem is not None else build_problem(cfg)
    traces = run_traces(problem, cfg, jobs)
    result = ExperimentResult(cfg, problem, traces, AggregateTrace.from_traces(traces))
    if write:
        result.files = write_outputs(result, Path(cfg.out_dir))
    return result


# -- output -------------------------------------------------------------------

def fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path: Path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_csv(path) -> dict:
    with open(path, encoding="utf-8", newline="") as fh:
        header = fh.readline().strip().split(",")
        rows = [[float(v) for v in line.split(",")] for line in fh if line.strip()]
    data = np.array(rows, dtype=np.float64).reshape(-1, len(header))
    return {name: data[:, j] for j, name in enumerate(header)}


def write_trace_csv(path: Path, trace: RunTrace):
    cols = [getattr(trace, c) for c in TRACE_HEADER]
    write_csv(path, TRACE_HEADER, zip(*cols))


def write_aggregate_csv(path: Path, agg: AggregateTrace):
    cols = [agg.t.astype(int), agg.mean_subopt, agg.stderr_subopt, agg.sfo, agg.szo, agg.lmo]
    write_csv(path, AGGREGATE_HEADER, zip(*cols))


def oracle_axis(agg) -> tuple:
    """The cumulative first- or zeroth-order call column, whichever is in use."""
    sfo, szo = np.asarray(agg["sfo"]), np.asarray(agg["szo"])
    return ("SZO calls", szo) if szo[-1] > sfo[-1] else ("SFO calls", sfo)


def write_outputs(result: ExperimentResult, out: Path) -> list:
    cfg = result.config
    (out / "traces").mkdir(parents=True, exist_ok=True)
    files = []
    for k, tr in enumerate(result.traces):
        p = out / "traces" / f"seed_{cfg.base_seed + k:03d}.csv"
        write_trace_csv(p, tr)
        files.append(p)
    agg_path = out / "aggregate.csv"
    write_aggregate_csv(agg_path, result.aggregate)
    files.append(agg_path)
    files += plot_aggregates([(cfg.label or cfg.solver, read_csv(agg_path))], out,
                             note=fstar_note(result.problem.fstar))
    summary = out / "summary.txt"
    with open(summary, "w", encoding="utf-8", newline="") as fh:
        # out_dir is omitted so an output tree is relocatable byte-for-byte
        for f in dataclasses.fields(cfg):
            if f.name == "out_dir":
                continue
            fh.write(f"{f.name} = {_show(getattr(cfg, f.name))}\n")
        c = result.problem.fstar
        fh.write(f"# f_star = {fmt(c.lower)} ({c.source}; certified gap {fmt(c.gap)}, "
                 f"{c.iterations} FW iterations)\n")
        fh.write(f"# final mean_subopt = {fmt(result.aggregate.mean_subopt[-1])}\n")
    files.append(summary)
    return files


def _show(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, tuple):
        return ", ".join(str(x) for x in v)
    if isinstance(v, float):
        return fmt(v)
    return str(v)


def fstar_note(c: FStarCertificate) -> str:
    return f"f* = {c.lower:.6g} ({c.source}, certified gap {c.gap:.2g})"


# -- SVG ----------------------------------------------------------------------

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")
W, H = 800, 600
LEFT, RIGHT, TOP, BOTTOM = 90, 30, 50, 70


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def svg_loglog(series, xlabel: str, ylabel: str, title: str, note: str = "") -> str:
    """Log-log line plot of ``[(label, x, y), ...]``; non-positive points are dropped."""
    cleaned = []
    for label, x, y in series:
        x, y = np.asarray(x, float), np.asarray(y, float)
        keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
        cleaned.append((label, np.log10(x[keep]), np.log10(y[keep])))
    xs = np.concatenate([c[1] for c in cleaned] + [np.zeros(0)])
    ys = np.concatenate([c[2] for c in cleaned] + [np.zeros(0)])
    if xs.size == 0:
        xs, ys = np.array([0.0, 1.0]), np.array([0.0, 1.0])
    x0, x1 = math.floor(xs.min()), math.ceil(xs.max())
    y0, y1 = math.floor(ys.min()), math.ceil(ys.max())
    x1, y1 = max(x1, x0 + 1), max(y1, y0 + 1)
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def py(v):
        return TOP + (y1 - v) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for e in range(x0, x1 + 1):
        out.append(f'<line x1="{px(e):.2f}" y1="{TOP + ph}" x2="{px(e):.2f}" y2="{TOP + ph + 6}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{px(e):.2f}" y="{TOP + ph + 22}" font-size="13" '
                   f'text-anchor="middle">1e{e}</text>')
    for e in range(y0, y1 + 1):
        out.append(f'<line x1="{LEFT - 6}" y1="{py(e):.2f}" x2="{LEFT}" y2="{py(e):.2f}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{LEFT - 10}" y="{py(e) + 4:.2f}" font-size="13" '
                   f'text-anchor="end">1e{e}</text>')
    for j, (label, lx, ly) in enumerate(cleaned):
        colour = PALETTE[j % len(PALETTE)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(lx, ly))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        ly_text = TOP + 20 + 18 * j
        out.append(f'<line x1="{W - RIGHT - 170}" y1="{ly_text - 4}" x2="{W - RIGHT - 145}" '
                   f'y2="{ly_text - 4}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{W - RIGHT - 140}" y="{ly_text}" font-size="13">{_esc(label)}</text>')
    out.append(f'<text x="{W / 2:.0f}" y="28" font-size="16" text-anchor="middle">{_esc(title)}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.0f}" y="{H - 25}" font-size="14" '
               f'text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(f'<text x="20" y="{TOP + ph / 2:.0f}" font-size="14" text-anchor="middle" '
               f'transform="rotate(-90 20 {TOP + ph / 2:.0f})">{_esc(ylabel)}</text>')
    if note:
        out.append(f'<text x="{LEFT}" y="{H - 6}" font-size="11">{_esc(note)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_aggregates(named, out: Path, note: str = "", stem: str = "subopt") -> list:
    """Write ``<stem>_vs_iteration.svg`` and ``<stem>_vs_oracle.svg`` for aggregate tables."""
    out.mkdir(parents=True, exist_ok=True)
    ycol = "mean_subopt" if "mean_subopt" in named[0][1] else "subopt"
    by_t = [(lab, d["t"], d[ycol]) for lab, d in named]
    xname = oracle_axis(named[0][1])[0]
    by_calls = [(lab, oracle_axis(d)[1], d[ycol]) for lab, d in named]
    files = []
    for name, series, xl in (("iteration", by_t, "iteration t"), ("oracle", by_calls, xname)):
        p = out / f"{stem}_vs_{name}.svg"
        with open(p, "w", encoding="utf-8", newline="") as fh:
            fh.write(svg_loglog(series, xl, "suboptimality f - f*",
                                f"suboptimality vs {xl}", note))
        files.append(p)
    return files
