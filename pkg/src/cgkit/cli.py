"""Command-line entry point: ``cgkit {generate-data,run,zosgd,rate-check,fstar,plot}``.

Exit codes: 0 success, 1 usage or config error, 2 runtime error, 3 rate-check failure.
"""

import argparse
import logging
import sys
from pathlib import Path

from .bench import (ConfigError, ExperimentConfig, config_from_pairs, fstar_certificate, fstar_note,
                    build_problem, load_config, plot_aggregates, read_csv, run_experiment)
from .core import FIRST_ORDER, ZEROTH_ORDER
from .problems import generate_blobs, save_dataset_csv
from .scgs import scgs_rate_check
from .sfw import sfw_rate_check

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_RATE = 0, 1, 2, 3

THEOREMS = {
    "1a": ("sfw", FIRST_ORDER, (10, 100, 1000)),
    "1b": ("sfw", ZEROTH_ORDER, (10, 100)),
    "2a": ("scgs", FIRST_ORDER, (10, 50, 200)),
    "2b": ("scgs", ZEROTH_ORDER, (10, 50)),
}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> Parser:
    common = Parser(add_help=False)
    common.add_argument("--config", help="flat 'key = value' experiment file")
    common.add_argument("--seed", type=int, help="base seed (data seed for generate-data)")
    common.add_argument("--out", help="output directory (CSV path for generate-data)")
    common.add_argument("--jobs", type=int, help="worker processes (default: $CGKIT_JOBS or all cores)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key; repeatable")
    p = Parser(prog="cgkit", description="Projection-free stochastic optimisation benchmarks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)
    sub.add_parser("generate-data", parents=[common], help="write a blobs dataset as CSV")
    sub.add_parser("run", parents=[common], help="run a multi-seed experiment")
    sub.add_parser("zosgd", parents=[common], help="run with solver = zosgd (unconstrained)")
    rc = sub.add_parser("rate-check", parents=[common], help="check a convergence bound")
    rc.add_argument("--theorem", required=True, choices=sorted(THEOREMS))
    fs = sub.add_parser("fstar", parents=[common], help="certified lower bound on f*")
    fs.add_argument("--budget", type=int, help="Frank-Wolfe iterations (default: fstar_budget)")
    pl = sub.add_parser("plot", parents=[common], help="aggregate or trace CSVs to SVG")
    pl.add_argument("inputs", nargs="+", help="CSV files, optionally LABEL=PATH")
    return p


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    pairs = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        pairs[k.strip()] = v
    if pairs:
        cfg = config_from_pairs(pairs, cfg)
        cfg.__post_init__()
    if args.out and args.command != "generate-data":
        cfg = cfg.replace(out_dir=args.out)
    if args.seed is not None:
        cfg = cfg.replace(data_seed=args.seed) if args.command == "generate-data" \
            else cfg.replace(base_seed=args.seed)
    return cfg


def cmd_generate_data(args, cfg):
    X, y, cert = generate_blobs(cfg.blobs())
    path = Path(args.out or "blobs.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    save_dataset_csv(path, X, y)
    kind = "separable (certificate w0 = e_1)" if cert is not None else "not certified separable"
    print(f"wrote {path}: n={X.shape[0]} d={X.shape[1]} {kind}")
    return EXIT_OK


def cmd_run(args, cfg):
    result = run_experiment(cfg, jobs=args.jobs)
    agg = result.aggregate
    print(fstar_note(result.problem.fstar))
    for t in cfg.checkpoints or (0, cfg.T):
        k = agg.at(t)
        print(f"t={t:>6d}  mean_subopt={agg.mean_subopt[k]:.6e}  stderr={agg.stderr_subopt[k]:.2e}")
    print(f"wrote {len(result.files)} files under {cfg.out_dir}")
    return EXIT_OK


def cmd_zosgd(args, cfg):
    return cmd_run(args, cfg.replace(solver="zosgd"))


def cmd_rate_check(args, cfg):
    solver, mode, checkpoints = THEOREMS[args.theorem]
    if (cfg.solver, cfg.mode) != (solver, mode):
        print(f"note: theorem {args.theorem} runs solver={solver} mode={mode}")
    checkpoints = cfg.checkpoints or tuple(c for c in checkpoints if c <= cfg.T)
    cfg = cfg.replace(solver=solver, mode=mode, checkpoints=checkpoints)
    result = run_experiment(cfg, jobs=args.jobs)
    obj, fset = result.problem.obj, result.problem.fset
    rho = cfg.rho if cfg.rho is not None else obj.rho
    if rho is None:
        raise ConfigError("rate-check needs rho: set it in the config")
    D = fset.diameter()
    if solver == "sfw":
        report = sfw_rate_check(result.traces, obj, rho, obj.L, D, checkpoints, mode)
    else:
        grad_opt = None
        if getattr(obj, "x_star", None) is None and result.problem.fstar.source.startswith("interp"):
            grad_opt = 0.0  # nonnegative components all vanish at an interpolating minimiser
        report = scgs_rate_check(result.traces, obj, rho, obj.L, D, checkpoints, mode, grad_opt)
    print("\n".join(report.lines()))
    return EXIT_OK if report.passed else EXIT_RATE


def cmd_fstar(args, cfg):
    problem = build_problem(cfg.replace(f_star=None))
    budget = args.budget or cfg.fstar_budget
    if problem.fstar.source == "interpolation certificate":
        cert = problem.fstar
    else:
        cert = fstar_certificate(problem.obj, problem.fset, budget)
    print(f"f_star_lower = {cert.lower:.17g}")
    print(f"best_f = {cert.best_f:.17g}")
    print(f"certified_gap = {cert.gap:.3g}  ({cert.source}, {cert.iterations} iterations)")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "fstar.txt", "w", encoding="utf-8", newline="") as fh:
            fh.write(f"f_star_lower = {cert.lower:.17g}\nbest_f = {cert.best_f:.17g}\n"
                     f"certified_gap = {cert.gap:.17g}\n")
    return EXIT_OK


def cmd_plot(args, cfg):
    named = []
    for item in args.inputs:
        label, _, path = item.rpartition("=") if "=" in item else (Path(item).stem, "", item)
        try:
            named.append((label, read_csv(path)))
        except OSError as exc:
            raise ConfigError(f"cannot read {path!r}: {exc.strerror or exc}")
    files = plot_aggregates(named, Path(args.out or "."))
    print("wrote " + ", ".join(str(f) for f in files))
    return EXIT_OK


COMMANDS = {"generate-data": cmd_generate_data, "run": cmd_run, "zosgd": cmd_zosgd,
            "rate-check": cmd_rate_check, "fstar": cmd_fstar, "plot": cmd_plot}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
