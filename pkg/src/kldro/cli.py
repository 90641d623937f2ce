"""Command-line entry point.

    python -m kldro solve --config INSTANCE.json [--out DIR] [--tol X]
    python -m kldro experiment --config EXPERIMENT.json [--seed N] [--thetas 0,0.05] [--out DIR] [--tol X]
    python -m kldro reproduce [--seed N] [--thetas ...] [--out DIR] [--tol X]
    python -m kldro check

Exit codes: 0 success, 1 solver or verification failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .apps.instances import InstanceError, load_instance
from .apps.newsvendor import NewsvendorInstance, newsvendor_specs
from .apps.ufl import NoOpenFacility, ufl_specs
from .harness import (
    DistributionSpec,
    ExperimentConfig,
    ExperimentError,
    InvalidSpec,
    NewsvendorProblem,
    UflProblem,
    emit_report,
    format_decision,
    run_experiment,
)
from .ipm import SolverSettings
from .kl import worst_case_expectation
from .mip import MipSettings, MipStatus, solve_mip
from .robust import build_model, save_counterpart

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

DEFAULT_SEED = 2021
BUNDLED_DISTRIBUTIONS = (
    DistributionSpec("DiscreteUniform", (0, 10)),
    DistributionSpec("Binomial", (10, 0.5)),
    DistributionSpec("Poisson", (5,)),
)

logger = logging.getLogger("kldro")


class ConfigError(Exception):
    pass


def _thetas(text: str):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"--thetas expects a comma-separated list of numbers, got {text!r}")


def _settings(args) -> MipSettings:
    if args.tol is None:
        return MipSettings()
    if not args.tol > 0:
        raise ConfigError("--tol must be positive")
    return MipSettings(solver=SolverSettings(tol=args.tol))


def bundled_configs(seed: int = DEFAULT_SEED, thetas=None, output_dir: str = "results") -> list:
    """The six experiments: both problems under the three demand distributions."""
    out = []
    for problem in (NewsvendorProblem(), UflProblem()):
        for dist in BUNDLED_DISTRIBUTIONS:
            kw = {} if thetas is None else {"thetas": thetas}
            out.append(ExperimentConfig(problem, dist, R=100, seed=seed, output_dir=output_dir, **kw))
    return out


def cmd_solve(args) -> int:
    if args.config is None:
        raise ConfigError("solve needs --config INSTANCE")
    try:
        inst = load_instance(args.config)
    except FileNotFoundError:
        raise ConfigError(f"{args.config}: no such file") from None
    if isinstance(inst, NewsvendorInstance):
        first, seconds = newsvendor_specs(inst)
    else:
        if not inst.demands:
            raise ConfigError(f"{args.config}: facility location instance has no demands")
        first, seconds = ufl_specs(inst)
    rc = build_model(first, seconds)
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        paths = save_counterpart(rc, out / "model.conic")
        print("program written to " + ", ".join(str(p) for p in paths))

    sol = solve_mip(rc.program, _settings(args))
    # an infeasible integer problem is reported in the continuous solver's vocabulary
    label = "PrimalInfeasible" if sol.status is MipStatus.INFEASIBLE else sol.status.value
    print(f"status {label}")
    if not sol.optimal:
        return EXIT_FAILURE
    y = np.round(sol.x[rc.y]).astype(int)
    print(f"y*={format_decision(y)} objective={sol.objective_value:.6f}")
    for i, (spec, amb) in enumerate(seconds):
        try:
            wc = worst_case_expectation(amb, spec.values(y), method="scalar_dual")
        except NoOpenFacility:
            continue
        probs = " ".join(f"{v:g}:{p:.6f}" for v, p in zip(spec.distribution.support, wc.worst_p))
        print(f"p*[{i}] eps={amb.epsilon:.6f} worst={wc.value:.6f} {probs}")
    return EXIT_OK


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    data = cfg.to_dict()
    if args.seed is not None:
        data["seed"] = args.seed
    if args.thetas is not None:
        data["thetas"] = list(args.thetas)
    if args.out is not None:
        data["output_dir"] = args.out
    return ExperimentConfig.from_dict(data)


def _run_one(cfg: ExperimentConfig, settings: MipSettings) -> int:
    try:
        report = run_experiment(cfg, settings)
    except ExperimentError as err:
        print(f"{cfg.name}: solver failure at {err}", file=sys.stderr)
        return EXIT_FAILURE
    bars = ", ".join(f"{b:.6f}" for b in report.max_kl)
    print(f"{cfg.name}: seed {cfg.seed}, max KL {bars}")
    for r in report.rows:
        print(f"  theta={r.theta:.2f} y*={format_decision(r.decision)} avg={r.avg:.4f} "
              f"st_dev={r.st_dev:.4f} worst10={r.worst10:.4f}")
    for p in emit_report(report):
        print(f"  wrote {p}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.config is None:
        raise ConfigError("experiment needs --config FILE")
    try:
        cfg = ExperimentConfig.load(args.config)
    except FileNotFoundError:
        raise ConfigError(f"{args.config}: no such file") from None
    return _run_one(_apply_overrides(cfg, args), _settings(args))


def cmd_reproduce(args) -> int:
    settings = _settings(args)
    seed = DEFAULT_SEED if args.seed is None else args.seed
    code = EXIT_OK
    for cfg in bundled_configs(seed, args.thetas, args.out or "results"):
        code = max(code, _run_one(cfg, settings))
    return code


def cmd_check(args) -> int:
    from .check import run_all

    results = run_all(quick=True)
    for r in results:
        print(r.line())
        for msg in r.failures[:3]:
            print(f"    {msg}")
    failed = sum(not r.ok for r in results)
    print(f"{len(results)} suites, {len(results) - failed} passed, {failed} failed")
    return EXIT_FAILURE if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kldro", description="KL-ambiguity robust optimisation toolkit")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="verb", required=True)
    handlers = {"solve": cmd_solve, "experiment": cmd_experiment,
                "reproduce": cmd_reproduce, "check": cmd_check}
    helps = {
        "solve": "solve one instance file and print the decision",
        "experiment": "run an out-of-sample experiment and write CSV reports",
        "reproduce": "run the six bundled experiments",
        "check": "run the internal verification suites",
    }
    for verb, fn in handlers.items():
        p = sub.add_parser(verb, help=helps[verb])
        if verb != "check":
            p.add_argument("--config", metavar="PATH")
            p.add_argument("--seed", type=int)
            p.add_argument("--thetas", type=_thetas, metavar="CSV")
            p.add_argument("--out", metavar="DIR")
            p.add_argument("--tol", type=float)
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InvalidSpec, InstanceError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as err:
        print(f"configuration error: line {err.lineno}: {err.msg}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
