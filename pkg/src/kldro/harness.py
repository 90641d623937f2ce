"""Seeded out-of-sample experiments across a grid of robustness levels.

For each problem the experiment draws a training sample, builds the empirical
distribution ``q`` (one per customer for facility location), solves the model
with ``eps = theta * max_kl(q)`` for every ``theta`` in the grid, draws an
independent test sample and records the realised cost of each decision.

Random streams
--------------
Every draw comes from ``numpy.random.default_rng([seed ^ tag, index])`` with
``tag = 1`` for training and ``tag = 2`` for testing, ``index`` being the
customer number (0 for the newsvendor). Variates are produced from the
stream's uniforms by fixed recipes so they do not depend on numpy's own
distribution samplers:

* DiscreteUniform(a, b): ``a + floor(u (b - a + 1))``
* Binomial(n, p): number of ``u < p`` among ``n`` uniforms
* Poisson(lam): sequential search of the CDF with one uniform
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .apps.newsvendor import NewsvendorInstance, realized_cost, solve_newsvendor
from .apps.ufl import UflInstance, closed_form_cost, solve_ufl
from .kl import EmpiricalDistribution, max_kl
from .mip import MipSettings

logger = logging.getLogger(__name__)

__all__ = [
    "InvalidSpec",
    "EmptyInput",
    "ExperimentError",
    "DistributionSpec",
    "NewsvendorProblem",
    "UflProblem",
    "ExperimentConfig",
    "ThetaResult",
    "EvaluationReport",
    "TRAIN_TAG",
    "TEST_TAG",
    "stream",
    "sample",
    "empirical",
    "statistics",
    "run_experiment",
    "emit_report",
    "format_decision",
]

TRAIN_TAG = 1
TEST_TAG = 2


class InvalidSpec(ValueError):
    pass


class EmptyInput(ValueError):
    pass


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class DistributionSpec:
    kind: str
    params: tuple

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        k, p = self.kind, self.params
        if k == "DiscreteUniform":
            if len(p) != 2 or any(int(v) != v for v in p) or p[0] > p[1]:
                raise InvalidSpec("DiscreteUniform needs integers a <= b")
        elif k == "Binomial":
            if len(p) != 2 or int(p[0]) != p[0] or p[0] < 0 or not 0 <= p[1] <= 1:
                raise InvalidSpec("Binomial needs n >= 0 and p in [0, 1]")
        elif k == "Poisson":
            if len(p) != 1 or not p[0] > 0 or not math.isfinite(p[0]):
                raise InvalidSpec("Poisson needs lambda > 0")
        else:
            raise InvalidSpec(f"unknown distribution kind {k!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "DistributionSpec":
        try:
            return cls(data["kind"], tuple(data["params"]))
        except KeyError as err:
            raise InvalidSpec(f"distribution needs field {err}") from None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": list(self.params)}

    @property
    def label(self) -> str:
        return f"{self.kind}({', '.join(f'{v:g}' for v in self.params)})"


def stream(seed: int, tag: int, index: int = 0) -> np.random.Generator:
    """PCG64 generator for one (purpose, customer) substream."""
    return np.random.default_rng([int(seed) ^ tag, index])


def _poisson_inverse(u: np.ndarray, lam: float) -> np.ndarray:
    out = np.empty(u.size, dtype=np.int64)
    for r, ur in enumerate(u):
        k, p = 0, math.exp(-lam)
        cdf = p
        while ur > cdf:
            k += 1
            p *= lam / k
            cdf += p
            if p == 0.0 and cdf < ur:
                # the tail underflowed; cdf is 1 up to rounding
                break
        out[r] = k
    return out


def sample(spec: DistributionSpec, R: int, rng: np.random.Generator) -> np.ndarray:
    if R < 1:
        raise InvalidSpec("sample size must be positive")
    if spec.kind == "DiscreteUniform":
        a, b = (int(v) for v in spec.params)
        return a + np.floor(rng.random(R) * (b - a + 1)).astype(np.int64)
    if spec.kind == "Binomial":
        n, p = int(spec.params[0]), float(spec.params[1])
        return (rng.random((R, n)) < p).sum(axis=1).astype(np.int64)
    return _poisson_inverse(rng.random(R), float(spec.params[0]))


def empirical(samples) -> EmpiricalDistribution:
    samples = np.asarray(samples).reshape(-1)
    if samples.size == 0:
        raise EmptyInput("need at least one sample")
    support, counts = np.unique(samples, return_counts=True)
    return EmpiricalDistribution(support.astype(float), counts / samples.size)


def statistics(costs) -> dict:
    costs = np.asarray(costs, dtype=float).reshape(-1)
    R = costs.size
    if R == 0:
        raise EmptyInput("no cost realisations")
    k = math.ceil(0.1 * R)
    q1, med, q3 = np.percentile(costs, [25, 50, 75])
    return {
        "avg": float(costs.mean()),
        "st_dev": float(costs.std(ddof=1)) if R > 1 else 0.0,
        "worst10": float(np.sort(costs)[-k:].mean()),
        "min": float(costs.min()),
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "max": float(costs.max()),
    }


@dataclass(frozen=True)
class NewsvendorProblem:
    c: float = 1.0
    c_b: float = 2.0
    c_h: float = 1.0
    kind: str = field(default="newsvendor", init=False)


@dataclass(frozen=True)
class UflProblem:
    """``instance`` is ``"line"`` or a path to an instance file."""

    instance: str = "line"
    kind: str = field(default="ufl", init=False)

    def load(self) -> UflInstance:
        from .apps.instances import load_ufl_skeleton

        return load_ufl_skeleton(self.instance)


@dataclass
class ExperimentConfig:
    problem: NewsvendorProblem | UflProblem
    distribution: DistributionSpec
    R: int = 100
    thetas: tuple = (0.0, 0.05, 0.10, 0.15, 0.20, 0.25)
    seed: int = 0
    output_dir: str = "results"
    name: str | None = None

    def __post_init__(self):
        self.thetas = tuple(float(t) for t in self.thetas)
        if int(self.R) != self.R or self.R < 1:
            raise InvalidSpec("R must be a positive integer")
        if not self.thetas:
            raise InvalidSpec("theta grid is empty")
        if any(not 0.0 <= t <= 1.0 for t in self.thetas):
            raise InvalidSpec("theta values must lie in [0, 1]")
        if list(self.thetas) != sorted(set(self.thetas)):
            raise InvalidSpec("theta values must be distinct and increasing")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidSpec("seed must be a 64-bit unsigned integer")
        if self.name is None:
            self.name = f"{self.problem.kind}_{self.distribution.kind.lower()}"

    def to_dict(self) -> dict:
        prob = {k: v for k, v in asdict(self.problem).items()}
        return {
            "name": self.name,
            "problem": prob,
            "distribution": self.distribution.to_dict(),
            "R": self.R,
            "thetas": list(self.thetas),
            "seed": self.seed,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        try:
            prob = dict(data.pop("problem"))
            dist = DistributionSpec.from_dict(data.pop("distribution"))
        except KeyError as err:
            raise InvalidSpec(f"config needs field {err}") from None
        except TypeError:
            raise InvalidSpec("problem and distribution must be objects") from None
        kind = prob.pop("kind", None)
        if kind == "newsvendor":
            problem = NewsvendorProblem(**prob)
        elif kind == "ufl":
            problem = UflProblem(**prob)
        else:
            raise InvalidSpec(f"problem.kind must be 'newsvendor' or 'ufl', got {kind!r}")
        unknown = set(data) - {"R", "thetas", "seed", "output_dir", "name"}
        if unknown:
            raise InvalidSpec(f"unknown config fields {sorted(unknown)}")
        return cls(problem=problem, distribution=dist, **data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        text = Path(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise InvalidSpec(f"{path}: line {err.lineno} column {err.colno}: {err.msg}") from None
        try:
            return cls.from_dict(data)
        except TypeError as err:
            raise InvalidSpec(f"{path}: {err}") from None


@dataclass
class ThetaResult:
    theta: float
    decision: tuple
    objective: float
    epsilons: tuple
    costs: np.ndarray = field(repr=False)
    avg: float = 0.0
    st_dev: float = 0.0
    worst10: float = 0.0
    min: float = 0.0
    q1: float = 0.0
    median: float = 0.0
    q3: float = 0.0
    max: float = 0.0

    @classmethod
    def from_costs(cls, theta, decision, objective, epsilons, costs):
        return cls(theta, tuple(int(v) for v in decision), float(objective),
                   tuple(float(e) for e in epsilons), np.asarray(costs, dtype=float),
                   **statistics(costs))


@dataclass
class EvaluationReport:
    config: ExperimentConfig
    rows: list
    max_kl: tuple

    def row(self, theta: float) -> ThetaResult:
        for r in self.rows:
            if math.isclose(r.theta, theta, abs_tol=1e-12):
                return r
        raise KeyError(theta)

    @property
    def decisions(self) -> list:
        return [r.decision for r in self.rows]


def _train_and_test(config: ExperimentConfig, customers: int):
    spec, R, seed = config.distribution, config.R, config.seed
    train = [sample(spec, R, stream(seed, TRAIN_TAG, i)) for i in range(customers)]
    test = [sample(spec, R, stream(seed, TEST_TAG, i)) for i in range(customers)]
    return train, test


def run_experiment(config: ExperimentConfig, settings: MipSettings | None = None) -> EvaluationReport:
    prob = config.problem
    rows = []
    if isinstance(prob, NewsvendorProblem):
        (train,), (test,) = _train_and_test(config, 1)
        q = empirical(train)
        bar = max_kl(q)
        for theta in config.thetas:
            inst = NewsvendorInstance(prob.c, prob.c_b, prob.c_h, q, theta * bar)
            try:
                y, val, _ = solve_newsvendor(inst, settings)
            except (RuntimeError, ValueError) as err:
                raise ExperimentError(f"theta={theta:g}: {err}") from err
            costs = realized_cost(inst, y, test)
            rows.append(ThetaResult.from_costs(theta, [y], val, [inst.epsilon], costs))
            logger.info("theta=%g y*=%d objective=%.6f", theta, y, val)
        bars = (bar,)
    else:
        skeleton = prob.load()
        train, test = _train_and_test(config, skeleton.m)
        qs = [empirical(s) for s in train]
        bars = tuple(max_kl(q) for q in qs)
        D = np.column_stack(test).astype(float)  # R x m
        for theta in config.thetas:
            eps = [theta * b for b in bars]
            inst = skeleton.with_demands(qs, eps)
            try:
                y, val, _ = solve_ufl(inst, settings)
            except (RuntimeError, ValueError) as err:
                raise ExperimentError(f"theta={theta:g}: {err}") from err
            costs = closed_form_cost(inst.f, inst.t, D, y)
            rows.append(ThetaResult.from_costs(theta, y, val, eps, costs))
            logger.info("theta=%g y*=%s objective=%.6f", theta, format_decision(y), val)
    return EvaluationReport(config, rows, bars)


def format_decision(decision) -> str:
    return ",".join(str(int(v)) for v in decision)


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def emit_report(report: EvaluationReport, out_dir=None,
                formats=("table_csv", "boxplot_csv")) -> list:
    """Write the summary table, box-plot statistics and raw costs; return the paths.

    Files are ``<name>_table.csv``, ``<name>_boxplot.csv`` and ``<name>_raw.csv``,
    rows sorted by theta.
    """
    out = Path(out_dir if out_dir is not None else report.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    unknown = set(formats) - {"table_csv", "boxplot_csv"}
    if unknown:
        raise ValueError(f"unknown report formats {sorted(unknown)}")
    rows = sorted(report.rows, key=lambda r: r.theta)
    name = report.config.name
    paths = []
    if "table_csv" in formats:
        path = out / f"{name}_table.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["theta", "y_star", "avg", "st_dev", "worst10"])
            for r in rows:
                w.writerow([f"{r.theta:.2f}", format_decision(r.decision),
                            _fmt(r.avg), _fmt(r.st_dev), _fmt(r.worst10)])
        paths.append(path)
    if "boxplot_csv" in formats:
        path = out / f"{name}_boxplot.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["theta", "min", "q1", "median", "q3", "max"])
            for r in rows:
                w.writerow([f"{r.theta:.2f}"] + [_fmt(v) for v in (r.min, r.q1, r.median, r.q3, r.max)])
        paths.append(path)
        raw = out / f"{name}_raw.csv"
        with raw.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["theta", "index", "cost"])
            for r in rows:
                for k, v in enumerate(r.costs):
                    w.writerow([f"{r.theta:.2f}", k, _fmt(v)])
        paths.append(raw)
    return paths
