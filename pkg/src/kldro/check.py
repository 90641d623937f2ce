"""Fast self-verification suites.

Each suite compares a library routine against an independent brute-force
computation on random inputs and returns a :class:`SuiteResult`.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import cones
from .apps.ufl import lemma1_linearization
from .ipm import SolverSettings, solve
from .kl import AmbiguitySet, EmpiricalDistribution, build_inner_dual, build_inner_primal, max_kl, worst_case_expectation

__all__ = [
    "SuiteResult",
    "random_worst_case_instance",
    "strong_duality_suite",
    "oracle_agreement_suite",
    "lemma1_suite",
    "max_kl_suite",
    "barrier_suite",
    "run_all",
]


@dataclass
class SuiteResult:
    name: str
    passed: int = 0
    failed: int = 0
    worst: float = 0.0
    seconds: float = 0.0
    failures: list = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return self.failed == 0 and self.passed > 0

    def record(self, err: float, tol: float, detail: str = ""):
        if math.isfinite(err) and err <= tol:
            self.passed += 1
        else:
            self.failed += 1
            self.failures.append(detail or f"error {err:.3g}")
        if not math.isfinite(err) or err > self.worst:
            self.worst = err

    def line(self) -> str:
        tag = "PASS" if self.ok else "FAIL"
        return f"{tag} {self.name}: {self.passed} passed, {self.failed} failed, worst {self.worst:.2e} ({self.seconds:.1f}s)"


def random_worst_case_instance(rng: np.random.Generator, max_support: int = 10):
    """Random ``(ambiguity set, H)`` with ``S <= max_support`` and ``eps`` uniform in ``(0, max_kl)``."""
    S = int(rng.integers(2, max_support + 1))
    q = rng.random(S) + 0.05
    q /= q.sum()
    h = rng.normal(size=S) * rng.choice([1.0, 10.0, 100.0])
    eps = rng.uniform(0.0, max_kl(q))
    while eps == 0.0:
        eps = rng.uniform(0.0, max_kl(q))
    return AmbiguitySet(EmpiricalDistribution(np.arange(S, dtype=float), q), eps), h


def strong_duality_suite(count: int = 20, seed: int = 11, tol: float = 1e-6,
                         settings: SolverSettings | None = None) -> SuiteResult:
    """Primal worst-case program vs its dual-exponential-cone dual, solved separately."""
    res = SuiteResult("strong duality")
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    for k in range(count):
        amb, h = random_worst_case_instance(rng)
        p = solve(build_inner_primal(amb, h), settings)
        d = solve(build_inner_dual(amb, h), settings)
        if not (p.optimal and d.optimal):
            res.record(math.inf, tol, f"instance {k}: {p.status.value}/{d.status.value}")
            continue
        primal, dual = -p.objective_value, d.objective_value
        res.record(abs(primal - dual) / (1 + abs(dual)), tol, f"instance {k}: {primal} vs {dual}")
    res.seconds = time.perf_counter() - t0
    return res


def oracle_agreement_suite(count: int = 20, seed: int = 11, tol: float = 1e-6) -> SuiteResult:
    res = SuiteResult("conic vs scalar dual")
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    for k in range(count):
        amb, h = random_worst_case_instance(rng)
        try:
            a = worst_case_expectation(amb, h, "conic").value
        except RuntimeError as err:
            res.record(math.inf, tol, f"instance {k}: {err}")
            continue
        b = worst_case_expectation(amb, h, "scalar_dual").value
        res.record(abs(a - b) / (1 + abs(b)), tol, f"instance {k}: {a} vs {b}")
    res.seconds = time.perf_counter() - t0
    return res


def lemma1_suite(count: int = 1000, seed: int = 12, max_n: int = 8, tol: float = 0.0) -> SuiteResult:
    """Exact equality with the brute-force minimum (``tol = 0``)."""
    res = SuiteResult("closest-facility linearisation")
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    for k in range(count):
        n = int(rng.integers(1, max_n + 1))
        t = rng.random(n) * rng.choice([1.0, 100.0])
        if rng.random() < 0.2:
            t = np.round(t, 1)  # force ties
        y = (rng.random(n) < 0.5).astype(float)
        if not y.any():
            y[rng.integers(n)] = 1.0
        brute = min(t[j] for j in range(n) if y[j] == 1.0)
        res.record(abs(lemma1_linearization(t, y) - brute), tol, f"t={t}, y={y}")
    res.seconds = time.perf_counter() - t0
    return res


def max_kl_suite(count: int = 1000, seed: int = 13, tol: float = 1e-12) -> SuiteResult:
    """``max_kl(q)`` vs the largest KL divergence of a point mass from ``q``."""
    res = SuiteResult("max KL over the simplex")
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    for k in range(count):
        S = int(rng.integers(1, 12))
        q = rng.random(S) ** 3 + 1e-6
        q /= q.sum()
        # KL(e_s || q) = 1 * log(1 / q_s); the max over vertices is the max over the simplex
        brute = max(math.log(1.0 / q[s]) for s in range(S))
        res.record(abs(max_kl(q) - brute), tol, f"q={q}")
    res.seconds = time.perf_counter() - t0
    return res


def random_exp_interior(rng: np.random.Generator) -> np.ndarray:
    x2 = math.exp(rng.uniform(-2, 2))
    x3 = rng.normal()
    x1 = x2 * math.exp(x3 / x2) * (1 + math.exp(rng.uniform(-3, 2)))
    return np.array([x1, x2, x3])


def _fd_error(f, grad, x, h=1e-6):
    fd = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h * max(abs(x[i]), 1e-3)
        fd[i] = (f(x + e) - f(x - e)) / (2 * e[i])
    return np.max(np.abs(fd - grad)) / (1 + np.max(np.abs(grad)))


def barrier_suite(count: int = 100, seed: int = 14, tol: float = 1e-6) -> SuiteResult:
    """Finite differences of the exponential-cone barrier plus the central-point identity."""
    res = SuiteResult("exp-cone barrier derivatives")
    rng = np.random.default_rng(seed)
    blk = cones.ConeBlock(cones.ConeKind.EXP, 3)
    t0 = time.perf_counter()

    def value(x):
        return cones.barrier(blk, x).value

    def gradient(x):
        return cones.barrier(blk, x).gradient

    for k in range(count):
        x = random_exp_interior(rng)
        ev = cones.barrier(blk, x)
        g_err = _fd_error(value, ev.gradient, x)
        fd_h = np.zeros((3, 3))
        for i in range(3):
            e = np.zeros(3)
            e[i] = 1e-6 * max(abs(x[i]), 1e-3)
            fd_h[:, i] = (gradient(x + e) - gradient(x - e)) / (2 * e[i])
        h_err = np.max(np.abs(fd_h - ev.hessian)) / (1 + np.max(np.abs(ev.hessian)))
        res.record(max(g_err, h_err), tol, f"x={x}: gradient {g_err:.2e}, hessian {h_err:.2e}")

    xc = np.asarray(cones.EXP_CENTRAL_POINT, dtype=float)
    try:
        err = float(np.max(np.abs(cones.barrier(blk, xc).gradient + xc)))
    except cones.NotInterior:
        err = math.inf
    res.record(err, 1e-9, f"central point residual {err:.2e}")
    res.seconds = time.perf_counter() - t0
    return res


def run_all(quick: bool = True) -> list:
    n = 20 if quick else 200
    return [
        strong_duality_suite(n),
        oracle_agreement_suite(n),
        lemma1_suite(),
        max_kl_suite(),
        barrier_suite(),
    ]
