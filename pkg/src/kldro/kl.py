"""KL-divergence ambiguity sets and the worst-case expectation over them.

``worst_case_expectation`` has two independent routes:

* ``"conic"``: the exponential-cone program over ``(p, delta)`` solved by
  :func:`kldro.ipm.solve`;
* ``"scalar_dual"``: the one-dimensional dual

      sup_{KL(p||q) <= eps} E_p[H] = inf_{beta > 0} beta*eps + beta*log sum_s q_s exp(H_s/beta)

  whose stationarity condition is ``KL(p_beta || q) = eps`` with
  ``p_beta ∝ q * exp(H / beta)``. The root is bracketed in log(beta).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq

from .cones import ConeBlock, ConeKind
from .ipm import ConicProgram, SolverSettings, solve

__all__ = [
    "InvalidDistribution",
    "DimensionMismatch",
    "EpsilonNonpositive",
    "EmpiricalDistribution",
    "AmbiguitySet",
    "WorstCase",
    "KLEpigraphTemplate",
    "kl_divergence",
    "max_kl",
    "kl_epigraph_blocks",
    "build_inner_primal",
    "build_inner_dual",
    "worst_case_expectation",
]

SIMPLEX_TOL = 1e-9
BETA_BRACKET = (1e-8, 1e8)


class InvalidDistribution(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class EpsilonNonpositive(ValueError):
    """The conic reformulation needs a strictly positive KL radius."""


def _check_simplex(p, name, strict):
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size == 0:
        raise InvalidDistribution(f"{name} is empty")
    if not np.all(np.isfinite(p)):
        raise InvalidDistribution(f"{name} has non-finite entries")
    if strict and np.any(p <= 0):
        raise InvalidDistribution(f"{name} must be strictly positive")
    if np.any(p < 0):
        raise InvalidDistribution(f"{name} has negative entries")
    if abs(p.sum() - 1.0) > SIMPLEX_TOL:
        raise InvalidDistribution(f"{name} sums to {p.sum()!r}, not 1")
    return p


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Finite distribution with distinct support points and positive masses."""

    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=float).reshape(-1)
        probs = _check_simplex(self.probs, "probs", strict=True)
        if support.size != probs.size:
            raise DimensionMismatch("support and probs differ in length")
        if np.unique(support).size != support.size:
            raise InvalidDistribution("support values must be distinct")
        support.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    @property
    def size(self) -> int:
        return self.support.size

    def mean(self) -> float:
        return float(self.probs @ self.support)


@dataclass(frozen=True)
class AmbiguitySet:
    """All distributions on ``base.support`` within KL radius ``epsilon`` of ``base``."""

    base: EmpiricalDistribution
    epsilon: float

    def __post_init__(self):
        if not (self.epsilon >= 0) or not math.isfinite(self.epsilon):
            raise ValueError(f"epsilon must be a finite nonnegative number, got {self.epsilon}")


@dataclass
class WorstCase:
    value: float
    worst_p: np.ndarray


def kl_divergence(p, q) -> float:
    """``sum_s p_s log(p_s / q_s)`` with the convention ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float).reshape(-1)
    q = np.asarray(q, dtype=float).reshape(-1)
    if p.size != q.size:
        raise DimensionMismatch(f"p has {p.size} entries, q has {q.size}")
    q = _check_simplex(q, "q", strict=True)
    p = _check_simplex(p, "p", strict=False)
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz] / q[nz])))


def _probs(q) -> np.ndarray:
    if isinstance(q, EmpiricalDistribution):
        return q.probs
    return _check_simplex(q, "q", strict=True)


def max_kl(q) -> float:
    """Largest KL divergence from ``q`` over the simplex: ``log(1 / min_s q_s)``."""
    return float(-np.log(np.min(_probs(q))))


@dataclass(frozen=True)
class KLEpigraphTemplate:
    """Column/row layout for ``sum_s delta_s <= eps`` with ``(q_s, p_s, -delta_s)`` in K_exp.

    Triple ``s`` occupies columns ``3s, 3s+1, 3s+2`` (``q_s``, ``p_s`` and
    ``-delta_s``). ``budget_row`` holds the coefficients of the single linear
    row over those ``3S`` columns; the ``q_s`` entries are pinned by
    ``pin_columns`` rows that callers add separately.
    """

    S: int
    cones: tuple
    budget_row: np.ndarray
    pin_columns: np.ndarray
    p_columns: np.ndarray
    neg_delta_columns: np.ndarray

    @property
    def n_columns(self) -> int:
        return 3 * self.S

    @property
    def linear_rows(self) -> int:
        return 1


def kl_epigraph_blocks(S: int) -> KLEpigraphTemplate:
    if S < 1:
        raise ValueError("need at least one support point")
    budget = np.zeros(3 * S)
    budget[2::3] = -1.0
    return KLEpigraphTemplate(
        S=S,
        cones=tuple(ConeBlock(ConeKind.EXP, 3) for _ in range(S)),
        budget_row=budget,
        pin_columns=np.arange(0, 3 * S, 3),
        p_columns=np.arange(1, 3 * S, 3),
        neg_delta_columns=np.arange(2, 3 * S, 3),
    )


def _check_h(ambiguity: AmbiguitySet, h_values) -> np.ndarray:
    h = np.asarray(h_values, dtype=float).reshape(-1)
    if h.size != ambiguity.base.size:
        raise DimensionMismatch(f"{h.size} cost values for {ambiguity.base.size} support points")
    return h


def build_inner_primal(ambiguity: AmbiguitySet, h_values) -> ConicProgram:
    """Worst-case expectation as a conic program.

    The returned program minimises ``-sum_s H_s p_s``; its optimum is minus
    the worst-case expectation. Columns: the template triples, then one
    nonnegative slack for the KL budget row.
    """
    h = _check_h(ambiguity, h_values)
    eps = ambiguity.epsilon
    if eps <= 0:
        raise EpsilonNonpositive("the conic worst-case program needs epsilon > 0")
    q = ambiguity.base.probs
    S = q.size
    tpl = kl_epigraph_blocks(S)
    n = tpl.n_columns + 1

    rows, cols, vals = [], [], []
    # q_s pinned
    for s, j in enumerate(tpl.pin_columns):
        rows.append(s), cols.append(j), vals.append(1.0)
    # sum_s p_s = 1
    for j in tpl.p_columns:
        rows.append(S), cols.append(j), vals.append(1.0)
    # sum_s delta_s + slack = eps
    for j in np.flatnonzero(tpl.budget_row):
        rows.append(S + 1), cols.append(j), vals.append(tpl.budget_row[j])
    rows.append(S + 1), cols.append(n - 1), vals.append(1.0)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(S + 2, n))
    b = np.concatenate([q, [1.0, eps]])

    c = np.zeros(n)
    c[tpl.p_columns] = -h
    names = []
    for s in range(S):
        names += [f"q[{s}]", f"p[{s}]", f"neg_delta[{s}]"]
    names.append("budget_slack")
    return ConicProgram(c, A, b, list(tpl.cones) + [ConeBlock(ConeKind.NONNEG, 1)], names)


def build_inner_dual(ambiguity: AmbiguitySet, h_values) -> ConicProgram:
    """Conic dual of :func:`build_inner_primal`, in the robust-counterpart form.

    ``min alpha + eps*beta + sum_s q_s u_s`` subject to
    ``alpha - v_s >= H_s``, ``beta + w_s = 0``, ``beta >= 0`` and
    ``(u_s, v_s, w_s)`` in the dual exponential cone. Columns: alpha, beta,
    the S triples, then S slacks of the ``>=`` rows.
    """
    h = _check_h(ambiguity, h_values)
    eps = ambiguity.epsilon
    if eps <= 0:
        raise EpsilonNonpositive("the conic worst-case program needs epsilon > 0")
    q = ambiguity.base.probs
    S = q.size
    n = 2 + 3 * S + S
    rows, cols, vals = [], [], []
    for s in range(S):
        u, v, w = 2 + 3 * s, 3 + 3 * s, 4 + 3 * s
        slack = 2 + 3 * S + s
        # alpha - v_s - slack_s = H_s
        rows += [s, s, s]
        cols += [0, v, slack]
        vals += [1.0, -1.0, -1.0]
        # beta + w_s = 0
        rows += [S + s, S + s]
        cols += [1, w]
        vals += [1.0, 1.0]
    A = sp.csr_matrix((vals, (rows, cols)), shape=(2 * S, n))
    b = np.concatenate([h, np.zeros(S)])
    c = np.zeros(n)
    c[0] = 1.0
    c[1] = eps
    c[2:2 + 3 * S:3] = q
    cones = [ConeBlock(ConeKind.ZERO, 1), ConeBlock(ConeKind.NONNEG, 1)]
    cones += [ConeBlock(ConeKind.DUAL_EXP, 3) for _ in range(S)]
    cones.append(ConeBlock(ConeKind.NONNEG, S))
    names = ["alpha", "beta"]
    for s in range(S):
        names += [f"u[{s}]", f"v[{s}]", f"w[{s}]"]
    names += [f"piece_slack[{s}]" for s in range(S)]
    return ConicProgram(c, A, b, cones, names)


def _tilted(q, h, beta):
    """``p_beta ∝ q exp((H - max H)/beta)`` and ``log sum_s q_s exp((H_s - max H)/beta)``."""
    z = (h - h.max()) / beta
    w = q * np.exp(z)
    total = w.sum()
    return w / total, math.log(total)


def _worst_case_scalar_dual(q, h, eps):
    hmax = float(h.max())
    top = np.flatnonzero(h == hmax)
    if float(h.min()) == hmax:
        return hmax, q.copy()
    if eps >= max_kl(q):
        p = np.zeros_like(q)
        p[top[0]] = 1.0
        return hmax, p

    def stationarity(log_beta):
        p, _ = _tilted(q, h, math.exp(log_beta))
        return eps - kl_divergence(p, q)

    lo, hi = (math.log(v) for v in BETA_BRACKET)
    if stationarity(lo) >= 0:
        # the infimum sits at beta -> 0: mass on the maximisers of H
        p = np.zeros_like(q)
        p[top] = q[top] / q[top].sum()
        return hmax, p
    if stationarity(hi) <= 0:
        log_beta = hi
    else:
        log_beta = brentq(stationarity, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=500)
    beta = math.exp(log_beta)
    p, log_total = _tilted(q, h, beta)
    return hmax + beta * eps + beta * log_total, p


def worst_case_expectation(ambiguity: AmbiguitySet, h_values, method: str = "conic",
                           settings: SolverSettings | None = None) -> WorstCase:
    """Largest expectation of ``h_values`` over the ambiguity set.

    ``epsilon == 0`` returns the plain expectation under the base distribution
    for either method.
    """
    h = _check_h(ambiguity, h_values)
    q = ambiguity.base.probs
    eps = ambiguity.epsilon
    if eps == 0:
        return WorstCase(float(q @ h), q.copy())

    method = method.lower().replace("-", "_")
    if method in ("scalar_dual", "scalardual"):
        value, p = _worst_case_scalar_dual(q, h, eps)
        return WorstCase(float(value), p)
    if method != "conic":
        raise ValueError(f"unknown method {method!r}")

    prog = build_inner_primal(ambiguity, h)
    sol = solve(prog, settings)
    if not sol.optimal:
        raise RuntimeError(f"worst-case program ended with status {sol.status.value}")
    p = np.clip(sol.x[1:3 * q.size:3], 0.0, None)
    p = p / p.sum()
    return WorstCase(-sol.objective_value, p)
