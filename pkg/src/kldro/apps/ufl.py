"""Uncapacitated facility location with KL-ambiguous customer demand.

Each customer is served by its closest open facility, so for a fixed opening
pattern ``y`` the cost is ``f.y + sum_i d_i min{t_ij : y_j = 1}``. The min is
linearised exactly as ``max_l { t_l - sum_j y_j max(t_l - t_j, 0) }`` which
turns the recourse into a piecewise-max-affine function of ``y``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from ..cones import ConeBlock, ConeKind
from ..ipm import ConicProgram
from ..kl import AmbiguitySet, EmpiricalDistribution
from ..mip import MipSettings, MixedIntegerConicProgram, solve_mip
from ..robust import (
    FirstStageSpec,
    LinearConstraint,
    RobustCounterpart,
    SecondStageSpec,
    build_model,
)

__all__ = [
    "NoOpenFacility",
    "UflInstance",
    "closed_form_cost",
    "lemma1_linearization",
    "min_open_distance",
    "nearest_open_assignment",
    "opening_patterns",
    "build_ufl_deterministic",
    "ufl_specs",
    "build_ufl_dr",
    "solve_ufl",
    "build_line_ufl_instance",
    "LINE_CUSTOMER_LOCATIONS",
    "LINE_FACILITY_LOCATIONS",
    "LINE_FIXED_COSTS",
]


class NoOpenFacility(ValueError):
    pass


# 1/36 grid on the unit interval; kept as exact fractions
LINE_CUSTOMER_LOCATIONS = tuple(
    [Fraction(2 * h - 1, 36) for h in range(1, 7)] + [Fraction(35 - 2 * h, 36) for h in range(1, 7)]
)
LINE_FACILITY_LOCATIONS = tuple(Fraction(2 * k - 1, 6) for k in range(1, 4))
LINE_FIXED_COSTS = (10.0, 5.0, 10.0)


@dataclass
class UflInstance:
    f: np.ndarray
    t: np.ndarray
    demands: list = field(default_factory=list)
    epsilons: list = field(default_factory=list)
    customer_locations: tuple | None = None
    facility_locations: tuple | None = None
    constraints: tuple = ()

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float).reshape(-1)
        self.t = np.atleast_2d(np.asarray(self.t, dtype=float))
        if self.t.shape[1] != self.f.size:
            raise ValueError("t must have one column per facility")
        if np.any(self.f < 0) or np.any(self.t < 0):
            raise ValueError("costs must be nonnegative")
        if self.demands and len(self.demands) != self.m:
            raise ValueError("one demand distribution per customer")
        if self.epsilons and len(self.epsilons) != self.m:
            raise ValueError("one epsilon per customer")
        if any(e < 0 for e in self.epsilons):
            raise ValueError("epsilons must be nonnegative")

    @property
    def m(self) -> int:
        return self.t.shape[0]

    @property
    def n(self) -> int:
        return self.f.size

    def with_demands(self, demands, epsilons) -> "UflInstance":
        return UflInstance(self.f, self.t, list(demands), list(epsilons),
                           self.customer_locations, self.facility_locations, self.constraints)


def _check_open(y):
    y = np.asarray(y, dtype=float).reshape(-1)
    if not np.any(y > 0.5):
        raise NoOpenFacility("at least one facility must be open")
    return y


def lemma1_linearization(t_row, y) -> float:
    """``max_l [ t_l - sum_j y_j max(t_l - t_j, 0) ]``, equal to the closest open distance."""
    y = _check_open(y)
    # floats convert to fractions exactly, so t_l - (t_l - t_j) cannot pick up an ulp
    t = [Fraction(float(v)) for v in np.asarray(t_row, dtype=float)]
    open_ = [j for j, v in enumerate(y) if v > 0.5]
    z = [tl - sum(max(tl - t[j], 0) for j in open_) for tl in t]
    return float(max(z))


def min_open_distance(t, y) -> np.ndarray:
    y = _check_open(y)
    t = np.atleast_2d(np.asarray(t, dtype=float))
    return t[:, y > 0.5].min(axis=1)


def nearest_open_assignment(t, y) -> np.ndarray:
    """Closest open facility per customer, ties to the lowest index."""
    y = _check_open(y)
    t = np.atleast_2d(np.asarray(t, dtype=float))
    masked = np.where(y[None, :] > 0.5, t, np.inf)
    return np.argmin(masked, axis=1)


def closed_form_cost(f, t, d, y):
    """``f.y + sum_i d_i min{t_ij : y_j = 1}``; ``d`` may carry a leading batch axis."""
    y = _check_open(y)
    return float(np.dot(f, y)) + np.asarray(d, dtype=float) @ min_open_distance(t, y)


def opening_patterns(n: int):
    """All nonzero 0/1 vectors of length ``n`` in lexicographic order."""
    return [np.array(p, dtype=float) for p in itertools.product((0, 1), repeat=n) if any(p)]


def build_ufl_deterministic(f, t, d, binary_assignment: bool = True) -> MixedIntegerConicProgram:
    """Fixed-demand UFL MIP over ``x_ij`` (row major) then ``y_j``.

    Rows: ``sum_j x_ij = 1``, ``x_ij + s_ij = y_j``, ``sum_j y_j - s = 1``.
    """
    f = np.asarray(f, dtype=float)
    t = np.atleast_2d(np.asarray(t, dtype=float))
    d = np.asarray(d, dtype=float).reshape(-1)
    m, n = t.shape
    if f.size != n or d.size != m:
        raise ValueError("f, t and d dimensions disagree")
    nx = m * n
    ycol = nx + np.arange(n)
    scol = nx + n + np.arange(nx)
    last = nx + n + nx
    rows, cols, vals = [], [], []
    r = 0
    for i in range(m):
        for j in range(n):
            rows.append(r), cols.append(i * n + j), vals.append(1.0)
        r += 1
    for i in range(m):
        for j in range(n):
            k = i * n + j
            rows += [r, r, r]
            cols += [k, scol[k], ycol[j]]
            vals += [1.0, 1.0, -1.0]
            r += 1
    for j in range(n):
        rows.append(r), cols.append(ycol[j]), vals.append(1.0)
    rows.append(r), cols.append(last), vals.append(-1.0)
    r += 1
    A = sp.csr_matrix((vals, (rows, cols)), shape=(r, last + 1))
    b = np.concatenate([np.ones(m), np.zeros(nx), [1.0]])
    c = np.concatenate([(d[:, None] * t).ravel(), f, np.zeros(nx + 1)])
    names = [f"x[{i},{j}]" for i in range(m) for j in range(n)] + [f"y[{j}]" for j in range(n)]
    names += [f"slack[{k}]" for k in range(nx + 1)]
    prog = ConicProgram(c, A, b, [ConeBlock(ConeKind.NONNEG, last + 1)], names)
    ints = np.concatenate([np.arange(nx) if binary_assignment else [], ycol]).astype(int)
    return MixedIntegerConicProgram(prog, ints, np.zeros(ints.size), np.ones(ints.size))


def _ufl_pieces(t_row):
    gaps = np.maximum(t_row[:, None] - t_row[None, :], 0.0)

    def pieces(d):
        return -d * gaps, d * t_row

    return pieces


def ufl_specs(inst: UflInstance):
    if len(inst.demands) != inst.m or len(inst.epsilons) != inst.m:
        raise ValueError("attach one demand distribution and epsilon per customer first")
    first = FirstStageSpec(
        cost=inst.f,
        constraints=[LinearConstraint(np.ones(inst.n), ">=", 1.0)] + list(inst.constraints),
        integer=np.ones(inst.n, bool),
        lower=np.zeros(inst.n),
        upper=np.ones(inst.n),
        names=[f"y[{j}]" for j in range(inst.n)],
    )
    seconds = [
        (SecondStageSpec(dist, _ufl_pieces(inst.t[i]), label=f"customer {i}"), AmbiguitySet(dist, eps))
        for i, (dist, eps) in enumerate(zip(inst.demands, inst.epsilons))
    ]
    return first, seconds


def build_ufl_dr(inst: UflInstance) -> RobustCounterpart:
    """Robust counterpart without assignment variables; zero epsilons become expectations."""
    first, seconds = ufl_specs(inst)
    return build_model(first, seconds)


def solve_ufl(inst: UflInstance, settings: MipSettings | None = None):
    """Return ``(y*, optimal value, MipSolution)``."""
    rc = build_ufl_dr(inst)
    sol = solve_mip(rc.program, settings)
    if not sol.optimal:
        raise RuntimeError(f"facility location model ended with status {sol.status.value}")
    return np.round(sol.x[rc.y]).astype(int), sol.objective_value, sol


def build_line_ufl_instance() -> UflInstance:
    """Twelve customers and three candidate sites on the unit interval; demands attached later."""
    t = np.array([[float(abs(a - b)) for b in LINE_FACILITY_LOCATIONS] for a in LINE_CUSTOMER_LOCATIONS])
    return UflInstance(np.array(LINE_FIXED_COSTS), t,
                       customer_locations=LINE_CUSTOMER_LOCATIONS,
                       facility_locations=LINE_FACILITY_LOCATIONS)
