"""Distributionally robust newsvendor.

Order ``y`` units at unit cost ``c`` before demand ``d`` is revealed; the
recourse cost is ``H(y, d) = max(c_b (d - y), c_h (y - d))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..kl import AmbiguitySet, EmpiricalDistribution
from ..mip import MipSettings, solve_mip
from ..robust import FirstStageSpec, RobustCounterpart, SecondStageSpec, build_model

__all__ = [
    "NewsvendorInstance",
    "newsvendor_pieces",
    "recourse_cost",
    "realized_cost",
    "build_newsvendor_dr",
    "newsvendor_specs",
    "critical_ratio_solution",
    "solve_newsvendor",
]


@dataclass(frozen=True)
class NewsvendorInstance:
    c: float
    c_b: float
    c_h: float
    demand: EmpiricalDistribution
    epsilon: float = 0.0
    constraints: tuple = ()

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("unit cost c must be positive")
        if not self.c_b > self.c:
            raise ValueError("back-order penalty must exceed the unit cost")
        if not self.c_h > 0:
            raise ValueError("holding cost must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")

    @property
    def order_cap(self) -> int:
        # ordering beyond the largest demand only adds cost
        return int(math.ceil(np.max(self.demand.support)))


def newsvendor_pieces(c_b: float, c_h: float):
    coef = np.array([[-c_b], [c_h]], dtype=float)

    def pieces(d):
        return coef, np.array([c_b * d, -c_h * d])

    return pieces


def recourse_cost(y, d, c_b: float, c_h: float):
    d = np.asarray(d, dtype=float)
    return c_b * np.maximum(d - y, 0.0) + c_h * np.maximum(y - d, 0.0)


def realized_cost(inst: NewsvendorInstance, y, d):
    """Out-of-sample cost ``c y + H(y, d)`` (vectorised over ``d``)."""
    return inst.c * y + recourse_cost(y, d, inst.c_b, inst.c_h)


def newsvendor_specs(inst: NewsvendorInstance):
    first = FirstStageSpec(cost=[inst.c], integer=[True], lower=[0.0],
                           upper=[float(inst.order_cap)], names=["y"],
                           constraints=list(inst.constraints))
    second = SecondStageSpec(inst.demand, newsvendor_pieces(inst.c_b, inst.c_h), label="demand")
    return first, [(second, AmbiguitySet(inst.demand, inst.epsilon))]


def build_newsvendor_dr(inst: NewsvendorInstance) -> RobustCounterpart:
    """Dual-exponential-cone MIP for the instance; ``epsilon == 0`` gives the SAA model."""
    first, seconds = newsvendor_specs(inst)
    return build_model(first, seconds)


def critical_ratio_solution(inst: NewsvendorInstance) -> int:
    """Smallest integer ``y`` whose empirical CDF reaches ``(c_b - c) / (c_b + c_h)``.

    This is the SAA optimum; the cost is piecewise linear in ``y`` with breaks
    at the support points, so checking integers up to the cap is exact.
    """
    ratio = (inst.c_b - inst.c) / (inst.c_b + inst.c_h)
    support, probs = inst.demand.support, inst.demand.probs
    for y in range(0, inst.order_cap + 1):
        # a tiny slack absorbs rounding in the cumulative sum
        if probs[support <= y].sum() >= ratio - 1e-12:
            return y
    return inst.order_cap


def solve_newsvendor(inst: NewsvendorInstance, settings: MipSettings | None = None):
    """Return ``(y*, optimal value, MipSolution)``."""
    rc = build_newsvendor_dr(inst)
    sol = solve_mip(rc.program, settings)
    if not sol.optimal:
        raise RuntimeError(f"newsvendor model ended with status {sol.status.value}")
    return int(round(sol.x[rc.y[0]])), sol.objective_value, sol
