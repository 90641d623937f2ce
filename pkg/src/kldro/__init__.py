"""Distributionally robust optimisation over KL-divergence ambiguity sets.

The robust counterpart of a two-stage problem whose distributions are only
known to lie within a KL ball around an empirical distribution is a mixed
integer program over dual exponential cones. This package contains the pieces
needed to build and solve it without a commercial solver: cone primitives, an
interior-point method for exponential-cone programs, branch and bound, the
KL worst-case machinery, application builders and an experiment harness.
"""
from .cones import ConeBlock, ConeKind
from .ipm import ConicProgram, Solution, SolverSettings, SolveStatus, solve
from .kl import AmbiguitySet, EmpiricalDistribution, kl_divergence, max_kl, worst_case_expectation
from .mip import MipSettings, MipStatus, MixedIntegerConicProgram, solve_by_enumeration, solve_mip
from .robust import (
    FirstStageSpec,
    LinearConstraint,
    RobustCounterpart,
    SecondStageSpec,
    build_model,
    build_robust_counterpart,
    build_sp_counterpart,
    evaluate_true_objective,
)

__version__ = "0.1.0"

__all__ = [
    "ConeBlock",
    "ConeKind",
    "ConicProgram",
    "Solution",
    "SolverSettings",
    "SolveStatus",
    "solve",
    "AmbiguitySet",
    "EmpiricalDistribution",
    "kl_divergence",
    "max_kl",
    "worst_case_expectation",
    "MipSettings",
    "MipStatus",
    "MixedIntegerConicProgram",
    "solve_by_enumeration",
    "solve_mip",
    "FirstStageSpec",
    "LinearConstraint",
    "RobustCounterpart",
    "SecondStageSpec",
    "build_model",
    "build_robust_counterpart",
    "build_sp_counterpart",
    "evaluate_true_objective",
]
