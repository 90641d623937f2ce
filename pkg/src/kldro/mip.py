"""Branch-and-bound over continuous conic relaxations.

Integer variables carry finite bounds; a node is the base program plus bound
rows for every integer variable. Nodes are processed best-first by their
parent's relaxation value, branching on the most fractional variable (lowest
index on ties). A relaxation that stalls (NumericalFailure or IterLimit) is
still used when every residual of its last iterate is below
``MipSettings.inexact_tol``; otherwise the node is pruned with a warning.
Stalls are common for very small KL radii, where the exponential cones sit
close to their boundary at the optimum.
"""
from __future__ import annotations

import enum
import heapq
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cones import ConeBlock, ConeKind
from .ipm import ConicProgram, SolverSettings, SolveStatus, solve

logger = logging.getLogger(__name__)

__all__ = [
    "MixedIntegerConicProgram",
    "MipSettings",
    "MipStatus",
    "MipSolution",
    "solve_mip",
    "solve_by_enumeration",
    "box_candidates",
    "node_program",
]


class MipStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    NODE_LIMIT = "NodeLimit"


@dataclass
class MixedIntegerConicProgram:
    base: ConicProgram
    integer_vars: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.integer_vars = np.asarray(self.integer_vars, dtype=int).reshape(-1)
        self.lower = np.asarray(self.lower, dtype=float).reshape(-1)
        self.upper = np.asarray(self.upper, dtype=float).reshape(-1)
        k = self.integer_vars.size
        if self.lower.size != k or self.upper.size != k:
            raise ValueError("one (lower, upper) pair per integer variable")
        if np.unique(self.integer_vars).size != k:
            raise ValueError("integer variable indices repeat")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ValueError("integer variables need finite bounds")
        if np.any(self.lower != np.round(self.lower)) or np.any(self.upper != np.round(self.upper)):
            raise ValueError("integer bounds must be integers")
        kinds = np.empty(self.base.n, dtype=object)
        for blk, sl in self.base.block_slices():
            kinds[sl] = blk.kind
        for j in self.integer_vars:
            if not 0 <= j < self.base.n:
                raise ValueError(f"integer index {j} out of range")
            if kinds[j] not in (ConeKind.NONNEG, ConeKind.ZERO):
                raise ValueError(f"integer variable {j} sits in a {kinds[j].value} block")
        self._kinds = kinds

    def block_kind(self, j: int) -> ConeKind:
        return self._kinds[j]


@dataclass
class MipSettings:
    gap_tol: float = 1e-6
    node_limit: int = 10_000
    int_tol: float = 1e-6
    # accept stalled relaxations whose residuals are all below this (None: never)
    inexact_tol: float | None = 1e-4
    solver: SolverSettings = field(default_factory=SolverSettings)


@dataclass
class MipSolution:
    status: MipStatus
    x: np.ndarray | None
    objective_value: float
    nodes_explored: int
    best_bound: float
    # (node id, node relaxation bound, incumbent value when the node was solved)
    node_log: list = field(default_factory=list, repr=False)
    relaxation_failures: int = 0
    inexact_nodes: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is MipStatus.OPTIMAL


def node_program(mip: MixedIntegerConicProgram, lower, upper) -> ConicProgram:
    """Base program with rows enforcing ``lower <= x_j <= upper`` on integer variables."""
    base = mip.base
    rows, cols, vals, rhs = [], [], [], []
    slack_cols = 0
    r = 0
    for j, lo, hi in zip(mip.integer_vars, lower, upper):
        if lo == hi:
            rows.append(r), cols.append(j), vals.append(1.0), rhs.append(lo)
            r += 1
            continue
        if lo > 0 or mip.block_kind(j) is ConeKind.ZERO:
            # x_j - t = lo
            rows += [r, r]
            cols += [j, base.n + slack_cols]
            vals += [1.0, -1.0]
            rhs.append(lo)
            slack_cols += 1
            r += 1
        # x_j + t = hi
        rows += [r, r]
        cols += [j, base.n + slack_cols]
        vals += [1.0, 1.0]
        rhs.append(hi)
        slack_cols += 1
        r += 1
    if r == 0:
        return base
    B = sp.csr_matrix((vals, (rows, cols)), shape=(r, base.n + slack_cols))
    A = sp.vstack([sp.hstack([base.A, sp.csr_matrix((base.m, slack_cols))]), B]).tocsr()
    c = np.concatenate([base.c, np.zeros(slack_cols)])
    b = np.concatenate([base.b, rhs])
    cones = list(base.cones)
    if slack_cols:
        cones.append(ConeBlock(ConeKind.NONNEG, slack_cols))
    names = None
    if base.variable_names is not None:
        names = list(base.variable_names) + [f"bound_slack[{k}]" for k in range(slack_cols)]
    return ConicProgram(c, A, b, cones, names)


def _solve_node(mip, lower, upper, settings: MipSettings):
    """Solve a node relaxation. Returns ``(solution, bound, exact)``.

    ``bound`` is None when the relaxation is infeasible or unusable. For a
    stalled solve that passes ``inexact_tol`` it is the smaller of the primal
    and dual objectives of the last iterate.
    """
    prog = node_program(mip, lower, upper)
    sol = solve(prog, settings.solver)
    if sol.status is SolveStatus.DUAL_INFEASIBLE:
        raise ValueError("continuous relaxation is unbounded")
    if sol.optimal:
        return sol, sol.objective_value, True
    if sol.status in (SolveStatus.NUMERICAL_FAILURE, SolveStatus.ITER_LIMIT) \
            and settings.inexact_tol is not None \
            and max(sol.residuals.values()) <= settings.inexact_tol:
        pobj, dobj = float(prog.c @ sol.x), float(prog.b @ sol.y)
        if math.isfinite(pobj) and math.isfinite(dobj):
            return sol, min(pobj, dobj), False
    return sol, None, False


def _fixed_solution(mip, values, settings, fallback=None):
    """Re-solve with integer variables pinned to ``values``.

    ``fallback`` is an exact ``(x, value)`` already known for this point (an
    integral node relaxation); it wins over a stalled re-solve.
    """
    sol, bound, exact = _solve_node(mip, values, values, settings)
    if bound is None or (not exact and fallback is not None):
        return fallback
    x = sol.x[:mip.base.n].copy()
    x[mip.integer_vars] = values
    value = sol.objective_value if exact else float(mip.base.c @ x)
    return x, value


def solve_mip(mip: MixedIntegerConicProgram, settings: MipSettings | None = None) -> MipSolution:
    settings = settings or MipSettings()
    counter = itertools.count()
    root_id = next(counter)
    heap = [(-math.inf, root_id, mip.lower.copy(), mip.upper.copy())]
    incumbent_x = None
    incumbent = math.inf
    explored = 0
    failures = 0
    inexact = 0
    # lowest parent bound among nodes dropped after a failed relaxation
    lost_bound = math.inf
    node_log = []
    best_bound = -math.inf
    root_infeasible = False

    while heap:
        bound, node_id, lo, hi = heapq.heappop(heap)
        if bound >= incumbent - settings.gap_tol:
            best_bound = min(bound, incumbent)
            heap.clear()
            break
        if explored >= settings.node_limit:
            heapq.heappush(heap, (bound, node_id, lo, hi))
            break
        explored += 1
        sol, value, exact = _solve_node(mip, lo, hi, settings)
        if sol.status is SolveStatus.PRIMAL_INFEASIBLE:
            if node_id == root_id:
                root_infeasible = True
            continue
        if value is None:
            failures += 1
            lost_bound = min(lost_bound, bound)
            logger.warning("node %d relaxation ended with %s; pruned", node_id, sol.status.value)
            continue
        if not exact:
            inexact += 1
            logger.info("node %d relaxation stalled (%s) within inexact_tol; kept",
                        node_id, sol.status.value)
        node_log.append((node_id, value, incumbent))
        if value >= incumbent - settings.gap_tol:
            continue

        xi = sol.x[mip.integer_vars]
        frac = np.abs(xi - np.round(xi))
        if np.all(frac <= settings.int_tol):
            known = None
            if exact:
                known = sol.x[:mip.base.n].copy()
                known[mip.integer_vars] = np.round(xi)
                known = (known, value)
            fixed = _fixed_solution(mip, np.round(xi), settings, known)
            if fixed is not None and fixed[1] < incumbent:
                incumbent_x, incumbent = fixed
            continue

        # most fractional; argmax returns the lowest index on ties
        score = np.where(frac > settings.int_tol, 0.5 - np.abs(frac - 0.5), -1.0)
        k = int(np.argmax(score))
        v = xi[k]
        down_hi = hi.copy()
        down_hi[k] = math.floor(v)
        up_lo = lo.copy()
        up_lo[k] = math.ceil(v)
        if down_hi[k] >= lo[k]:
            heapq.heappush(heap, (value, next(counter), lo.copy(), down_hi))
        if up_lo[k] <= hi[k]:
            heapq.heappush(heap, (value, next(counter), up_lo, hi.copy()))
    else:
        best_bound = incumbent

    if heap:
        best_bound = min(b for b, *_ in heap)
        best_bound = min(best_bound, incumbent)
        status = MipStatus.NODE_LIMIT
    elif incumbent_x is None:
        status = MipStatus.INFEASIBLE
        if root_infeasible:
            logger.debug("root relaxation infeasible")
    else:
        status = MipStatus.OPTIMAL
    # a pruned failure leaves its subtree unexplored: the bound must say so
    best_bound = min(best_bound, lost_bound)
    return MipSolution(status, incumbent_x, incumbent, explored, best_bound, node_log, failures, inexact)


def box_candidates(mip: MixedIntegerConicProgram):
    """Every integer point of the bound box (use only for small boxes)."""
    ranges = [range(int(lo), int(hi) + 1) for lo, hi in zip(mip.lower, mip.upper)]
    return [np.array(v, dtype=float) for v in itertools.product(*ranges)]


def solve_by_enumeration(mip: MixedIntegerConicProgram, candidate_set,
                         settings: MipSettings | None = None) -> MipSolution:
    """Fix the integer variables to each candidate in turn and keep the best."""
    settings = settings or MipSettings()
    best_x, best = None, math.inf
    count = 0
    for cand in candidate_set:
        cand = np.asarray(cand, dtype=float).reshape(-1)
        if cand.size != mip.integer_vars.size:
            raise ValueError("candidate does not match the integer variables")
        count += 1
        fixed = _fixed_solution(mip, cand, settings)
        if fixed is not None and fixed[1] < best:
            best_x, best = fixed
    status = MipStatus.OPTIMAL if best_x is not None else MipStatus.INFEASIBLE
    return MipSolution(status, best_x, best, count, best)
