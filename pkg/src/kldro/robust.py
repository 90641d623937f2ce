"""Robust counterpart of a two-stage problem with KL ambiguity sets.

The model is

    min_{y in Y}  h'y + sum_i  max_{p^i : KL(p^i || q^i) <= eps^i}  E_{p^i}[ H^i(y, xi^i) ]

with ``H^i(y, d) = max_l { a_l(d) . y + b_l(d) }``. Dualising every inner
maximisation gives the single minimisation

    min  h'y + sum_i [ alpha^i + eps^i beta^i + sum_s q^i_s u^i_s ]
    s.t. alpha^i - v^i_s >= a_l(d^i_s) . y + b_l(d^i_s)     for all i, s, l
         beta^i + w^i_s = 0                                  for all i, s
         beta^i >= 0,  (u^i_s, v^i_s, w^i_s) in K_exp*,  y in Y

Blocks with ``eps^i = 0`` have the singleton ambiguity set ``{q^i}``; they are
written as a plain expectation ``sum_s q_s z_s`` with ``z_s >= pieces``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .cones import ConeBlock, ConeKind
from .interchange import read_program, write_program
from .ipm import ConicProgram, SolverSettings
from .kl import AmbiguitySet, EmpiricalDistribution, EpsilonNonpositive, worst_case_expectation
from .mip import MixedIntegerConicProgram

__all__ = [
    "LinearConstraint",
    "FirstStageSpec",
    "SecondStageSpec",
    "RobustCounterpart",
    "EmptyPieces",
    "build_robust_counterpart",
    "build_sp_counterpart",
    "build_model",
    "evaluate_true_objective",
    "save_counterpart",
    "load_counterpart",
]


class EmptyPieces(ValueError):
    pass


@dataclass(frozen=True)
class LinearConstraint:
    coeffs: tuple
    sense: str
    rhs: float

    def __post_init__(self):
        if self.sense not in ("<=", ">=", "=="):
            raise ValueError(f"unknown constraint sense {self.sense!r}")
        object.__setattr__(self, "coeffs", tuple(float(v) for v in self.coeffs))


@dataclass
class FirstStageSpec:
    """Linear first-stage cost ``h(y) = cost . y`` over ``Y``.

    ``Y`` is given by ``constraints`` plus per-variable bounds; ``integer``
    marks the variables restricted to integers (their bounds must be finite).
    """

    cost: np.ndarray
    constraints: list = field(default_factory=list)
    integer: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    names: list | None = None

    def __post_init__(self):
        self.cost = np.asarray(self.cost, dtype=float).reshape(-1)
        n = self.cost.size
        self.integer = np.zeros(n, bool) if self.integer is None else np.asarray(self.integer, bool)
        self.lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float)
        if not (self.integer.size == self.lower.size == self.upper.size == n):
            raise ValueError("integer/lower/upper must match the cost vector")
        for con in self.constraints:
            if len(con.coeffs) != n:
                raise ValueError("constraint references undeclared first-stage variables")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound above upper bound")
        if self.names is None:
            self.names = [f"y[{j}]" for j in range(n)]

    @property
    def n(self) -> int:
        return self.cost.size

    def is_feasible(self, y, tol: float = 1e-9) -> bool:
        y = np.asarray(y, dtype=float)
        if np.any(y < self.lower - tol) or np.any(y > self.upper + tol):
            return False
        if np.any(np.abs(y[self.integer] - np.round(y[self.integer])) > tol):
            return False
        for con in self.constraints:
            lhs = float(np.dot(con.coeffs, y))
            if con.sense == "<=" and lhs > con.rhs + tol:
                return False
            if con.sense == ">=" and lhs < con.rhs - tol:
                return False
            if con.sense == "==" and abs(lhs - con.rhs) > tol:
                return False
        return True


PieceFn = Callable[[float], "tuple[np.ndarray, np.ndarray]"]


@dataclass
class SecondStageSpec:
    """Piecewise-max-affine recourse ``H(y, d) = max_l (coef_l(d) . y + intercept_l(d))``.

    ``pieces(d)`` returns ``(coef, intercept)`` with shapes (L, n_y) and (L,).
    """

    distribution: EmpiricalDistribution
    pieces: PieceFn
    label: str = ""

    def piece_table(self, d: float):
        coef, intercept = self.pieces(float(d))
        coef = np.atleast_2d(np.asarray(coef, dtype=float))
        intercept = np.asarray(intercept, dtype=float).reshape(-1)
        if intercept.size == 0:
            raise EmptyPieces("second-stage cost needs at least one affine piece")
        if coef.shape[0] != intercept.size:
            raise ValueError("coefficient rows and intercepts differ in number")
        return coef, intercept

    def evaluate(self, y, d: float) -> float:
        coef, intercept = self.piece_table(d)
        return float(np.max(coef @ np.asarray(y, dtype=float) + intercept))

    def values(self, y) -> np.ndarray:
        """``H(y, d_s)`` for every support point."""
        return np.array([self.evaluate(y, d) for d in self.distribution.support])


@dataclass
class RobustCounterpart:
    """Assembled model with column maps.

    ``alpha``/``beta`` hold -1 for expectation (eps = 0) blocks; those blocks
    use ``z[i]`` columns instead of ``triples[i]``.
    """

    program: MixedIntegerConicProgram
    y: np.ndarray
    alpha: list
    beta: list
    triples: list
    z: list
    piece_slacks: np.ndarray
    constraint_slacks: np.ndarray
    piece_rows: int
    link_rows: int
    epsilons: list

    @property
    def conic(self) -> ConicProgram:
        return self.program.base

    @property
    def is_stochastic(self) -> bool:
        return all(e == 0 for e in self.epsilons)

    def index_map(self) -> dict:
        return {
            "y": self.y.tolist(),
            "alpha": list(self.alpha),
            "beta": list(self.beta),
            "triples": [t.tolist() for t in self.triples],
            "z": [z.tolist() for z in self.z],
            "piece_slacks": self.piece_slacks.tolist(),
            "constraint_slacks": self.constraint_slacks.tolist(),
            "piece_rows": self.piece_rows,
            "link_rows": self.link_rows,
            "epsilons": list(self.epsilons),
            "integer_vars": self.program.integer_vars.tolist(),
            "lower": self.program.lower.tolist(),
            "upper": self.program.upper.tolist(),
        }


def _check_pairs(seconds):
    pairs = []
    for spec, amb in seconds:
        if not isinstance(amb, AmbiguitySet):
            amb = AmbiguitySet(spec.distribution, float(amb))
        if amb.base is not spec.distribution and not (
            np.array_equal(amb.base.support, spec.distribution.support)
            and np.array_equal(amb.base.probs, spec.distribution.probs)
        ):
            raise ValueError("ambiguity set must be centred on the second-stage distribution")
        pairs.append((spec, amb))
    if not pairs:
        raise ValueError("need at least one second-stage block")
    return pairs


def build_model(first: FirstStageSpec, seconds: Sequence) -> RobustCounterpart:
    """Robust counterpart, routing blocks with ``eps = 0`` to expectation form."""
    pairs = _check_pairs(seconds)
    ny = first.n
    m_blocks = len(pairs)
    eps = [amb.epsilon for _, amb in pairs]
    robust = [e > 0 for e in eps]

    # column layout: y | alpha, beta per robust block | z per SP block | triples | slacks
    col = ny
    alpha, beta = [], []
    for i in range(m_blocks):
        if robust[i]:
            alpha.append(col)
            beta.append(col + 1)
            col += 2
        else:
            alpha.append(-1)
            beta.append(-1)
    z = []
    for i, (spec, _) in enumerate(pairs):
        S = spec.distribution.size
        if robust[i]:
            z.append(np.array([], dtype=int))
        else:
            z.append(np.arange(col, col + S))
            col += S
    triples = []
    for i, (spec, _) in enumerate(pairs):
        S = spec.distribution.size
        if robust[i]:
            triples.append(np.arange(col, col + 3 * S).reshape(S, 3))
            col += 3 * S
        else:
            triples.append(np.zeros((0, 3), dtype=int))

    rows, cols, vals, rhs = [], [], [], []
    r = 0
    slack_start = col
    n_slack = 0

    def add_slack(row, sign):
        nonlocal n_slack
        rows.append(row), cols.append(slack_start + n_slack), vals.append(sign)
        n_slack += 1
        return slack_start + n_slack - 1

    piece_slacks = []
    for i, (spec, _) in enumerate(pairs):
        for s, d in enumerate(spec.distribution.support):
            coef, intercept = spec.piece_table(d)
            if coef.shape[1] != ny:
                raise ValueError("piece coefficients must cover every first-stage variable")
            for a_l, b_l in zip(coef, intercept):
                # alpha - v_s - a_l.y - slack = b_l   (or z_s - a_l.y - slack = b_l)
                if robust[i]:
                    rows += [r, r]
                    cols += [alpha[i], triples[i][s, 1]]
                    vals += [1.0, -1.0]
                else:
                    rows.append(r), cols.append(z[i][s]), vals.append(1.0)
                for j in np.flatnonzero(a_l):
                    rows.append(r), cols.append(j), vals.append(-a_l[j])
                piece_slacks.append(add_slack(r, -1.0))
                rhs.append(b_l)
                r += 1
    piece_rows = r

    for i, (spec, _) in enumerate(pairs):
        if not robust[i]:
            continue
        for s in range(spec.distribution.size):
            rows += [r, r]
            cols += [beta[i], triples[i][s, 2]]
            vals += [1.0, 1.0]
            rhs.append(0.0)
            r += 1
    link_rows = r - piece_rows

    constraint_slacks = []
    for con in first.constraints:
        for j in np.flatnonzero(con.coeffs):
            rows.append(r), cols.append(j), vals.append(con.coeffs[j])
        if con.sense == "<=":
            constraint_slacks.append(add_slack(r, 1.0))
        elif con.sense == ">=":
            constraint_slacks.append(add_slack(r, -1.0))
        rhs.append(con.rhs)
        r += 1

    # bounds on continuous first-stage variables become rows; integer bounds live in the MIP
    y_free = first.lower < 0
    for j in range(ny):
        if first.integer[j]:
            continue
        if y_free[j] and math.isfinite(first.lower[j]):
            rows.append(r), cols.append(j), vals.append(1.0)
            constraint_slacks.append(add_slack(r, -1.0))
            rhs.append(first.lower[j])
            r += 1
        elif first.lower[j] > 0:
            rows.append(r), cols.append(j), vals.append(1.0)
            constraint_slacks.append(add_slack(r, -1.0))
            rhs.append(first.lower[j])
            r += 1
        if math.isfinite(first.upper[j]):
            rows.append(r), cols.append(j), vals.append(1.0)
            constraint_slacks.append(add_slack(r, 1.0))
            rhs.append(first.upper[j])
            r += 1

    n = slack_start + n_slack
    A = sp.csr_matrix((vals, (rows, cols)), shape=(r, n))
    c = np.zeros(n)
    c[:ny] = first.cost
    for i, (spec, amb) in enumerate(pairs):
        q = spec.distribution.probs
        if robust[i]:
            c[alpha[i]] = 1.0
            c[beta[i]] = amb.epsilon
            c[triples[i][:, 0]] = q
        else:
            c[z[i]] = q

    cones = [ConeBlock(ConeKind.ZERO if y_free[j] else ConeKind.NONNEG, 1) for j in range(ny)]
    names = list(first.names)
    for i in range(m_blocks):
        if robust[i]:
            cones += [ConeBlock(ConeKind.ZERO, 1), ConeBlock(ConeKind.NONNEG, 1)]
            names += [f"alpha[{i}]", f"beta[{i}]"]
    for i in range(m_blocks):
        if len(z[i]):
            cones.append(ConeBlock(ConeKind.ZERO, len(z[i])))
            names += [f"z[{i},{s}]" for s in range(len(z[i]))]
    for i in range(m_blocks):
        for s in range(len(triples[i])):
            cones.append(ConeBlock(ConeKind.DUAL_EXP, 3))
            names += [f"u[{i},{s}]", f"v[{i},{s}]", f"w[{i},{s}]"]
    if n_slack:
        cones.append(ConeBlock(ConeKind.NONNEG, n_slack))
        names += [f"slack[{k}]" for k in range(n_slack)]

    prog = ConicProgram(c, A, np.array(rhs, dtype=float), cones, names)
    ints = np.flatnonzero(first.integer)
    mip = MixedIntegerConicProgram(prog, ints, first.lower[ints], first.upper[ints])
    return RobustCounterpart(
        program=mip,
        y=np.arange(ny),
        alpha=alpha,
        beta=beta,
        triples=triples,
        z=z,
        piece_slacks=np.array(piece_slacks, dtype=int),
        constraint_slacks=np.array(constraint_slacks, dtype=int),
        piece_rows=piece_rows,
        link_rows=link_rows,
        epsilons=eps,
    )


def build_robust_counterpart(first: FirstStageSpec, seconds: Sequence) -> RobustCounterpart:
    """Dual-exponential-cone counterpart; every block needs ``eps > 0``."""
    pairs = _check_pairs(seconds)
    for _, amb in pairs:
        if amb.epsilon <= 0:
            raise EpsilonNonpositive("robust counterpart requires epsilon > 0 in every block")
    return build_model(first, pairs)


def build_sp_counterpart(first: FirstStageSpec, seconds: Sequence) -> RobustCounterpart:
    """Sample-average model: every block evaluated under its base distribution."""
    pairs = [(spec, AmbiguitySet(spec.distribution, 0.0)) for spec, _ in _check_pairs(seconds)]
    return build_model(first, pairs)


def evaluate_true_objective(first: FirstStageSpec, seconds: Sequence, y,
                            method: str = "conic", settings: SolverSettings | None = None) -> float:
    """``h(y)`` plus the worst-case expected recourse of every block, evaluated directly."""
    y = np.asarray(y, dtype=float)
    total = float(first.cost @ y)
    for spec, amb in _check_pairs(seconds):
        total += worst_case_expectation(amb, spec.values(y), method=method, settings=settings).value
    return total


def save_counterpart(rc: RobustCounterpart, path) -> tuple:
    """Write the conic program and a JSON sidecar with the column maps."""
    from pathlib import Path

    path = Path(path)
    write_program(rc.conic, path)
    sidecar = path.with_suffix(path.suffix + ".index.json")
    sidecar.write_text(json.dumps(rc.index_map(), indent=1, sort_keys=True) + "\n")
    return path, sidecar


def load_counterpart(path) -> RobustCounterpart:
    from pathlib import Path

    path = Path(path)
    prog = read_program(path)
    meta = json.loads(path.with_suffix(path.suffix + ".index.json").read_text())
    mip = MixedIntegerConicProgram(prog, meta["integer_vars"], meta["lower"], meta["upper"])
    return RobustCounterpart(
        program=mip,
        y=np.array(meta["y"], dtype=int),
        alpha=meta["alpha"],
        beta=meta["beta"],
        triples=[np.array(t, dtype=int).reshape(-1, 3) for t in meta["triples"]],
        z=[np.array(z, dtype=int) for z in meta["z"]],
        piece_slacks=np.array(meta["piece_slacks"], dtype=int),
        constraint_slacks=np.array(meta["constraint_slacks"], dtype=int),
        piece_rows=meta["piece_rows"],
        link_rows=meta["link_rows"],
        epsilons=meta["epsilons"],
    )
