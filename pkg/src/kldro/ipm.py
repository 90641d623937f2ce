"""Primal-dual interior-point solver for conic programs in standard form.

The program is

    minimize    c'x
    subject to  A x = b,  x in K_1 x ... x K_p

with cone blocks of kind ZERO (unrestricted), NONNEG, EXP or DUAL_EXP. The
dual is ``maximize b'y  s.t.  c - A'y = s in K*``.

The method works on the homogeneous self-dual embedding

    A x - b tau             = 0
    -A'y + c tau - s        = 0
    b'y - c'x - kappa       = 0,      x in K, s in K*, tau, kappa >= 0

and follows the central path ``s = -mu grad F(x)``, ``kappa = mu / tau``
using only the primal barrier ``F``: each iteration takes a predictor step
inside a neighbourhood of the path and then a few centering (corrector)
steps. Infeasibility shows up as ``tau -> 0`` and is reported together with
a Farkas-type certificate.

DUAL_EXP blocks are rewritten as EXP blocks through the linear map in
:mod:`kldro.cones` before the iteration starts.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .cones import (
    DUAL_TO_PRIMAL,
    EXP_CENTRAL_POINT,
    PRIMAL_TO_DUAL,
    ConeBlock,
    ConeKind,
    NotInterior,
    block_contains,
    dual_kind,
    exp_barrier_batch,
)

logger = logging.getLogger(__name__)

__all__ = [
    "ConicProgram",
    "SolverSettings",
    "SolveStatus",
    "Solution",
    "DualPairCheck",
    "solve",
    "dual_program",
    "solve_dual_pair_check",
    "certificate_violations",
]


class SolveStatus(enum.Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    ITER_LIMIT = "IterLimit"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass
class ConicProgram:
    """``min c'x  s.t.  A x = b``, with ``cones`` partitioning the columns of ``A``."""

    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    cones: list
    variable_names: list | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.A = sp.csr_matrix(self.A, dtype=float)
        self.cones = [blk if isinstance(blk, ConeBlock) else ConeBlock(*blk) for blk in self.cones]
        m, n = self.A.shape
        if self.c.size != n:
            raise ValueError(f"objective has {self.c.size} entries, A has {n} columns")
        if self.b.size != m:
            raise ValueError(f"rhs has {self.b.size} entries, A has {m} rows")
        if sum(blk.dim for blk in self.cones) != n:
            raise ValueError("cone dimensions must sum to the number of variables")
        if self.variable_names is not None and len(self.variable_names) != n:
            raise ValueError("variable_names must label every variable")

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def block_slices(self):
        """Yield ``(block, slice)`` pairs in column order."""
        start = 0
        for blk in self.cones:
            yield blk, slice(start, start + blk.dim)
            start += blk.dim

    def count(self, kind: ConeKind) -> int:
        return sum(1 for blk in self.cones if blk.kind is kind)


@dataclass
class SolverSettings:
    tol: float = 1e-8
    max_iter: int = 200
    step_fraction: float = 0.98
    regularization: float = 1e-9
    # neighbourhood radii of the central path (scaled dual norm of s + mu*g)
    predictor_radius: float = 0.9
    corrector_radius: float = 0.5
    max_corrector: int = 4
    equilibrate: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class Solution:
    status: SolveStatus
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    objective_value: float
    primal_feas: float
    dual_feas: float
    gap: float
    iterations: int
    # |b'y - c'x - kappa| of the embedding at every iterate
    trace: list = field(default_factory=list, repr=False)

    @property
    def residuals(self) -> dict:
        return {"primal_feas": self.primal_feas, "dual_feas": self.dual_feas, "gap": self.gap}

    @property
    def optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


@dataclass
class DualPairCheck:
    primal_value: float
    dual_value: float
    gap: float
    primal: Solution = field(repr=False)
    dual: Solution = field(repr=False)


# ---------------------------------------------------------------------------
# program transformations


def _dual_exp_to_exp(prog: ConicProgram):
    """Rewrite DUAL_EXP blocks as EXP blocks: u = PRIMAL_TO_DUAL @ x."""
    T = sp.lil_matrix((prog.n, prog.n))
    cones = []
    for blk, sl in prog.block_slices():
        if blk.kind is ConeKind.DUAL_EXP:
            T[sl, sl] = PRIMAL_TO_DUAL
            cones.append(ConeBlock(ConeKind.EXP, 3))
        else:
            idx = np.arange(sl.start, sl.stop)
            T[idx, idx] = 1.0
            cones.append(blk)
    T = T.tocsr()
    A = prog.A @ T
    c = T.T @ prog.c
    return A.tocsr(), c, cones, T


def _presolve_rows(A: sp.csr_matrix, b: np.ndarray, tol: float):
    """Drop empty and duplicated rows. Returns (A, b, kept, infeasible)."""
    A = A.tocsr()
    A.eliminate_zeros()
    keep = []
    seen = {}
    for i in range(A.shape[0]):
        start, stop = A.indptr[i], A.indptr[i + 1]
        if start == stop:
            if abs(b[i]) > tol * (1.0 + np.abs(b).max(initial=0.0)):
                return A, b, None, True
            continue
        key = (tuple(A.indices[start:stop]), tuple(A.data[start:stop]))
        if key in seen:
            if abs(b[seen[key]] - b[i]) > tol * (1.0 + abs(b[i])):
                return A, b, None, True
            continue
        seen[key] = i
        keep.append(i)
    keep = np.array(keep, dtype=int)
    return A[keep], b[keep], keep, False


def _equilibrate(A: sp.csr_matrix, cones, passes: int = 8):
    """Geometric-mean row/column scaling; exponential triples share one factor."""
    m, n = A.shape
    row = np.ones(m)
    col = np.ones(n)
    groups = np.arange(n)
    start = 0
    for blk in cones:
        if blk.kind is ConeKind.EXP:
            groups[start:start + 3] = start
        start += blk.dim
    B = abs(A.tocoo())
    for _ in range(passes):
        vals = B.data * row[B.row] * col[B.col]
        rmax = np.zeros(m)
        rmin = np.full(m, np.inf)
        np.maximum.at(rmax, B.row, vals)
        np.minimum.at(rmin, B.row, vals)
        ok = rmax > 0
        row[ok] /= np.sqrt(rmax[ok] * rmin[ok])

        vals = B.data * row[B.row] * col[B.col]
        gmax = np.zeros(n)
        gmin = np.full(n, np.inf)
        np.maximum.at(gmax, groups[B.col], vals)
        np.minimum.at(gmin, groups[B.col], vals)
        ok = gmax > 0
        factor = np.ones(n)
        factor[ok] = 1.0 / np.sqrt(gmax[ok] * gmin[ok])
        col *= factor[groups]
    return row, col


# ---------------------------------------------------------------------------
# the embedding


class _Cones:
    """Index bookkeeping for a product of ZERO, NONNEG and EXP blocks."""

    def __init__(self, cones):
        free, pos, exp = [], [], []
        start = 0
        for blk in cones:
            idx = list(range(start, start + blk.dim))
            if blk.kind is ConeKind.ZERO:
                free += idx
            elif blk.kind is ConeKind.NONNEG:
                pos += idx
            elif blk.kind is ConeKind.EXP:
                exp.append(idx)
            else:
                raise ValueError("DUAL_EXP blocks must be mapped before solving")
            start += blk.dim
        self.n = start
        self.free = np.array(free, dtype=int)
        self.pos = np.array(pos, dtype=int)
        self.exp = np.array(exp, dtype=int).reshape(-1, 3)
        self.nu = len(pos) + 3 * len(exp)

        # sparsity pattern of the block-diagonal barrier hessian
        rows = [self.pos, self.free]
        cols = [self.pos, self.free]
        if len(self.exp):
            rows.append(np.repeat(self.exp, 3, axis=1).ravel())
            cols.append(np.tile(self.exp, (1, 3)).ravel())
        self.h_rows = np.concatenate(rows)
        self.h_cols = np.concatenate(cols)

    def initial_point(self):
        x = np.zeros(self.n)
        x[self.pos] = 1.0
        if len(self.exp):
            x[self.exp] = EXP_CENTRAL_POINT
        return x, x.copy()

    def primal_interior(self, x) -> bool:
        if len(self.pos) and np.min(x[self.pos]) <= 0:
            return False
        if len(self.exp):
            X = x[self.exp]
            if np.min(X[:, 0]) <= 0 or np.min(X[:, 1]) <= 0:
                return False
            if np.min(X[:, 1] * np.log(X[:, 0] / X[:, 1]) - X[:, 2]) <= 0:
                return False
        return True

    def dual_interior(self, s) -> bool:
        if len(self.pos) and np.min(s[self.pos]) <= 0:
            return False
        if len(self.exp):
            S = s[self.exp]
            if np.max(S[:, 2]) >= 0 or np.min(S[:, 0]) <= 0:
                return False
            # s1 > -s3 exp((s2 - s3)/s3), in logs
            lhs = np.log(S[:, 0])
            rhs = np.log(-S[:, 2]) + (S[:, 1] - S[:, 2]) / S[:, 2]
            if np.min(lhs - rhs) <= 0:
                return False
        return True

    def derivatives(self, x):
        """Barrier gradient and hessian blocks at interior x."""
        g = np.zeros(self.n)
        xp = x[self.pos]
        g[self.pos] = -1.0 / xp
        hpos = 1.0 / xp**2
        hexp = np.zeros((0, 3, 3))
        if len(self.exp):
            _, ge, hexp = exp_barrier_batch(x[self.exp])
            g[self.exp] = ge
        return g, hpos, hexp

    def hessian_values(self, hpos, hexp):
        return np.concatenate([hpos, np.zeros(len(self.free)), hexp.ravel()])

    def inverse_hessian_apply(self, hpos, hexp, v):
        out = np.zeros_like(v)
        out[self.pos] = v[self.pos] / hpos
        if len(self.exp):
            out[self.exp] = np.linalg.solve(hexp, v[self.exp][:, :, None])[:, :, 0]
        return out


class _Embedding:
    def __init__(self, A, b, c, cones: _Cones, settings: SolverSettings):
        self.A = A.tocsr()
        self.AT = self.A.T.tocsr()
        self.b = b
        self.c = c
        self.K = cones
        self.settings = settings
        self.m, self.n = A.shape
        self.nu = cones.nu + 1

        coo = self.A.tocoo()
        n, m = self.n, self.m
        self._kkt_rows = np.concatenate(
            [cones.h_rows, np.arange(n), coo.row + n, coo.col, np.arange(n, n + m)]
        )
        self._kkt_cols = np.concatenate(
            [cones.h_cols, np.arange(n), coo.col, coo.row + n, np.arange(n, n + m)]
        )
        self._a_data = coo.data

    def _factor(self, mu, hpos, hexp):
        reg = self.settings.regularization
        n, m = self.n, self.m
        hvals = mu * self.K.hessian_values(hpos, hexp)
        data = np.concatenate(
            [hvals, np.full(n, reg), self._a_data, self._a_data, np.full(m, -reg)]
        )
        size = n + m
        kkt = sp.csc_matrix((data, (self._kkt_rows, self._kkt_cols)), shape=(size, size))
        exact = kkt - sp.diags(np.concatenate([np.full(n, reg), np.full(m, -reg)]))
        lu = spla.splu(kkt)
        return lu, exact.tocsr()

    @staticmethod
    def _refined_solve(lu, exact, rhs, steps=3):
        sol = lu.solve(rhs)
        for _ in range(steps):
            res = rhs - exact @ sol
            if not np.all(np.isfinite(res)):
                break
            sol = sol + lu.solve(res)
        return sol

    def newton(self, lu, exact, mu, tau, hpos, hexp, rP, rD, rG, rS, rK):
        """Solve the linearised embedding for (dx, dy, dtau, ds, dkappa)."""
        n = self.n
        H = lambda v: self._hess_apply(hpos, hexp, v)
        top = self._refined_solve(lu, exact, np.concatenate([rD + rS, rP]))
        p, q = top[:n], top[n:]
        tp = self._refined_solve(lu, exact, np.concatenate([-self.c, self.b]))
        p2, q2 = tp[:n], tp[n:]
        denom = mu / tau**2 - self.b @ q2 - self.c @ p2
        dtau = (rG + rK + self.b @ q + self.c @ p) / denom
        dx = p + dtau * p2
        dy = -(q + dtau * q2)
        ds = rS - mu * H(dx)
        dkappa = rK - (mu / tau**2) * dtau
        return dx, dy, dtau, ds, dkappa

    def _hess_apply(self, hpos, hexp, v):
        out = np.zeros_like(v)
        K = self.K
        out[K.pos] = hpos * v[K.pos]
        if len(K.exp):
            out[K.exp] = np.einsum("kij,kj->ki", hexp, v[K.exp])
        return out

    def proximity(self, x, s, tau, kappa):
        """Scaled distance to the central path and the current mu."""
        mu = (x @ s + tau * kappa) / self.nu
        if mu <= 0:
            return math.inf, mu
        try:
            g, hpos, hexp = self.K.derivatives(x)
            psi = s + mu * g
            psi[self.K.free] = 0.0
            w = self.K.inverse_hessian_apply(hpos, hexp, psi)
        except (np.linalg.LinAlgError, NotInterior):
            # hessian blew up at a trial point: treat as outside the neighbourhood
            return math.inf, mu
        psi_tau = tau * kappa - mu
        val = psi @ w + psi_tau**2
        if not math.isfinite(val):
            return math.inf, mu
        return math.sqrt(max(val, 0.0)) / mu, mu

    def interior(self, x, s, tau, kappa) -> bool:
        return tau > 0 and kappa > 0 and self.K.primal_interior(x) and self.K.dual_interior(s)

    def max_linear_step(self, x, dx, s, ds, tau, dtau, kappa, dkappa):
        alpha = 1.0
        pos = self.K.pos
        for v, dv in ((x[pos], dx[pos]), (s[pos], ds[pos]),
                      (np.array([tau]), np.array([dtau])), (np.array([kappa]), np.array([dkappa]))):
            neg = dv < 0
            if np.any(neg):
                alpha = min(alpha, float(np.min(-v[neg] / dv[neg])))
        return alpha


def _measures(A, b, c, x, y, s, tau):
    xh, yh, sh = x / tau, y / tau, s / tau
    pobj = c @ xh
    dobj = b @ yh
    pres = np.linalg.norm(A @ xh - b, np.inf) / (1.0 + np.linalg.norm(b, np.inf))
    dres = np.linalg.norm(A.T @ yh + sh - c, np.inf) / (1.0 + np.linalg.norm(c, np.inf))
    gap = abs(pobj - dobj) / (1.0 + max(abs(pobj), abs(dobj)))
    return pres, dres, gap, pobj, dobj


def solve(prog: ConicProgram, settings: SolverSettings | None = None, **overrides) -> Solution:
    """Solve ``prog``; see the module docstring for the method."""
    settings = settings or SolverSettings()
    if overrides:
        settings = SolverSettings(**{**settings.__dict__, **overrides})
    tol = settings.tol

    A0, c0, cones0, T = _dual_exp_to_exp(prog)
    b0 = prog.b.copy()

    def finish(status, x, y, s, pres=math.inf, dres=math.inf, gap=math.inf, iters=0, trace=()):
        # back to the caller's coordinates: u = T x, s_u = T^{-T} s_x
        xo = T @ x
        so = _dual_slack_back(prog, s)
        obj = float(prog.c @ xo) if status is SolveStatus.OPTIMAL else math.nan
        return Solution(status, xo, y, so, obj, pres, dres, gap, iters, list(trace))

    Ar, br, kept, infeasible = _presolve_rows(A0, b0, tol)
    if infeasible:
        logger.debug("presolve found inconsistent equality rows")
        return finish(SolveStatus.PRIMAL_INFEASIBLE, np.zeros(prog.n), np.zeros(prog.m),
                      np.zeros(prog.n))

    if settings.equilibrate and Ar.nnz:
        row, col = _equilibrate(Ar, cones0)
    else:
        row, col = np.ones(Ar.shape[0]), np.ones(prog.n)
    As = sp.diags(row) @ Ar @ sp.diags(col)
    bs = row * br
    cs = col * c0

    K = _Cones(cones0)
    emb = _Embedding(As, bs, cs, K, settings)
    x, s = K.initial_point()
    y = np.zeros(As.shape[0])
    tau = kappa = 1.0

    def unscale(x, y, s):
        yfull = np.zeros(prog.m)
        yfull[kept] = row * y
        return col * x, yfull, s / col

    trace = []
    status = SolveStatus.ITER_LIMIT
    pres = dres = gap = math.inf
    it = 0
    for it in range(settings.max_iter + 1):
        xu, yu, su = unscale(x, y, s)
        pres, dres, gap, pobj, dobj = _measures(A0, b0, c0, xu, yu, su, tau)
        # embedded gap residual: shrinks by (1 - alpha) per predictor, untouched by centering
        trace.append(abs(emb.b @ y - emb.c @ x - kappa))
        logger.debug("it=%d pres=%.2e dres=%.2e gap=%.2e tau=%.2e kappa=%.2e",
                     it, pres, dres, gap, tau, kappa)
        if pres <= tol and dres <= tol and gap <= tol:
            status = SolveStatus.OPTIMAL
            break
        # Farkas certificates
        by = b0 @ yu
        if by > 0 and np.linalg.norm(A0.T @ yu + su, np.inf) <= tol * by:
            status = SolveStatus.PRIMAL_INFEASIBLE
            break
        cx = c0 @ xu
        if cx < 0 and np.linalg.norm(A0 @ xu, np.inf) <= tol * -cx:
            status = SolveStatus.DUAL_INFEASIBLE
            break
        if it == settings.max_iter:
            break

        try:
            ok, x, y, s, tau, kappa = _iterate(emb, x, y, s, tau, kappa)
        except (np.linalg.LinAlgError, RuntimeError, NotInterior, ZeroDivisionError) as exc:
            logger.debug("newton system failed: %r", exc, exc_info=True)
            ok = False
        if not ok:
            status = SolveStatus.NUMERICAL_FAILURE
            break

    xu, yu, su = unscale(x, y, s)
    if status in (SolveStatus.PRIMAL_INFEASIBLE, SolveStatus.DUAL_INFEASIBLE):
        # report the (unnormalised) certificate rays
        scale = max(np.abs(b0 @ yu), np.abs(c0 @ xu), 1e-300)
        return finish(status, xu / scale, yu / scale, su / scale, pres, dres, gap, it, trace)
    return finish(status, xu / tau, yu / tau, su / tau, pres, dres, gap, it, trace)


def _dual_slack_back(prog: ConicProgram, s):
    out = np.array(s, dtype=float)
    for blk, sl in prog.block_slices():
        if blk.kind is ConeKind.DUAL_EXP:
            out[sl] = DUAL_TO_PRIMAL.T @ s[sl]
    return out


def _iterate(emb: _Embedding, x, y, s, tau, kappa):
    """One predictor step followed by centering steps."""
    st = emb.settings
    step = _predict(emb, x, y, s, tau, kappa)
    if step is None:
        return False, x, y, s, tau, kappa
    x, y, s, tau, kappa = _center(emb, *step, st.max_corrector, st.corrector_radius)
    return True, x, y, s, tau, kappa


def _predict(emb: _Embedding, x, y, s, tau, kappa):
    """Affine step towards mu = 0, backtracked into the wide neighbourhood."""
    st = emb.settings
    A, AT, b, c = emb.A, emb.AT, emb.b, emb.c
    K = emb.K

    mu = (x @ s + tau * kappa) / emb.nu
    g, hpos, hexp = K.derivatives(x)
    lu, exact = emb._factor(mu, hpos, hexp)

    rp = A @ x - b * tau
    rd = -(AT @ y) + c * tau - s
    rg = b @ y - c @ x - kappa
    rS = -s.copy()
    rS[K.free] = 0.0
    dx, dy, dtau, ds, dkappa = emb.newton(lu, exact, mu, tau, hpos, hexp,
                                          -rp, -rd, -rg, rS, -kappa)
    alpha = min(1.0, st.step_fraction * emb.max_linear_step(x, dx, s, ds, tau, dtau, kappa, dkappa))
    while alpha > 1e-12:
        xn, sn = x + alpha * dx, s + alpha * ds
        tn, kn = tau + alpha * dtau, kappa + alpha * dkappa
        if emb.interior(xn, sn, tn, kn):
            eta, _ = emb.proximity(xn, sn, tn, kn)
            if eta <= st.predictor_radius:
                return xn, y + alpha * dy, sn, tn, kn
        alpha *= 0.8
    return None


def _center(emb: _Embedding, x, y, s, tau, kappa, steps, radius):
    """Newton steps on the centrality residual at fixed mu."""
    K = emb.K
    for _ in range(steps):
        eta, mu = emb.proximity(x, s, tau, kappa)
        if eta <= radius:
            break
        g, hpos, hexp = K.derivatives(x)
        lu, exact = emb._factor(mu, hpos, hexp)
        rS = -(s + mu * g)
        rS[K.free] = 0.0
        zero_p = np.zeros(emb.m)
        zero_d = np.zeros(emb.n)
        dx, dy, dtau, ds, dkappa = emb.newton(lu, exact, mu, tau, hpos, hexp,
                                              zero_p, zero_d, 0.0, rS, -(kappa - mu / tau))
        alpha = 1.0
        while alpha > 1e-6:
            xn, sn = x + alpha * dx, s + alpha * ds
            tn, kn = tau + alpha * dtau, kappa + alpha * dkappa
            if emb.interior(xn, sn, tn, kn):
                eta_n, _ = emb.proximity(xn, sn, tn, kn)
                if eta_n < eta:
                    break
            alpha *= 0.5
        else:
            break
        x, y, s, tau, kappa = xn, y + alpha * dy, sn, tn, kn
    return x, y, s, tau, kappa


# ---------------------------------------------------------------------------
# duality helpers


def dual_program(prog: ConicProgram) -> ConicProgram:
    """Explicit conic dual written as a standard-form minimisation.

    Variables are ``(y, s)`` with ``y`` unrestricted and ``s`` in the dual cone
    of every non-ZERO block; constraints ``A'y + s = c`` and objective
    ``minimize -b'y``. The dual optimal value is minus its optimum.
    """
    m, n = prog.m, prog.n
    blocks = [ConeBlock(ConeKind.ZERO, m)] if m else []
    cols = []
    names = [f"y[{i}]" for i in range(m)]
    for blk, sl in prog.block_slices():
        if blk.kind is ConeKind.ZERO:
            continue
        blocks.append(ConeBlock(dual_kind(blk.kind), blk.dim))
        cols.extend(range(sl.start, sl.stop))
        names.extend(f"s[{j}]" for j in range(sl.start, sl.stop))
    S = sp.csr_matrix((np.ones(len(cols)), (cols, np.arange(len(cols)))), shape=(n, len(cols)))
    A = sp.hstack([prog.A.T, S]).tocsr()
    c = np.concatenate([-prog.b, np.zeros(len(cols))])
    return ConicProgram(c, A, prog.c.copy(), blocks, names)


def solve_dual_pair_check(prog: ConicProgram, settings: SolverSettings | None = None) -> DualPairCheck:
    """Solve ``prog`` and its explicit dual independently and compare values."""
    primal = solve(prog, settings)
    dual = solve(dual_program(prog), settings)
    for sol, which in ((primal, "primal"), (dual, "dual")):
        if not sol.optimal:
            raise RuntimeError(f"{which} solve ended with status {sol.status.value}")
    pv = primal.objective_value
    dv = -dual.objective_value
    return DualPairCheck(pv, dv, pv - dv, primal, dual)


def certificate_violations(prog: ConicProgram, sol: Solution, tol: float) -> list:
    """Names of the cone memberships that ``sol`` violates at tolerance ``tol``."""
    bad = []
    for k, (blk, sl) in enumerate(prog.block_slices()):
        if not block_contains(blk, sol.x[sl], tol):
            bad.append(f"x block {k} ({blk.kind.value})")
        if not block_contains(blk, sol.s[sl], tol, dual=True):
            bad.append(f"s block {k} ({blk.kind.value})")
    return bad
