"""Cone vocabulary, membership tests and logarithmic barriers.

Four cone kinds partition a variable vector:

* ``ZERO``     unrestricted variables. Their dual slack lives in the zero
               cone, so in the dual they turn into equality rows.
* ``NONNEG``   the nonnegative orthant.
* ``EXP``      the exponential cone, the closure of
               ``{x : x1 >= x2 * exp(x3 / x2), x2 > 0}``.
* ``DUAL_EXP`` its dual, the closure of
               ``{s : s1 >= -s3 * exp((s2 - s3) / s3), s3 < 0}``.

The dual exponential cone is the image of the exponential cone under a fixed
linear map (see :func:`dual_to_primal_map`), which is how the solver treats it:
only one nonsymmetric barrier is implemented.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConeKind",
    "ConeBlock",
    "BarrierEval",
    "NotInterior",
    "EXP_CENTRAL_POINT",
    "exp_cone_contains",
    "dual_exp_cone_contains",
    "dual_to_primal_map",
    "primal_to_dual_map",
    "DUAL_TO_PRIMAL",
    "PRIMAL_TO_DUAL",
    "barrier",
    "exp_barrier_batch",
    "block_contains",
    "dual_kind",
]


class ConeKind(enum.Enum):
    ZERO = "ZERO"
    NONNEG = "NONNEG"
    EXP = "EXP"
    DUAL_EXP = "DUAL_EXP"


class NotInterior(ValueError):
    """Raised when a barrier is evaluated outside the open cone."""


@dataclass(frozen=True)
class ConeBlock:
    kind: ConeKind
    dim: int

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", ConeKind(self.kind))
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"cone dimension must be a positive integer, got {self.dim}")
        if self.kind in (ConeKind.EXP, ConeKind.DUAL_EXP) and self.dim != 3:
            raise ValueError(f"{self.kind.value} blocks have dimension 3, got {self.dim}")

    @property
    def complexity(self) -> int:
        if self.kind is ConeKind.ZERO:
            return 0
        if self.kind is ConeKind.NONNEG:
            return self.dim
        return 3


@dataclass
class BarrierEval:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    complexity_parameter: float


# Fixed point of x = -grad F(x) for the exponential-cone barrier below.
EXP_CENTRAL_POINT = np.array([1.290927709856958, 0.8051020015847954, -0.8278383990656786])

# Rows map a dual-cone point s to (s1, -s3, s3 - s2), a point of the primal cone.
DUAL_TO_PRIMAL = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, -1.0, 1.0]])
PRIMAL_TO_DUAL = np.array([[1.0, 0.0, 0.0], [0.0, -1.0, -1.0], [0.0, -1.0, 0.0]])


def _safe_exp(t: float) -> float:
    try:
        return math.exp(t)
    except OverflowError:
        return math.inf


def exp_cone_contains(x, tol: float = 1e-9) -> bool:
    """Membership in the closed exponential cone with absolute slack ``tol``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    x1, x2, x3 = (float(v) for v in x)
    if x2 > 0 and x1 >= -tol:
        if x1 - x2 * _safe_exp(x3 / x2) >= -tol:
            return True
    # closure ray {x1 >= 0, x2 = 0, x3 <= 0}
    return abs(x2) <= tol and x1 >= -tol and x3 <= tol


def dual_exp_cone_contains(s, tol: float = 1e-9) -> bool:
    """Membership in the closed dual exponential cone with absolute slack ``tol``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    s1, s2, s3 = (float(v) for v in s)
    if s3 < 0 and s1 >= -tol:
        if s1 + s3 * _safe_exp((s2 - s3) / s3) >= -tol:
            return True
    # closure face {s1 >= 0, s2 >= 0, s3 = 0}
    return abs(s3) <= tol and s1 >= -tol and s2 >= -tol


def dual_to_primal_map(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return np.array([s[0], -s[2], s[2] - s[1]])


def primal_to_dual_map(x) -> np.ndarray:
    """Inverse of :func:`dual_to_primal_map`."""
    x = np.asarray(x, dtype=float)
    return np.array([x[0], -x[1] - x[2], -x[1]])


def dual_kind(kind: ConeKind) -> ConeKind:
    """Kind of the dual cone, reading ZERO as 'unrestricted' (its dual is {0})."""
    return {
        ConeKind.NONNEG: ConeKind.NONNEG,
        ConeKind.EXP: ConeKind.DUAL_EXP,
        ConeKind.DUAL_EXP: ConeKind.EXP,
    }[kind]


def block_contains(block: ConeBlock, point, tol: float = 1e-9, dual: bool = False) -> bool:
    """Membership of ``point`` in ``block`` (or in its dual cone when ``dual``).

    A ZERO block is unrestricted in the primal; its dual cone is the origin.
    """
    point = np.asarray(point, dtype=float)
    if block.kind is ConeKind.ZERO:
        return bool(np.all(np.abs(point) <= tol)) if dual else True
    if block.kind is ConeKind.NONNEG:
        return bool(np.all(point >= -tol))
    kind = dual_kind(block.kind) if dual else block.kind
    if kind is ConeKind.EXP:
        return exp_cone_contains(point, tol)
    return dual_exp_cone_contains(point, tol)


def exp_barrier_batch(X: np.ndarray, with_hessian: bool = True):
    """Barrier ``-log(x2 log(x1/x2) - x3) - log x1 - log x2`` on rows of ``X``.

    Returns ``(values, gradients, hessians)`` with shapes (k,), (k, 3), (k, 3, 3).
    Rows outside the open cone raise :class:`NotInterior`.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    x1, x2, x3 = X[:, 0], X[:, 1], X[:, 2]
    if np.any(x1 <= 0) or np.any(x2 <= 0):
        raise NotInterior("exponential cone barrier needs x1 > 0 and x2 > 0")
    log_ratio = np.log(x1 / x2)
    psi = x2 * log_ratio - x3
    if np.any(psi <= 0):
        raise NotInterior("exponential cone barrier needs x2*log(x1/x2) - x3 > 0")

    values = -np.log(psi) - np.log(x1) - np.log(x2)
    dpsi = np.stack([x2 / x1, log_ratio - 1.0, -np.ones_like(x1)], axis=1)
    grads = -dpsi / psi[:, None]
    grads[:, 0] -= 1.0 / x1
    grads[:, 1] -= 1.0 / x2
    if not with_hessian:
        return values, grads, None

    hess = dpsi[:, :, None] * dpsi[:, None, :] / (psi**2)[:, None, None]
    hess[:, 0, 0] += x2 / (x1**2 * psi) + 1.0 / x1**2
    hess[:, 0, 1] -= 1.0 / (x1 * psi)
    hess[:, 1, 0] -= 1.0 / (x1 * psi)
    hess[:, 1, 1] += 1.0 / (x2 * psi) + 1.0 / x2**2
    return values, grads, hess


def barrier(block: ConeBlock, point) -> BarrierEval:
    """Evaluate the logarithmic barrier of ``block`` at an interior ``point``."""
    point = np.asarray(point, dtype=float).reshape(-1)
    if point.size != block.dim:
        raise ValueError(f"point has size {point.size}, block has dimension {block.dim}")

    if block.kind is ConeKind.ZERO:
        n = block.dim
        return BarrierEval(0.0, np.zeros(n), np.zeros((n, n)), 0.0)

    if block.kind is ConeKind.NONNEG:
        if np.any(point <= 0):
            raise NotInterior("nonnegative barrier needs strictly positive entries")
        return BarrierEval(
            float(-np.sum(np.log(point))),
            -1.0 / point,
            np.diag(1.0 / point**2),
            float(block.dim),
        )

    if block.kind is ConeKind.EXP:
        v, g, h = exp_barrier_batch(point[None, :])
        return BarrierEval(float(v[0]), g[0], h[0], 3.0)

    # F_*(s) = F(M s) with M the dual-to-primal map
    v, g, h = exp_barrier_batch((DUAL_TO_PRIMAL @ point)[None, :])
    M = DUAL_TO_PRIMAL
    return BarrierEval(float(v[0]), M.T @ g[0], M.T @ h[0] @ M, 3.0)
