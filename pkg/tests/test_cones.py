import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kldro.cones import (
    DUAL_TO_PRIMAL,
    EXP_CENTRAL_POINT,
    PRIMAL_TO_DUAL,
    ConeBlock,
    ConeKind,
    NotInterior,
    barrier,
    block_contains,
    dual_exp_cone_contains,
    dual_to_primal_map,
    exp_barrier_batch,
    exp_cone_contains,
    primal_to_dual_map,
)

EXP = ConeBlock(ConeKind.EXP, 3)
DEXP = ConeBlock(ConeKind.DUAL_EXP, 3)


@pytest.mark.parametrize("x, expected", [
    ((1, 1, 0), True),
    ((2.7182818, 1, 1), True),
    ((1, 1, 1), False),
    ((1, 0, -1), True),
    ((0, 0, 0), True),
    ((1, 0, 1), False),
    ((-1, 1, -5), False),
])
def test_exp_membership_examples(x, expected):
    assert exp_cone_contains(x, 1e-6) is expected


@pytest.mark.parametrize("s, expected", [
    ((1, 0, -1), True),
    ((1, 1, 0), True),
    ((0.1, 0, -1), False),
    ((1, -1, 0), False),
    ((0, 0, 0), True),
])
def test_dual_exp_membership_examples(s, expected):
    assert dual_exp_cone_contains(s, 1e-9) is expected


def test_negative_tolerance_rejected():
    with pytest.raises(ValueError):
        exp_cone_contains((1, 1, 0), -1.0)


@pytest.mark.parametrize("s, image", [
    ((1, 0, -1), (1, 1, -1)),
    ((1, 1, 0), (1, 0, -1)),
    ((0.1, 0, -1), (0.1, 1, -1)),
])
def test_dual_to_primal_examples(s, image):
    assert np.allclose(dual_to_primal_map(s), image)
    assert np.allclose(DUAL_TO_PRIMAL @ np.array(s, float), image)


def test_maps_are_inverse():
    assert np.allclose(DUAL_TO_PRIMAL @ PRIMAL_TO_DUAL, np.eye(3))
    s = np.array([0.3, -2.0, 5.0])
    assert np.allclose(primal_to_dual_map(dual_to_primal_map(s)), s)


def test_map_preserves_membership_on_random_points():
    rng = np.random.default_rng(0)
    mismatches = 0
    for _ in range(5000):
        s = rng.uniform(-3, 3, size=3)
        a = dual_exp_cone_contains(s, 0.0)
        b = exp_cone_contains(dual_to_primal_map(s), 0.0)
        # disagreement is only tolerated within a hair of the boundary
        if a != b and dual_exp_cone_contains(s, 1e-9) != exp_cone_contains(dual_to_primal_map(s), 1e-9):
            mismatches += 1
    assert mismatches == 0


def test_duality_pairing_nonnegative():
    rng = np.random.default_rng(1)
    xs, ss = [], []
    while len(xs) < 300 or len(ss) < 300:
        v = rng.uniform(-3, 3, size=3)
        if exp_cone_contains(v, 0.0):
            xs.append(v)
        if dual_exp_cone_contains(v, 0.0):
            ss.append(v)
    X, S = np.array(xs[:300]), np.array(ss[:300])
    assert np.min(X @ S.T) >= -1e-9


def test_block_validation():
    with pytest.raises(ValueError):
        ConeBlock(ConeKind.EXP, 2)
    with pytest.raises(ValueError):
        ConeBlock(ConeKind.NONNEG, 0)
    assert ConeBlock("NONNEG", 4).complexity == 4
    assert ConeBlock(ConeKind.ZERO, 5).complexity == 0
    assert DEXP.complexity == 3


def test_block_contains_zero_block():
    z = ConeBlock(ConeKind.ZERO, 2)
    assert block_contains(z, [-5.0, 3.0])
    assert not block_contains(z, [1e-3, 0.0], dual=True)
    assert block_contains(z, [0.0, 0.0], dual=True)


def test_block_contains_dual_flag_swaps_cones():
    assert block_contains(EXP, (1, 0, -1), dual=True)  # (1, 0, -1) is in both
    assert not block_contains(EXP, (0.1, 0, -1), dual=True)
    assert block_contains(DEXP, (2.7182818, 1, 1), 1e-6, dual=True)


def test_nonneg_barrier_at_one():
    ev = barrier(ConeBlock(ConeKind.NONNEG, 1), [1.0])
    assert ev.value == 0.0
    assert np.allclose(ev.gradient, [-1.0]) and np.allclose(ev.hessian, [[1.0]])
    assert ev.complexity_parameter == 1


def test_exp_barrier_value_at_e_1_0():
    assert barrier(EXP, (math.e, 1.0, 0.0)).value == pytest.approx(-1.0, abs=1e-14)


def test_zero_block_has_no_barrier():
    ev = barrier(ConeBlock(ConeKind.ZERO, 2), [3.0, -4.0])
    assert ev.value == 0.0 and ev.complexity_parameter == 0


def test_exp_gradient_matches_finite_differences_at_3_1_0():
    x = np.array([3.0, 1.0, 0.0])
    ev = barrier(EXP, x)
    fd = np.array([
        (barrier(EXP, x + e).value - barrier(EXP, x - e).value) / 2e-6 for e in np.eye(3) * 1e-6
    ])
    assert np.max(np.abs(fd - ev.gradient)) <= 1e-6 * (1 + np.max(np.abs(ev.gradient)))


def test_central_point_is_fixed_point():
    g = barrier(EXP, EXP_CENTRAL_POINT).gradient
    assert np.allclose(-g, EXP_CENTRAL_POINT, atol=1e-12)


def test_outside_points_raise():
    with pytest.raises(NotInterior):
        barrier(EXP, (1.0, 1.0, 0.0))  # boundary
    with pytest.raises(NotInterior):
        barrier(ConeBlock(ConeKind.NONNEG, 2), (1.0, 0.0))
    with pytest.raises(NotInterior):
        exp_barrier_batch(np.array([[1.0, -1.0, 0.0]]))
    with pytest.raises(ValueError):
        barrier(EXP, (1.0, 2.0))


def test_dual_barrier_is_composition():
    s = np.array([2.0, 0.5, -1.0])
    assert dual_exp_cone_contains(s, 0.0)
    ev = barrier(DEXP, s)
    base = barrier(EXP, DUAL_TO_PRIMAL @ s)
    assert ev.value == pytest.approx(base.value)
    assert np.allclose(ev.gradient, DUAL_TO_PRIMAL.T @ base.gradient)


interior = st.tuples(
    st.floats(-1.5, 1.5),  # log x2
    st.floats(-2.0, 2.0),  # x3
    st.floats(-3.0, 2.0),  # log of the margin above the boundary
)


@settings(max_examples=200, deadline=None)
@given(interior)
def test_hessian_positive_definite_and_symmetric(params):
    lx2, x3, lm = params
    x2 = math.exp(lx2)
    x1 = x2 * math.exp(x3 / x2) * (1 + math.exp(lm))
    h = barrier(EXP, (x1, x2, x3)).hessian
    assert np.allclose(h, h.T)
    np.linalg.cholesky(h)


@settings(max_examples=100, deadline=None)
@given(interior)
def test_dual_hessian_positive_definite(params):
    lx2, x3, lm = params
    x2 = math.exp(lx2)
    x1 = x2 * math.exp(x3 / x2) * (1 + math.exp(lm))
    s = PRIMAL_TO_DUAL @ np.array([x1, x2, x3])
    np.linalg.cholesky(barrier(DEXP, s).hessian)


def test_batch_matches_single():
    X = np.array([[3.0, 1.0, 0.0], [5.0, 2.0, -1.0], EXP_CENTRAL_POINT])
    v, g, h = exp_barrier_batch(X)
    for k in range(3):
        ev = barrier(EXP, X[k])
        assert v[k] == pytest.approx(ev.value)
        assert np.allclose(g[k], ev.gradient) and np.allclose(h[k], ev.hessian)
    _, _, none = exp_barrier_batch(X, with_hessian=False)
    assert none is None
