import math

import numpy as np
import pytest
import scipy.sparse as sp

from kldro.check import random_worst_case_instance
from kldro.cones import ConeBlock, ConeKind
from kldro.ipm import (
    ConicProgram,
    SolverSettings,
    SolveStatus,
    certificate_violations,
    dual_program,
    solve,
    solve_dual_pair_check,
)
from kldro.kl import AmbiguitySet, EmpiricalDistribution, build_inner_primal

NN = ConeKind.NONNEG


def lp_min_x_ge_1():
    # x - t = 1, x, t >= 0
    return ConicProgram([1.0, 0.0], sp.csr_matrix([[1.0, -1.0]]), [1.0], [ConeBlock(NN, 2)])


def kl_projection(q):
    """min sum delta_s with (q_s, p_s, -delta_s) in K_exp and sum p = 1."""
    S = len(q)
    rows, cols, vals = [], [], []
    for s in range(S):
        rows.append(s), cols.append(3 * s), vals.append(1.0)
        rows.append(S), cols.append(3 * s + 1), vals.append(1.0)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(S + 1, 3 * S))
    c = np.zeros(3 * S)
    c[2::3] = -1.0
    return ConicProgram(c, A, list(q) + [1.0], [ConeBlock(ConeKind.EXP, 3)] * S)


def eq5_example():
    amb = AmbiguitySet(EmpiricalDistribution([0.0, 1.0], [0.5, 0.5]), math.log(2))
    return build_inner_primal(amb, [0.0, 1.0])


def test_trivial_lp():
    sol = solve(lp_min_x_ge_1())
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.objective_value == pytest.approx(1.0, abs=1e-7)
    assert sol.x[0] == pytest.approx(1.0, abs=1e-7)


def test_kl_projection_of_q_onto_itself():
    sol = solve(kl_projection([0.5, 0.5]))
    assert sol.optimal
    assert sol.objective_value == pytest.approx(0.0, abs=1e-7)
    assert np.allclose(sol.x[1::3], [0.5, 0.5], atol=1e-6)


def test_worst_case_vertex_example():
    sol = solve(eq5_example())
    assert sol.optimal
    assert -sol.objective_value == pytest.approx(1.0, abs=1e-6)
    assert np.allclose(sol.x[1:6:3], [0.0, 1.0], atol=1e-4)


def test_optimal_residuals_within_tolerance():
    sol = solve(eq5_example(), tol=1e-8)
    assert all(v <= 1e-8 for v in sol.residuals.values())


def test_dual_pair_on_trivial_lp():
    chk = solve_dual_pair_check(lp_min_x_ge_1())
    assert chk.primal_value == pytest.approx(1.0, abs=1e-7)
    assert chk.dual_value == pytest.approx(1.0, abs=1e-7)


def test_dual_pair_on_worst_case_example():
    chk = solve_dual_pair_check(eq5_example())
    assert abs(chk.gap) <= 1e-6


def test_dual_pair_random_suite():
    rng = np.random.default_rng(7)
    for _ in range(50):
        amb, h = random_worst_case_instance(rng)
        chk = solve_dual_pair_check(build_inner_primal(amb, h))
        assert abs(chk.gap) <= 1e-6 * (1 + abs(chk.primal_value))


def test_dual_program_structure():
    prog = eq5_example()
    d = dual_program(prog)
    assert d.n == prog.m + prog.n  # no ZERO blocks in the primal
    assert d.cones[0].kind is ConeKind.ZERO
    assert d.count(ConeKind.DUAL_EXP) == prog.count(ConeKind.EXP)


def test_primal_infeasible_certificate():
    # x = -1 with x >= 0
    prog = ConicProgram([1.0], sp.csr_matrix([[1.0]]), [-1.0], [ConeBlock(NN, 1)])
    sol = solve(prog)
    assert sol.status is SolveStatus.PRIMAL_INFEASIBLE
    # Farkas: b'y > 0 and A'y + s = 0 with s >= 0
    assert prog.b @ sol.y > 0
    assert np.allclose(prog.A.T @ sol.y + sol.s, 0.0, atol=1e-6)
    assert np.all(sol.s >= -1e-9)


def test_dual_infeasible_certificate():
    # min -x s.t. x - t = 1 is unbounded below
    prog = ConicProgram([-1.0, 0.0], sp.csr_matrix([[1.0, -1.0]]), [1.0], [ConeBlock(NN, 2)])
    sol = solve(prog)
    assert sol.status is SolveStatus.DUAL_INFEASIBLE
    assert prog.c @ sol.x < 0
    assert np.allclose(prog.A @ sol.x, 0.0, atol=1e-6)


def test_iteration_limit():
    sol = solve(eq5_example(), max_iter=1)
    assert sol.status is SolveStatus.ITER_LIMIT


def test_free_variables_and_duplicate_rows():
    # min x1 + x2 with x1 free, x2 >= 0, x1 - x2 = 2 stated twice, x1 + x2 >= ... via x2 = 3
    A = sp.csr_matrix([[1.0, -1.0], [1.0, -1.0], [0.0, 1.0], [0.0, 0.0]])
    prog = ConicProgram([1.0, 1.0], A, [2.0, 2.0, 3.0, 0.0],
                        [ConeBlock(ConeKind.ZERO, 1), ConeBlock(NN, 1)])
    sol = solve(prog)
    assert sol.optimal
    assert np.allclose(sol.x, [5.0, 3.0], atol=1e-6)
    assert sol.objective_value == pytest.approx(8.0, abs=1e-6)


def test_dual_exp_blocks_solved_directly():
    # min s1 over the dual cone with s2 = 0, s3 = -1: s1 >= exp(-1)
    A = sp.csr_matrix([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    sol = solve(ConicProgram([1.0, 0.0, 0.0], A, [0.0, -1.0], [ConeBlock(ConeKind.DUAL_EXP, 3)]))
    assert sol.optimal
    assert sol.objective_value == pytest.approx(math.exp(-1), abs=1e-6)


def test_certificates_satisfy_cone_memberships():
    rng = np.random.default_rng(3)
    for _ in range(20):
        amb, h = random_worst_case_instance(rng)
        prog = build_inner_primal(amb, h)
        sol = solve(prog)
        assert sol.optimal
        assert certificate_violations(prog, sol, 10 * 1e-8 * (1 + np.max(np.abs(sol.x)))) == []


def test_scaling_c_keeps_status_and_x():
    rng = np.random.default_rng(4)
    amb, h = random_worst_case_instance(rng)
    prog = build_inner_primal(amb, h)
    a = solve(prog)
    scaled = ConicProgram(prog.c * 7.5, prog.A, prog.b, prog.cones)
    b = solve(scaled)
    assert a.status is b.status is SolveStatus.OPTIMAL
    assert b.objective_value == pytest.approx(7.5 * a.objective_value, rel=1e-6, abs=1e-6)
    p = lambda sol: sol.x[1:3 * amb.base.size:3]
    assert np.allclose(p(a), p(b), atol=1e-5)


def test_gap_trace_nonincreasing():
    rng = np.random.default_rng(5)
    for _ in range(30):
        amb, h = random_worst_case_instance(rng)
        t = np.array(solve(build_inner_primal(amb, h)).trace)
        assert t.size >= 2
        assert np.all(np.diff(t) <= 1e-12 * t[:-1])


def test_settings_validation():
    with pytest.raises(ValueError):
        SolverSettings(tol=0.0)
    with pytest.raises(ValueError):
        ConicProgram([1.0], sp.csr_matrix([[1.0]]), [1.0], [ConeBlock(NN, 2)])
