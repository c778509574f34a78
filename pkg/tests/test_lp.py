import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flexdesign.lp import (
    EQ, GE, LE, LpBuilder, LpProblem, SolveOptions, Status, check_solution, farkas_value, from_dense,
    highs, is_improving_ray, simplex, solve, write_lp,
)
from oracles import random_box_lp, vertex_min


def test_single_bound_active():
    sol = simplex(from_dense([1.0], [[1.0]], [GE], [1.0]))
    assert sol.status is Status.OPTIMAL
    assert sol.x[0] == pytest.approx(1.0)
    assert sol.objective == pytest.approx(1.0)


def test_face_tie_break_picks_first_vertex():
    p = from_dense([-1.0, -1.0], [[1.0, 1.0]], [LE], [1.0])
    sol = simplex(p)
    assert sol.objective == pytest.approx(-1.0)
    np.testing.assert_allclose(sol.x, [1.0, 0.0], atol=1e-12)
    oracle, _ = vertex_min(p.c, p.matrix.toarray(), p.senses, p.b, [0, 0], [1e9, 1e9])
    assert oracle == pytest.approx(sol.objective)


@pytest.mark.parametrize("backend", [simplex, highs])
def test_contradiction_returns_farkas_certificate(backend):
    p = from_dense([0.0], [[1.0]], [LE], [-1.0])
    sol = backend(p)
    assert sol.status is Status.INFEASIBLE
    assert farkas_value(p, sol.farkas) > 0


@pytest.mark.parametrize("backend", [simplex, highs])
def test_unbounded_returns_ray(backend):
    p = from_dense([-1.0, -1.0], [[1.0, -1.0]], [LE], [1.0])
    sol = backend(p)
    assert sol.status is Status.UNBOUNDED
    assert is_improving_ray(p, sol.ray)


def test_free_and_boxed_variables():
    # min x - y, -2 <= x <= 3 free-ish, y free, x + y = 1, y - x <= 4
    p = from_dense([1.0, -1.0], [[1.0, 1.0], [-1.0, 1.0]], [EQ, LE], [1.0, 4.0],
                   lb=[-2.0, -np.inf], ub=[3.0, np.inf])
    sol = simplex(p)
    assert sol.objective == pytest.approx(-4.0)
    assert check_solution(p, sol).ok()


def test_random_lps_match_vertex_enumeration():
    rng = np.random.default_rng(20240601)
    n_opt = 0
    for _ in range(60):
        c, A, senses, b, lb, ub = random_box_lp(rng)
        p = from_dense(c, A, senses, b, lb, ub)
        sol = simplex(p)
        ref, _ = vertex_min(c, A, senses, b, lb, ub)
        if ref is None:
            assert sol.status is Status.INFEASIBLE
            assert farkas_value(p, sol.farkas) > 0
            continue
        n_opt += 1
        assert sol.status is Status.OPTIMAL
        assert abs(sol.objective - ref) <= 1e-6 * max(1.0, abs(ref))
        rep = check_solution(p, sol)
        assert rep.duality_gap <= 1e-6 * (1 + abs(sol.objective))
        assert rep.ok()
    assert n_opt > 30


def test_backends_agree_on_random_lps():
    rng = np.random.default_rng(7)
    for _ in range(40):
        p = from_dense(*random_box_lp(rng))
        a, b = simplex(p), highs(p)
        assert a.status is b.status
        if a.optimal:
            assert a.objective == pytest.approx(b.objective, rel=1e-7, abs=1e-7)


def test_perturbed_primal_is_flagged():
    p = from_dense([1.0, 2.0], [[1.0, 1.0], [1.0, -1.0]], [EQ, LE], [3.0, 1.0])
    sol = simplex(p)
    assert check_solution(p, sol).primal_residual <= 1e-9
    x = sol.x.copy()
    x[0] += 1e-3
    bad = type(sol)(sol.status, x=x, y=sol.y, d=sol.d, objective=sol.objective)
    rep = check_solution(p, bad)
    assert rep.primal_residual >= 1e-3 - 1e-12
    assert not rep.ok()


def test_determinism():
    rng = np.random.default_rng(3)
    for _ in range(10):
        p = from_dense(*random_box_lp(rng))
        a, b = simplex(p), simplex(p)
        assert a.status is b.status and a.iterations == b.iterations
        if a.optimal:
            assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lam_exp=st.integers(-6, 6))
def test_argmin_invariant_under_cost_scaling(seed, lam_exp):
    p = from_dense(*random_box_lp(np.random.default_rng(seed)))
    lam = 2.0 ** lam_exp * 1.5
    a = simplex(p)
    b = simplex(p.with_objective(lam * p.c))
    assert a.status is b.status
    if a.optimal:
        np.testing.assert_allclose(a.x, b.x, atol=1e-9)
        assert b.objective == pytest.approx(lam * a.objective, rel=1e-9, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_every_optimal_solve_passes_check(seed):
    p = from_dense(*random_box_lp(np.random.default_rng(seed)))
    sol = solve(p, SolveOptions(method="simplex"))
    if sol.optimal:
        assert check_solution(p, sol).ok()
    elif sol.status is Status.INFEASIBLE:
        assert farkas_value(p, sol.farkas) > 0


def test_problem_assembly_sums_duplicates_and_rejects_bad_input():
    p = LpProblem(c=[1.0, 0.0], rows=[0, 0, 0], cols=[1, 0, 1], vals=[1.0, 2.0, 3.0],
                  senses=["<="], b=[5.0], lb=[0, 0], ub=[1, 1])
    assert p.matrix.toarray().tolist() == [[2.0, 4.0]]
    with pytest.raises(ValueError):
        LpProblem(c=[1.0], rows=[0], cols=[3], vals=[1.0], senses=[LE], b=[1.0], lb=[0], ub=[1])
    with pytest.raises(ValueError):
        LpProblem(c=[1.0], rows=[0], cols=[0], vals=[1.0], senses=[LE], b=[1.0], lb=[2], ub=[1])


def test_builder_names_and_broadcast():
    bld = LpBuilder("toy")
    x = bld.add_vars("x", (2, 3), lb=0, ub=1)
    z = bld.add_vars("z", 3, lb=0)
    rows = bld.add_rows("link", [(1.0, x), (-1.0, z[None, :])], sense=LE, rhs=0.0)
    p = bld.build(c=np.ones(bld.n_vars))
    assert p.n_vars == 9 and p.n_rows == 6 and rows.shape == (2, 3)
    assert p.var_name(int(x[1, 2])) == "x_1_2"
    assert p.row_name(int(rows[0, 1])) == "link_0_1"


def test_lp_dump_round_trips_through_external_reader(tmp_path):
    highspy = pytest.importorskip("highspy")
    rng = np.random.default_rng(11)
    for _ in range(5):
        p = from_dense(*random_box_lp(rng))
        path = tmp_path / "m.lp"
        write_lp(p, path)
        h = highspy.Highs()
        h.silent()
        h.readModel(str(path))
        h.run()
        ours = highs(p)
        status = h.getModelStatus()
        if ours.optimal:
            assert status == highspy.HighsModelStatus.kOptimal
            assert h.getInfo().objective_function_value == pytest.approx(ours.objective, rel=1e-9, abs=1e-9)
        else:
            assert status != highspy.HighsModelStatus.kOptimal


def test_lp_dump_is_stable():
    p = from_dense([1.0, -0.1], [[1.0, 3.0]], [GE], [0.3], ub=[1.0, np.inf])
    a, b = io.StringIO(), io.StringIO()
    write_lp(p, a)
    write_lp(p, b)
    assert a.getvalue() == b.getvalue()
    assert "0.1" in a.getvalue() and "0.3" in a.getvalue()
