import numpy as np
import pytest

from pwlpolicy import problems as pb
from pwlpolicy import solvers
from pwlpolicy.errors import ValidationError
from pwlpolicy.solvers.simplex import (enumerate_optimal_vertices,
                                       has_alternate_optima, solve_inequality_lp)

from oracles import lp_by_vertex_enumeration


def triangle():
    return pb.builtin_problem("example1")


# --- hand-derived values on the triangle instance ------------------------
# feasible set: x1 + x2 <= 1, x >= 0; cost c(theta) = (-theta, -1).
# theta < 1  -> unique optimum (0, 1), value -1
# theta > 1  -> unique optimum (1, 0), value -theta
# theta = 1  -> the whole edge between them is optimal


def test_triangle_below_kink():
    res = solvers.solve_lp(triangle(), [0.5])
    assert res.ok
    assert np.allclose(res.x, [0.0, 1.0], atol=1e-12)
    assert res.objective == pytest.approx(-1.0, abs=1e-12)


def test_triangle_above_kink():
    res = solvers.solve_lp(triangle(), [2.0])
    assert np.allclose(res.x, [1.0, 0.0], atol=1e-12)
    assert res.objective == pytest.approx(-2.0, abs=1e-12)


def test_triangle_tie_rule_picks_lowest_vertex():
    res = solvers.solve_lp(triangle(), [1.0], solvers.LOWEST_POINT)
    # both (0,1) and (1,0) are optimal; the rule takes the lexicographic min
    assert np.allclose(res.x, [0.0, 1.0], atol=1e-12)
    assert res.objective == pytest.approx(-1.0, abs=1e-12)


def test_triangle_tie_arbitrary_reaches_both_vertices():
    seen = set()
    for s in range(40):
        sampler = solvers.SamplerPolicy(mode=solvers.MODE_ARBITRARY, seed=s)
        res = solvers.solve_lp(triangle(), [1.0], sampler)
        seen.add(tuple(np.round(res.x, 9)))
    assert seen == {(0.0, 1.0), (1.0, 0.0)}


def test_reduced_cost_certificate_on_triangle():
    res = solvers.solve_lp(triangle(), [0.7])
    assert res.meta["min_reduced_cost"] >= -1e-9


def test_matches_vertex_enumeration_on_seeded_instances():
    rng = np.random.default_rng(42)
    for trial in range(30):
        n = int(rng.integers(2, 5))
        p = pb.generate_random_lp(n, n, seed=trial)
        th = rng.uniform(-4, 4, size=n)
        res = solvers.solve_lp(p, th)
        assert res.ok
        G, h = pb.constraint_rows(p, th)
        x_ref, val_ref = lp_by_vertex_enumeration(pb.cost_vector(p, th), G, h)
        assert val_ref is not None
        assert res.objective == pytest.approx(val_ref, abs=1e-7)
        assert np.all(G @ res.x <= h + 1e-8)


def test_infeasible_detected():
    # x <= -1 and x >= 0 cannot hold together
    G = np.array([[1.0], [-1.0]])
    h = np.array([-1.0, 0.0])
    res = solve_inequality_lp(np.array([1.0]), G, h)
    assert res.status == "infeasible"


def test_unbounded_detected():
    res = solve_inequality_lp(np.array([-1.0]), np.array([[-1.0]]), np.array([0.0]))
    assert res.status == "unbounded"


def test_alternate_optima_flagged_and_enumerated():
    # cost (-1,-1) on the triangle x1+x2 <= 1, x >= 0: the whole hypotenuse
    # is optimal, so the optimal-face enumeration must find both endpoints
    G = np.array([[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    h = np.array([1.0, 0.0, 0.0])
    sol = solve_inequality_lp(np.array([-1.0, -1.0]), G, h)
    assert sol.status == "optimal"
    assert has_alternate_optima(sol)
    verts, truncated = enumerate_optimal_vertices(sol)
    assert not truncated
    rounded = {tuple(np.round(v, 9)) for v in verts}
    assert {(0.0, 1.0), (1.0, 0.0)} <= rounded


def test_unique_optimum_single_vertex_enumeration():
    G = np.array([[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    h = np.array([1.0, 0.0, 0.0])
    sol = solve_inequality_lp(np.array([0.5, -1.0]), G, h)
    verts, truncated = enumerate_optimal_vertices(sol)
    assert not truncated
    assert len(verts) == 1
    assert np.allclose(verts[0], [0.0, 1.0], atol=1e-9)


def test_wrong_kind_rejected():
    p = pb.builtin_problem("example2")
    with pytest.raises(ValidationError):
        solvers.solve_lp(p, [0.5])


def test_solution_deterministic_across_calls():
    p = pb.generate_random_lp(4, 4, seed=8)
    th = np.array([0.3, -1.2, 2.0, 0.0])
    a = solvers.solve_lp(p, th)
    b = solvers.solve_lp(p, th)
    assert np.array_equal(a.x, b.x)
    assert a.objective == b.objective
