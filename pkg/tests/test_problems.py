import json

import numpy as np
import pytest

from pwlpolicy import problems as pb
from pwlpolicy.errors import DimensionMismatchError, ValidationError


def test_linear_data_validates_shapes():
    with pytest.raises(DimensionMismatchError):
        pb.LinearInequalityData(c=np.zeros(2), A=np.zeros((3, 2)), b0=np.zeros(4),
                                B=np.zeros((3, 1)))


def test_linear_arrays_are_write_protected():
    p = pb.builtin_problem("example1")
    with pytest.raises(ValueError):
        p.data.A[0, 0] = 99.0


def test_quadratic_requires_psd():
    P = np.array([[1.0, 0.0], [0.0, -0.5]])
    with pytest.raises(ValidationError):
        pb.QuadraticInequalityData(P=P, q=np.zeros(2), G=np.zeros((1, 2)),
                                   b0=np.zeros(1), B=np.zeros((1, 1)))


def test_quadratic_requires_symmetry():
    P = np.array([[1.0, 0.3], [0.0, 1.0]])
    with pytest.raises(ValidationError):
        pb.QuadraticInequalityData(P=P, q=np.zeros(2), G=np.zeros((1, 2)),
                                   b0=np.zeros(1), B=np.zeros((1, 1)))


def test_objective_registry_contract_keys():
    assert set(pb.OBJECTIVE_REGISTRY) == {"example2", "example3", "example1_lp"}


def test_double_well_values():
    f = pb.OBJECTIVE_REGISTRY["example2"]
    assert f(np.array([1.0]), np.array([0.3])) == 0.0
    assert f(np.array([3.0]), np.array([0.3])) == 0.0
    assert f(np.array([2.0]), np.array([0.9])) == 1.0


def test_tilted_double_well_breaks_tie():
    f = pb.OBJECTIVE_REGISTRY["example3"]
    # f(x,theta) = (x-1)^2 (x-3)^2 - theta (x-3): at theta=0.5 the right well wins
    assert f(np.array([3.0]), np.array([0.5])) == 0.0
    assert f(np.array([1.0]), np.array([0.5])) == pytest.approx(1.0)
    assert f(np.array([1.0]), np.array([-0.5])) == pytest.approx(-1.0)


def test_rhs_vector_applies_margin():
    p = pb.builtin_problem("example1")
    tightened = pb.with_margin(p, 0.25)
    base = pb.rhs_vector(p, np.array([1.2]))
    shifted = pb.rhs_vector(tightened, np.array([1.2]))
    assert np.allclose(base - shifted, 0.25)
    assert tightened.margin == 0.25
    assert p.margin == 0.0


def test_cost_vector_parametric():
    p = pb.builtin_problem("example1")
    c = pb.cost_vector(p, np.array([1.7]))
    assert np.allclose(c, [-1.7, -1.0])


def test_constraint_rows_include_box():
    p = pb.builtin_problem("example1")
    G, h = pb.constraint_rows(p, np.array([0.5]))
    assert G.shape[0] == 3 + 4      # three instance rows plus the +-box
    assert np.all(h[-4:] == pb.BOX_BOUND)


def test_feasibility_residual_linear():
    p = pb.builtin_problem("example1")
    assert pb.feasibility_residual(p, np.array([0.25, 0.25]), np.array([1.0])) == 0.0
    r = pb.feasibility_residual(p, np.array([0.8, 0.8]), np.array([1.0]))
    assert r == pytest.approx(0.6)  # row x1+x2 <= 1 violated by 0.6


def test_feasibility_residual_finite_set():
    p = pb.builtin_problem("example2")
    assert pb.feasibility_residual(p, np.array([3.0]), np.array([0.5])) == 0.0
    assert pb.feasibility_residual(p, np.array([2.2]), np.array([0.5])) == pytest.approx(0.8)


def test_sample_thetas_uniform_in_domain_and_deterministic():
    p = pb.builtin_problem("example1")
    a = pb.sample_thetas(p, 50, "uniform", seed=3)
    b = pb.sample_thetas(p, 50, "uniform", seed=3)
    assert np.array_equal(a, b)
    assert a.shape == (50, 1)
    assert a.min() >= 0.0 and a.max() <= 2.0


def test_sample_thetas_normal_respects_domain():
    p = pb.generate_random_lp(3, 3, seed=1)
    th = pb.sample_thetas(p, 200, "normal", seed=0)
    dom = p.theta_domain
    assert np.all(th >= dom[:, 0]) and np.all(th <= dom[:, 1])


def test_sample_thetas_rejects_unknown_distribution():
    p = pb.builtin_problem("example1")
    with pytest.raises(ValidationError):
        pb.sample_thetas(p, 5, "cauchy", seed=0)


def test_generated_lp_interior_certificate_has_slack():
    p = pb.generate_random_lp(4, 4, seed=11)
    x0 = p.data.interior_point
    rng = np.random.default_rng(0)
    for _ in range(20):
        th = rng.uniform(-4, 4, size=4)
        slack = pb.rhs_vector(p, th) - p.data.A @ x0
        assert slack.min() > 0.0


def test_generated_lp_not_box_bounded():
    # the recession-cone check keeps optima away from the +-1000 safety box
    from pwlpolicy import solvers
    p = pb.generate_random_lp(5, 5, seed=2)
    th = np.zeros(5)
    res = solvers.solve_exact(p, th)
    assert res.ok
    assert np.abs(res.x).max() < pb.BOX_BOUND - 1.0


def test_generated_qp_strictly_convex():
    p = pb.generate_random_qp(3, 3, seed=5)
    eigs = np.linalg.eigvalsh(p.data.P)
    assert eigs.min() >= 1e-3 - 1e-12


def test_generator_requires_square_coupling():
    with pytest.raises(ValidationError):
        pb.generate_random_lp(3, 4, seed=0, k=2)


def test_problem_json_round_trip(tmp_path):
    for name in ("example1", "example2", "example3"):
        p = pb.builtin_problem(name)
        path = tmp_path / f"{name}.json"
        pb.save_problem(p, path)
        q = pb.load_problem(path)
        assert q.kind == p.kind and q.n == p.n and q.k == p.k
        assert np.array_equal(q.theta_domain, p.theta_domain)
        th = np.full(p.k, 0.5)
        x = np.full(p.n, 0.25)
        assert pb.evaluate_objective(q, x, th) == pb.evaluate_objective(p, x, th)


def test_problem_json_round_trip_generated(tmp_path):
    p = pb.generate_random_qp(3, 3, seed=9)
    path = tmp_path / "qp.json"
    pb.save_problem(p, path)
    q = pb.load_problem(path)
    assert np.array_equal(q.data.P, p.data.P)
    assert np.array_equal(q.data.interior_point, p.data.interior_point)
    # file is plain JSON with the documented top-level fields
    obj = json.loads(path.read_text())
    assert {"kind", "n", "k", "payload", "theta_domain", "seed"} <= set(obj)


def test_builtin_unknown_name():
    with pytest.raises(ValidationError):
        pb.builtin_problem("example99")


def test_check_theta_dimension():
    p = pb.builtin_problem("example1")
    with pytest.raises(DimensionMismatchError):
        pb.check_theta(p, np.array([0.1, 0.2]))


def test_generator_rejects_empty_request():
    with pytest.raises(ValidationError):
        pb.generate_random_lp(0, 0, seed=0)
    with pytest.raises(ValidationError):
        pb.generate_random_qp(2, 0, seed=0)
