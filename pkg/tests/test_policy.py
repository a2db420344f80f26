import numpy as np
import pytest

from pwlpolicy import policy as pol
from pwlpolicy import problems as pb
from pwlpolicy import solvers
from pwlpolicy.errors import OutsideHullError, ValidationError


def golden_policy():
    p = pb.builtin_problem("example1")
    thetas = np.array([[0.0], [0.9], [1.1], [2.0]])
    xs = np.stack([solvers.solve_lp(p, th, solvers.LOWEST_POINT).x for th in thetas])
    return pol.fit((thetas, xs), 1)


# --- closed form -----------------------------------------------------------
# For samples at breakpoints (theta_l, theta_r) around the kink at 1:
#   theta <= theta_l -> (0, 1); theta >= theta_r -> (1, 0);
#   in between, the linear blend (w, 1-w) with w = (theta-theta_l)/(theta_r-theta_l).


def test_closed_form_plateaus():
    assert np.array_equal(pol.closed_form_example1(0.3, 0.9, 1.1), [0.0, 1.0])
    assert np.array_equal(pol.closed_form_example1(1.7, 0.9, 1.1), [1.0, 0.0])
    assert np.array_equal(pol.closed_form_example1(0.9, 0.9, 1.1), [0.0, 1.0])


def test_closed_form_interpolation_value():
    # hand-computed: w = (1.05-0.9)/0.2 = 0.75
    got = pol.closed_form_example1(1.05, 0.9, 1.1)
    assert np.allclose(got, [0.75, 0.25], atol=1e-12)


def test_closed_form_validates_breakpoints():
    with pytest.raises(ValidationError):
        pol.closed_form_example1(0.5, 1.2, 1.1)     # theta_l > theta_r
    with pytest.raises(ValidationError):
        pol.closed_form_example1(0.5, 0.2, 0.8)     # kink not inside


def test_golden_policy_matches_closed_form():
    pp = golden_policy()
    for th in np.linspace(0.0, 2.0, 101):
        want = pol.closed_form_example1(th, 0.9, 1.1)
        got = pol.evaluate(pp, [th])
        assert np.allclose(got, want, atol=1e-12)


def test_fit_requires_enough_distinct_points():
    thetas = np.array([[0.0], [0.0], [1e-15]])
    xs = np.zeros((3, 2))
    with pytest.raises((ValidationError, Exception)):
        pol.fit((thetas, xs), 1)


def test_fit_deduplicates_keep_first():
    thetas = np.array([[0.0], [1.0], [0.0], [2.0]])
    xs = np.array([[5.0], [6.0], [99.0], [7.0]])
    pp = pol.fit((thetas, xs), 1)
    assert pp.triangulation.num_vertices == 3
    assert pol.evaluate(pp, [0.0])[0] == 5.0      # first occurrence wins


def test_fit_accepts_pair_and_list_forms():
    thetas = np.array([[0.0], [1.0], [2.0]])
    xs = np.array([[0.0], [2.0], [4.0]])
    a = pol.fit((thetas, xs), 1)
    b = pol.fit(list(zip(thetas, xs)), 1)
    grid = np.linspace(0, 2, 21).reshape(-1, 1)
    assert np.allclose(pol.evaluate_many(a, grid), pol.evaluate_many(b, grid))


def test_evaluate_is_exact_at_vertices():
    pp = golden_policy()
    verts = pp.triangulation.vertices
    for i in range(verts.shape[0]):
        lam_x = pol.evaluate(pp, verts[i])
        assert np.allclose(lam_x, pp.solutions[i], atol=1e-12)


def test_evaluate_many_matches_scalar_loop():
    pp = golden_policy()
    grid = np.linspace(0.0, 2.0, 57).reshape(-1, 1)
    batch = pol.evaluate_many(pp, grid)
    for i, th in enumerate(grid):
        assert np.allclose(batch[i], pol.evaluate(pp, th), atol=1e-14)


def test_evaluate_outside_hull_raises():
    pp = golden_policy()
    with pytest.raises(OutsideHullError):
        pol.evaluate(pp, [2.5])


def test_policy_interpolates_linearly_in_2d():
    # x(theta) = A theta + b is reproduced exactly by barycentric interpolation
    rng = np.random.default_rng(3)
    thetas = rng.uniform(0, 1, size=(20, 2))
    A = np.array([[1.0, -2.0], [0.5, 4.0], [3.0, 0.0]])
    b = np.array([0.1, -0.2, 0.3])
    xs = thetas @ A.T + b
    pp = pol.fit((thetas, xs), 2)
    queries = rng.uniform(0.2, 0.8, size=(50, 2))
    want = queries @ A.T + b
    got = pol.evaluate_many(pp, queries)
    assert np.allclose(got, want, atol=1e-9)


def test_json_round_trip(tmp_path):
    pp = golden_policy()
    path = tmp_path / "pp.json"
    pol.save_policy(pp, path)
    qq = pol.load_policy(path)
    assert np.array_equal(qq.solutions, pp.solutions)
    grid = np.linspace(0, 2, 31).reshape(-1, 1)
    assert np.array_equal(pol.evaluate_many(qq, grid), pol.evaluate_many(pp, grid))
    assert qq.mesh_norm == pp.mesh_norm
