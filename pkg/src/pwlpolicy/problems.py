"""Parametric optimization problems  min_x f(x, theta)  s.t.  x in C(theta).

Three problem kinds are supported:

* ``linear_inequality``    min c(theta)'x  s.t. A x <= b(theta)
* ``quadratic_inequality`` min 0.5 x'P x + q'x  s.t. G x <= b(theta)
* ``finite_set``           min f(x, theta) over a fixed finite point set

For the inequality kinds the right-hand side is affine in the parameter with
an optional scalar margin t,

    b(theta) = b0 + B theta - t * 1,

so increasing t uniformly tightens every constraint.  The linear cost may also
depend affinely on theta, c(theta) = c + C theta.  To keep feasible sets
compact, box rows |x_i| <= BOX_BOUND are appended whenever constraint matrices
are assembled; the margin is never applied to these synthetic rows.

All randomness flows through ``numpy.random.default_rng`` seeded explicitly,
so generators are bit-reproducible.  Problem data arrays are frozen
(write-protected) after construction and instances are safe to share across
threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import DimensionMismatchError, GenerationError, ValidationError

KIND_LINEAR = "linear_inequality"
KIND_QUADRATIC = "quadratic_inequality"
KIND_FINITE = "finite_set"
KINDS = (KIND_LINEAR, KIND_QUADRATIC, KIND_FINITE)

#: Half-width of the synthetic box |x_i| <= BOX_BOUND appended to inequality
#: problems so that feasible sets (and hence optima) stay bounded.
BOX_BOUND = 1000.0

#: Tolerance used when deciding whether a point satisfies the constraints.
FEASIBILITY_TOL = 1e-8


def _as_float_array(a, shape=None, name="array"):
    out = np.asarray(a, dtype=float)
    if shape is not None and out.shape != shape:
        raise DimensionMismatchError(f"{name}: expected shape {shape}, got {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValidationError(f"{name} contains non-finite entries")
    return out


def _freeze(*arrays):
    for a in arrays:
        if a is not None:
            a.flags.writeable = False


@dataclass
class LinearInequalityData:
    """Data for min c(theta)'x s.t. A x <= b0 + B theta - t."""

    c: np.ndarray                       # (n,) base cost
    A: np.ndarray                       # (mc, n)
    b0: np.ndarray                      # (mc,)
    B: np.ndarray                       # (mc, k)
    t: float = 0.0
    C: Optional[np.ndarray] = None      # (n, k) parametric cost term, optional
    interior_point: Optional[np.ndarray] = None  # certified strictly feasible x

    def __post_init__(self):
        self.c = _as_float_array(self.c, name="c")
        self.A = _as_float_array(self.A, name="A")
        self.b0 = _as_float_array(self.b0, name="b0")
        self.B = _as_float_array(self.B, name="B")
        self.t = float(self.t)
        if self.C is not None:
            self.C = _as_float_array(self.C, name="C")
        if self.interior_point is not None:
            self.interior_point = _as_float_array(self.interior_point, name="interior_point")
        mc, n = self.A.shape
        if self.c.shape != (n,):
            raise DimensionMismatchError("c length does not match A columns")
        if self.b0.shape != (mc,):
            raise DimensionMismatchError("b0 length does not match A rows")
        if self.B.shape[0] != mc:
            raise DimensionMismatchError("B rows do not match A rows")
        if self.C is not None and self.C.shape != (n, self.B.shape[1]):
            raise DimensionMismatchError("C must have shape (n, k)")
        _freeze(self.c, self.A, self.b0, self.B, self.C, self.interior_point)


@dataclass
class QuadraticInequalityData:
    """Data for min 0.5 x'P x + q'x s.t. G x <= b0 + B theta - t."""

    P: np.ndarray                       # (n, n) symmetric PSD
    q: np.ndarray                       # (n,)
    G: np.ndarray                       # (mc, n)
    b0: np.ndarray                      # (mc,)
    B: np.ndarray                       # (mc, k)
    t: float = 0.0
    interior_point: Optional[np.ndarray] = None

    def __post_init__(self):
        self.P = _as_float_array(self.P, name="P")
        self.q = _as_float_array(self.q, name="q")
        self.G = _as_float_array(self.G, name="G")
        self.b0 = _as_float_array(self.b0, name="b0")
        self.B = _as_float_array(self.B, name="B")
        self.t = float(self.t)
        if self.interior_point is not None:
            self.interior_point = _as_float_array(self.interior_point, name="interior_point")
        n = self.q.shape[0]
        if self.P.shape != (n, n):
            raise DimensionMismatchError("P must be (n, n)")
        if not np.allclose(self.P, self.P.T, atol=1e-10):
            raise ValidationError("P must be symmetric")
        if np.linalg.eigvalsh(self.P).min() < -1e-10:
            raise ValidationError("P must be positive semidefinite")
        if self.G.shape[1] != n:
            raise DimensionMismatchError("G columns do not match q length")
        if self.b0.shape != (self.G.shape[0],):
            raise DimensionMismatchError("b0 length does not match G rows")
        if self.B.shape[0] != self.G.shape[0]:
            raise DimensionMismatchError("B rows do not match G rows")
        _freeze(self.P, self.q, self.G, self.b0, self.B, self.interior_point)


@dataclass
class FiniteSetData:
    """Data for minimizing a registered objective over a fixed point set."""

    points: np.ndarray                  # (p, n)
    objective: str                      # key into OBJECTIVE_REGISTRY

    def __post_init__(self):
        self.points = _as_float_array(self.points, name="points")
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise DimensionMismatchError("points must be a non-empty (p, n) array")
        if self.objective not in OBJECTIVE_REGISTRY:
            raise ValidationError(f"unknown objective {self.objective!r}; "
                                  f"known: {sorted(OBJECTIVE_REGISTRY)}")
        _freeze(self.points)


ProblemData = Union[LinearInequalityData, QuadraticInequalityData, FiniteSetData]


@dataclass
class ParametricProblem:
    kind: str
    n: int
    k: int
    data: ProblemData
    theta_domain: np.ndarray            # (k, 2) rows [lo, hi]
    seed: Optional[int] = None
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown problem kind {self.kind!r}")
        if self.n < 1 or self.k < 1:
            raise ValidationError("n and k must be >= 1")
        self.theta_domain = _as_float_array(self.theta_domain, shape=(self.k, 2),
                                            name="theta_domain")
        if np.any(self.theta_domain[:, 1] <= self.theta_domain[:, 0]):
            raise ValidationError("theta_domain rows must satisfy lo < hi")
        _freeze(self.theta_domain)
        if self.kind == KIND_LINEAR:
            if not isinstance(self.data, LinearInequalityData):
                raise ValidationError("kind/data mismatch")
            if self.data.A.shape[1] != self.n or self.data.B.shape[1] != self.k:
                raise DimensionMismatchError("data shapes inconsistent with (n, k)")
        elif self.kind == KIND_QUADRATIC:
            if not isinstance(self.data, QuadraticInequalityData):
                raise ValidationError("kind/data mismatch")
            if self.data.q.shape[0] != self.n or self.data.B.shape[1] != self.k:
                raise DimensionMismatchError("data shapes inconsistent with (n, k)")
        else:
            if not isinstance(self.data, FiniteSetData):
                raise ValidationError("kind/data mismatch")
            if self.data.points.shape[1] != self.n:
                raise DimensionMismatchError("points width does not match n")

    @property
    def margin(self) -> float:
        return getattr(self.data, "t", 0.0)


# ---------------------------------------------------------------------------
# finite-set objective registry
# ---------------------------------------------------------------------------

def _double_well(x, theta):
    return (x[0] - 1.0) ** 2 * (x[0] - 3.0) ** 2


def _tilted_double_well(x, theta):
    return (x[0] - 1.0) ** 2 * (x[0] - 3.0) ** 2 - theta[0] * (x[0] - 3.0)


def _weighted_sum(x, theta):
    return -theta[0] * x[0] - x[1]


#: Named objectives usable by ``finite_set`` problems.  Each maps
#: (x (n,), theta (k,)) -> float.  The key strings appear in serialized
#: problem files and are therefore part of the file-format contract.
OBJECTIVE_REGISTRY: dict[str, Callable[[np.ndarray, np.ndarray], float]] = {
    "example2": _double_well,
    "example3": _tilted_double_well,
    "example1_lp": _weighted_sum,
}


# ---------------------------------------------------------------------------
# parameter handling and constraint assembly
# ---------------------------------------------------------------------------

def check_theta(problem: ParametricProblem, theta) -> np.ndarray:
    """Coerce theta to a (k,) float array (scalars allowed when k == 1)."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if th.shape != (problem.k,):
        raise DimensionMismatchError(
            f"theta has shape {np.shape(theta)}, expected ({problem.k},)")
    return th


def theta_in_domain(problem: ParametricProblem, theta) -> bool:
    th = check_theta(problem, theta)
    dom = problem.theta_domain
    return bool(np.all(th >= dom[:, 0]) and np.all(th <= dom[:, 1]))


def cost_vector(problem: ParametricProblem, theta) -> np.ndarray:
    """Linear cost c(theta) = c + C theta for a linear_inequality problem."""
    if problem.kind != KIND_LINEAR:
        raise ValidationError("cost_vector is defined for linear_inequality problems")
    th = check_theta(problem, theta)
    d = problem.data
    c = d.c.copy()
    if d.C is not None:
        c += d.C @ th
    return c


def rhs_vector(problem: ParametricProblem, theta) -> np.ndarray:
    """Right-hand side b(theta) = b0 + B theta - t (constraint rows only)."""
    if problem.kind == KIND_FINITE:
        raise ValidationError("finite_set problems have no inequality rows")
    th = check_theta(problem, theta)
    d = problem.data
    return d.b0 + d.B @ th - d.t


def constraint_rows(problem: ParametricProblem, theta):
    """Full inequality system (G, h) at theta, box rows included.

    Returns (G, h) with G of shape (mc + 2n, n).  The trailing 2n rows encode
    x_i <= BOX_BOUND and -x_i <= BOX_BOUND and do not carry the margin.
    """
    if problem.kind == KIND_FINITE:
        raise ValidationError("finite_set problems have no inequality rows")
    d = problem.data
    Gc = d.A if problem.kind == KIND_LINEAR else d.G
    h = rhs_vector(problem, theta)
    n = problem.n
    eye = np.eye(n)
    G = np.vstack([Gc, eye, -eye])
    h = np.concatenate([h, np.full(2 * n, BOX_BOUND)])
    return G, h


def evaluate_objective(problem: ParametricProblem, x, theta) -> float:
    th = check_theta(problem, theta)
    xv = np.asarray(x, dtype=float)
    if xv.shape != (problem.n,):
        raise DimensionMismatchError(f"x has shape {xv.shape}, expected ({problem.n},)")
    d = problem.data
    if problem.kind == KIND_LINEAR:
        return float(cost_vector(problem, th) @ xv)
    if problem.kind == KIND_QUADRATIC:
        return float(0.5 * xv @ d.P @ xv + d.q @ xv)
    return float(OBJECTIVE_REGISTRY[d.objective](xv, th))


def feasibility_residual(problem: ParametricProblem, x, theta) -> float:
    """Max constraint violation at x; 0.0 when x is feasible for C(theta).

    For finite_set problems this is the distance to the nearest admissible
    point.  The value is exactly 0.0 (not merely small) for feasible x, so
    ``residual <= FEASIBILITY_TOL`` and ``residual == 0`` agree up to the
    package-wide tolerance.
    """
    th = check_theta(problem, theta)
    xv = np.asarray(x, dtype=float)
    if xv.shape != (problem.n,):
        raise DimensionMismatchError(f"x has shape {xv.shape}, expected ({problem.n},)")
    if problem.kind == KIND_FINITE:
        dists = np.linalg.norm(problem.data.points - xv, axis=1)
        return float(dists.min())
    G, h = constraint_rows(problem, th)
    return float(max(0.0, np.max(G @ xv - h)))


def with_margin(problem: ParametricProblem, t: float) -> ParametricProblem:
    """Copy of an inequality problem with its margin replaced by t."""
    if problem.kind == KIND_FINITE:
        raise ValidationError("finite_set problems do not take a margin")
    d = problem.data
    if problem.kind == KIND_LINEAR:
        data = LinearInequalityData(c=d.c, A=d.A, b0=d.b0, B=d.B, t=t, C=d.C,
                                    interior_point=d.interior_point)
    else:
        data = QuadraticInequalityData(P=d.P, q=d.q, G=d.G, b0=d.b0, B=d.B, t=t,
                                       interior_point=d.interior_point)
    return ParametricProblem(kind=problem.kind, n=problem.n, k=problem.k, data=data,
                             theta_domain=problem.theta_domain, seed=problem.seed,
                             name=problem.name)


def sample_thetas(problem: ParametricProblem, m: int, distribution: str = "uniform",
                  seed: int = 0) -> np.ndarray:
    """Draw m parameter vectors, shape (m, k).

    ``uniform`` draws from the theta domain box; ``normal`` draws standard
    normals and redraws any vector that escapes the domain (the certificates
    produced by the generators only cover the box).
    """
    rng = np.random.default_rng(seed)
    dom = problem.theta_domain
    if distribution == "uniform":
        return rng.uniform(dom[:, 0], dom[:, 1], size=(m, problem.k))
    if distribution != "normal":
        raise ValidationError(f"unknown distribution {distribution!r}")
    out = np.empty((m, problem.k))
    filled = 0
    while filled < m:
        cand = rng.standard_normal((2 * (m - filled) + 8, problem.k))
        ok = np.all((cand >= dom[:, 0]) & (cand <= dom[:, 1]), axis=1)
        take = cand[ok][: m - filled]
        out[filled:filled + take.shape[0]] = take
        filled += take.shape[0]
    return out


# ---------------------------------------------------------------------------
# random instance generators
# ---------------------------------------------------------------------------

_GEN_DOMAIN_HALF_WIDTH = 4.0
_GEN_SLACK = 0.1
_GEN_ATTEMPTS = 1000


def _certify_interior(M: np.ndarray, worst_rhs: np.ndarray, rng) -> Optional[np.ndarray]:
    """Find x0 with M x0 <= worst_rhs - slack, or None.

    ``worst_rhs`` is the row-wise minimum of b(theta) over the theta box, so
    any certified x0 is strictly feasible for every theta in the domain.
    """
    target = worst_rhs - 5 * _GEN_SLACK
    mrows, n = M.shape
    if mrows == n:
        try:
            x0 = np.linalg.solve(M, target)
        except np.linalg.LinAlgError:
            x0 = None
        if x0 is not None and np.max(np.abs(x0)) < 0.5 * BOX_BOUND \
                and np.all(M @ x0 <= worst_rhs - _GEN_SLACK):
            return x0
    # Fallback: look for a direction u with M u < 0 and push along it.
    for _ in range(20):
        u = rng.standard_normal(n)
        Mu = M @ u
        if np.all(Mu < -1e-3):
            scale = np.max((target - 0.0) / Mu)  # smallest stretch covering all rows
            scale = max(scale, 1.0)
            x0 = scale * u
            if np.max(np.abs(x0)) < 0.5 * BOX_BOUND and np.all(M @ x0 <= worst_rhs - _GEN_SLACK):
                return x0
    return None


def _worst_case_rhs(B: np.ndarray, b0: np.ndarray, dom: np.ndarray, t: float) -> np.ndarray:
    lo, hi = dom[:, 0], dom[:, 1]
    # min over the box of (B theta)_i is attained at a corner, coordinate-wise.
    worst = np.where(B > 0, B * lo, B * hi).sum(axis=1)
    return b0 + worst - t


def _objective_bounded_on_cone(c: np.ndarray, A: np.ndarray) -> bool:
    """True when the cost has no descent direction in the recession cone.

    Checked by minimising c.d over {A d <= 0, |d_i| <= 1}; a negative optimum
    scales to arbitrarily good feasible points, i.e. the instance is only
    bounded by the safety box and its optima would sit at magnitude ~1000.
    """
    from .solvers.simplex import solve_inequality_lp  # deferred: import cycle
    m_c, n = A.shape
    G = np.vstack([A, np.eye(n), -np.eye(n)])
    h = np.concatenate([np.zeros(m_c), np.ones(2 * n)])
    res = solve_inequality_lp(c, G, h)
    return res.status == "optimal" and res.objective >= -1e-7


def generate_random_lp(n: int, m_c: int, seed: int, k: Optional[int] = None) -> ParametricProblem:
    """Random linear_inequality instance, feasible for every theta in the box.

    The right-hand side is b(theta) = theta (so k defaults to m_c and B = I),
    the domain is [-4, 4]^k, and an interior point certificate is stored on
    the instance.  Draws are retried until the certificate exists and the
    cost is bounded below on the constraint cone (so optima are determined
    by the instance rows, not the safety box).
    """
    if n < 1 or m_c < 1:
        raise ValidationError("generator needs n >= 1 and m_c >= 1")
    if k is None:
        k = m_c
    if k != m_c:
        raise ValidationError("generator couples rows to parameters; need k == m_c")
    rng = np.random.default_rng(seed)
    dom = np.tile([-_GEN_DOMAIN_HALF_WIDTH, _GEN_DOMAIN_HALF_WIDTH], (k, 1))
    for _ in range(_GEN_ATTEMPTS):
        A = rng.standard_normal((m_c, n))
        c = rng.standard_normal(n)
        b0 = np.zeros(m_c)
        B = np.eye(m_c, k)
        if not _objective_bounded_on_cone(c, A):
            continue
        x0 = _certify_interior(A, _worst_case_rhs(B, b0, dom, 0.0), rng)
        if x0 is None:
            continue
        data = LinearInequalityData(c=c, A=A, b0=b0, B=B, t=0.0, interior_point=x0)
        return ParametricProblem(kind=KIND_LINEAR, n=n, k=k, data=data,
                                 theta_domain=dom, seed=seed,
                                 name=f"random-lp-n{n}-m{m_c}-s{seed}")
    raise GenerationError(f"no certified LP instance after {_GEN_ATTEMPTS} attempts")


def generate_random_qp(n: int, m_c: int, seed: int, k: Optional[int] = None) -> ParametricProblem:
    """Random strictly convex quadratic_inequality instance, certified feasible.

    P = M'M + 1e-3 I for a standard normal M, so the smallest eigenvalue is
    at least 1e-3 by construction.
    """
    if n < 1 or m_c < 1:
        raise ValidationError("generator needs n >= 1 and m_c >= 1")
    if k is None:
        k = m_c
    if k != m_c:
        raise ValidationError("generator couples rows to parameters; need k == m_c")
    rng = np.random.default_rng(seed)
    dom = np.tile([-_GEN_DOMAIN_HALF_WIDTH, _GEN_DOMAIN_HALF_WIDTH], (k, 1))
    for _ in range(_GEN_ATTEMPTS):
        M = rng.standard_normal((n, n))
        P = M.T @ M + 1e-3 * np.eye(n)
        q = rng.standard_normal(n)
        G = rng.standard_normal((m_c, n))
        b0 = np.zeros(m_c)
        B = np.eye(m_c, k)
        x0 = _certify_interior(G, _worst_case_rhs(B, b0, dom, 0.0), rng)
        if x0 is None:
            continue
        data = QuadraticInequalityData(P=P, q=q, G=G, b0=b0, B=B, t=0.0,
                                       interior_point=x0)
        return ParametricProblem(kind=KIND_QUADRATIC, n=n, k=k, data=data,
                                 theta_domain=dom, seed=seed,
                                 name=f"random-qp-n{n}-m{m_c}-s{seed}")
    raise GenerationError(f"no certified QP instance after {_GEN_ATTEMPTS} attempts")


# ---------------------------------------------------------------------------
# built-in instances
# ---------------------------------------------------------------------------

def builtin_problem(name: str) -> ParametricProblem:
    """Small named instances used by the experiment harness and tests.

    * ``example1``  n=2, k=1: min -theta x1 - x2 over the unit triangle
      x1 + x2 <= 1, x >= 0, theta in [0, 2].  The optimizer jumps from (0, 1)
      to (1, 0) as theta crosses 1, where the whole face is optimal.
    * ``example2``  n=1, k=1: the two-point set {1, 3} under a theta-free
      double-well cost, theta in [0, 1] (every point is optimal everywhere).
    * ``example3``  as example2 but with extra cost term -theta (x - 3) and
      theta in [-1, 1]; the argmin flips from 1 to 3 as theta crosses 0.
    """
    if name == "example1":
        data = LinearInequalityData(
            c=np.array([0.0, -1.0]),
            C=np.array([[-1.0], [0.0]]),
            A=np.array([[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]),
            b0=np.array([1.0, 0.0, 0.0]),
            B=np.zeros((3, 1)),
            interior_point=np.array([0.25, 0.25]),
        )
        return ParametricProblem(kind=KIND_LINEAR, n=2, k=1, data=data,
                                 theta_domain=np.array([[0.0, 2.0]]), seed=None,
                                 name="example1")
    if name == "example2":
        data = FiniteSetData(points=np.array([[1.0], [3.0]]), objective="example2")
        return ParametricProblem(kind=KIND_FINITE, n=1, k=1, data=data,
                                 theta_domain=np.array([[0.0, 1.0]]), seed=None,
                                 name="example2")
    if name == "example3":
        data = FiniteSetData(points=np.array([[1.0], [3.0]]), objective="example3")
        return ParametricProblem(kind=KIND_FINITE, n=1, k=1, data=data,
                                 theta_domain=np.array([[-1.0, 1.0]]), seed=None,
                                 name="example3")
    raise ValidationError(f"unknown builtin problem {name!r}; "
                          "known: example1, example2, example3")


BUILTIN_NAMES = ("example1", "example2", "example3")


# ---------------------------------------------------------------------------
# (de)serialization
# ---------------------------------------------------------------------------

def problem_to_dict(problem: ParametricProblem) -> dict:
    d = problem.data
    if problem.kind == KIND_LINEAR:
        payload = {
            "c": d.c.tolist(), "A": d.A.tolist(), "b0": d.b0.tolist(),
            "B": d.B.tolist(), "t": d.t,
            "C": None if d.C is None else d.C.tolist(),
            "interior_point": None if d.interior_point is None else d.interior_point.tolist(),
            "name": problem.name,
        }
    elif problem.kind == KIND_QUADRATIC:
        payload = {
            "P": d.P.tolist(), "q": d.q.tolist(), "G": d.G.tolist(),
            "b0": d.b0.tolist(), "B": d.B.tolist(), "t": d.t,
            "interior_point": None if d.interior_point is None else d.interior_point.tolist(),
            "name": problem.name,
        }
    else:
        payload = {"points": d.points.tolist(), "objective": d.objective,
                   "name": problem.name}
    return {
        "kind": problem.kind,
        "n": problem.n,
        "k": problem.k,
        "payload": payload,
        "theta_domain": problem.theta_domain.tolist(),
        "seed": problem.seed,
    }


def problem_from_dict(obj: dict) -> ParametricProblem:
    kind = obj["kind"]
    payload = obj["payload"]
    name = payload.get("name", "")
    if kind == KIND_LINEAR:
        data = LinearInequalityData(
            c=payload["c"], A=payload["A"], b0=payload["b0"], B=payload["B"],
            t=payload.get("t", 0.0),
            C=payload.get("C"),
            interior_point=payload.get("interior_point"),
        )
    elif kind == KIND_QUADRATIC:
        data = QuadraticInequalityData(
            P=payload["P"], q=payload["q"], G=payload["G"], b0=payload["b0"],
            B=payload["B"], t=payload.get("t", 0.0),
            interior_point=payload.get("interior_point"),
        )
    elif kind == KIND_FINITE:
        data = FiniteSetData(points=payload["points"], objective=payload["objective"])
    else:
        raise ValidationError(f"unknown problem kind {kind!r}")
    return ParametricProblem(kind=kind, n=int(obj["n"]), k=int(obj["k"]), data=data,
                             theta_domain=np.asarray(obj["theta_domain"], dtype=float),
                             seed=obj.get("seed"), name=name)


def save_problem(problem: ParametricProblem, path) -> None:
    with open(path, "w") as fh:
        json.dump(problem_to_dict(problem), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_problem(path) -> ParametricProblem:
    with open(path) as fh:
        return problem_from_dict(json.load(fh))
