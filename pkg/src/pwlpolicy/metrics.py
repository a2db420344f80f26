"""Policy quality metrics: infeasibility distance, suboptimality gap,
batch reports, the feasibility ratio, and generalization-bound arithmetic.

``infeasibility`` is the Euclidean distance to the feasible set (a policy
output is epsilon-infeasible iff the distance is below epsilon);
``suboptimality`` is |f(x, theta) - f*(theta)| with f* recomputed by a fresh
exact solve — never interpolated and never read from training data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import problems as pb
from . import solvers
from .errors import PwlPolicyError, ValidationError
from .policy import PiecewisePolicy, evaluate as _policy_evaluate

QUANTILES = (0.5, 0.9, 0.99)


def infeasibility(problem: pb.ParametricProblem, theta, x) -> float:
    """Euclidean distance from x to C(theta); 0.0 when feasible."""
    _, dist = solvers.project_to_feasible(problem, theta, x)
    return dist


def suboptimality(problem: pb.ParametricProblem, theta, x,
                  f_star: Optional[float] = None) -> float:
    """|f(x, theta) - f*(theta)|, with f* from a fresh exact solve.

    Passing a precomputed ``f_star`` skips the solve (used by batch loops
    that evaluate several policies at the same theta).
    """
    if f_star is None:
        ref = solvers.solve_exact(problem, theta)
        solvers.require_optimal(ref, "suboptimality reference")
        f_star = ref.objective
    return float(abs(pb.evaluate_objective(problem, x, theta) - f_star))


Predictor = Union[PiecewisePolicy, Callable[[np.ndarray], np.ndarray]]


def _as_predictor(policy: Predictor) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(policy, PiecewisePolicy):
        return lambda th: _policy_evaluate(policy, th)
    if callable(policy):
        return policy
    raise ValidationError("policy must be a PiecewisePolicy or a callable theta -> x")


@dataclass
class PolicyReport:
    thetas: np.ndarray                 # (T, k) evaluated points (failures excluded)
    xhat: np.ndarray                   # (T, n)
    infeas: np.ndarray                 # (T,)
    subopt: np.ndarray                 # (T,)
    failures: list = field(default_factory=list)   # [(index, message)]
    mesh_norm: Optional[float] = None
    m: Optional[int] = None
    aggregates: dict = field(default_factory=dict)

    @property
    def num_evaluated(self) -> int:
        return self.thetas.shape[0]


def _aggregate(values: np.ndarray) -> dict:
    if values.size == 0:
        return {"max": None, "mean": None,
                **{f"q{int(100 * q)}": None for q in QUANTILES}}
    out = {"max": float(values.max()), "mean": float(values.mean())}
    for q in QUANTILES:
        out[f"q{int(100 * q)}"] = float(np.quantile(values, q))
    return out


def evaluate_policy(problem: pb.ParametricProblem, policy: Predictor,
                    test_thetas, mesh_norm: Optional[float] = None,
                    m: Optional[int] = None) -> PolicyReport:
    """Per-theta infeasibility/suboptimality plus aggregates.

    Thetas are processed in input order; per-theta failures (e.g. a query
    outside the policy hull) are recorded and excluded from aggregates.
    """
    predict = _as_predictor(policy)
    if isinstance(policy, PiecewisePolicy):
        if mesh_norm is None:
            mesh_norm = policy.mesh_norm
        if m is None:
            m = policy.triangulation.num_vertices
    thetas = np.atleast_2d(np.asarray(test_thetas, dtype=float))
    rows_theta, rows_x, rows_inf, rows_gap, failures = [], [], [], [], []
    for i in range(thetas.shape[0]):
        th = thetas[i]
        try:
            x = np.asarray(predict(th), dtype=float).reshape(problem.n)
            dist = infeasibility(problem, th, x)
            gap = suboptimality(problem, th, x)
        except PwlPolicyError as err:
            failures.append((i, str(err)))
            continue
        rows_theta.append(th)
        rows_x.append(x)
        rows_inf.append(dist)
        rows_gap.append(gap)
    report = PolicyReport(
        thetas=np.asarray(rows_theta).reshape(-1, thetas.shape[1]),
        xhat=np.asarray(rows_x).reshape(-1, problem.n),
        infeas=np.asarray(rows_inf),
        subopt=np.asarray(rows_gap),
        failures=failures,
        mesh_norm=mesh_norm,
        m=m,
    )
    report.aggregates = {
        "infeas": _aggregate(report.infeas),
        "subopt": _aggregate(report.subopt),
        "failures": len(failures),
        "evaluated": report.num_evaluated,
        "mesh_norm": mesh_norm,
        "m": m,
    }
    return report


def feasibility_ratio(problem_original: pb.ParametricProblem, policy: Predictor,
                      test_thetas) -> float:
    """Percentage of test thetas whose policy output is feasible at margin 0.

    Evaluation failures count as infeasible rows, so the ratio reflects the
    whole test set.
    """
    if problem_original.margin != 0.0:
        raise ValidationError("feasibility_ratio expects the margin-0 problem")
    predict = _as_predictor(policy)
    thetas = np.atleast_2d(np.asarray(test_thetas, dtype=float))
    total = thetas.shape[0]
    if total == 0:
        raise ValidationError("need at least one test theta")
    feasible = 0
    for i in range(total):
        th = thetas[i]
        try:
            x = np.asarray(predict(th), dtype=float).reshape(problem_original.n)
        except PwlPolicyError:
            continue
        if pb.feasibility_residual(problem_original, x, th) <= pb.FEASIBILITY_TOL:
            feasible += 1
    return 100.0 * feasible / total


def ge_bound(layer_norms: Sequence[float], m: int) -> float:
    """Generalization-error bound 2 * prod(B_l) / sqrt(m).

    The product runs over the supplied per-layer norms B_1..B_L.  Quadrupling
    m halves the bound exactly (sqrt(4m) = 2 sqrt(m) in IEEE arithmetic).
    """
    norms = np.asarray(layer_norms, dtype=float)
    if norms.size == 0:
        raise ValidationError("need at least one layer norm")
    if np.any(norms <= 0.0) or not np.all(np.isfinite(norms)):
        raise ValidationError("layer norms must be positive and finite")
    if int(m) < 1:
        raise ValidationError("sample count m must be >= 1")
    return float(2.0 * np.prod(norms) / np.sqrt(m))
