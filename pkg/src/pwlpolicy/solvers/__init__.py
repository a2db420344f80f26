"""Exact and gamma-relaxed solution extraction for parametric problems.

The entry points dispatch on problem kind:

* :func:`solve_lp`      two-phase simplex with optimal-face sampling
* :func:`solve_qp`      operator-splitting with active-set polish
* :func:`solve_finite`  enumeration with tie-breaking
* :func:`solve_exact`   kind dispatcher
* :func:`solve_gamma_relaxed`  feasible point within gamma of the optimum
* :func:`project_to_feasible`  Euclidean projection onto C(theta)

When the optimum is not unique, a :class:`SamplerPolicy` decides which
optimizer is reported: ``arbitrary`` draws a seeded random vertex of the
optimal face, ``rule`` applies a registered deterministic selection.
All functions are pure given (problem, theta, seeds) and safe to call
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import problems as pb
from ..errors import SolverFailureError, ValidationError
from . import admm, simplex
from .admm import solve_qp_core
from .simplex import solve_inequality_lp, enumerate_optimal_vertices, has_alternate_optima

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_MAX_ITERATIONS = "max_iterations"

MODE_ARBITRARY = "arbitrary"
MODE_RULE = "rule"

#: Tie tolerance for finite-set enumeration.
TIE_TOL = 1e-12
#: Objective-perturbation magnitude used when face enumeration is truncated.
PERTURBATION = 1e-7


def _rule_lowest_point(candidates: np.ndarray) -> int:
    """Index of the lexicographically smallest row."""
    order = np.lexsort(candidates.T[::-1])
    return int(order[0])


SELECTION_RULES = {"always-lowest-point": _rule_lowest_point}


@dataclass(frozen=True)
class SamplerPolicy:
    mode: str = MODE_RULE
    rule_id: str = "always-lowest-point"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in (MODE_ARBITRARY, MODE_RULE):
            raise ValidationError(f"unknown sampler mode {self.mode!r}")
        if self.mode == MODE_RULE and self.rule_id not in SELECTION_RULES:
            raise ValidationError(f"unknown selection rule {self.rule_id!r}")

    def reseeded(self, *parts) -> "SamplerPolicy":
        return SamplerPolicy(self.mode, self.rule_id, derive_seed(self.seed, *parts))


ARBITRARY_VERTEX = SamplerPolicy(mode=MODE_ARBITRARY)
LOWEST_POINT = SamplerPolicy(mode=MODE_RULE, rule_id="always-lowest-point")


@dataclass
class SolveResult:
    x: np.ndarray
    objective: float
    status: str
    gamma_gap: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OPTIMAL


def derive_seed(*parts) -> int:
    """Deterministically mix integers into a fresh 64-bit seed."""
    entropy = [int(p) & 0xFFFFFFFFFFFFFFFF for p in parts]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])


def _select(candidates: list[np.ndarray], sampler: SamplerPolicy) -> np.ndarray:
    arr = np.asarray(candidates)
    if arr.shape[0] == 1:
        return arr[0]
    if sampler.mode == MODE_ARBITRARY:
        rng = np.random.default_rng(sampler.seed)
        return arr[int(rng.integers(arr.shape[0]))]
    return arr[SELECTION_RULES[sampler.rule_id](arr)]


def solve_lp(problem: pb.ParametricProblem, theta,
             sampler: Optional[SamplerPolicy] = None) -> SolveResult:
    """Exact LP solve; multiple optimal vertices are resolved by the sampler.

    The sampler defaults to the lowest-point rule, so calls without an
    explicit policy are deterministic.
    """
    if problem.kind != pb.KIND_LINEAR:
        raise ValidationError("solve_lp expects a linear_inequality problem")
    sampler = sampler or LOWEST_POINT
    th = pb.check_theta(problem, theta)
    c = pb.cost_vector(problem, th)
    G, h = pb.constraint_rows(problem, th)
    sol = solve_inequality_lp(c, G, h)
    if sol.status != simplex.STATUS_OPTIMAL:
        status = (STATUS_INFEASIBLE if sol.status == simplex.STATUS_INFEASIBLE
                  else STATUS_MAX_ITERATIONS)
        return SolveResult(sol.x, np.nan, status,
                           meta={"iterations": sol.iterations,
                                 "simplex_status": sol.status})
    x = sol.x
    meta = {"iterations": sol.iterations,
            "min_reduced_cost": sol.min_reduced_cost,
            "n_optimal_vertices": 1}
    if has_alternate_optima(sol):
        verts, truncated = enumerate_optimal_vertices(sol)
        meta["n_optimal_vertices"] = len(verts)
        meta["enumeration_truncated"] = truncated
        if truncated and sampler.mode == MODE_ARBITRARY:
            # Too many vertices to enumerate: pick one by re-solving under a
            # tiny random objective tilt, which lands on a random vertex of
            # the optimal face.
            rng = np.random.default_rng(sampler.seed)
            u = rng.standard_normal(c.shape[0])
            u /= np.linalg.norm(u)
            tilted = solve_inequality_lp(c + PERTURBATION * u, G, h)
            if tilted.status == simplex.STATUS_OPTIMAL:
                x = tilted.x
        else:
            x = _select(verts, sampler)
    return SolveResult(x, float(c @ x), STATUS_OPTIMAL, 0.0, meta)


def solve_qp(problem: pb.ParametricProblem, theta) -> SolveResult:
    """Exact QP solve; the optimum is unique so no sampler is involved."""
    if problem.kind != pb.KIND_QUADRATIC:
        raise ValidationError("solve_qp expects a quadratic_inequality problem")
    th = pb.check_theta(problem, theta)
    d = problem.data
    G, h = pb.constraint_rows(problem, th)
    sol = solve_qp_core(d.P, d.q, G, h)
    status = {admm.STATUS_OPTIMAL: STATUS_OPTIMAL,
              admm.STATUS_INFEASIBLE: STATUS_INFEASIBLE,
              admm.STATUS_MAX_ITERATIONS: STATUS_MAX_ITERATIONS}[sol.status]
    return SolveResult(sol.x, sol.objective, status, 0.0,
                       meta={"iterations": sol.iterations,
                             "primal_residual": sol.primal_residual,
                             "dual_residual": sol.dual_residual,
                             "polished": sol.polished})


def solve_finite(problem: pb.ParametricProblem, theta,
                 sampler: Optional[SamplerPolicy] = None) -> SolveResult:
    """Enumerate the point set; ties within TIE_TOL go to the sampler."""
    if problem.kind != pb.KIND_FINITE:
        raise ValidationError("solve_finite expects a finite_set problem")
    sampler = sampler or LOWEST_POINT
    th = pb.check_theta(problem, theta)
    pts = problem.data.points
    values = np.array([pb.evaluate_objective(problem, pts[i], th)
                       for i in range(pts.shape[0])])
    fmin = values.min()
    ties = np.flatnonzero(values <= fmin + TIE_TOL)
    x = _select([pts[i] for i in ties], sampler)
    return SolveResult(x.copy(), pb.evaluate_objective(problem, x, th),
                       STATUS_OPTIMAL, 0.0, {"n_ties": int(ties.size)})


def solve_exact(problem: pb.ParametricProblem, theta,
                sampler: Optional[SamplerPolicy] = None) -> SolveResult:
    if problem.kind == pb.KIND_LINEAR:
        return solve_lp(problem, theta, sampler)
    if problem.kind == pb.KIND_QUADRATIC:
        return solve_qp(problem, theta)
    return solve_finite(problem, theta, sampler)


def require_optimal(result: SolveResult, context: str = "solve") -> SolveResult:
    if not result.ok:
        raise SolverFailureError(f"{context}: solver returned {result.status}")
    return result


def project_to_feasible(problem: pb.ParametricProblem, theta, x):
    """Euclidean projection onto C(theta); returns (y, dist).

    ``dist`` is exactly 0.0 when x is already feasible within tolerance, so
    the projection is idempotent.
    """
    th = pb.check_theta(problem, theta)
    xv = np.asarray(x, dtype=float)
    if problem.kind == pb.KIND_FINITE:
        pts = problem.data.points
        dists = np.linalg.norm(pts - xv, axis=1)
        i = int(np.argmin(dists))   # argmin takes the lowest index on ties
        if dists[i] <= pb.FEASIBILITY_TOL:
            return xv.copy(), 0.0
        return pts[i].copy(), float(dists[i])
    if pb.feasibility_residual(problem, xv, th) <= pb.FEASIBILITY_TOL:
        return xv.copy(), 0.0
    G, h = pb.constraint_rows(problem, th)
    sol = solve_qp_core(np.eye(problem.n), -xv, G, h)
    if sol.status != admm.STATUS_OPTIMAL:
        raise SolverFailureError(f"projection failed with status {sol.status}")
    return sol.x, float(np.linalg.norm(sol.x - xv))


def _max_step_objective(problem, th, x_star, f_star, d, gamma):
    """Largest sigma with |f(x* + sigma d) - f*| <= gamma along d."""
    if problem.kind == pb.KIND_LINEAR:
        slope = float(pb.cost_vector(problem, th) @ d)
        if abs(slope) < 1e-14:
            return np.inf
        return gamma / abs(slope)
    data = problem.data
    a = float(d @ data.P @ d)
    b = float((data.P @ x_star + data.q) @ d)
    # f(x* + s d) - f* = b s + a s^2 / 2, with a >= 0; want the largest s
    # keeping it <= gamma.  (b can be slightly negative numerically; the gap
    # is re-measured exactly afterwards.)
    if a < 1e-14:
        if b <= 0.0:
            return np.inf
        return gamma / b
    return (-b + np.sqrt(b * b + 2.0 * a * gamma)) / a


def solve_gamma_relaxed(problem: pb.ParametricProblem, theta, gamma: float,
                        seed: int = 0,
                        sampler: Optional[SamplerPolicy] = None) -> SolveResult:
    """Feasible point whose objective is within gamma of the optimum.

    Solves exactly for f*(theta), then steps a seeded random direction from
    x* by a random fraction of the largest step that keeps both feasibility
    and the objective gap bound.  gamma = 0 reduces to the exact solve.
    """
    if gamma < 0:
        raise ValidationError("gamma must be >= 0")
    th = pb.check_theta(problem, theta)
    base = solve_exact(problem, th, sampler)
    if not base.ok or gamma == 0.0:
        return base
    rng = np.random.default_rng(seed)
    f_star = base.objective
    if problem.kind == pb.KIND_FINITE:
        pts = problem.data.points
        values = np.array([pb.evaluate_objective(problem, pts[i], th)
                           for i in range(pts.shape[0])])
        ok = np.flatnonzero(values <= f_star + gamma + TIE_TOL)
        i = int(ok[rng.integers(ok.size)])
        gap = float(abs(values[i] - f_star))
        return SolveResult(pts[i].copy(), float(values[i]), STATUS_OPTIMAL,
                           gap, {"f_star": f_star})
    G, h = pb.constraint_rows(problem, th)
    slack = np.maximum(h - G @ base.x, 0.0)

    def step_bound(direction):
        Gd = G @ direction
        pos = Gd > 1e-12
        sigma_feas = float(np.min(slack[pos] / Gd[pos])) if np.any(pos) else np.inf
        sigma_obj = _max_step_objective(problem, th, base.x, f_star, direction, gamma)
        bound = min(sigma_feas, sigma_obj)
        return bound if np.isfinite(bound) else 0.0

    # at a vertex most directions leave the feasible cone immediately; retry
    # a few draws, then fall back to the segment toward the interior point
    # (feasible by convexity), and only then settle for x* itself
    d = np.zeros(problem.n)
    sigma_max = 0.0
    for _ in range(8):
        cand = rng.standard_normal(problem.n)
        norm = np.linalg.norm(cand)
        if norm < 1e-12:
            continue
        cand /= norm
        cand_max = step_bound(cand)
        if cand_max > sigma_max:
            d, sigma_max = cand, cand_max
        if sigma_max > 1e-9:
            break
    if sigma_max <= 1e-9 and problem.data.interior_point is not None:
        cand = problem.data.interior_point - base.x
        norm = np.linalg.norm(cand)
        if norm > 1e-12:
            cand = cand / norm
            cand_max = step_bound(cand)
            if cand_max > sigma_max:
                d, sigma_max = cand, cand_max
    sigma = float(rng.uniform(0.0, 1.0)) * sigma_max
    y = base.x + sigma * d
    f_y = pb.evaluate_objective(problem, y, th)
    return SolveResult(y, float(f_y), STATUS_OPTIMAL, float(abs(f_y - f_star)),
                       {"f_star": f_star, "sigma": sigma, "sigma_max": sigma_max})
