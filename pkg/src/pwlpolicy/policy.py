"""Piecewise linear policy: barycentric interpolation of sampled optimizers.

Given samples (theta_i, x_i) and a triangulation of the theta_i, the policy
value at theta located in simplex j with weights lambda is

    xhat(theta) = sum_l lambda_l * x_(vertex l of j),

which is continuous over the hull (shared facets interpolate identically from
both sides) and piecewise linear.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from . import simplicial
from .errors import DimensionMismatchError, ValidationError

logger = logging.getLogger(__name__)

#: Parameter points closer than this collapse to a single vertex (keep-first).
DUPLICATE_TOL = 1e-12


@dataclass
class PiecewisePolicy:
    triangulation: simplicial.Triangulation
    solutions: np.ndarray          # (m, n), row i pairs with vertex i
    n: int
    problem_ref: str = ""

    @property
    def k(self) -> int:
        return self.triangulation.k

    @property
    def mesh_norm(self) -> float:
        return simplicial.mesh_norm(self.triangulation)


def _split_samples(samples):
    """Accept [(theta, x), ...] or a (thetas, xs) array pair."""
    if isinstance(samples, tuple) and len(samples) == 2:
        thetas, xs = samples
    else:
        thetas = [s[0] for s in samples]
        xs = [s[1] for s in samples]
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if thetas.shape[0] != xs.shape[0]:
        raise DimensionMismatchError("theta/x sample counts differ")
    return thetas, xs


def _dedup(thetas: np.ndarray, xs: np.ndarray):
    m = thetas.shape[0]
    if m <= 1:
        return thetas, xs
    keep = np.ones(m, dtype=bool)
    # Keys at the duplicate tolerance; collisions then verified by distance.
    seen: dict[tuple, int] = {}
    for i in range(m):
        key = tuple(np.round(thetas[i] / DUPLICATE_TOL).astype(np.int64).tolist())
        prev = seen.get(key)
        if prev is not None and np.max(np.abs(thetas[i] - thetas[prev])) <= DUPLICATE_TOL:
            keep[i] = False
        else:
            seen[key] = i
    dropped = int(m - keep.sum())
    if dropped:
        logger.info("collapsed %d duplicate parameter points (kept first)", dropped)
    return thetas[keep], xs[keep]


def fit(samples, k: int, seed: int = 0, problem_ref: str = "") -> PiecewisePolicy:
    """Triangulate the sampled parameters and attach solutions per vertex.

    Duplicate thetas (within DUPLICATE_TOL) keep their first occurrence.
    """
    thetas, xs = _split_samples(samples)
    if thetas.shape[1] != k:
        raise DimensionMismatchError(
            f"samples have parameter dimension {thetas.shape[1]}, expected {k}")
    thetas, xs = _dedup(thetas, xs)
    if thetas.shape[0] < k + 1:
        raise ValidationError(f"need at least k+1 = {k + 1} distinct samples")
    tri = simplicial.build_triangulation(thetas, seed=seed)
    return PiecewisePolicy(triangulation=tri, solutions=np.ascontiguousarray(xs),
                           n=xs.shape[1], problem_ref=problem_ref)


def evaluate(pp: PiecewisePolicy, theta, hint: int = 0) -> np.ndarray:
    """Interpolated policy value at one theta inside the hull."""
    j, lam = simplicial.locate(pp.triangulation, theta, hint=hint)
    verts = pp.triangulation.simplices[j]
    return lam @ pp.solutions[verts]


def evaluate_many(pp: PiecewisePolicy, thetas) -> np.ndarray:
    """Vectorized interpolation for a (T, k) batch of queries."""
    idx, lam = simplicial.locate_many(pp.triangulation, thetas)
    verts = pp.triangulation.simplices[idx]           # (T, k+1)
    return np.einsum("tl,tln->tn", lam, pp.solutions[verts])


def closed_form_example1(theta: float, theta_l: float, theta_r: float) -> np.ndarray:
    """Reference policy for the triangle LP with breakpoints theta_l, theta_r.

    The exact optimizer is (0, 1) below the crossover at 1 and (1, 0) above
    it; interpolating the two samples that straddle the crossover yields the
    middle branch.  Used as a golden oracle against evaluate.
    """
    if not (0.0 <= theta_l <= 1.0 <= theta_r <= 2.0):
        raise ValidationError("breakpoints must satisfy 0 <= theta_l <= 1 <= theta_r <= 2")
    if theta <= theta_l:
        return np.array([0.0, 1.0])
    if theta >= theta_r:
        return np.array([1.0, 0.0])
    w = (theta - theta_l) / (theta_r - theta_l)
    return np.array([w, 1.0 - w])


# ---------------------------------------------------------------------------
# (de)serialization
# ---------------------------------------------------------------------------

def policy_to_dict(pp: PiecewisePolicy) -> dict:
    return {
        "triangulation": simplicial.triangulation_to_dict(pp.triangulation),
        "solutions": pp.solutions.tolist(),
        "n": pp.n,
        "problem_ref": pp.problem_ref,
    }


def policy_from_dict(obj: dict) -> PiecewisePolicy:
    tri = simplicial.triangulation_from_dict(obj["triangulation"])
    solutions = np.asarray(obj["solutions"], dtype=float)
    if solutions.shape[0] != tri.num_vertices:
        raise DimensionMismatchError("solutions row count must match vertex count")
    return PiecewisePolicy(triangulation=tri, solutions=solutions,
                           n=int(obj["n"]), problem_ref=obj.get("problem_ref", ""))


def save_policy(pp: PiecewisePolicy, path) -> None:
    with open(path, "w") as fh:
        json.dump(policy_to_dict(pp), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_policy(path) -> PiecewisePolicy:
    with open(path) as fh:
        return policy_from_dict(json.load(fh))
