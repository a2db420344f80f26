"""Simplicial meshes over parameter samples with barycentric point location.

Supports k in {1, 2, 3}.  k = 1 sorts the sample into consecutive segments;
k = 2, 3 run incremental Bowyer–Watson Delaunay insertion on a jittered copy
of the points (deterministic seeded jitter breaks cocircular ties; up to
MAX_JITTER_RETRIES fresh draws).  The combinatorial structure is then mapped
back to the original coordinates and canonicalized — vertex indices sorted
within each simplex, simplices sorted lexicographically — so the output is
bit-stable for a given (points, seed).

Meshes built from gridded samples can contain zero-volume "sliver" simplices
along collinear boundary runs.  These are kept in the structure (adjacency
stays facet-to-facet) but flagged degenerate and skipped during location;
every point they would claim lies on a facet of a full-volume neighbor.

Point location resolves queries lying within BARY_TOL of a facet to the
lowest containing simplex index, so results do not depend on the walk route.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .accel import NUMBA_ENABLED, maybe_njit
from .errors import (DegenerateInputError, DimensionMismatchError, OutsideHullError,
                     UnsupportedDimensionError)

MAX_K = 3
#: Barycentric membership tolerance: a point is inside when min lambda >= -BARY_TOL,
#: and on a facet (tie-resolved to the lowest simplex index) when min lambda <= BARY_TOL.
BARY_TOL = 1e-9
#: Relative jitter magnitude applied per dimension before Delaunay insertion.
JITTER_SCALE = 1e-9
MAX_JITTER_RETRIES = 5
#: Simplices whose edge-matrix determinant falls below this are degenerate.
DET_TOL = 1e-12
_WALK_BUDGET = 512
_SUPER_SCALE = 64.0


class _RetryJitter(Exception):
    """Internal: numerical trouble during insertion; try a fresh jitter."""


@dataclass
class Triangulation:
    vertices: np.ndarray              # (m, k) original sample coordinates
    simplices: np.ndarray             # (d, k+1) int64, canonical order
    k: int
    seed: int = 0
    # Derived structure, rebuilt by _prepare():
    neighbors: np.ndarray = field(default=None, repr=False)    # (d, k+1), -1 = boundary
    bary_inv: np.ndarray = field(default=None, repr=False)     # (d, k, k)
    origin: np.ndarray = field(default=None, repr=False)       # (d, k) first vertex coords
    degenerate: np.ndarray = field(default=None, repr=False)   # (d,) bool

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_simplices(self) -> int:
        return self.simplices.shape[0]


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _circumsphere(pts: np.ndarray):
    """Center and squared radius of the sphere through k+1 points in R^k."""
    v0 = pts[0]
    M = 2.0 * (pts[1:] - v0)
    rhs = np.einsum("ij,ij->i", pts[1:], pts[1:]) - pts[0] @ pts[0]
    try:
        c = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        raise _RetryJitter
    if not np.all(np.isfinite(c)):
        raise _RetryJitter
    return c, float(np.sum((v0 - c) ** 2))


def _super_vertices(pts: np.ndarray) -> np.ndarray:
    """A right simplex comfortably containing every input point."""
    k = pts.shape[1]
    center = pts.mean(axis=0)
    radius = float(np.max(np.abs(pts - center))) + 1.0
    side = _SUPER_SCALE * radius
    verts = np.empty((k + 1, k))
    verts[0] = center - side
    for i in range(k):
        verts[i + 1] = verts[0]
        verts[i + 1, i] += 3.0 * k * side
    return verts


def _bowyer_watson(pts: np.ndarray) -> list[tuple[int, ...]]:
    """Delaunay simplices of pts (assumed jittered into general position)."""
    m, k = pts.shape
    work = np.vstack([pts, _super_vertices(pts)])
    simp: list[tuple[int, ...]] = [tuple(range(m, m + k + 1))]
    c0, r0 = _circumsphere(work[m:])
    centers = [c0]
    radii2 = [r0]
    alive = [True]

    for i in range(m):
        p = work[i]
        bad = []
        for j in range(len(simp)):
            if alive[j] and float(np.sum((p - centers[j]) ** 2)) <= radii2[j] * (1.0 + 1e-12):
                bad.append(j)
        if not bad:
            raise _RetryJitter
        facet_count: dict[tuple[int, ...], int] = {}
        for j in bad:
            alive[j] = False
            verts = simp[j]
            for drop in range(k + 1):
                facet = tuple(sorted(verts[:drop] + verts[drop + 1:]))
                facet_count[facet] = facet_count.get(facet, 0) + 1
        for facet, count in facet_count.items():
            if count > 2:
                raise _RetryJitter
            if count != 1:
                continue
            new = facet + (i,)
            c, r2 = _circumsphere(work[list(new)])
            simp.append(new)
            centers.append(c)
            radii2.append(r2)
            alive.append(True)
    return [s for j, s in enumerate(simp)
            if alive[j] and all(v < m for v in s)]


def _canonicalize(simplices) -> np.ndarray:
    arr = np.sort(np.asarray(simplices, dtype=np.int64), axis=1)
    order = np.lexsort(arr.T[::-1])
    return np.ascontiguousarray(arr[order])


def _edge_dets(vertices: np.ndarray, simplices: np.ndarray) -> np.ndarray:
    v = vertices[simplices]                       # (d, k+1, k)
    edges = v[:, 1:, :] - v[:, :1, :]             # (d, k, k)
    return np.abs(np.linalg.det(edges))


def _prepare(t: Triangulation) -> Triangulation:
    """Fill in adjacency, barycentric matrices and the degeneracy mask."""
    verts, simplices, k = t.vertices, t.simplices, t.k
    d = simplices.shape[0]
    facets: dict[tuple[int, ...], list[tuple[int, int]]] = {}
    for j in range(d):
        s = simplices[j]
        for l in range(k + 1):
            facet = tuple(int(v) for li, v in enumerate(s) if li != l)
            facets.setdefault(facet, []).append((j, l))
    neighbors = np.full((d, k + 1), -1, dtype=np.int64)
    for facet, owners in facets.items():
        if len(owners) > 2:
            raise DegenerateInputError(f"facet {facet} shared by {len(owners)} simplices")
        if len(owners) == 2:
            (j1, l1), (j2, l2) = owners
            neighbors[j1, l1] = j2
            neighbors[j2, l2] = j1

    v = verts[simplices]                          # (d, k+1, k)
    edges = np.swapaxes(v[:, 1:, :] - v[:, :1, :], 1, 2)   # (d, k, k) columns
    dets = np.abs(np.linalg.det(edges))
    degenerate = dets < DET_TOL
    bary_inv = np.zeros((d, k, k))
    good = ~degenerate
    if np.any(good):
        bary_inv[good] = np.linalg.inv(edges[good])
    t.neighbors = neighbors
    t.bary_inv = np.ascontiguousarray(bary_inv)
    t.origin = np.ascontiguousarray(v[:, 0, :])
    t.degenerate = degenerate
    return t


def build_triangulation(points, seed: int = 0) -> Triangulation:
    """Mesh the sample so that simplices tile its convex hull.

    Points must contain k+1 affinely independent rows; duplicates should be
    removed by the caller (exact duplicates make zero-volume simplices).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise DimensionMismatchError("points must be a (m, k) array")
    m, k = pts.shape
    if k < 1 or k > MAX_K:
        raise UnsupportedDimensionError(
            f"k = {k} not supported; simplicial meshes require 1 <= k <= {MAX_K}")
    if m < k + 1:
        raise DegenerateInputError(f"need at least k+1 = {k + 1} points, got {m}")
    if np.linalg.matrix_rank(pts - pts[0]) < k:
        raise DegenerateInputError("points are affinely degenerate (rank < k)")

    if k == 1:
        order = np.argsort(pts[:, 0], kind="stable")
        simplices = _canonicalize([(int(order[i]), int(order[i + 1]))
                                   for i in range(m - 1)])
        t = Triangulation(vertices=pts.copy(), simplices=simplices, k=1, seed=seed)
        return _prepare(t)

    rng = np.random.default_rng(seed)
    span = pts.max(axis=0) - pts.min(axis=0)
    span = np.where(span > 0, span, 1.0)
    last_err: Exception = DegenerateInputError("triangulation failed")
    for _ in range(MAX_JITTER_RETRIES):
        jittered = pts + rng.uniform(-1.0, 1.0, size=pts.shape) * (JITTER_SCALE * span)
        try:
            raw = _bowyer_watson(jittered)
            if not raw:
                raise _RetryJitter
            simplices = _canonicalize(raw)
            if np.any(_edge_dets(jittered, simplices) < DET_TOL):
                raise _RetryJitter
        except _RetryJitter as err:
            last_err = err
            continue
        t = Triangulation(vertices=pts.copy(), simplices=simplices, k=k, seed=seed)
        return _prepare(t)
    raise DegenerateInputError(
        f"no valid triangulation after {MAX_JITTER_RETRIES} jitter draws") from last_err


# ---------------------------------------------------------------------------
# geometry queries
# ---------------------------------------------------------------------------

def barycentric_coordinates(t: Triangulation, j: int, theta) -> np.ndarray:
    """Barycentric weights of theta in simplex j (may be negative outside)."""
    if t.degenerate[j]:
        raise DegenerateInputError(f"simplex {j} is degenerate; weights undefined")
    th = np.asarray(theta, dtype=float).reshape(t.k)
    rest = t.bary_inv[j] @ (th - t.origin[j])
    return np.concatenate([[1.0 - rest.sum()], rest])


@maybe_njit
def _walk_kernel(origin, bary_inv, neighbors, degenerate, queries, out_idx, out_lam,
                 out_flag, start, tol, budget):
    """Walk location for a batch of queries; flags anything needing a rescan.

    out_flag: 0 = located strictly inside, 1 = needs brute-force resolution
    (on a facet, stepped onto the boundary, hit a degenerate simplex, or ran
    out of budget).
    """
    d = origin.shape[0]
    k = origin.shape[1]
    T = queries.shape[0]
    hint = start
    for ti in range(T):
        j = hint
        resolved = False
        for _ in range(budget):
            if degenerate[j] != 0:
                break
            s = 0.0
            lmin = 1.0
            amin = 0
            for a in range(k):
                la = 0.0
                for b in range(k):
                    la += bary_inv[j, a, b] * (queries[ti, b] - origin[j, b])
                out_lam[ti, a + 1] = la
                s += la
                if la < lmin:
                    lmin = la
                    amin = a + 1
            l0 = 1.0 - s
            out_lam[ti, 0] = l0
            if l0 < lmin:
                lmin = l0
                amin = 0
            if lmin >= -tol:
                out_idx[ti] = j
                out_flag[ti] = 0 if lmin > tol else 1
                resolved = True
                hint = j
                break
            nxt = neighbors[j, amin]
            if nxt < 0:
                break
            j = nxt
        if not resolved:
            out_idx[ti] = -1
            out_flag[ti] = 1
    return 0


def _brute_locate(t: Triangulation, thetas: np.ndarray):
    """Vectorized scan over all simplices; lowest containing index wins."""
    T = thetas.shape[0]
    d = t.num_simplices
    idx = np.full(T, -1, dtype=np.int64)
    lam = np.full((T, t.k + 1), np.nan)
    chunk = max(1, int(4_000_000 // max(d, 1)))
    for s0 in range(0, T, chunk):
        q = thetas[s0:s0 + chunk]
        diff = q[:, None, :] - t.origin[None, :, :]               # (c, d, k)
        rest = np.einsum("dab,cdb->cda", t.bary_inv, diff)        # (c, d, k)
        lam0 = 1.0 - rest.sum(axis=2)
        lmin = np.minimum(lam0, rest.min(axis=2))
        contained = (lmin >= -BARY_TOL) & ~t.degenerate[None, :]
        hit = contained.any(axis=1)
        first = np.argmax(contained, axis=1)
        rows = np.flatnonzero(hit)
        idx[s0 + rows] = first[rows]
        lam[s0 + rows, 0] = lam0[rows, first[rows]]
        lam[s0 + rows, 1:] = rest[rows, first[rows]]
    return idx, lam


def locate_many(t: Triangulation, thetas, hint: int = 0):
    """Locate a batch of queries; returns (indices, barycentric weights).

    Raises OutsideHullError if any query lies outside the hull (beyond
    BARY_TOL).  On the compiled path queries walk the adjacency graph and
    only facet/boundary cases fall back to the full scan; the plain-NumPy
    path scans directly.
    """
    th = np.ascontiguousarray(np.atleast_2d(np.asarray(thetas, dtype=float)))
    if th.shape[1] != t.k:
        raise DimensionMismatchError(f"queries must have {t.k} columns")
    T = th.shape[0]
    if NUMBA_ENABLED:
        idx = np.empty(T, dtype=np.int64)
        lam = np.empty((T, t.k + 1))
        flag = np.empty(T, dtype=np.int64)
        start = int(hint) if 0 <= int(hint) < t.num_simplices else 0
        _walk_kernel(t.origin, t.bary_inv, t.neighbors,
                     t.degenerate.astype(np.int64), th, idx, lam, flag,
                     start, BARY_TOL, min(_WALK_BUDGET, 4 * t.num_simplices + 16))
        todo = np.flatnonzero(flag != 0)
        if todo.size:
            bidx, blam = _brute_locate(t, th[todo])
            idx[todo] = bidx
            lam[todo] = blam
    else:
        idx, lam = _brute_locate(t, th)
    if np.any(idx < 0):
        misses = int(np.sum(idx < 0))
        raise OutsideHullError(
            f"{misses} of {T} queries fall outside the mesh hull")
    return idx, lam


def locate(t: Triangulation, theta, hint: Optional[int] = None):
    """Locate one query point; returns (simplex index, weights (k+1,))."""
    th = np.asarray(theta, dtype=float).reshape(1, t.k)
    idx, lam = locate_many(t, th, hint=hint if hint is not None else 0)
    return int(idx[0]), lam[0]


def contains(t: Triangulation, theta) -> bool:
    try:
        locate(t, theta)
        return True
    except OutsideHullError:
        return False


def simplex_diameter(t: Triangulation, j: int) -> float:
    v = t.vertices[t.simplices[j]]
    best = 0.0
    for a in range(v.shape[0]):
        d = np.linalg.norm(v[a + 1:] - v[a], axis=1)
        if d.size:
            best = max(best, float(d.max()))
    return best


def mesh_norm(t: Triangulation) -> float:
    """Largest simplex diameter — the refinement parameter of the mesh."""
    v = t.vertices[t.simplices]                   # (d, k+1, k)
    best = 0.0
    for a in range(t.k + 1):
        for b in range(a + 1, t.k + 1):
            best = max(best, float(np.linalg.norm(v[:, a] - v[:, b], axis=1).max()))
    return best


def hull_halfspaces(t: Triangulation):
    """Outer halfspace description N theta <= b of the mesh hull.

    Derived from boundary facets of non-degenerate simplices (degenerate
    boundary slivers lie inside facets of their full-volume neighbors).
    """
    rows = []
    offs = []
    for j in range(t.num_simplices):
        if t.degenerate[j]:
            continue
        for l in range(t.k + 1):
            if t.neighbors[j, l] != -1:
                continue
            s = t.simplices[j]
            facet = np.array([v for li, v in enumerate(s) if li != l])
            fverts = t.vertices[facet]
            opp = t.vertices[s[l]]
            if t.k == 1:
                normal = np.array([1.0])
            else:
                E = fverts[1:] - fverts[0]
                # Normal orthogonal to the facet: nullspace of E via SVD.
                _, _, vt = np.linalg.svd(E)
                normal = vt[-1]
            if normal @ (opp - fverts[0]) > 0:
                normal = -normal
            rows.append(normal)
            offs.append(float(normal @ fverts[0]))
    return np.asarray(rows), np.asarray(offs)


def clip_to_hull(t: Triangulation, theta) -> np.ndarray:
    """Project theta onto the mesh hull (returns theta unchanged if inside)."""
    th = np.asarray(theta, dtype=float).reshape(t.k)
    if contains(t, th):
        return th
    if t.k == 1:
        lo = float(t.vertices[:, 0].min())
        hi = float(t.vertices[:, 0].max())
        return np.array([min(max(th[0], lo), hi)])
    from .solvers.admm import STATUS_OPTIMAL, solve_qp_core
    N, b = hull_halfspaces(t)
    sol = solve_qp_core(np.eye(t.k), -th, N, b)
    if sol.status != STATUS_OPTIMAL:
        raise OutsideHullError("hull projection failed; cannot clip query")
    clipped = sol.x
    if contains(t, clipped):
        return clipped
    # Halfspace description can be incomplete when the hull boundary runs
    # through degenerate slivers; fall back to the nearest mesh vertex.
    near = int(np.argmin(np.linalg.norm(t.vertices - th, axis=1)))
    return t.vertices[near].copy()


# ---------------------------------------------------------------------------
# (de)serialization
# ---------------------------------------------------------------------------

def triangulation_to_dict(t: Triangulation) -> dict:
    return {"k": t.k, "vertices": t.vertices.tolist(),
            "simplices": t.simplices.tolist(), "seed": t.seed}


def triangulation_from_dict(obj: dict) -> Triangulation:
    t = Triangulation(vertices=np.asarray(obj["vertices"], dtype=float),
                      simplices=np.asarray(obj["simplices"], dtype=np.int64),
                      k=int(obj["k"]), seed=int(obj.get("seed") or 0))
    return _prepare(t)


def save_triangulation(t: Triangulation, path) -> None:
    with open(path, "w") as fh:
        json.dump(triangulation_to_dict(t), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_triangulation(path) -> Triangulation:
    with open(path) as fh:
        return triangulation_from_dict(json.load(fh))
