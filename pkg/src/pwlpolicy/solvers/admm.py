"""Operator-splitting solver for  min 0.5 x'P x + q'x  s.t.  G x <= h.

The iteration splits the constraint via z = G x and alternates an equality-
constrained minimization in x, a clipped z-update with over-relaxation, and a
scaled dual ascent step — run to infinity-norm primal/dual residuals below
tolerance.  Once loosely converged, an exact KKT "polish" solve on the
detected active set is attempted; if its solution verifies (dual feasibility,
primal feasibility, stationarity) it is returned, otherwise plain iterations
continue to the strict tolerance.

Constraint rows are normalized to unit Euclidean norm internally; tolerances
are tightened accordingly so guarantees hold on the original system.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..accel import maybe_njit

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_MAX_ITERATIONS = "max_iterations"

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERATIONS = 50_000
#: Infeasibility heuristic: primal residual non-decreasing while above this
#: level for STALL_LEN consecutive iterations.
STALL_THRESHOLD = 1.0
STALL_LEN = 1000

_RHO = 1.0
_ALPHA = 1.6          # over-relaxation
_CHUNK = 500          # iterations between polish attempts
_POLISH_TRIGGER = 1e-6


@maybe_njit
def _admm_chunk(Kinv, G, GT, q, h, rho, alpha, x, z, u, tol, max_iters,
                stall_thresh, stall_len, stall_count, last_r):
    """Advance the splitting iteration in place for up to ``max_iters`` steps.

    Returns (code, iters, stall_count, last_r, r_prim, s_dual) with code
    0 = converged, 1 = budget exhausted, 3 = infeasibility heuristic fired.
    """
    it = 0
    code = 1
    r_prim = np.inf
    s_dual = np.inf
    while it < max_iters:
        x[:] = Kinv @ (rho * (GT @ (z - u)) - q)
        Gx = G @ x
        Gx_r = alpha * Gx + (1.0 - alpha) * z
        z_new = np.minimum(h, Gx_r + u)
        u += Gx_r - z_new
        r_prim = np.max(np.abs(Gx - z_new))
        s_dual = rho * np.max(np.abs(GT @ (z_new - z)))
        z[:] = z_new
        it += 1
        if r_prim <= tol and s_dual <= tol:
            code = 0
            break
        if r_prim > stall_thresh and r_prim >= last_r - 1e-16:
            stall_count += 1
            if stall_count >= stall_len:
                code = 3
                break
        else:
            stall_count = 0
        last_r = r_prim
    return code, it, stall_count, last_r, r_prim, s_dual


@dataclass
class QpSolution:
    x: np.ndarray
    objective: float
    status: str
    iterations: int
    primal_residual: float
    dual_residual: float
    polished: bool = False
    dual: np.ndarray | None = None


def _objective(P, q, x) -> float:
    return float(0.5 * x @ P @ x + q @ x)


def _try_polish(P, q, G, h, x, y_est, tol=1e-9):
    """Exact solve on the estimated active set; None unless it verifies."""
    n = P.shape[0]
    resid = h - G @ x
    active = np.flatnonzero((resid <= 1e-6) | (y_est > 1e-6))
    na = active.size
    Ga = G[active]
    KKT = np.zeros((n + na, n + na))
    KKT[:n, :n] = P
    KKT[:n, n:] = Ga.T
    KKT[n:, :n] = Ga
    rhs = np.concatenate([-q, h[active]])
    try:
        sol = np.linalg.solve(KKT, rhs)
    except np.linalg.LinAlgError:
        sol, *_ = np.linalg.lstsq(KKT, rhs, rcond=None)
    xp = sol[:n]
    nu = sol[n:]
    if not np.all(np.isfinite(xp)):
        return None
    scale = max(1.0, np.abs(h).max() if h.size else 1.0)
    if nu.size and nu.min() < -tol:
        return None
    if G.shape[0] and np.max(G @ xp - h) > tol * scale:
        return None
    grad = P @ xp + q + (Ga.T @ nu if na else 0.0)
    if np.max(np.abs(grad)) > tol * max(1.0, np.abs(q).max(), 1e3 * np.abs(xp).max()):
        return None
    y_full = np.zeros(G.shape[0])
    y_full[active] = nu
    return xp, y_full


def solve_qp_core(P, q, G, h, tol: float = DEFAULT_TOL,
                  max_iterations: int = DEFAULT_MAX_ITERATIONS,
                  rho: float = _RHO, alpha: float = _ALPHA,
                  polish: bool = True) -> QpSolution:
    P = np.asarray(P, dtype=float)
    q = np.asarray(q, dtype=float)
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    n = q.shape[0]
    m = G.shape[0] if G.size else 0

    if m == 0:
        x = np.linalg.solve(P, -q)
        return QpSolution(x, _objective(P, q, x), STATUS_OPTIMAL, 0, 0.0, 0.0)

    norms = np.linalg.norm(G, axis=1)
    norms = np.where(norms > 1e-12, norms, 1.0)
    Gs = np.ascontiguousarray(G / norms[:, None])
    hs = h / norms
    GsT = np.ascontiguousarray(Gs.T)
    # Residual tolerances are enforced in the scaled geometry; tighten so the
    # guarantee transfers to the original rows.
    tol_s = tol / max(1.0, float(norms.max()))

    K = P + rho * (GsT @ Gs)
    Kinv = np.ascontiguousarray(np.linalg.inv(K))

    x = np.zeros(n)
    z = np.minimum(hs, 0.0)
    u = np.zeros(m)
    total = 0
    stall_count = 0
    last_r = np.inf
    r_prim = np.inf
    s_dual = np.inf
    while total < max_iterations:
        budget = min(_CHUNK, max_iterations - total)
        code, it, stall_count, last_r, r_prim, s_dual = _admm_chunk(
            Kinv, Gs, GsT, q, hs, rho, alpha, x, z, u, tol_s, budget,
            STALL_THRESHOLD, STALL_LEN, stall_count, last_r)
        total += int(it)
        if code == 3:
            return QpSolution(x.copy(), _objective(P, q, x), STATUS_INFEASIBLE,
                              total, float(r_prim), float(s_dual))
        if polish and (code == 0 or r_prim <= _POLISH_TRIGGER):
            got = _try_polish(P, q, G, h, x, rho * u / norms)
            if got is not None:
                xp, y = got
                rp = float(max(0.0, np.max(G @ xp - h)))
                sd = float(np.max(np.abs(P @ xp + q + G.T @ y)))
                return QpSolution(xp, _objective(P, q, xp), STATUS_OPTIMAL,
                                  total, rp, sd, polished=True, dual=y)
        if code == 0:
            return QpSolution(x.copy(), _objective(P, q, x), STATUS_OPTIMAL,
                              total, float(r_prim), float(s_dual),
                              dual=rho * u / norms)
    return QpSolution(x.copy(), _objective(P, q, x), STATUS_MAX_ITERATIONS,
                      total, float(r_prim), float(s_dual))
