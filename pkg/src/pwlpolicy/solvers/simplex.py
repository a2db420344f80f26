"""Dense two-phase tableau simplex for  min c'x  s.t.  G x <= h,  x free.

Free variables are split as x = u - v with u, v >= 0 and a slack per row.
Bland's rule (lowest-index entering column, lowest-basis-index ratio ties) is
always on, which rules out cycling at the cost of speed — irrelevant at the
problem sizes this package targets.

Besides the optimum, the solver exposes its final tableau so that callers can
enumerate the vertices of the optimal face when the optimum is degenerate
(some nonbasic reduced cost numerically zero).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..accel import maybe_njit

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_MAX_ITERATIONS = "max_iterations"
STATUS_UNBOUNDED = "unbounded"

#: Optimality certificate: every reduced cost must exceed -RC_TOL.
RC_TOL = 1e-9
#: A nonbasic reduced cost with magnitude below this flags alternate optima.
DEGENERACY_TOL = 1e-7
_PIVOT_EPS = 1e-11
_PHASE1_TOL = 1e-8

DEFAULT_MAX_PIVOTS = 100_000


@maybe_njit
def _pivot_loop(T, basis, cost, max_pivots, rc_tol):
    """Run simplex pivots in place until optimal/unbounded/budget.

    Returns (code, iterations) with code 0 = optimal, 1 = pivot budget
    exhausted, 2 = unbounded.  ``T`` is the (m, N+1) tableau whose last
    column is the right-hand side; ``basis`` maps rows to basic columns.
    """
    m = T.shape[0]
    ncols = T.shape[1]
    nvars = ncols - 1
    it = 0
    while it < max_pivots:
        # reduced costs r = cost - cost_B' T  (exactly zero on basic columns)
        r = cost.copy()
        for i in range(m):
            cb = cost[basis[i]]
            if cb != 0.0:
                r -= cb * T[i, :nvars]
        enter = -1
        for j in range(nvars):
            if r[j] < -rc_tol:
                enter = j
                break
        if enter < 0:
            return 0, it
        leave = -1
        best = np.inf
        best_var = nvars + 1
        for i in range(m):
            a = T[i, enter]
            if a > _PIVOT_EPS:
                ratio = T[i, nvars] / a
                if ratio < best - 1e-12 or (abs(ratio - best) <= 1e-12 and basis[i] < best_var):
                    best = ratio
                    leave = i
                    best_var = basis[i]
        if leave < 0:
            return 2, it
        piv = T[leave, enter]
        T[leave, :] /= piv
        for i in range(m):
            if i != leave:
                f = T[i, enter]
                if f != 0.0:
                    T[i, :] -= f * T[leave, :]
        basis[leave] = enter
        it += 1
    return 1, it


def _pivot(T, basis, row, col):
    piv = T[row, col]
    T[row, :] /= piv
    for i in range(T.shape[0]):
        if i != row:
            f = T[i, col]
            if f != 0.0:
                T[i, :] -= f * T[row, :]
    basis[row] = col


def _reduced_costs(T, basis, cost):
    nvars = T.shape[1] - 1
    r = cost.copy()
    for i in range(T.shape[0]):
        cb = cost[basis[i]]
        if cb != 0.0:
            r -= cb * T[i, :nvars]
    return r


@dataclass
class LpSolution:
    x: np.ndarray
    objective: float
    status: str
    iterations: int
    reduced_costs: np.ndarray | None   # phase-2 reduced costs, length 2n + m
    tableau: np.ndarray | None         # final phase-2 tableau (for face walks)
    basis: np.ndarray | None
    n: int                             # original dimension
    phase2_cost: np.ndarray | None = None

    @property
    def min_reduced_cost(self) -> float:
        if self.reduced_costs is None:
            return np.nan
        return float(self.reduced_costs.min())


def _extract_x(T, basis, n):
    nvars = T.shape[1] - 1
    z = np.zeros(nvars)
    z[basis] = T[:, nvars]
    return z[:n] - z[n:2 * n]


def solve_inequality_lp(c, G, h, max_pivots: int = DEFAULT_MAX_PIVOTS) -> LpSolution:
    c = np.asarray(c, dtype=float)
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    m, n = G.shape

    # Standard form: [u v s] >= 0 with sign-flipped rows so rhs >= 0.
    sign = np.where(h < 0.0, -1.0, 1.0)
    Gs = G * sign[:, None]
    rhs = h * sign
    neg_rows = np.flatnonzero(sign < 0.0)
    n_art = neg_rows.size
    nvars = 2 * n + m

    T = np.zeros((m, nvars + n_art + 1))
    T[:, :n] = Gs
    T[:, n:2 * n] = -Gs
    T[:, 2 * n:2 * n + m] = np.diag(sign)
    art_col = {}
    for idx, i in enumerate(neg_rows):
        T[i, nvars + idx] = 1.0
        art_col[i] = nvars + idx
    T[:, -1] = rhs

    basis = np.empty(m, dtype=np.int64)
    for i in range(m):
        basis[i] = art_col[i] if i in art_col else 2 * n + i

    iterations = 0
    if n_art:
        cost1 = np.zeros(nvars + n_art)
        cost1[nvars:] = 1.0
        code, it = _pivot_loop(T, basis, cost1, max_pivots, RC_TOL)
        iterations += int(it)
        phase1_obj = float(cost1[basis] @ T[:, -1])
        if code == 1:
            return LpSolution(np.full(n, np.nan), np.nan, STATUS_MAX_ITERATIONS,
                              iterations, None, None, None, n)
        if phase1_obj > _PHASE1_TOL:
            return LpSolution(np.full(n, np.nan), np.nan, STATUS_INFEASIBLE,
                              iterations, None, None, None, n)
        # Pivot any lingering artificial out of the basis; rows that cannot
        # be pivoted are redundant and dropped.
        drop = []
        for i in range(m):
            if basis[i] >= nvars:
                cols = np.flatnonzero(np.abs(T[i, :nvars]) > 1e-9)
                if cols.size:
                    _pivot(T, basis, i, int(cols[0]))
                else:
                    drop.append(i)
        if drop:
            keep = np.setdiff1d(np.arange(T.shape[0]), drop)
            T = T[keep]
            basis = basis[keep]
        T = np.ascontiguousarray(np.hstack([T[:, :nvars], T[:, -1:]]))

    cost2 = np.zeros(nvars)
    cost2[:n] = c
    cost2[n:2 * n] = -c
    code, it = _pivot_loop(T, basis, cost2, max_pivots, RC_TOL)
    iterations += int(it)
    if code == 1:
        return LpSolution(np.full(n, np.nan), np.nan, STATUS_MAX_ITERATIONS,
                          iterations, None, None, None, n)
    if code == 2:
        return LpSolution(np.full(n, np.nan), np.nan, STATUS_UNBOUNDED,
                          iterations, None, None, None, n)

    x = _extract_x(T, basis, n)
    r = _reduced_costs(T, basis, cost2)
    return LpSolution(x, float(c @ x), STATUS_OPTIMAL, iterations, r, T, basis, n,
                      phase2_cost=cost2)


def has_alternate_optima(sol: LpSolution) -> bool:
    """True when some nonbasic reduced cost is numerically zero."""
    if sol.status != STATUS_OPTIMAL:
        return False
    nonbasic = np.ones(sol.reduced_costs.size, dtype=bool)
    nonbasic[sol.basis] = False
    rc = sol.reduced_costs[nonbasic]
    return bool(rc.size and np.min(np.abs(rc)) <= DEGENERACY_TOL)


def enumerate_optimal_vertices(sol: LpSolution, cap: int = 64,
                               pivot_budget: int = 4096):
    """Walk zero-reduced-cost pivots from the final basis, collecting vertices.

    Returns (vertices, truncated): ``vertices`` is a list of distinct x
    arrays on the optimal face (the incumbent first), ``truncated`` is True
    if the vertex cap or the pivot budget was hit before the walk closed.
    """
    if sol.status != STATUS_OPTIMAL:
        raise ValueError("can only enumerate vertices of an optimal solution")
    cost = sol.phase2_cost
    seen_bases = {tuple(sorted(sol.basis.tolist()))}
    order = [sol.x.copy()]
    seen_x = {tuple(np.round(sol.x, 9).tolist())}
    queue = [(sol.tableau.copy(), sol.basis.copy())]
    pivots = 0
    truncated = False
    while queue:
        T, basis = queue.pop()
        r = _reduced_costs(T, basis, cost)
        nonbasic = np.ones(r.size, dtype=bool)
        nonbasic[basis] = False
        for j in np.flatnonzero(nonbasic & (np.abs(r) <= DEGENERACY_TOL)):
            if pivots >= pivot_budget:
                truncated = True
                queue.clear()
                break
            col = T[:, j]
            pos = col > _PIVOT_EPS
            if not np.any(pos):
                continue  # ray within the optimal face; no new vertex
            ratios = np.where(pos, T[:, -1] / np.where(pos, col, 1.0), np.inf)
            best = ratios.min()
            ties = np.flatnonzero(np.abs(ratios - best) <= 1e-12)
            leave = ties[np.argmin(basis[ties])]
            T2 = T.copy()
            b2 = basis.copy()
            _pivot(T2, b2, int(leave), int(j))
            pivots += 1
            key = tuple(sorted(b2.tolist()))
            if key in seen_bases:
                continue
            seen_bases.add(key)
            x2 = _extract_x(T2, b2, sol.n)
            xkey = tuple(np.round(x2, 9).tolist())
            if xkey not in seen_x:
                seen_x.add(xkey)
                order.append(x2)
                if len(order) >= cap:
                    truncated = True
                    queue.clear()
                    break
            queue.append((T2, b2))
    return order, truncated
