"""Dense linear-program kernel for convex-hull projections.

Solves small equality-form problems

    minimize    c . x
    subject to  A x = b,  x >= 0

with a primal simplex. Pivoting is steepest-descent (Dantzig) until progress
stalls on degenerate pivots, then switches permanently to Bland's rule, whose
lowest-index discipline rules out cycling; ties in the ratio test always
break toward the lowest basic index, so runs are deterministic. The problems
solved here are tiny (a hull projection has |support|+1 constraints), so a
dense tableau with a hard iteration cap is the robust choice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, MaxIterations, Unbounded

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
STALL_LIMIT = 12  # degenerate pivots in a row before Bland's rule takes over


@dataclass
class LpProblem:
    """min objective . x  s.t.  eq_matrix @ x = eq_rhs, x >= 0."""

    objective: np.ndarray
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=np.float64)
        self.eq_matrix = np.atleast_2d(np.asarray(self.eq_matrix, dtype=np.float64))
        self.eq_rhs = np.atleast_1d(np.asarray(self.eq_rhs, dtype=np.float64))
        m, n = self.eq_matrix.shape
        if self.objective.shape != (n,) or self.eq_rhs.shape != (m,):
            raise ValueError("inconsistent LP dimensions")
        if not (np.isfinite(self.objective).all() and np.isfinite(self.eq_matrix).all()
                and np.isfinite(self.eq_rhs).all()):
            raise ValueError("LP data must be finite")


@dataclass
class LpSolution:
    value: float
    x: np.ndarray
    basis: list
    iterations: int
    residual: float


def _pivot(tableau, basis, row, col):
    piv = tableau[row] / tableau[row, col]
    column = tableau[:, col].copy()
    tableau -= np.outer(column, piv)
    tableau[row] = piv
    basis[row] = col


def _run_simplex(tableau, basis, costs, max_iter):
    """Optimize in place; returns the number of pivots performed."""
    iterations = 0
    stall = 0
    bland = False
    ncols = tableau.shape[1] - 1
    while True:
        reduced = costs[:ncols] - costs[basis] @ tableau[:, :ncols]
        reduced[basis] = 0.0
        if bland:
            negative = np.flatnonzero(reduced < -PIVOT_TOL)
            if negative.size == 0:
                return iterations
            col = int(negative[0])
        else:
            col = int(reduced.argmin())
            if reduced[col] >= -PIVOT_TOL:
                return iterations
        if iterations >= max_iter:
            raise MaxIterations(f"simplex exceeded {max_iter} iterations")
        coeffs = tableau[:, col]
        eligible = np.flatnonzero(coeffs > PIVOT_TOL)
        if eligible.size == 0:
            raise Unbounded("objective unbounded below")
        ratios = tableau[eligible, -1] / coeffs[eligible]
        best = ratios.min()
        ties = eligible[ratios <= best + PIVOT_TOL]
        row = int(ties[np.argmin(basis[ties])])
        step = tableau[row, -1] / coeffs[row]
        _pivot(tableau, basis, row, col)
        iterations += 1
        if not bland:
            # Dantzig makes no progress on degenerate pivots; hand over to
            # Bland before a cycle can form.
            stall = stall + 1 if step <= PIVOT_TOL else 0
            if stall >= STALL_LIMIT:
                bland = True


def solve_lp(problem, start_basis=None):
    """Solve the LP, optionally warm-starting from a previously returned basis.

    A warm basis is used only if it is square, nonsingular, and primal
    feasible for this problem; otherwise the solver silently falls back to a
    cold two-phase start. Raises Infeasible / Unbounded / MaxIterations,
    all of which indicate caller bugs for hull projections.
    """
    return _solve_arrays(problem.eq_matrix, problem.eq_rhs, problem.objective,
                         start_basis)


def _solve_arrays(a, b, c, start_basis):
    m, n = a.shape
    max_iter = 10 * (n + m)
    if start_basis is not None:
        solution = _try_warm(a, b, c, np.asarray(start_basis, dtype=np.int64), max_iter)
        if solution is not None:
            return solution
    return _cold(a, b, c, max_iter)


def _finish(tableau, basis, c, n, iterations, a, b):
    x = np.zeros(n)
    keep = basis < n
    x[np.asarray(basis)[keep]] = tableau[np.flatnonzero(keep), -1]
    residual = float(np.abs(a @ x - b).max()) if a.size else 0.0
    return LpSolution(float(c @ x), x, [int(j) for j in basis], iterations, residual)


def _try_warm(a, b, c, basis, max_iter):
    m, n = a.shape
    if basis.shape != (m,) or basis.min() < 0 or basis.max() >= n or np.unique(basis).size != m:
        return None
    base = a[:, basis]
    try:
        tableau = np.linalg.solve(base, np.column_stack([a, b]))
    except np.linalg.LinAlgError:
        return None
    if tableau[:, -1].min() < -PIVOT_TOL:
        return None
    basis = basis.copy()
    iterations = _run_simplex(tableau, basis, c, max_iter)
    return _finish(tableau, basis, c, n, iterations, a, b)


def _cold(a, b, c, max_iter):
    m, n = a.shape
    flip = b < 0
    a = np.where(flip[:, None], -a, a)
    b = np.where(flip, -b, b)

    # Phase 1: artificial basis, minimize total artificial mass.
    tableau = np.column_stack([a, np.eye(m), b])
    basis = np.arange(n, n + m, dtype=np.int64)
    phase1_costs = np.concatenate([np.zeros(n), np.ones(m)])
    iterations = _run_simplex(tableau, basis, phase1_costs, max_iter)
    infeas = float(tableau[basis >= n, -1].sum())
    if infeas > FEAS_TOL:
        raise Infeasible(f"phase-1 optimum {infeas:.3g} > 0")

    # Drive leftover artificials out of the basis; drop redundant rows.
    drop_rows = []
    for row in range(m):
        if basis[row] < n:
            continue
        in_basis = set(basis.tolist())
        pivots = [j for j in np.flatnonzero(np.abs(tableau[row, :n]) > PIVOT_TOL)
                  if j not in in_basis]
        if pivots:
            _pivot(tableau, basis, row, int(pivots[0]))
        else:
            drop_rows.append(row)
    if drop_rows:
        keep = np.setdiff1d(np.arange(m), drop_rows)
        tableau = tableau[keep]
        basis = basis[keep]

    tableau = np.delete(tableau, np.s_[n:n + m], axis=1)
    iterations += _run_simplex(tableau, basis, c, max_iter)
    return _finish(tableau, basis, c, n, iterations, a, b)


def projection_lp(point_rows, point_values, query_vec, corner_columns=None,
                  warm_basis=None):
    """Value of the lower convex hull of (point, value) pairs at ``query_vec``.

    ``point_rows`` is (n_points, d) with rows on the d-dimensional probability
    simplex, ``query_vec`` lies on the same simplex. Because every row sums to
    one, the componentwise matching constraints make one row redundant; the
    system solved is the full-rank reduction (first d-1 coordinates plus the
    convex-combination row). When ``corner_columns[s]`` gives the column
    holding corner e_s, that basis is primal feasible (weights = query masses)
    and phase 1 is skipped entirely; ``warm_basis``, when supplied, is tried
    first.
    """
    d = query_vec.size
    n = point_rows.shape[0]
    eq = np.empty((d, n))
    eq[: d - 1] = point_rows.T[: d - 1]
    eq[d - 1] = 1.0
    rhs = np.empty(d)
    rhs[: d - 1] = query_vec[: d - 1]
    rhs[d - 1] = 1.0
    max_iter = 10 * (n + d)
    if warm_basis is not None:
        solution = _try_warm(eq, rhs, point_values,
                             np.asarray(warm_basis, dtype=np.int64), max_iter)
        if solution is not None:
            return solution
    if corner_columns is not None:
        solution = _try_warm(eq, rhs, point_values,
                             np.asarray(corner_columns, dtype=np.int64), max_iter)
        if solution is not None:
            return solution
    return _cold(eq, rhs, point_values, max_iter)


def hull_projection(points, query):
    """Upper-bound value at ``query``: projection onto the hull of the point set.

    ``points`` is a sequence of (Belief, value) pairs that must include every
    simplex corner (that is what makes the projection feasible for any query).
    Returns min Σ λ_i v_i subject to Σ λ_i b_i = query, Σ λ_i = 1, λ ≥ 0.
    """
    num_states = query.num_states
    rows = np.empty((len(points), num_states))
    values = np.empty(len(points))
    corner_columns = np.full(num_states, -1, dtype=np.int64)
    for i, (belief, value) in enumerate(points):
        rows[i] = belief.to_dense()
        values[i] = value
        if len(belief) == 1 and corner_columns[belief.states[0]] < 0:
            corner_columns[int(belief.states[0])] = i
    start = corner_columns if corner_columns.min() >= 0 else None
    return projection_lp(rows, values, query.to_dense(), corner_columns=start).value
