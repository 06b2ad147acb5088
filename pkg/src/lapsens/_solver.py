"""Low-level routines on dense weight matrices.

Matrices are float arrays with rows = agents and columns = tasks; np.inf
marks a missing edge. All routines are pure functions of their inputs and
are safe to call concurrently.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

# Absolute tolerance for treating two assignment costs as equal.
COST_TOL = 1e-9


def solve_dense(mat: np.ndarray) -> tuple[float, np.ndarray] | None:
    """Optimal cost and task->agent index map, or None when no full matching exists."""
    if mat.shape[1] == 0:
        return 0.0, np.empty(0, dtype=np.intp)
    if mat.shape[0] < mat.shape[1]:
        return None
    try:
        rows, cols = linear_sum_assignment(mat)
    except ValueError:
        return None
    cost = float(mat[rows, cols].sum())
    if not np.isfinite(cost):
        return None
    task_to_agent = np.empty(mat.shape[1], dtype=np.intp)
    task_to_agent[cols] = rows
    return cost, task_to_agent


def flip_cost(mat: np.ndarray, a: int, b: int, assigned: bool) -> float:
    """Cost of the best matching with edge (a, b)'s membership flipped.

    Returns np.inf when no matching with the flipped membership exists.
    """
    if assigned:
        blocked = mat.copy()
        blocked[a, b] = np.inf
        res = solve_dense(blocked)
        return np.inf if res is None else res[0]
    reduced = np.delete(np.delete(mat, a, axis=0), b, axis=1)
    res = solve_dense(reduced)
    return np.inf if res is None else res[0] + float(mat[a, b])


def sens_dense(mat: np.ndarray, task_to_agent: np.ndarray) -> np.ndarray:
    """Element-wise sensitivities of every edge relative to the given matching.

    Assigned edges give `flipped_cost - base_cost` (>= 0 at an optimum),
    unassigned edges give `base_cost - flipped_cost` (<= 0). Entries are
    +/-inf where the flip is infeasible and NaN at non-edges.
    """
    num_agents, num_tasks = mat.shape
    base = float(mat[task_to_agent, np.arange(num_tasks)].sum()) if num_tasks else 0.0
    out = np.full(mat.shape, np.nan)
    assigned = np.zeros(mat.shape, dtype=bool)
    assigned[task_to_agent, np.arange(num_tasks)] = True
    finite = np.isfinite(mat)
    for a in range(num_agents):
        for b in range(num_tasks):
            if not finite[a, b]:
                continue
            flipped = flip_cost(mat, a, b, bool(assigned[a, b]))
            out[a, b] = (flipped - base) if assigned[a, b] else (base - flipped)
    return out


def canonical_assignment(
    mat: np.ndarray, base_map: np.ndarray, opt_cost: float, tol: float = COST_TOL
) -> np.ndarray:
    """Lexicographically smallest optimal matching in (task, agent) order.

    `base_map` must be an optimal task->agent map achieving `opt_cost`; it is
    rewritten as tasks are pinned so that most tasks adopt its agent without
    an extra solve.
    """
    num_agents, num_tasks = mat.shape
    chosen = np.full(num_tasks, -1, dtype=np.intp)
    used = np.zeros(num_agents, dtype=bool)
    base = np.asarray(base_map, dtype=np.intp).copy()
    rows = np.arange(num_agents)
    fixed_cost = 0.0
    for t in range(num_tasks):
        rem_cols = np.arange(t + 1, num_tasks)
        for a in range(num_agents):
            if used[a] or not np.isfinite(mat[a, t]):
                continue
            if a == base[t]:
                chosen[t] = a
                break
            rem_rows = rows[~used & (rows != a)]
            res = solve_dense(mat[np.ix_(rem_rows, rem_cols)])
            if res is None:
                continue
            if fixed_cost + float(mat[a, t]) + res[0] <= opt_cost + tol:
                chosen[t] = a
                base[t] = a
                base[rem_cols] = rem_rows[res[1]]
                break
        fixed_cost += float(mat[chosen[t], t])
        used[chosen[t]] = True
    return chosen
