"""Maximum-weight bipartite matching with the Kuhn-Munkres algorithm.

``km_assign`` maximizes total weight over one-to-one pairings restricted to
entries strictly above a gate. Rows and columns may stay unmatched. Among
optimal matchings the result is canonical: rows are resolved in increasing
order, each taking the lowest column index that still admits an optimal
completion, with "unmatched" ranked after every column.
"""

from __future__ import annotations

import math

import numpy as np

from .core import MatchSet

_REL_TOL = 1e-9


def _hungarian(cost: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Minimum-cost assignment of every row of an n x m cost matrix, n <= m.

    Shortest augmenting path formulation with row potentials ``u`` and column
    potentials ``v`` satisfying ``u[i] + v[j] <= cost[i, j]`` with equality on
    matched pairs. Returns (row_to_col, u, v).
    """
    n, m = cost.shape
    assert n <= m
    inf = math.inf
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    # p[j]: row (1-based) matched to column j; column 0 is the virtual root.
    p = np.zeros(m + 1, dtype=np.int64)
    way = np.zeros(m + 1, dtype=np.int64)
    c = np.zeros((n + 1, m + 1))
    c[1:, 1:] = cost
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            cur = c[i0, 1:] - u[i0] - v[1:]
            free = ~used[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], inf)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            u[p[used]] += delta
            v[used] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    row_to_col = np.full(n, -1, dtype=np.int64)
    for j in range(1, m + 1):
        if p[j]:
            row_to_col[p[j] - 1] = j - 1
    return row_to_col, u[1:], v[1:]


def _solve(weights: np.ndarray, allowed: np.ndarray) -> tuple[list, np.ndarray, np.ndarray, float]:
    """Optimal partial matching on the allowed entries.

    Each row gets a private dummy column of weight zero meaning "unmatched";
    disallowed entries cost more than any dummy so they are never chosen.
    """
    n, m = weights.shape
    if n == 0:
        return [], np.zeros(0), np.zeros(m + n), 0.0
    big = 1.0 + 2.0 * float(np.abs(weights[allowed]).sum()) if allowed.any() else 1.0
    cost = np.zeros((n, m + n))
    cost[:, :m] = np.where(allowed, -weights, big)
    row_to_col, u, v = _hungarian(cost)
    match = [int(c) if c < m else None for c in row_to_col]
    return match, u, v, _value(weights, match)


def _value(weights: np.ndarray, match) -> float:
    return math.fsum(weights[i, c] for i, c in enumerate(match) if c is not None)


def _same(a: float, b: float, scale: float) -> bool:
    return abs(a - b) <= _REL_TOL * scale


def km_assign(weights, gate: float = 0.0) -> MatchSet:
    """Maximum-total-weight matching over entries with weight > ``gate``."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 2:
        w = w.reshape(0, 0) if w.size == 0 else np.atleast_2d(w)
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    n, m = w.shape
    if n == 0 or m == 0:
        return MatchSet(frozenset(), 0.0)
    allowed = w > gate
    if n == 1 or m == 1:
        # a single line: the best admissible entry, lowest index on ties
        flat = np.where(allowed & (w >= 0), w, -np.inf).reshape(-1)
        k = int(np.argmax(flat))
        if not np.isfinite(flat[k]):
            return MatchSet(frozenset(), 0.0)
        pair = (0, k) if n == 1 else (k, 0)
        return MatchSet(frozenset([pair]), float(w[pair]))
    # Edges of non-positive weight never raise the total; keeping them only
    # matters for ties, where the canonical order prefers matching.
    match, u, v, best = _solve(w, allowed)
    scale = max(1.0, float(np.abs(w).max()) * n)

    # Reduced cost in the min-cost form is (-w) - u - v. Only (near) tight
    # edges can belong to any optimal matching, which makes refinement cheap.
    reduced = -w - u[:, None] - v[None, :m]
    candidate = allowed & (reduced <= _REL_TOL * scale)

    fixed: list = []
    for r in range(n):
        current = match[r]
        limit = m if current is None else current
        taken = {c for c in fixed if c is not None}
        for c in range(limit):
            if not candidate[r, c] or c in taken:
                continue
            prefix = fixed + [c]
            rest_rows = list(range(r + 1, n))
            used_cols = {x for x in prefix if x is not None}
            rest_cols = [j for j in range(m) if j not in used_cols]
            sub_w = w[np.ix_(rest_rows, rest_cols)]
            sub_allowed = allowed[np.ix_(rest_rows, rest_cols)]
            sub_match, _, _, _ = _solve(sub_w, sub_allowed)
            trial = prefix + [None if s is None else rest_cols[s] for s in sub_match]
            if _same(_value(w, trial), best, scale):
                match = trial
                break
        fixed.append(match[r])

    pairs = frozenset((i, c) for i, c in enumerate(match) if c is not None)
    return MatchSet(pairs, _value(w, match))
