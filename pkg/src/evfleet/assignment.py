"""Maximum-weight bipartite matching by shortest augmenting paths.

Rows may stay unmatched: every row gets access to a zero-weight "no action"
column, and only strictly positive finite weights are admissible edges. The
problem is then a rectangular min-cost assignment that always has a finite
solution, solved with the Hungarian method with potentials.

Ties resolve by scan order, so callers wanting a deterministic tie rule
order rows and columns by id before calling.
"""

from __future__ import annotations

import math

import numpy as np


def max_weight_matching(weights) -> list[tuple[int, int]]:
    """Return (row, col) pairs of a maximum-weight matching.

    ``weights`` is an (n, m) array; NaN, inf and non-positive entries are
    not admissible.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2:
        raise ValueError("weights must be a 2-D array")
    n, m = w.shape
    if n == 0 or m == 0:
        return []
    ok = np.isfinite(w) & (w > 0)
    if not ok.any():
        return []
    # min-cost form: real columns then n dummy columns of cost 0
    cost = np.full((n, m + n), math.inf)
    cost[:, :m] = np.where(ok, -w, math.inf)
    cost[:, m:] = 0.0
    cols = _hungarian(cost)
    return [(i, j) for i, j in enumerate(cols) if j < m]


def _hungarian(cost: np.ndarray) -> list[int]:
    """Min-cost assignment of every row for an n x M matrix, n <= M.

    Infinite entries are forbidden edges; the caller guarantees a finite
    perfect assignment of rows exists.
    """
    n, M = cost.shape
    u = np.zeros(n + 1)
    v = np.zeros(M + 1)
    p = np.zeros(M + 1, dtype=int)  # p[j]: row (1-based) matched to column j, 0 if free
    way = np.zeros(M + 1, dtype=int)
    a = np.zeros((n + 1, M + 1))
    a[1:, 1:] = cost
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(M + 1, math.inf)
        used = np.zeros(M + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used
            free[0] = False
            cur = a[i0] - u[i0] - v
            better = free & (cur < minv)
            minv[better] = cur[better]
            way[better] = j0
            cand = np.where(free, minv, math.inf)
            j1 = int(np.argmin(cand))
            delta = cand[j1]
            if not math.isfinite(delta):
                raise RuntimeError("no finite augmenting path")
            u[p[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    col_of = [0] * n
    for j in range(1, M + 1):
        if p[j]:
            col_of[p[j] - 1] = j - 1
    return col_of
