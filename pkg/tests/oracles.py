"""Independent reference implementations used only by the tests.

Each oracle is deliberately naive: exhaustive enumeration or textbook
relaxation, sharing no code with the package beyond plain data.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np


def label_correcting(n: int, edges: list[tuple[int, int, float]], src: int) -> list[float]:
    """Bellman-Ford style relaxation until no label changes."""
    dist = [math.inf] * n
    dist[src] = 0.0
    changed = True
    while changed:
        changed = False
        for u, v, w in edges:
            if dist[u] + w < dist[v]:
                dist[v] = dist[u] + w
                changed = True
    return dist


def all_simple_path_costs(adj: dict[int, list[tuple[int, float]]], src: int, dst: int) -> list[float]:
    """Cost of every simple path from src to dst (tiny graphs only)."""
    out = []

    def walk(u, seen, cost):
        if u == dst:
            out.append(cost)
            return
        for v, w in adj[u]:
            if v not in seen:
                walk(v, seen | {v}, cost + w)

    walk(src, {src}, 0.0)
    return out


def best_partial_matching(w) -> tuple[float, list[tuple[int, int]]]:
    """Maximum total weight over all partial matchings; None/NaN marks a forbidden pair.

    Bitmask DP over rows, so 7x7 instances are instant while still being an
    exhaustive search over every partial assignment.
    """
    w = [[None if (x is None or (isinstance(x, float) and math.isnan(x))) else x for x in row] for row in w]
    n = len(w)
    m = len(w[0]) if n else 0

    @lru_cache(maxsize=None)
    def go(i, used):
        if i == n:
            return 0, ()
        best = go(i + 1, used)
        for j in range(m):
            if not used >> j & 1 and w[i][j] is not None:
                sub, pairs = go(i + 1, used | 1 << j)
                cand = sub + w[i][j]
                if cand > best[0]:
                    best = (cand, ((i, j),) + pairs)
        return best

    total, pairs = go(0, 0)
    return total, list(pairs)


def enumerate_partial_matchings(n: int, m: int):
    """Yield every partial matching of an n x m bipartite graph as a list of pairs."""
    for k in range(min(n, m) + 1):
        for rows in itertools.combinations(range(n), k):
            for cols in itertools.permutations(range(m), k):
                yield list(zip(rows, cols))


def grid_argmax(f, step: float = 1e-4) -> tuple[float, float]:
    """Exhaustive scan of f on a uniform grid over [0, 1]."""
    r = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    vals = f(r)
    i = int(np.argmax(vals))
    return float(r[i]), float(vals[i])


def compliance_ref(g1, g2, g3, r, dk_s):
    """Clamped log compliance, written out independently."""
    arg = g1 + g2 * np.asarray(r, dtype=float) + g3 * dk_s / 3600.0
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(arg > 0, np.log(np.where(arg > 0, arg, 1.0)), 0.0)
    return np.clip(c, 0.0, 1.0)


def zone_profit_bruteforce(vehicles, passengers, tt, margin, pickup_limit):
    """Trip profit of the reciprocal-pickup-time optimal zone matching.

    ``vehicles``: (id, node, soc, kw); ``passengers``: (id, node, trip_time);
    ``tt(a, b)``: travel time. Every partial matching is enumerated; among
    equal objectives the first found is kept, so callers should avoid ties
    that change the profit.
    Returns (profit, matched vehicle ids).
    """
    n, m = len(vehicles), len(passengers)
    w = [[None] * m for _ in range(n)]
    for i, (_, vn, soc, kw) in enumerate(vehicles):
        for j, (_, pn, to) in enumerate(passengers):
            tp = tt(vn, pn)
            if tp <= pickup_limit and soc >= kw * (tp + to) / 3600.0:
                w[i][j] = 1.0 / max(tp, 1.0)
    best, best_pairs = -1.0, []
    for pairs in enumerate_partial_matchings(n, m):
        if any(w[i][j] is None for i, j in pairs):
            continue
        obj = math.fsum(w[i][j] for i, j in pairs)
        if obj > best + 1e-12:
            best, best_pairs = obj, pairs
    profit = math.fsum(margin * passengers[j][2] for _, j in best_pairs)
    return profit, {vehicles[i][0] for i, _ in best_pairs}
