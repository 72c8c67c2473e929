"""Independent reference implementations used as test oracles.

Nothing here imports the production formulas under test: distances come from
first principles, expected costs from explicit subset enumeration, and
assignments from an O(n^3) shortest-augmenting-path matcher plus an
exhaustive branch-and-bound search for small instances.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def dnorm2(v) -> float:
    v = np.asarray(v, dtype=float)
    return float(np.sum(v * v)) / v.size


def brute_nearest(basis: np.ndarray, x: np.ndarray, radius: float):
    """Nearest lattice point by exhaustive search over a coordinate box."""
    x = np.asarray(x, dtype=float)
    dim = basis.shape[0]
    span = int(math.ceil((radius + np.linalg.norm(x)) * 4)) + 2
    best = None
    for coords in itertools.product(range(-span, span + 1), repeat=dim):
        emb = np.asarray(coords, dtype=float) @ basis
        d = dnorm2(x - emb)
        key = (d, coords)
        if best is None or key < best:
            best = key
    return best[1], best[0]


def subset_probability(loss, members) -> float:
    out = 1.0
    for i, p in enumerate(loss):
        out *= (1.0 - p) if i in members else p
    return out


def direct_expected_cost(central, tup, loss, shifts=None) -> float:
    """Expected labeling cost of one (central point, tuple) pair: the subset
    sum over all proper nonempty reception sets, minimized over the given
    coset translates of the tuple."""
    central = np.asarray(central, dtype=float)
    tup = np.asarray(tup, dtype=float)
    k = tup.shape[0]
    if shifts is None:
        shifts = [np.zeros(central.shape)]
    best = None
    for s in shifts:
        s = np.asarray(s, dtype=float)
        total = 0.0
        for size in range(1, k):
            for members in itertools.combinations(range(k), size):
                pl = subset_probability(loss, members)
                mean = np.mean([tup[j] + s for j in members], axis=0)
                total += pl * dnorm2(central - mean)
        if best is None or total < best:
            best = total
    return best


def hungarian_reference(cost: np.ndarray):
    """Rectangular min-cost assignment by shortest augmenting paths, written
    against the textbook potential formulation (1-indexed internals).
    Independent of scipy; O(n^2 m)."""
    cost = np.asarray(cost, dtype=float)
    n, m = cost.shape
    assert n <= m
    INF = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    p = [0] * (m + 1)      # p[j]: row matched to column j (1-indexed; 0 free)
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [INF] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = INF
            j1 = 0
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(0, m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    rows = []
    cols = []
    total = 0.0
    for j in range(1, m + 1):
        if p[j]:
            rows.append(p[j] - 1)
            cols.append(j - 1)
            total += float(cost[p[j] - 1][j - 1])
    order = np.argsort(rows)
    return (np.asarray(rows)[order], np.asarray(cols)[order], total)


def branch_and_bound_assignment(cost: np.ndarray) -> float:
    """Optimal assignment value by exhaustive search with sound pruning."""
    cost = np.asarray(cost, dtype=float)
    n, m = cost.shape
    assert n <= m
    col_order = [np.argsort(cost[r]) for r in range(n)]
    suffix_bound = np.zeros(n + 1)
    row_min = cost.min(axis=1)
    for r in range(n - 1, -1, -1):
        suffix_bound[r] = suffix_bound[r + 1] + row_min[r]
    best = [float("inf")]

    def rec(r: int, used: set, acc: float):
        if acc + suffix_bound[r] >= best[0] - 1e-15:
            return
        if r == n:
            best[0] = acc
            return
        for c in col_order[r]:
            c = int(c)
            if c in used:
                continue
            nxt = acc + cost[r, c]
            if nxt + suffix_bound[r + 1] >= best[0] - 1e-15:
                break
            used.add(c)
            rec(r + 1, used, nxt)
            used.discard(c)

    rec(0, set(), 0.0)
    return best[0]


def golden_section_min(f, lo: float, hi: float, iters: int = 160) -> float:
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def disk_second_moment_mc(samples: int, seed: int) -> float:
    """Monte-Carlo normalized second moment of the unit disk."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.0, 1.0, size=(int(samples * 1.6), 2))
    inside = np.sum(pts * pts, axis=1) <= 1.0
    pts = pts[inside][:samples]
    d = np.mean(np.sum(pts * pts, axis=1)) / 2.0
    return float(d) / math.pi  # cell volume pi, exponent 2/L with L=2
