"""Exhaustive reference computations for small inputs.

Each function enumerates its search space directly and shares no code with the fast
algorithms it is compared against.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np


def subset_masks(n: int) -> np.ndarray:
    """All 2^n subsets of range(n) as a boolean matrix, one row per subset."""
    codes = np.arange(2**n, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n)) & 1).astype(bool)


def brute_v2_sq(ys) -> float:
    """Largest sum of squared consecutive differences over all subsequences of ``ys``."""
    y = np.asarray(ys, dtype=float)
    n = y.size
    if n < 2:
        return 0.0
    masks = subset_masks(n)
    total = np.zeros(masks.shape[0])
    last = np.full(masks.shape[0], np.nan)
    for j in range(n):
        sel = masks[:, j]
        step = np.where(sel & ~np.isnan(last), (y[j] - last) ** 2, 0.0)
        total += np.nan_to_num(step)
        last = np.where(sel, y[j], last)
    return float(total.max())


def brute_mesh_var(ts, ys, delta: float) -> float:
    """Largest sum of squared differences over subsequences whose steps are shorter than delta."""
    t = np.asarray(ts, dtype=float)
    y = np.asarray(ys, dtype=float)
    best = 0.0
    for mask in subset_masks(t.size):
        idx = np.flatnonzero(mask)
        if idx.size < 2:
            continue
        if np.any(np.diff(t[idx]) >= delta):
            continue
        best = max(best, float(np.sum(np.diff(y[idx]) ** 2)))
    return best


def _interval_families(n: int, start: int = 0):
    """Index pairs (a, b), a < b, forming interior-disjoint families on n grid points."""
    yield ()
    for a in range(start, n - 1):
        for b in range(a + 1, n):
            for rest in _interval_families(n, b):
                yield ((a, b),) + rest


def brute_domination(ts, ys, cdf_vals, C: float) -> float:
    """Largest v2^2 - C * mass over all interior-disjoint families of grid intervals."""
    y = np.asarray(ys, dtype=float)
    F = np.asarray(cdf_vals, dtype=float)
    best = 0.0
    for fam in _interval_families(len(y)):
        v = sum((y[b] - y[a]) ** 2 - C * (F[b] - F[a]) for a, b in fam)
        best = max(best, v)
    return float(best)


@lru_cache(maxsize=None)
def tree_nodes(depth: int) -> tuple[str, ...]:
    return tuple("".join(b) for k in range(depth + 1) for b in itertools.product("01", repeat=k))


@lru_cache(maxsize=None)
def antichain_matrix(depth: int) -> np.ndarray:
    """Every antichain of the depth-``depth`` tree (including the empty one) as 0/1 rows."""
    nodes = tree_nodes(depth)
    n = len(nodes)
    comparable = [[nodes[i].startswith(nodes[j]) or nodes[j].startswith(nodes[i]) for j in range(n)]
                  for i in range(n)]
    rows: list[list[int]] = []

    def extend(i: int, chosen: list[int]):
        if i == n:
            rows.append(list(chosen))
            return
        extend(i + 1, chosen)
        if not any(comparable[i][c] for c in chosen):
            chosen.append(i)
            extend(i + 1, chosen)
            chosen.pop()

    extend(0, [])
    mat = np.zeros((len(rows), n), dtype=np.int8)
    for r, chosen in enumerate(rows):
        mat[r, chosen] = 1
    return mat


def brute_sp_norm(x: dict, depth: int, p: float = 2.0) -> float:
    nodes = tree_nodes(depth)
    w = np.array([abs(float(x.get(s, 0.0))) ** p for s in nodes])
    return float((antichain_matrix(depth) @ w).max() ** (1.0 / p))


def maximal_antichains(depth: int) -> list[list[str]]:
    """Antichains meeting every branch, found by filtering all antichains."""
    nodes = tree_nodes(depth)
    leaves = [s for s in nodes if len(s) == depth]
    out = []
    for row in antichain_matrix(depth):
        chosen = [nodes[i] for i in np.flatnonzero(row)]
        if all(any(leaf.startswith(c) for c in chosen) for leaf in leaves):
            out.append(chosen)
    return out


def brute_lus2_best(alpha: dict, lam: dict, depth: int) -> float:
    """Largest right-hand side over maximal antichains and branches through their nodes."""
    nodes = tree_nodes(depth)
    leaves = [s for s in nodes if len(s) == depth]

    def branch_sum(t: str) -> float:
        return max(sum(alpha.get(leaf[:k], 0.0) for k in range(depth + 1))
                   for leaf in leaves if leaf.startswith(t))

    return max(sum(lam.get(t, 0.0) * branch_sum(t) for t in A) for A in maximal_antichains(depth))


def brute_snap_defect(values, grid, pairs) -> float:
    """Smallest |v2^2(f, fam) - v2^2(f, fam')| over closed-disjoint grid families fam' refining fam.

    ``values(t)`` evaluates the function on an array, ``pairs`` lists the (lo, hi) of fam.
    """
    g = np.unique(np.asarray(grid, dtype=float))
    y = np.asarray(values(g), dtype=float)
    lo = np.array([a for a, _ in pairs])
    hi = np.array([b for _, b in pairs])
    target = float(np.sum((np.asarray(values(hi)) - np.asarray(values(lo))) ** 2))
    owner = [next((k for k, (a, b) in enumerate(pairs) if a <= t <= b), -1) for t in g]
    best = abs(target)

    def walk(start: int, acc: float):
        nonlocal best
        best = min(best, abs(target - acc))
        for a in range(start, g.size - 1):
            if owner[a] < 0:
                continue
            for b in range(a + 1, g.size):
                if owner[b] != owner[a]:
                    break
                walk(b + 1, acc + (y[b] - y[a]) ** 2)

    walk(0, 0.0)
    return best
