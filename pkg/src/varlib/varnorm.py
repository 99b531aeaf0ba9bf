"""Quadratic variation engines: fixed partitions, the V2 norm, mesh-constrained sums, domination."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .funcmodel import FunctionModel, GridSample, critical_points
from .intervals import Interval, IntervalFamily, Partition, PreconditionError

MESH_GUARD = 1e-15


@dataclass(frozen=True)
class VariationResult:
    """``value`` is the squared variation; ``witness`` lists (t, side) evaluation points."""

    value: float
    witness: tuple[tuple[float, int], ...]
    method: str

    @property
    def norm(self) -> float:
        return math.sqrt(max(self.value, 0.0))

    def partition(self) -> Partition:
        pts = [t for t, _ in self.witness]
        return Partition(tuple(pts)) if len(pts) >= 2 else Partition(())

    def to_json(self) -> dict:
        return {"value": self.value, "norm": self.norm, "method": self.method,
                "witness": [[t, s] for t, s in self.witness]}


def v2(f: FunctionModel, P: Partition) -> float:
    if P.empty:
        return 0.0
    y = f.values(np.asarray(P.points))
    return float(math.sqrt(np.sum(np.diff(y) ** 2)))


def v2_sq_family(f: FunctionModel, fam: IntervalFamily) -> float:
    if len(fam) == 0:
        return 0.0
    lo, hi = fam.endpoints()
    return float(np.sum((f.values(hi) - f.values(lo)) ** 2))


def v2_family(f: FunctionModel, fam: IntervalFamily) -> float:
    return math.sqrt(v2_sq_family(f, fam))


def witness_value(f: FunctionModel, witness: Sequence[tuple[float, int]], p: float = 2.0) -> float:
    """Sum of |increments|^p along witness points evaluated on their recorded sides."""
    if len(witness) < 2:
        return 0.0
    ys = np.array([f.values(t, s)[0] for t, s in witness])
    return float(np.sum(np.abs(np.diff(ys)) ** p))


# ---------------------------------------------------------------------------
# Upper envelope of lines (Li Chao tree) used by the quadratic DPs


class _LineEnvelope:
    """Maximum of inserted lines m*x + b, queried on a fixed sorted coordinate set."""

    def __init__(self, xs: np.ndarray):
        self.xs = [float(x) for x in xs]
        self.n = len(self.xs)
        self.m: list[float] = []
        self.b: list[float] = []
        self.node = [-1] * (4 * max(self.n, 1))

    def _val(self, k: int, x: float) -> float:
        return self.m[k] * x + self.b[k]

    def insert(self, slope: float, intercept: float) -> int:
        k = len(self.m)
        self.m.append(slope)
        self.b.append(intercept)
        node, lo, hi = 1, 0, self.n - 1
        xs = self.xs
        tree = self.node
        cur = k
        while True:
            old = tree[node]
            if old < 0:
                tree[node] = cur
                return k
            mid = (lo + hi) // 2
            xm = xs[mid]
            if self._val(cur, xm) > self._val(old, xm):
                tree[node], cur = cur, old
                old = tree[node]
            if lo == hi:
                return k
            if self._val(cur, xs[lo]) > self._val(old, xs[lo]):
                node, hi = 2 * node, mid
            elif self._val(cur, xs[hi]) > self._val(old, xs[hi]):
                node, lo = 2 * node + 1, mid + 1
            else:
                return k

    def query(self, idx: int) -> tuple[float, int]:
        node, lo, hi = 1, 0, self.n - 1
        x = self.xs[idx]
        best, arg = -math.inf, -1
        tree = self.node
        while True:
            k = tree[node]
            if k >= 0:
                v = self.m[k] * x + self.b[k]
                if v > best:
                    best, arg = v, k
            if lo == hi:
                return best, arg
            mid = (lo + hi) // 2
            if idx <= mid:
                node, hi = 2 * node, mid
            else:
                node, lo = 2 * node + 1, mid + 1


def best_subsequence_sq(ys: np.ndarray) -> tuple[float, list[int]]:
    """max over subsequences of the sum of squared consecutive differences, with its indices."""
    n = len(ys)
    if n < 2:
        return 0.0, list(range(n))
    coords, pos = np.unique(ys, return_inverse=True)
    env = _LineEnvelope(coords)
    best = [0.0] * n
    parent = [-1] * n
    line_owner: list[int] = []
    for j in range(n):
        y = float(ys[j])
        if j > 0:
            v, k = env.query(int(pos[j]))
            cand = v + y * y
            if cand > 0.0:
                best[j] = cand
                parent[j] = line_owner[k]
        line_owner.append(j)
        env.insert(-2.0 * y, best[j] + y * y)
    end = int(np.argmax(best))
    path = [end]
    while parent[path[-1]] >= 0:
        path.append(parent[path[-1]])
    return float(best[end]), path[::-1]


def best_subsequence_p(ys: np.ndarray, p: float) -> tuple[float, list[int]]:
    """Quadratic-time version for a general exponent p."""
    n = len(ys)
    if n < 2:
        return 0.0, list(range(n))
    best = np.zeros(n)
    parent = np.full(n, -1)
    for j in range(1, n):
        cand = best[:j] + np.abs(ys[j] - ys[:j]) ** p
        i = int(np.argmax(cand))
        if cand[i] > 0.0:
            best[j] = cand[i]
            parent[j] = i
    end = int(np.argmax(best))
    path = [end]
    while parent[path[-1]] >= 0:
        path.append(int(parent[path[-1]]))
    return float(best[end]), path[::-1]


# ---------------------------------------------------------------------------
# V2 norm


def candidate_points(f: FunctionModel) -> tuple[list[tuple[float, int]], np.ndarray]:
    """Evaluation points at which the sup over all partitions is attained in the limit.

    Between consecutive candidates the model is continuous and monotone, so any partition
    point there can be pushed to a one-sided limit at a candidate without losing variation.
    """
    if isinstance(f, GridSample) and f.interpolation == "linear":
        ts = f.breakpoints()
        return [(float(t), 0) for t in ts], f.values(ts)
    pts = np.unique(np.concatenate([f.breakpoints(), critical_points(f)]))
    L, V, R = f.values(pts, -1), f.values(pts, 0), f.values(pts, 1)
    cands: list[tuple[float, int]] = []
    ys: list[float] = []
    for t, l, v, r in zip(pts, L, V, R):
        t = float(t)
        if t > 0.0 and l != v:
            cands.append((t, -1))
            ys.append(float(l))
        cands.append((t, 0))
        ys.append(float(v))
        if t < 1.0 and r != v:
            cands.append((t, 1))
            ys.append(float(r))
    return cands, np.asarray(ys)


def turning_points(ys: np.ndarray) -> np.ndarray:
    """Indices of the first, last and local extrema after collapsing repeated values."""
    n = len(ys)
    if n <= 2:
        return np.arange(n)
    keep = np.ones(n, dtype=bool)
    keep[1:] = ys[1:] != ys[:-1]
    idx = np.nonzero(keep)[0]
    z = ys[idx]
    if len(z) <= 2:
        return idx
    d1 = z[1:-1] - z[:-2]
    d2 = z[2:] - z[1:-1]
    inner = d1 * d2 < 0
    sel = np.concatenate([[True], inner, [True]])
    return idx[sel]


def v2_norm(f: FunctionModel, method: str = "full", p: float = 2.0) -> VariationResult:
    """Sup over all partitions of the sum of |increments|^p (the squared V2 norm for p = 2)."""
    cands, ys = candidate_points(f)
    label = "full-DP"
    idx = np.arange(len(ys))
    if method == "pruned":
        idx = turning_points(ys)
        label = "extrema-pruned-DP"
    elif method != "full":
        raise PreconditionError(f"unknown method {method!r}")
    sub = ys[idx]
    if p == 2.0:
        val, path = best_subsequence_sq(sub)
    else:
        val, path = best_subsequence_p(sub, p)
    if f.curved:
        label += "+numeric-extrema"
    witness = tuple(cands[int(idx[k])] for k in path)
    return VariationResult(val, witness, label)


def v2_norm_value(f: FunctionModel) -> float:
    """The V2 norm itself, using closed forms where they exist."""
    from .funcmodel import RademacherPrimitive

    if isinstance(f, RademacherPrimitive):
        return f.v2_norm_closed_form()
    return v2_norm(f).norm


def sample_sequence_norm(ys: Sequence[float], method: str = "full") -> float:
    """Squared V2 norm of a finite sequence of sampled values."""
    y = np.asarray(ys, dtype=float)
    if method == "pruned":
        y = y[turning_points(y)]
    return best_subsequence_sq(y)[0]


# ---------------------------------------------------------------------------
# Mesh-constrained variation


def _grid_in_region(region: Interval, grid: Iterable[float]) -> np.ndarray:
    g = np.unique(np.asarray(list(grid), dtype=float))
    mask = (g >= region.lo) & (g <= region.hi)
    if not region.lo_closed:
        mask &= g > region.lo
    if not region.hi_closed:
        mask &= g < region.hi
    return g[mask]


def check_spacing(pts: np.ndarray, delta: float) -> None:
    if pts.size >= 2 and float(np.max(np.diff(pts))) > delta / 4.0 + MESH_GUARD:
        raise PreconditionError(
            f"grid spacing {float(np.max(np.diff(pts))):.3g} exceeds delta/4 = {delta / 4.0:.3g}")


def _windowed_kernel(ys, lo_idx, p, best, parent):
    n = ys.shape[0]
    for j in range(1, n):
        lo = lo_idx[j]
        bj = 0.0
        pj = -1
        for i in range(lo, j):
            c = best[i] + abs(ys[j] - ys[i]) ** p
            if c > bj:
                bj = c
                pj = i
        best[j] = bj
        parent[j] = pj


try:  # optional accelerator for the long windowed scans
    from numba import njit as _njit

    _windowed_kernel = _njit(cache=True)(_windowed_kernel)
except ImportError:  # pragma: no cover
    pass


def windowed_best(ts: np.ndarray, ys: np.ndarray, delta: float, p: float = 2.0
                  ) -> tuple[np.ndarray, np.ndarray]:
    """best[j]: largest sum over chains ending at j whose steps are shorter than delta."""
    ts = np.ascontiguousarray(ts, dtype=float)
    ys = np.ascontiguousarray(ys, dtype=float)
    best = np.zeros(ts.size)
    parent = np.full(ts.size, -1, dtype=np.int64)
    lo_idx = np.searchsorted(ts, ts - (delta - MESH_GUARD), side="right").astype(np.int64)
    _windowed_kernel(ys, lo_idx, float(p), best, parent)
    return best, parent


def mesh_constrained_var(f: FunctionModel, region: Interval, delta: float,
                         grid: Iterable[float], p: float = 2.0) -> VariationResult:
    """Sup of the squared variation over grid partitions inside ``region`` with gaps < delta."""
    if delta <= 0:
        raise PreconditionError("delta must be positive")
    pts = _grid_in_region(region, grid)
    check_spacing(pts, delta)
    if pts.size < 2:
        return VariationResult(0.0, (), "windowed-DP")
    ys = f.values(pts)
    best, parent = windowed_best(pts, ys, delta, p)
    end = int(np.argmax(best))
    path = [end]
    while parent[path[-1]] >= 0:
        path.append(int(parent[path[-1]]))
    witness = tuple((float(pts[k]), 0) for k in path[::-1])
    return VariationResult(float(best[end]), witness if len(witness) >= 2 else (), "windowed-DP")


def dyadic_grid(level: int) -> np.ndarray:
    return np.arange(2**level + 1) / 2.0**level


# ---------------------------------------------------------------------------
# Domination margin


def domination_dp(G: FunctionModel, mu, C: float, grid: Iterable[float]
                  ) -> tuple[float, IntervalFamily]:
    """Max over families of grid intervals of v2^2(G, family) - C * mu(union), with the family.

    Intervals may share endpoints; each interval (t_i, t_j] is charged C * mu((t_i, t_j]).
    """
    if C <= 0:
        raise PreconditionError("C must be positive")
    ts = np.unique(np.asarray(list(grid), dtype=float))
    n = len(ts)
    if n < 2:
        return 0.0, IntervalFamily(())
    y = G.values(ts)
    M = C * mu.cdf(ts)
    coords, pos = np.unique(y, return_inverse=True)
    env = _LineEnvelope(coords)
    best = [0.0] * n
    choice = [-1] * n  # start index of the interval ending at j, or -1 if none ends there
    owner: list[int] = []
    env.insert(-2.0 * float(y[0]), float(y[0]) ** 2 + float(M[0]))
    owner.append(0)
    for j in range(1, n):
        yj, Mj = float(y[j]), float(M[j])
        v, k = env.query(int(pos[j]))
        cand = v + yj * yj - Mj
        if cand > best[j - 1]:
            best[j] = cand
            choice[j] = owner[k]
        else:
            best[j] = best[j - 1]
        env.insert(-2.0 * yj, best[j] + yj * yj + Mj)
        owner.append(j)
    ivs = []
    j = n - 1
    while j > 0:
        if choice[j] >= 0 and best[j] != best[j - 1]:
            i = choice[j]
            ivs.append(Interval(float(ts[i]), float(ts[j])))
            j = i
        else:
            j -= 1
    return float(best[-1]), IntervalFamily(tuple(ivs))


def domination_margin(G: FunctionModel, mu, C: float, grid: Iterable[float]) -> float:
    return domination_dp(G, mu, C, grid)[0]
