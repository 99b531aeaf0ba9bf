"""Partitions, interval families, mesh ladders and grid-determination checks."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class PreconditionError(ValueError):
    """Raised when an operation's input violates its stated precondition."""


@dataclass(frozen=True)
class Partition:
    """Strictly increasing points of [0, 1]. ``Partition(())`` is the empty partition."""

    points: tuple[float, ...] = ()

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            return
        if len(pts) < 2:
            raise PreconditionError("a non-empty partition needs at least two points")
        if pts[0] < 0.0 or pts[-1] > 1.0:
            raise PreconditionError("partition points must lie in [0, 1]")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise PreconditionError("partition points must be strictly increasing")

    @property
    def empty(self) -> bool:
        return not self.points

    def __len__(self):
        return len(self.points)

    def gaps(self) -> np.ndarray:
        return np.diff(np.asarray(self.points, dtype=float))

    def mesh(self) -> float:
        return float(self.gaps().max()) if len(self.points) >= 2 else 0.0

    def min_gap(self) -> float:
        return float(self.gaps().min()) if len(self.points) >= 2 else 0.0

    def to_family(self) -> "IntervalFamily":
        return IntervalFamily(tuple(Interval(a, b) for a, b in zip(self.points, self.points[1:])))


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if not (0.0 <= self.lo <= self.hi <= 1.0):
            raise PreconditionError(f"interval [{self.lo}, {self.hi}] is not inside [0, 1]")
        if self.lo == self.hi and not (self.lo_closed and self.hi_closed):
            raise PreconditionError("a degenerate interval must be closed at both ends")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi

    def contains_interval(self, other: "Interval") -> bool:
        if other.lo < self.lo or other.hi > self.hi:
            return False
        if other.lo == self.lo and other.lo_closed and not self.lo_closed:
            return False
        if other.hi == self.hi and other.hi_closed and not self.hi_closed:
            return False
        return True

    def contains(self, t: float) -> bool:
        if t < self.lo or t > self.hi:
            return False
        if t == self.lo and not self.lo_closed:
            return False
        if t == self.hi and not self.hi_closed:
            return False
        return True

    def to_json(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "lo_closed": self.lo_closed, "hi_closed": self.hi_closed}

    @classmethod
    def from_json(cls, d: dict) -> "Interval":
        return cls(d["lo"], d["hi"], bool(d.get("lo_closed", True)), bool(d.get("hi_closed", True)))


def _closed_overlap(a: Interval, b: Interval) -> bool:
    return not (a.hi < b.lo or b.hi < a.lo)


@dataclass(frozen=True)
class IntervalFamily:
    """Finite family of intervals with pairwise disjoint interiors, kept sorted by left end."""

    intervals: tuple[Interval, ...] = ()

    def __post_init__(self):
        ivs = tuple(sorted(self.intervals, key=lambda I: (I.lo, I.hi)))
        object.__setattr__(self, "intervals", ivs)
        for a, b in zip(ivs, ivs[1:]):
            if b.lo < a.hi:
                raise PreconditionError(f"intervals {a} and {b} have overlapping interiors")

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    @property
    def closed_disjoint(self) -> bool:
        """True when the closed intervals are pairwise disjoint (the stricter class)."""
        return all(not _closed_overlap(a, b) for a, b in zip(self.intervals, self.intervals[1:]))

    def max_length(self) -> float:
        if not self.intervals:
            raise PreconditionError("max length of an empty family is undefined")
        return max(I.length for I in self.intervals)

    def min_length(self) -> float:
        if not self.intervals:
            raise PreconditionError("min length of an empty family is undefined")
        return min(I.length for I in self.intervals)

    def total_length(self) -> float:
        return float(sum(I.length for I in self.intervals))

    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([I.lo for I in self.intervals], dtype=float)
        hi = np.array([I.hi for I in self.intervals], dtype=float)
        return lo, hi

    def union(self, other: "IntervalFamily") -> "IntervalFamily":
        return IntervalFamily(self.intervals + other.intervals)

    def in_grid_class(self, grid: Iterable[float]) -> bool:
        """Membership in the class of closed-disjoint, non-degenerate families with ends in ``grid``."""
        g = set(float(x) for x in grid)
        return self.closed_disjoint and all(
            (not I.degenerate) and I.lo in g and I.hi in g for I in self.intervals
        )

    def to_json(self) -> list:
        return [I.to_json() for I in self.intervals]

    @classmethod
    def from_json(cls, data: list) -> "IntervalFamily":
        return cls(tuple(Interval.from_json(d) for d in data))

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]]) -> "IntervalFamily":
        return cls(tuple(Interval(a, b) for a, b in pairs))


@dataclass(frozen=True)
class MeshLadder:
    """Scales 1 = d_0 > d_1 > ... > d_{k-1} > 0; the terminal d_k = 0 is implicit."""

    deltas: tuple[float, ...] = field(default=(1.0,))

    def __post_init__(self):
        ds = tuple(float(d) for d in self.deltas)
        if not ds or ds[0] != 1.0:
            ds = (1.0,) + ds
        if any(b >= a for a, b in zip(ds, ds[1:])) or ds[-1] <= 0.0:
            raise PreconditionError(f"mesh ladder must be strictly decreasing and positive: {ds}")
        object.__setattr__(self, "deltas", ds)

    def __len__(self):
        return len(self.deltas)

    def bounds(self, j: int) -> tuple[float, float]:
        """Length window (lo, hi] of class j (1-based)."""
        k = len(self.deltas)
        if not 1 <= j <= k:
            raise PreconditionError(f"class index {j} outside 1..{k}")
        lo = self.deltas[j] if j < k else 0.0
        return lo, self.deltas[j - 1]


def mesh_class_partition(fam: IntervalFamily, ladder: MeshLadder) -> list[IntervalFamily]:
    """Split ``fam`` into classes by length: class j holds d_j < |I| <= d_{j-1}.

    Degenerate intervals have zero variation and are put in the last class.
    """
    k = len(ladder)
    buckets: list[list[Interval]] = [[] for _ in range(k)]
    for I in fam:
        placed = False
        for j in range(1, k + 1):
            lo, hi = ladder.bounds(j)
            if lo < I.length <= hi:
                buckets[j - 1].append(I)
                placed = True
                break
        if not placed:
            buckets[-1].append(I)
    return [IntervalFamily(tuple(b)) for b in buckets]


def refines(fine: IntervalFamily, coarse: IntervalFamily) -> bool:
    """Every interval of ``fine`` sits inside some interval of ``coarse``."""
    return all(any(C.contains_interval(I) for C in coarse) for I in fine)


def dyadic_subfamilies(level: int) -> list[IntervalFamily]:
    """All non-empty subfamilies of the dyadic partition of [0, 1] into 2**level cells."""
    cells = [Interval(i / 2**level, (i + 1) / 2**level) for i in range(2**level)]
    out = []
    for r in range(1, len(cells) + 1):
        for combo in itertools.combinations(cells, r):
            out.append(IntervalFamily(combo))
    return out


def _span_values(models, coeffs, pts: np.ndarray) -> np.ndarray:
    vals = np.zeros_like(pts, dtype=float)
    for lam, m in zip(coeffs, models):
        if lam != 0.0:
            vals = vals + lam * m.values(pts)
    return vals


def determination_defect(
    models: Sequence,
    grid: Iterable[float],
    trial_families: Sequence[IntervalFamily] | None = None,
    coeff_samples: Sequence[Sequence[float]] | None = None,
) -> float:
    """Empirical epsilon for which ``grid`` determines the quadratic variation of the span.

    For each trial family and coefficient vector, every interval is matched by one grid
    sub-interval (or dropped) so that neighbouring matches stay closed-disjoint.  The matching
    minimises the summed per-interval discrepancy, which upper-bounds the discrepancy of the
    whole family; the worst normalised value over all samples is returned.  An interval of
    positive length holding fewer than two grid points makes the defect infinite.
    """
    g = np.unique(np.asarray(sorted(float(x) for x in grid), dtype=float))
    if g.size and (g[0] < 0.0 or g[-1] > 1.0):
        raise PreconditionError("grid must lie in [0, 1]")
    if trial_families is None:
        trial_families = dyadic_subfamilies(2)
    if coeff_samples is None:
        coeff_samples = [tuple(1.0 for _ in models)]
    worst = 0.0
    for coeffs in coeff_samples:
        if len(coeffs) != len(models):
            raise PreconditionError("each coefficient vector needs one entry per model")
        norm = float(sum(abs(c) ** 2 for c in coeffs))
        if norm == 0.0:
            continue
        for fam in trial_families:
            d = _best_snap_defect(models, coeffs, g, fam)
            worst = max(worst, d / norm)
            if math.isinf(worst):
                return worst
    return worst


def _best_snap_defect(models, coeffs, g: np.ndarray, fam: IntervalFamily) -> float:
    # Two DP states per interval: whether the previous match ended on the shared endpoint.
    INF = math.inf
    prev_end_shared = INF  # best cost when previous match ended exactly at current lo
    prev_other = 0.0
    prev_hi = None
    for I in fam:
        target_lo = _span_values(models, coeffs, np.array([I.lo, I.hi]))
        target = float((target_lo[1] - target_lo[0]) ** 2)
        inside = g[(g >= I.lo) & (g <= I.hi)]
        if not I.lo_closed:
            inside = inside[inside > I.lo]
        if not I.hi_closed:
            inside = inside[inside < I.hi]
        if I.length > 0 and inside.size < 2:
            return INF
        if inside.size >= 2:
            vals = _span_values(models, coeffs, inside)
            diff = np.abs((vals[None, :] - vals[:, None]) ** 2 - target)
            iu = np.triu_indices(inside.size, k=1)
            costs = diff[iu]
            starts = inside[iu[0]]
            ends = inside[iu[1]]
        else:
            costs = starts = ends = np.empty(0)
        shared = prev_hi is not None and prev_hi == I.lo
        # best previous cost compatible with a match starting at I.lo
        base_any = min(prev_end_shared, prev_other)
        base_clear = prev_other if shared else base_any
        def pick(mask):
            if not np.any(mask):
                return INF
            c = costs[mask]
            return float(c.min())
        best_shared_end = INF
        best_other = base_any + target  # drop this interval
        if costs.size:
            starts_at_lo = starts == I.lo
            ends_at_hi = ends == I.hi
            # matches starting at the shared point need a previous match that did not end there
            for s_mask, base in ((starts_at_lo, base_clear), (~starts_at_lo, base_any)):
                c1 = pick(s_mask & ends_at_hi)
                c2 = pick(s_mask & ~ends_at_hi)
                best_shared_end = min(best_shared_end, base + c1)
                best_other = min(best_other, base + c2)
        prev_end_shared, prev_other, prev_hi = best_shared_end, best_other, I.hi
    return min(prev_end_shared, prev_other)


def random_family(rng: np.random.Generator, count: int, min_len: float, max_len: float,
                  lo: float = 0.0, hi: float = 1.0) -> IntervalFamily:
    """Up to ``count`` intervals in [lo, hi] with log-uniform lengths, clipped to stay disjoint."""
    if count < 1 or not 0.0 < min_len <= max_len:
        raise PreconditionError("need count >= 1 and 0 < min_len <= max_len")
    starts = np.sort(rng.uniform(lo, hi, count))
    lens = np.exp(rng.uniform(math.log(min_len), math.log(max_len), count))
    ends = np.minimum(starts + lens, np.concatenate([starts[1:], [hi]]))
    return IntervalFamily.from_pairs((float(a), float(b)) for a, b in zip(starts, ends) if b > a)
