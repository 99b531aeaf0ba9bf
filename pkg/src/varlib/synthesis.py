"""Functions realising a prescribed variation measure: jump part, quantile tent levels, Rademacher sums."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .funcmodel import (FunctionModel, LinearCombo, RademacherPrimitive, StepFunction, TentBlock, zero)
from .intervals import PreconditionError
from .varmeasure import MeasureSpec, lebesgue, mesh_cdf_on_grid
from .varnorm import MESH_GUARD, domination_dp, dyadic_grid

DEFAULT_MAX_LEVEL = 12
SYNTH_MAX_LEVEL = 20
DEFAULT_GAP = 6


# ---------------------------------------------------------------------------
# Jump part


def synthesize_discrete(atoms: Iterable[tuple[float, float]] | MeasureSpec) -> FunctionModel:
    """Sum of sqrt(mass) times the right step at each atom; its atoms reproduce the input."""
    if isinstance(atoms, MeasureSpec):
        atoms = atoms.atoms
    atoms = sorted((float(t), float(m)) for t, m in atoms)
    if not atoms:
        return zero()
    jumps = []
    level = 0.0
    for t, m in atoms:
        if t <= 0.0 or t > 1.0:
            raise PreconditionError(f"atom at {t}: only atoms in (0, 1] can be realised with f(0) = 0")
        if m <= 0.0:
            raise PreconditionError("atom masses must be positive")
        h = math.sqrt(m)
        jumps.append((t, level, level + h, level + h))
        level += h
    return StepFunction(tuple(jumps))


# ---------------------------------------------------------------------------
# Tent levels


@dataclass(frozen=True, eq=False)
class TentLevel:
    n: int
    quantiles: np.ndarray
    peaks: np.ndarray
    H: FunctionModel
    mass: float

    @property
    def points(self) -> np.ndarray:
        """The level's partition: quantile points together with the tent peaks."""
        return np.unique(np.concatenate([self.quantiles, self.peaks]))

    def mesh_max(self) -> float:
        return float(np.max(np.diff(self.points))) if self.points.size > 1 else 1.0

    def mesh_min(self) -> float:
        return float(np.min(np.diff(self.points))) if self.points.size > 1 else 1.0

    def sup_norm_formula(self) -> float:
        return math.sqrt(2.0 ** -(self.n + 1) * self.mass)

    def telescoping_error(self, mu: MeasureSpec) -> float:
        """Largest |v2^2(H_n, P_n cut at t) - mu[0, t]| over the level points t."""
        pts = self.points
        if pts.size < 2:
            return 0.0
        ys = self.H.values(pts)
        partial = np.concatenate([[0.0], np.cumsum(np.diff(ys) ** 2)])
        target = mu.cont_cdf(pts) - mu.cont_cdf(pts[0])
        return float(np.max(np.abs(partial - target)))

    def to_json(self) -> dict:
        return {"n": self.n, "quantiles": list(map(float, self.quantiles)),
                "peaks": list(map(float, self.peaks)), "mass": self.mass,
                "mesh_max": self.mesh_max(), "mesh_min": self.mesh_min()}


def build_tent_level(mu: MeasureSpec, n: int, max_level: int = DEFAULT_MAX_LEVEL) -> TentLevel:
    """Level n: 2^n cells of equal mu-mass, each carrying the tent sqrt(G) peaked at its median."""
    if n < 0 or int(n) != n:
        raise PreconditionError("level must be a non-negative integer")
    if n > max_level:
        raise PreconditionError(f"level {n} exceeds the configured maximum {max_level}")
    mu = mu.continuous_part()
    total = mu.continuous_total()
    if total <= 0.0:
        return TentLevel(n, np.array([0.0, 1.0]), np.array([0.5]), zero(), 0.0)
    cell = total / 2**n
    quant = mu.quantiles(np.arange(2**n + 1) * cell)
    peaks = mu.quantiles(mu.cont_cdf(quant[:-1]) + cell / 2.0)
    H = TentBlock(tuple(quant), tuple(peaks), tuple(mu._xs), tuple(mu._Fs))
    return TentLevel(int(n), quant, peaks, H, total)


def claim1_violation(level: TentLevel, mu: MeasureSpec, samples: int = 64, seed: int = 0) -> float:
    """Largest |H(y) - H(x)|^2 - mu(x, y] over random pairs in one cell and across neighbouring cells."""
    rng = np.random.default_rng(seed)
    q = level.quantiles
    worst = -math.inf
    for i in range(q.size - 1):
        hi_cell = min(i + 2, q.size - 1)
        xs = rng.uniform(q[i], q[i + 1], samples)
        ys = rng.uniform(q[i], q[hi_cell], samples)
        x, y = np.minimum(xs, ys), np.maximum(xs, ys)
        lhs = (level.H.values(y) - level.H.values(x)) ** 2
        rhs = mu.cont_cdf(y) - mu.cont_cdf(x)
        worst = max(worst, float(np.max(lhs - rhs)))
    return worst


# ---------------------------------------------------------------------------
# Rademacher sums


def rademacher_sum(indices: Sequence[int]) -> FunctionModel:
    idx = [int(i) for i in indices]
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise PreconditionError("Rademacher indices must be strictly increasing")
    if not idx:
        return zero()
    if len(idx) == 1:
        return RademacherPrimitive(idx[0])
    return LinearCombo(tuple((1.0, RademacherPrimitive(i)) for i in idx))


def rademacher_checks(n: int, grid_level: int = 14) -> dict:
    """Domination by Lebesgue measure and the exact prefix identity for a single R_n."""
    R = RademacherPrimitive(n)
    margin, _ = domination_dp(R, lebesgue(), 1.0, dyadic_grid(grid_level))
    pts = dyadic_grid(n)
    ys = R.values(pts)
    partial = np.concatenate([[0.0], np.cumsum(np.diff(ys) ** 2)])
    prefix_err = float(np.max(np.abs(partial - pts)))
    return {"n": n, "domination_margin": margin, "prefix_error": prefix_err}


# ---------------------------------------------------------------------------
# Full synthesis


@dataclass
class SynthesisOutput:
    f: FunctionModel
    levels: list[int]
    deltas: list[float]
    deviations: list[float]
    certificate: object = None
    failure: str | None = None
    selection: str = "mesh"
    notes: list[str] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return self.failure is None

    def to_json(self) -> dict:
        cert = self.certificate.to_json() if hasattr(self.certificate, "to_json") else None
        return {"levels": self.levels, "deltas": self.deltas, "deviations": self.deviations,
                "selection": self.selection, "failure": self.failure, "notes": self.notes,
                "certificate": cert}


def refine_points(pts: np.ndarray, factor: int = 4) -> np.ndarray:
    """Insert factor-1 evenly spaced points into every gap."""
    a, b = pts[:-1], pts[1:]
    fr = np.arange(factor) / factor
    inner = (a[:, None] + (b - a)[:, None] * fr[None, :]).ravel()
    return np.unique(np.concatenate([inner, [pts[-1]]]))


def cdf_deviation(f: FunctionModel, mu: MeasureSpec, points: np.ndarray, xs: np.ndarray) -> tuple[float, float]:
    """Deviation of the mesh-limited distribution function of f from mu[0, x].

    The mesh scale sits just above the widest gap of ``points``; the DP runs on ``points``
    refined four-fold together with ``xs``.  Returns (max deviation over xs, delta used).
    """
    delta = float(np.max(np.diff(points))) * (1.0 + 1e-9) + 2 * MESH_GUARD
    grid = np.unique(np.concatenate([refine_points(points), xs, [0.0, 1.0]]))
    gaps = np.diff(grid)
    if gaps.max() > delta / 4.0:
        grid = refine_points(grid, int(math.ceil(gaps.max() * 4.0 / delta)) + 1)
    cdf = mesh_cdf_on_grid(f, grid, delta)
    vals = cdf[np.searchsorted(grid, xs)]
    return float(np.max(np.abs(vals - mu.cdf(xs)))), delta


class LevelCache:
    """Builds tent levels on demand; deep levels are only constructed when selection reaches them."""

    def __init__(self, mu: MeasureSpec, max_level: int = DEFAULT_MAX_LEVEL):
        self.mu = mu.continuous_part()
        self.max_level = max_level
        self._levels: dict[int, TentLevel] = {}

    def __getitem__(self, n: int) -> TentLevel:
        if n not in self._levels:
            self._levels[n] = build_tent_level(self.mu, n, self.max_level)
        return self._levels[n]

    def mesh_max(self, n: int) -> float:
        # cells have equal mass, so the widest gap is known without building deep levels
        return self[n].mesh_max()


def mesh_schedule(levels: LevelCache, K: int, start_eps: float = 0.5,
                  gap: int = DEFAULT_GAP) -> tuple[list[int], list[float], str | None]:
    """Pick levels with interleaved meshes and shrinking sup norms.

    n_1 is the first level with sup norm below ``start_eps``.  Each later level sits at least
    ``gap`` levels deeper, has sup norm below its predecessor's and has its widest gap below
    the previous delta, which is half the predecessor's narrowest gap.
    """
    chosen: list[int] = []
    deltas: list[float] = [1.0]
    last_sup = start_eps
    for _ in range(K):
        pick = None
        lo = chosen[-1] + gap if chosen else 0
        for n in range(lo, levels.max_level + 1):
            L = levels[n]
            if L.mass <= 0.0:
                continue
            if L.sup_norm_formula() < last_sup and L.mesh_max() <= deltas[-1]:
                pick = L
                break
        if pick is None:
            return chosen, deltas, (f"no admissible level for step {len(chosen) + 1} "
                                    f"within max level {levels.max_level}")
        chosen.append(pick.n)
        deltas.append(pick.mesh_min() / 2.0)
        last_sup = pick.sup_norm_formula()
    return chosen, deltas, None


def synthesize(target: MeasureSpec, K: int, max_level: int = SYNTH_MAX_LEVEL,
               selection: str = "mesh", gap: int = DEFAULT_GAP,
               xs: np.ndarray | None = None) -> SynthesisOutput:
    """Jump part plus the first K selected tent levels, with a per-K deviation table."""
    if K < 1:
        raise PreconditionError("K must be at least 1")
    h = synthesize_discrete(target.atoms)
    mu_c = target.continuous_part()
    if mu_c.continuous_total() <= 0.0:
        return SynthesisOutput(h, [], [1.0], [], None, None, selection,
                               ["target has no continuous part"])
    levels = LevelCache(mu_c, max_level)
    cert = None
    if selection == "mesh":
        chosen, deltas, failure = mesh_schedule(levels, K, gap=gap)
    elif selection == "strict":
        from .biorthogonal import select_subsequence
        eps = [2.0 ** -(i + 1) for i in range(K)]
        pool = [levels[n] for n in range(max_level + 1)]
        cert = select_subsequence([L.H for L in pool], eps, K, mode="verified",
                                  partitions=[L.points for L in pool])
        chosen = list(cert.indices)
        deltas = list(cert.deltas)
        failure = cert.failure
    else:
        raise PreconditionError(f"unknown selection mode {selection!r}")
    xs = dyadic_grid(8) if xs is None else np.asarray(xs, dtype=float)
    reference = target if target.atoms else mu_c
    deviations = []
    terms: list[tuple[float, FunctionModel]] = [(1.0, h)] if target.atoms else []
    for n in chosen:
        terms.append((1.0, levels[n].H))
        dev, _ = cdf_deviation(LinearCombo(tuple(terms)), reference, levels[n].points, xs)
        deviations.append(dev)
    f = LinearCombo(tuple(terms)) if terms else zero()
    notes = []
    if selection == "mesh":
        notes.append(f"levels chosen by mesh interleaving with a minimum level gap of {gap}")
    return SynthesisOutput(f, chosen, deltas, deviations, cert, failure, selection, notes)
