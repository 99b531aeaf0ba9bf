"""The variation measure of a function: atoms, distribution-function estimates, distance bounds."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .funcmodel import (FunctionModel, GridSample, LinearCombo, StepFunction, eval, eval_left,
                        eval_right, jump_points)
from .intervals import Interval, IntervalFamily, PreconditionError
from .varnorm import check_spacing, dyadic_grid, v2_norm_value, windowed_best


# ---------------------------------------------------------------------------
# Measures


@dataclass(frozen=True, eq=False)
class MeasureSpec:
    """Finite positive measure on [0, 1]: point masses plus a piecewise-linear continuous CDF."""

    atoms: tuple[tuple[float, float], ...] = ()
    cdf_xs: tuple[float, ...] = (0.0, 1.0)
    cdf_Fs: tuple[float, ...] = (0.0, 0.0)

    def __post_init__(self):
        atoms = tuple((float(t), float(m)) for t, m in self.atoms)
        prev = -1.0
        for t, m in atoms:
            if not 0.0 < t <= 1.0:
                raise PreconditionError(f"atom location {t} must lie in (0, 1]")
            if m <= 0.0:
                raise PreconditionError("atom masses must be positive")
            if t <= prev:
                raise PreconditionError("atom locations must be strictly increasing")
            prev = t
        xs = np.asarray(self.cdf_xs, dtype=float)
        Fs = np.asarray(self.cdf_Fs, dtype=float)
        if xs.size < 2 or xs.size != Fs.size:
            raise PreconditionError("CDF needs matching xs and Fs with at least two knots")
        if xs[0] != 0.0 or xs[-1] != 1.0 or np.any(np.diff(xs) <= 0):
            raise PreconditionError("CDF knots must increase strictly from 0 to 1")
        if Fs[0] != 0.0 or np.any(np.diff(Fs) < 0):
            raise PreconditionError("CDF values must start at 0 and be non-decreasing")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "_xs", xs)
        object.__setattr__(self, "_Fs", Fs)
        at = np.array([a[0] for a in atoms], dtype=float)
        am = np.array([a[1] for a in atoms], dtype=float)
        object.__setattr__(self, "_at", at)
        object.__setattr__(self, "_cum", np.concatenate([[0.0], np.cumsum(am)]))

    # distribution functions
    def cont_cdf(self, x) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=float), self._xs, self._Fs)

    def cdf(self, x) -> np.ndarray:
        """mu[0, x] (right-continuous)."""
        x = np.asarray(x, dtype=float)
        return self.cont_cdf(x) + self._cum[np.searchsorted(self._at, x, side="right")]

    def cdf_left(self, x) -> np.ndarray:
        """mu[0, x)."""
        x = np.asarray(x, dtype=float)
        return self.cont_cdf(x) + self._cum[np.searchsorted(self._at, x, side="left")]

    def total(self) -> float:
        return float(self._Fs[-1] + self._cum[-1])

    def continuous_total(self) -> float:
        return float(self._Fs[-1])

    def discrete_total(self) -> float:
        return float(self._cum[-1])

    def mass(self, I: Interval) -> float:
        hi = self.cdf(I.hi) if I.hi_closed else self.cdf_left(I.hi)
        lo = self.cdf_left(I.lo) if I.lo_closed else self.cdf(I.lo)
        return float(hi - lo)

    def mass_union(self, fam: IntervalFamily) -> float:
        """mu of the union of the family; shared endpoints are counted once."""
        total = 0.0
        for I in fam:
            total += float(self.cont_cdf(I.hi) - self.cont_cdf(I.lo))
        for t, m in self.atoms:
            if any(I.contains(t) for I in fam):
                total += m
        return total

    def quantile(self, q: float) -> float:
        """Leftmost x with continuous CDF(x) >= q."""
        return float(self.quantiles(np.array([q]))[0])

    def quantiles(self, qs) -> np.ndarray:
        xs, Fs = self._xs, self._Fs
        q = np.minimum(np.asarray(qs, dtype=float), Fs[-1])
        k = np.clip(np.searchsorted(Fs, q, side="left"), 1, xs.size - 1)
        F0, F1 = Fs[k - 1], Fs[k]
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(F1 > F0, (q - F0) / (F1 - F0), 1.0)
        out = xs[k - 1] + np.clip(frac, 0.0, 1.0) * (xs[k] - xs[k - 1])
        return np.where(q <= 0.0, 0.0, out)

    def density_max(self) -> float:
        return float(np.max(np.diff(self._Fs) / np.diff(self._xs)))

    # algebra
    def continuous_part(self) -> "MeasureSpec":
        return MeasureSpec((), tuple(self._xs), tuple(self._Fs))

    def discrete_part(self) -> "MeasureSpec":
        return MeasureSpec(self.atoms)

    def scaled(self, c: float) -> "MeasureSpec":
        if c < 0:
            raise PreconditionError("measures scale by non-negative numbers")
        if c == 0:
            return MeasureSpec()
        return MeasureSpec(tuple((t, c * m) for t, m in self.atoms), tuple(self._xs), tuple(c * self._Fs))

    def __add__(self, other: "MeasureSpec") -> "MeasureSpec":
        xs = np.unique(np.concatenate([self._xs, other._xs]))
        Fs = self.cont_cdf(xs) + other.cont_cdf(xs)
        masses: dict[float, float] = {}
        for t, m in self.atoms + other.atoms:
            masses[t] = masses.get(t, 0.0) + m
        return MeasureSpec(tuple(sorted(masses.items())), tuple(xs), tuple(Fs))

    # serialisation
    def to_json(self) -> dict:
        return {"atoms": [{"t": t, "mass": m} for t, m in self.atoms],
                "cdf": {"xs": list(map(float, self._xs)), "Fs": list(map(float, self._Fs))}}

    @classmethod
    def from_json(cls, d: dict) -> "MeasureSpec":
        try:
            atoms = tuple((float(a["t"]), float(a["mass"])) for a in d.get("atoms", []))
            cdf = d.get("cdf", {"xs": [0.0, 1.0], "Fs": [0.0, 0.0]})
            return cls(atoms, tuple(cdf["xs"]), tuple(cdf["Fs"]))
        except (KeyError, TypeError, AttributeError) as exc:
            raise PreconditionError(f"malformed measure JSON: {exc}") from exc

    @classmethod
    def loads(cls, text: str) -> "MeasureSpec":
        try:
            return cls.from_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise PreconditionError(f"measure file is not valid JSON: {exc}") from exc


def lebesgue(scale: float = 1.0) -> MeasureSpec:
    return MeasureSpec((), (0.0, 1.0), (0.0, float(scale)))


def from_cdf_function(F: Callable[[np.ndarray], np.ndarray], knots: int = 4097,
                      atoms: Sequence[tuple[float, float]] = ()) -> MeasureSpec:
    """Piecewise-linear interpolation of a continuous CDF on a uniform knot grid."""
    xs = np.linspace(0.0, 1.0, knots)
    Fs = np.asarray(F(xs), dtype=float)
    Fs = Fs - Fs[0]
    Fs = np.maximum.accumulate(Fs)
    return MeasureSpec(tuple(atoms), tuple(xs), tuple(Fs))


def restricted_lebesgue(lo: float, hi: float, density: float = 1.0) -> MeasureSpec:
    pts = sorted({0.0, lo, hi, 1.0})
    Fs = [density * (min(max(x, lo), hi) - lo) for x in pts]
    return MeasureSpec((), tuple(pts), tuple(Fs))


# ---------------------------------------------------------------------------
# Atoms


def tau(f: FunctionModel, x0: float) -> float:
    """Atom of the variation measure at x0, from the one-sided limits."""
    l, v, r = eval_left(f, x0), eval(f, x0), eval_right(f, x0)
    return float(max((r - l) ** 2, (r - v) ** 2 + (l - v) ** 2))


@dataclass(frozen=True)
class AtomicPart:
    atoms: tuple[tuple[float, float], ...]
    heuristic: bool = False

    def __iter__(self):
        return iter(self.atoms)

    def __len__(self):
        return len(self.atoms)

    def total(self) -> float:
        return float(sum(m for _, m in self.atoms))


def atomic_part(f: FunctionModel) -> AtomicPart:
    js = jump_points(f)
    out = []
    for j in js:
        m = max((j.right - j.left) ** 2, (j.right - j.at) ** 2 + (j.left - j.at) ** 2)
        if m > 0.0:
            out.append((j.t, float(m)))
    return AtomicPart(tuple(out), heuristic=js.heuristic)


def purely_discrete(f: FunctionModel) -> bool:
    """Step-type models, whose variation measure is carried by their jumps."""
    if isinstance(f, StepFunction):
        return True
    if isinstance(f, GridSample):
        return f.interpolation == "left-constant"
    if isinstance(f, LinearCombo):
        return all(purely_discrete(m) for _, m in f.terms)
    return False


# ---------------------------------------------------------------------------
# Distribution-function estimates


DEFAULT_LADDER = tuple(2.0**-k for k in range(2, 11))


def parse_ladder(text: str) -> tuple[float, ...]:
    """'2^-2..2^-10' or a comma list such as '0.25,0.125'."""
    text = text.strip()
    if ".." in text:
        a, b = text.split("..")
        ka = int(a.strip().replace("2^", ""))
        kb = int(b.strip().replace("2^", ""))
        step = -1 if kb < ka else 1
        return tuple(2.0**k for k in range(ka, kb + step, step))
    return tuple(float(eval_power(x)) for x in text.split(","))


def eval_power(tok: str) -> float:
    tok = tok.strip()
    if tok.startswith("2^"):
        return 2.0 ** int(tok[2:])
    return float(tok)


@dataclass(frozen=True, eq=False)
class MeasureEstimate:
    atoms: tuple[tuple[float, float], ...]
    xs: np.ndarray
    deltas: tuple[float, ...]
    table: np.ndarray           # table[k, i] = mesh-limited variation on [0, xs[i]] at deltas[k]
    converged: np.ndarray
    grid_step: float
    heuristic: bool = False
    tol: float = 1e-3

    @property
    def extrapolated(self) -> np.ndarray:
        return self.table[-1]

    def total(self) -> float:
        return float(self.extrapolated[-1]) if self.xs[-1] == 1.0 else float(self.extrapolated.max())

    def value_at(self, x: float) -> float:
        i = int(np.searchsorted(self.xs, x, side="right") - 1)
        return float(self.extrapolated[max(i, 0)])

    def to_json(self) -> dict:
        return {
            "atoms": [{"t": t, "mass": m} for t, m in self.atoms],
            "deltas": list(self.deltas),
            "xs": list(map(float, self.xs)),
            "extrapolated": list(map(float, self.extrapolated)),
            "converged": list(map(bool, self.converged)),
            "total": self.total(),
            "grid_step": self.grid_step,
            "heuristic": self.heuristic,
            "tol": self.tol,
        }

    def plot_rows(self) -> list[tuple[float, float, float]]:
        rows = []
        for k, d in enumerate(self.deltas):
            for i, x in enumerate(self.xs):
                rows.append((float(x), float(d), float(self.table[k, i])))
        return rows


def default_xs(f: FunctionModel, level: int = 8) -> np.ndarray:
    return np.unique(np.concatenate([dyadic_grid(level), f.breakpoints()]))


def estimation_grid(f: FunctionModel, step: float, extra: Iterable[float] = ()) -> np.ndarray:
    n = int(round(1.0 / step))
    base = np.arange(n + 1) / n
    return np.unique(np.concatenate([base, f.breakpoints(), np.asarray(list(extra), dtype=float)]))


def mesh_cdf_on_grid(f: FunctionModel, grid: np.ndarray, delta: float) -> np.ndarray:
    """Prefix maxima of the windowed DP: mesh-limited variation of f on [0, grid[j]]."""
    check_spacing(grid, delta)
    best, _ = windowed_best(grid, f.values(grid), delta)
    return np.maximum.accumulate(best)


def estimate_cdf(f: FunctionModel, xs: Iterable[float] | None = None,
                 ladder: Sequence[float] | None = None, grid_step: float | None = None,
                 tol: float = 1e-3) -> MeasureEstimate:
    ladder = tuple(float(d) for d in (ladder if ladder is not None else DEFAULT_LADDER))
    if not ladder or any(b >= a for a, b in zip(ladder, ladder[1:])) or ladder[-1] <= 0:
        raise PreconditionError("ladder must be strictly decreasing and positive")
    xs = np.unique(np.asarray(list(xs), dtype=float)) if xs is not None else default_xs(f)
    if xs.size and (xs[0] < 0 or xs[-1] > 1):
        raise PreconditionError("estimation points must lie in [0, 1]")
    step = grid_step if grid_step is not None else ladder[-1] / 4.0
    grid = estimation_grid(f, step, xs)
    rows = []
    for d in ladder:
        cdf = mesh_cdf_on_grid(f, grid, d)
        rows.append(cdf[np.searchsorted(grid, xs)])
    table = np.vstack(rows)
    if len(ladder) >= 2:
        diff = np.abs(table[-1] - table[-2])
        converged = diff <= tol * np.maximum(np.abs(table[-1]), 1e-12)
    else:
        converged = np.zeros(xs.size, dtype=bool)
    ap = atomic_part(f)
    return MeasureEstimate(ap.atoms, xs, ladder, table, converged, float(step), ap.heuristic, tol)


# ---------------------------------------------------------------------------
# Distance bounds


@dataclass(frozen=True)
class DistBounds:
    lower: float
    upper: float
    mu_norm: float
    mu_discrete_norm: float
    approximate: bool

    def to_json(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "mu_norm": self.mu_norm,
                "mu_discrete_norm": self.mu_discrete_norm, "approximate": self.approximate}


def dist_bounds(f: FunctionModel, estimate: MeasureEstimate | None = None) -> DistBounds:
    """Computable lower and upper bounds on the distance from f to the null-measure subspace."""
    ap = atomic_part(f)
    mu_d = ap.total()
    if purely_discrete(f):
        mu = mu_d
        approx = ap.heuristic
    else:
        est = estimate if estimate is not None else estimate_cdf(f)
        mu = est.total()
        approx = bool(not est.converged[-1]) or est.heuristic
    lower = math.sqrt(max(mu, 0.0))
    return DistBounds(lower, lower + 2.0 * math.sqrt(mu_d), mu, mu_d, approx)


# ---------------------------------------------------------------------------
# Measure algebra


@dataclass
class CheckEntry:
    lhs: float
    rhs: float
    ok: bool
    note: str = ""

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def to_json(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "slack": self.slack, "ok": self.ok, "note": self.note}


@dataclass
class AlgebraReport:
    entries: dict[str, CheckEntry] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries.values())

    def to_json(self) -> dict:
        return {"ok": self.ok, "entries": {k: v.to_json() for k, v in self.entries.items()}}


def _tables(fs: Sequence[FunctionModel], xs, ladder, step):
    grid = np.unique(np.concatenate([estimation_grid(f, step, xs) for f in fs]))
    out = []
    for f in fs:
        rows = [mesh_cdf_on_grid(f, grid, d)[np.searchsorted(grid, xs)] for d in ladder]
        out.append(np.vstack(rows))
    return out


def measure_algebra_check(f1: FunctionModel, f2: FunctionModel, lam: float,
                          xs: Iterable[float] | None = None, ladder: Sequence[float] | None = None,
                          grid_step: float | None = None, disjoint_supports: bool = False,
                          tol: float = 0.05) -> AlgebraReport:
    """Evaluate the scaling law, 2-2 subadditivity, the Lipschitz estimate and singular additivity."""
    ladder = tuple(ladder if ladder is not None else DEFAULT_LADDER)
    xs = np.unique(np.asarray(list(xs), dtype=float)) if xs is not None else dyadic_grid(6)
    step = grid_step if grid_step is not None else ladder[-1] / 4.0
    s = f1 + f2
    lf = LinearCombo(((lam, f1),))
    T1, T2, Ts, Tl = _tables([f1, f2, s, lf], xs, ladder, step)
    rep = AlgebraReport()
    scale_err = float(np.max(np.abs(Tl - lam**2 * T1)))
    rep.entries["scaling"] = CheckEntry(scale_err, 1e-12 * max(1.0, float(np.max(np.abs(lam**2 * T1)))),
                                        scale_err <= 1e-12 * max(1.0, float(np.max(np.abs(lam**2 * T1)))),
                                        "DP table of lam*f against lam^2 times the table of f")
    sub = float(np.max(Ts - 2 * T1 - 2 * T2))
    rep.entries["subadditivity"] = CheckEntry(sub, 1e-12, sub <= 1e-12,
                                              "mu_{f1+f2} - 2 mu_{f1} - 2 mu_{f2} on [0, x] at every delta")
    inc1 = np.diff(np.concatenate([[0.0], T1[-1]]))
    inc2 = np.diff(np.concatenate([[0.0], T2[-1]]))
    tv = float(np.sum(np.abs(inc1 - inc2)))
    n1, n2 = v2_norm_value(f1), v2_norm_value(f2)
    nd = v2_norm_value(f1 - f2)
    rhs = (n1 + n2) * nd
    rep.entries["lipschitz"] = CheckEntry(tv, rhs, tv <= rhs + 1e-12,
                                          "grid total variation of mu_{f1} - mu_{f2} (lower estimate)")
    gap = abs(float(Ts[-1, -1] - T1[-1, -1] - T2[-1, -1]))
    rep.entries["singular_additivity"] = CheckEntry(
        gap, tol, (gap < tol) if disjoint_supports else True,
        "checked" if disjoint_supports else "informational: supports not declared disjoint")
    return rep
