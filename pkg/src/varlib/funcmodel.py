"""Exact, evaluable function models on [0, 1] with one-sided limits.

Every model satisfies f(0) = 0.  At the ends of the domain the one-sided limits follow the
conventions f(0-) = f(0) and f(1+) = f(1).  Evaluation is vectorised over numpy arrays and
``side`` selects the left limit (-1), the value (0) or the right limit (+1).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .intervals import PreconditionError


class DomainError(ValueError):
    """Raised when a model is evaluated outside [0, 1]."""


_TOL = 1e-13


def _as_array(ts) -> np.ndarray:
    return np.atleast_1d(np.asarray(ts, dtype=float))


class FunctionModel:
    """Common interface of every model."""

    kind = "abstract"
    curved = False       # some piece between breakpoints is not affine
    exact = True         # jumps are known exactly (not inferred from samples)

    # subclasses implement these
    def _eval(self, ts: np.ndarray, side: int) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    def breakpoints(self) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    def jump_candidates(self) -> np.ndarray:
        return np.empty(0)

    def breakpoint_count(self) -> int:
        """Upper bound on the number of breakpoints, without building them."""
        return int(self.breakpoints().size)

    def min_breakpoint_gap(self) -> float:
        bp = self.breakpoints()
        return float(np.min(np.diff(bp))) if bp.size > 1 else 1.0

    def deriv(self, ts: np.ndarray) -> np.ndarray:
        """Derivative at points strictly inside pieces."""
        raise NotImplementedError(f"{self.kind} has no derivative")

    def osc_bound(self) -> float:
        """Upper bound on sup f - inf f."""
        raise NotImplementedError

    def modulus(self, length: float) -> float:
        """Upper bound on |f(y) - f(x)| over |y - x| <= length."""
        return self.osc_bound()

    def energy(self) -> float:
        """Integral of f'^2 for absolutely continuous models, else infinity."""
        return math.inf

    def to_json(self) -> dict:  # pragma: no cover
        raise NotImplementedError

    # shared machinery
    def values(self, ts, side: int = 0) -> np.ndarray:
        t = _as_array(ts)
        if t.size and (t.min() < 0.0 or t.max() > 1.0):
            raise DomainError("evaluation point outside [0, 1]")
        if side == 0:
            return self._eval(t, 0)
        out = self._eval(t, side)
        edge = t == (0.0 if side < 0 else 1.0)
        if np.any(edge):
            out = np.where(edge, self._eval(t, 0), out)
        return out

    def __call__(self, t: float) -> float:
        return float(self.values(t)[0])

    def __add__(self, other: "FunctionModel") -> "LinearCombo":
        return LinearCombo(((1.0, self), (1.0, other)))

    def __sub__(self, other: "FunctionModel") -> "LinearCombo":
        return LinearCombo(((1.0, self), (-1.0, other)))

    def __rmul__(self, c: float) -> "LinearCombo":
        return LinearCombo(((float(c), self),))

    def __neg__(self) -> "LinearCombo":
        return LinearCombo(((-1.0, self),))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def eval(f: FunctionModel, t: float) -> float:  # noqa: A001 - mirrors the operation name
    return float(f.values(t, 0)[0])


def eval_left(f: FunctionModel, t: float) -> float:
    return float(f.values(t, -1)[0])


def eval_right(f: FunctionModel, t: float) -> float:
    return float(f.values(t, 1)[0])


# ---------------------------------------------------------------------------
# Grid samples


@dataclass(frozen=True, eq=False)
class GridSample(FunctionModel):
    ts: tuple[float, ...]
    vals: tuple[float, ...]
    interpolation: str = "linear"

    kind = "grid"

    def __post_init__(self):
        ts = np.asarray(self.ts, dtype=float)
        vs = np.asarray(self.vals, dtype=float)
        if ts.ndim != 1 or ts.size < 2 or ts.size != vs.size:
            raise PreconditionError("grid sample needs matching ts and vals of length >= 2")
        if ts[0] != 0.0 or ts[-1] != 1.0:
            raise PreconditionError("grid sample must include t = 0 and t = 1")
        if np.any(np.diff(ts) <= 0):
            raise PreconditionError("grid sample ts must be strictly increasing")
        if vs[0] != 0.0:
            raise PreconditionError("grid sample must satisfy f(0) = 0")
        if self.interpolation not in ("linear", "left-constant"):
            raise PreconditionError(f"unknown interpolation {self.interpolation!r}")
        object.__setattr__(self, "_t", ts)
        object.__setattr__(self, "_v", vs)
        object.__setattr__(self, "exact", self.interpolation == "left-constant")

    def _eval(self, ts, side):
        t, v = self._t, self._v
        if self.interpolation == "linear":
            return np.interp(ts, t, v)
        if side < 0:
            idx = np.searchsorted(t, ts, side="left") - 1
        else:
            idx = np.searchsorted(t, ts, side="right") - 1
        return v[np.clip(idx, 0, v.size - 1)]

    def breakpoints(self):
        return self._t.copy()

    def jump_candidates(self):
        return self._t.copy() if self.interpolation == "left-constant" else np.empty(0)

    def deriv(self, ts):
        slopes = np.diff(self._v) / np.diff(self._t)
        idx = np.clip(np.searchsorted(self._t, ts, side="right") - 1, 0, slopes.size - 1)
        if self.interpolation == "linear":
            return slopes[idx]
        return np.zeros_like(ts)

    def osc_bound(self):
        return float(self._v.max() - self._v.min())

    def lipschitz(self) -> float:
        if self.interpolation != "linear":
            return math.inf
        return float(np.max(np.abs(np.diff(self._v) / np.diff(self._t))))

    def modulus(self, length):
        return min(self.osc_bound(), self.lipschitz() * length)

    def energy(self):
        if self.interpolation != "linear":
            return math.inf
        return float(np.sum(np.diff(self._v) ** 2 / np.diff(self._t)))

    def to_json(self):
        return {"kind": self.kind, "ts": list(map(float, self._t)), "vals": list(map(float, self._v)),
                "interpolation": self.interpolation}

    @classmethod
    def from_csv(cls, text: str, interpolation: str = "linear") -> "GridSample":
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames is None or [h.strip() for h in reader.fieldnames] != ["t", "value"]:
            raise PreconditionError("samples CSV must have header 't,value'")
        ts, vs = [], []
        for row in reader:
            ts.append(float(row["t"]))
            vs.append(float(row["value"]))
        return cls(tuple(ts), tuple(vs), interpolation)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "value"])
        for t, v in zip(self._t, self._v):
            w.writerow([repr(float(t)), repr(float(v))])
        return buf.getvalue()


def identity() -> GridSample:
    return GridSample((0.0, 1.0), (0.0, 1.0))


def piecewise_linear(ts: Sequence[float], vals: Sequence[float]) -> GridSample:
    return GridSample(tuple(ts), tuple(vals), "linear")


# ---------------------------------------------------------------------------
# Step functions


@dataclass(frozen=True, eq=False)
class StepFunction(FunctionModel):
    """Finitely many jumps ``(t, f(t-), f(t), f(t+))``; the value is 0 before the first jump."""

    jumps: tuple[tuple[float, float, float, float], ...] = ()

    kind = "step"

    def __post_init__(self):
        js = tuple(tuple(float(x) for x in j) for j in self.jumps)
        fixed = []
        prev_right = 0.0
        prev_t = -1.0
        for t, lv, av, rv in js:
            if not 0.0 <= t <= 1.0:
                raise PreconditionError("jump points must lie in [0, 1]")
            if t <= prev_t:
                raise PreconditionError("jump points must be strictly increasing")
            if abs(lv - prev_right) > 1e-12 * max(1.0, abs(lv)):
                raise PreconditionError(f"left value at {t} does not match the level before it")
            if t == 0.0:
                if av != 0.0:
                    raise PreconditionError("step function must satisfy f(0) = 0")
                lv = 0.0
            if t == 1.0:
                rv = av
            fixed.append((t, prev_right, av, rv))
            prev_right, prev_t = rv, t
        object.__setattr__(self, "jumps", tuple(fixed))
        arr = np.array(fixed, dtype=float).reshape(-1, 4)
        object.__setattr__(self, "_arr", arr)

    def _eval(self, ts, side):
        arr = self._arr
        if arr.shape[0] == 0:
            return np.zeros_like(ts)
        jt = arr[:, 0]
        idx = np.searchsorted(jt, ts, side="right") - 1
        safe = np.clip(idx, 0, jt.size - 1)
        at_jump = (idx >= 0) & (jt[safe] == ts)
        between = np.where(idx >= 0, arr[safe, 3], 0.0)
        col = {-1: 1, 0: 2, 1: 3}[side]
        return np.where(at_jump, arr[safe, col], between)

    def breakpoints(self):
        return np.unique(np.concatenate([[0.0, 1.0], self._arr[:, 0]]))

    def jump_candidates(self):
        return self._arr[:, 0].copy()

    def deriv(self, ts):
        return np.zeros_like(ts)

    def osc_bound(self):
        if self._arr.shape[0] == 0:
            return 0.0
        levels = np.concatenate([[0.0], self._arr[:, 1:].ravel()])
        return float(levels.max() - levels.min())

    def energy(self):
        return 0.0 if self._arr.shape[0] == 0 else math.inf

    def to_json(self):
        return {"kind": self.kind, "jumps": [list(j) for j in self.jumps]}

    @classmethod
    def combine(cls, terms: Iterable[tuple[float, "StepFunction"]]) -> "StepFunction":
        terms = list(terms)
        pts = sorted(set(float(t) for _, s in terms for t in s._arr[:, 0]))
        combo = LinearCombo(tuple(terms))
        jumps = []
        for t in pts:
            jumps.append((t, eval_left(combo, t), eval(combo, t), eval_right(combo, t)))
        return cls(tuple(jumps))


def indicator(lo: float, hi: float, lo_closed: bool = True, hi_closed: bool = True,
              height: float = 1.0) -> StepFunction:
    """height * indicator of the interval between lo and hi (lo > 0 or an open left end)."""
    h = float(height)
    jumps = [(lo, 0.0, h if lo_closed else 0.0, h)]
    if hi < 1.0:
        jumps.append((hi, h, h if hi_closed else 0.0, 0.0))
    elif not hi_closed:
        jumps.append((1.0, h, 0.0, 0.0))
    return StepFunction(tuple(jumps))


def right_step(t: float, height: float = 1.0) -> StepFunction:
    """height * indicator of [t, 1]."""
    return indicator(t, 1.0, True, True, height)


# ---------------------------------------------------------------------------
# Rademacher primitives


@dataclass(frozen=True, eq=False)
class RademacherPrimitive(FunctionModel):
    """scale * 2^{n/2} * integral of the n-th Rademacher function, optionally on a window.

    On a window [lo, hi] the primitive restarts at lo and is zero outside; a window ending
    before 1 must hold an even number of pieces of length 2^-n so the model stays continuous.
    """

    n: int
    scale: float = 1.0
    lo: float = 0.0
    hi: float = 1.0

    kind = "rademacher"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise PreconditionError("Rademacher level must be a non-negative integer")
        object.__setattr__(self, "n", int(self.n))
        if not 0.0 <= self.lo < self.hi <= 1.0:
            raise PreconditionError("Rademacher window must satisfy 0 <= lo < hi <= 1")
        pieces = (self.hi - self.lo) * 2.0**self.n
        if abs(pieces - round(pieces)) > 1e-9 or round(pieces) < 1:
            raise PreconditionError("window length must be a multiple of 2^-n")
        if self.hi < 1.0 and round(pieces) % 2:
            raise PreconditionError("a window ending before 1 needs an even number of pieces")

    @property
    def peak(self) -> float:
        return abs(self.scale) * 2.0 ** (-self.n / 2)

    def _eval(self, ts, side):
        u = (ts - self.lo) * 2.0**self.n
        k = np.floor(u)
        frac = u - k
        tri = np.where(np.mod(k, 2) == 0, frac, 1.0 - frac)
        inside = (ts >= self.lo) & (ts <= self.hi)
        return np.where(inside, self.scale * 2.0 ** (-self.n / 2) * tri, 0.0)

    def breakpoint_count(self) -> int:
        return int(round((self.hi - self.lo) * 2.0**self.n)) + 3

    def min_breakpoint_gap(self) -> float:
        gaps = [2.0**-self.n] + [g for g in (self.lo, 1.0 - self.hi) if g > 0.0]
        return float(min(gaps))

    def breakpoints(self):
        m = int(round((self.hi - self.lo) * 2.0**self.n))
        pts = self.lo + np.arange(m + 1) / 2.0**self.n
        return np.unique(np.concatenate([[0.0, 1.0], pts]))

    def deriv(self, ts):
        u = (ts - self.lo) * 2.0**self.n
        k = np.floor(u)
        sgn = np.where(np.mod(k, 2) == 0, 1.0, -1.0)
        inside = (ts > self.lo) & (ts < self.hi)
        return np.where(inside, self.scale * 2.0 ** (self.n / 2) * sgn, 0.0)

    def osc_bound(self):
        return self.peak

    def modulus(self, length):
        return abs(self.scale) * min(2.0 ** (self.n / 2) * length, 2.0 ** (-self.n / 2))

    def energy(self):
        return self.scale**2 * 2.0**self.n * (self.hi - self.lo)

    def sup_closed_form(self) -> float:
        return self.peak

    def v2_norm_closed_form(self) -> float:
        return abs(self.scale) * math.sqrt(self.hi - self.lo)

    def to_json(self):
        return {"kind": self.kind, "n": self.n, "scale": float(self.scale),
                "lo": float(self.lo), "hi": float(self.hi)}


# ---------------------------------------------------------------------------
# Tent blocks: square roots of folded distribution functions


@dataclass(frozen=True, eq=False)
class TentBlock(FunctionModel):
    """scale * sqrt(G) on consecutive cells [c_i, c_{i+1}], zero outside the cells.

    On a cell I with peak p, G(x) = F(x) - F(c_i) for x <= p and F(c_{i+1}) - F(x) after it,
    where F is the piecewise-linear distribution function given by ``cdf_xs``/``cdf_Fs``.
    A single cell gives one tent; the cells of a quantile level give the whole level.
    """

    cuts: tuple[float, ...]
    peaks: tuple[float, ...]
    cdf_xs: tuple[float, ...]
    cdf_Fs: tuple[float, ...]
    scale: float = 1.0

    kind = "tent"
    curved = True

    def __post_init__(self):
        c = np.asarray(self.cuts, dtype=float)
        p = np.asarray(self.peaks, dtype=float)
        xs = np.asarray(self.cdf_xs, dtype=float)
        Fs = np.asarray(self.cdf_Fs, dtype=float)
        if c.size < 2 or p.size != c.size - 1:
            raise PreconditionError("tent block needs k+1 cuts and k peaks")
        if np.any(np.diff(c) <= 0) or c[0] < 0 or c[-1] > 1:
            raise PreconditionError("tent cuts must be strictly increasing in [0, 1]")
        if np.any(p <= c[:-1]) or np.any(p >= c[1:]):
            raise PreconditionError("each tent peak must lie strictly inside its cell")
        if xs.size < 2 or xs[0] != 0.0 or xs[-1] != 1.0 or np.any(np.diff(xs) <= 0):
            raise PreconditionError("CDF knots must increase from 0 to 1")
        if np.any(np.diff(Fs) < 0) or Fs[0] != 0.0:
            raise PreconditionError("CDF values must be non-decreasing from 0")
        Fc = np.interp(c, xs, Fs)
        object.__setattr__(self, "_c", c)
        object.__setattr__(self, "_p", p)
        object.__setattr__(self, "_xs", xs)
        object.__setattr__(self, "_Fs", Fs)
        object.__setattr__(self, "_Fc", Fc)
        dens = np.diff(Fs) / np.diff(xs)
        object.__setattr__(self, "_dens", dens)

    def _G(self, ts):
        c = self._c
        idx = np.searchsorted(c, ts, side="right") - 1
        inside = (ts >= c[0]) & (ts <= c[-1])
        idx = np.clip(idx, 0, c.size - 2)
        F = np.interp(ts, self._xs, self._Fs)
        rising = ts <= self._p[idx]
        G = np.where(rising, F - self._Fc[idx], self._Fc[idx + 1] - F)
        return np.where(inside, np.maximum(G, 0.0), 0.0), idx, rising, inside

    def _eval(self, ts, side):
        G, *_ = self._G(ts)
        return self.scale * np.sqrt(G)

    def breakpoints(self):
        xs = self._xs[(self._xs >= self._c[0]) & (self._xs <= self._c[-1])]
        return np.unique(np.concatenate([[0.0, 1.0], self._c, self._p, xs]))

    def deriv(self, ts):
        G, idx, rising, inside = self._G(ts)
        k = np.clip(np.searchsorted(self._xs, ts, side="right") - 1, 0, self._dens.size - 1)
        dF = self._dens[k]
        dG = np.where(rising, dF, -dF)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(G > 0, dG / (2.0 * np.sqrt(G)), np.sign(dG) * 1e300)
        return np.where(inside, self.scale * d, 0.0)

    def cell_masses(self) -> np.ndarray:
        return np.diff(self._Fc)

    def sup_closed_form(self) -> float:
        return self.osc_bound()

    def osc_bound(self):
        return abs(self.scale) * math.sqrt(max(float(self.cell_masses().max()), 0.0) / 2.0)

    def modulus(self, length):
        dmax = float(self._dens.max()) if self._dens.size else 0.0
        return min(self.osc_bound(), abs(self.scale) * math.sqrt(dmax * length))

    def to_json(self):
        return {"kind": self.kind, "cuts": list(map(float, self._c)), "peaks": list(map(float, self._p)),
                "cdf_xs": list(map(float, self._xs)), "cdf_Fs": list(map(float, self._Fs)),
                "scale": float(self.scale)}


# ---------------------------------------------------------------------------
# Linear combinations


@dataclass(frozen=True, eq=False)
class LinearCombo(FunctionModel):
    terms: tuple[tuple[float, FunctionModel], ...] = ()

    kind = "combo"

    def __post_init__(self):
        flat = []
        for c, m in self.terms:
            if isinstance(m, LinearCombo):
                flat.extend((float(c) * c2, m2) for c2, m2 in m.terms)
            else:
                flat.append((float(c), m))
        object.__setattr__(self, "terms", tuple(flat))
        object.__setattr__(self, "curved", any(m.curved for _, m in flat))
        object.__setattr__(self, "exact", all(m.exact for _, m in flat))

    def _eval(self, ts, side):
        out = np.zeros_like(ts)
        for c, m in self.terms:
            if c != 0.0:
                out = out + c * m._eval(ts, side)
        return out

    def breakpoint_count(self) -> int:
        return 2 + sum(m.breakpoint_count() for _, m in self.terms)

    def breakpoints(self):
        parts = [np.array([0.0, 1.0])] + [m.breakpoints() for _, m in self.terms]
        return np.unique(np.concatenate(parts))

    def jump_candidates(self):
        parts = [np.empty(0)] + [m.jump_candidates() for _, m in self.terms]
        return np.unique(np.concatenate(parts))

    def deriv(self, ts):
        out = np.zeros_like(ts)
        for c, m in self.terms:
            if c != 0.0:
                out = out + c * m.deriv(ts)
        return out

    def osc_bound(self):
        return float(sum(abs(c) * m.osc_bound() for c, m in self.terms))

    def modulus(self, length):
        return min(self.osc_bound(), float(sum(abs(c) * m.modulus(length) for c, m in self.terms)))

    def energy(self):
        roots = [abs(c) * math.sqrt(m.energy()) for c, m in self.terms if c != 0.0]
        return float(sum(roots)) ** 2 if roots else 0.0

    def to_json(self):
        return {"kind": self.kind, "terms": [[c, m.to_json()] for c, m in self.terms]}


def zero() -> LinearCombo:
    return LinearCombo(())


# ---------------------------------------------------------------------------
# Serialisation


def from_json(d: dict) -> FunctionModel:
    if not isinstance(d, dict) or "kind" not in d:
        raise PreconditionError("model JSON must be an object with a 'kind' tag")
    kind = d["kind"]
    try:
        if kind == "grid":
            return GridSample(tuple(d["ts"]), tuple(d["vals"]), d.get("interpolation", "linear"))
        if kind == "step":
            return StepFunction(tuple(tuple(j) for j in d["jumps"]))
        if kind == "rademacher":
            return RademacherPrimitive(d["n"], d.get("scale", 1.0), d.get("lo", 0.0), d.get("hi", 1.0))
        if kind == "tent":
            return TentBlock(tuple(d["cuts"]), tuple(d["peaks"]), tuple(d["cdf_xs"]),
                             tuple(d["cdf_Fs"]), d.get("scale", 1.0))
        if kind == "combo":
            return LinearCombo(tuple((float(c), from_json(m)) for c, m in d["terms"]))
    except (KeyError, TypeError) as exc:
        raise PreconditionError(f"malformed {kind} model: {exc}") from exc
    raise PreconditionError(f"unknown model kind {kind!r}")


def loads(text: str) -> FunctionModel:
    try:
        return from_json(json.loads(text))
    except json.JSONDecodeError as exc:
        raise PreconditionError(f"model file is not valid JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# Derived quantities


@dataclass(frozen=True)
class Jump:
    t: float
    left: float
    at: float
    right: float


@dataclass(frozen=True)
class JumpSet:
    points: tuple[Jump, ...]
    heuristic: bool = False

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


def jump_points(f: FunctionModel, threshold_factor: float = 5.0) -> JumpSet:
    """Discontinuities of ``f``; for linear grid samples they are inferred from large increments."""
    if isinstance(f, GridSample) and f.interpolation == "linear":
        d = np.abs(np.diff(f._v))
        thr = threshold_factor * float(np.median(d)) if d.size else 0.0
        hits = np.nonzero(d > thr)[0]
        pts = tuple(Jump(float(f._t[i + 1]), float(f._v[i]), float(f._v[i + 1]), float(f._v[i + 1]))
                    for i in hits)
        return JumpSet(pts, heuristic=True)
    cand = f.jump_candidates()
    if cand.size == 0:
        return JumpSet(())
    L, V, R = f.values(cand, -1), f.values(cand, 0), f.values(cand, 1)
    scale = np.maximum(1.0, np.maximum(np.abs(V), np.maximum(np.abs(L), np.abs(R))))
    real = (np.abs(L - V) > _TOL * scale) | (np.abs(R - V) > _TOL * scale)
    pts = tuple(Jump(float(t), float(l), float(v), float(r))
                for t, l, v, r, ok in zip(cand, L, V, R, real) if ok)
    return JumpSet(pts, heuristic=not f.exact)


def critical_points(f: FunctionModel, samples: int = 16, iters: int = 60) -> np.ndarray:
    """Interior zeros of f' on curved pieces, located by sign changes and vectorised bisection."""
    if not f.curved:
        return np.empty(0)
    bp = f.breakpoints()
    a, b = bp[:-1], bp[1:]
    w = b - a
    s = (np.arange(samples + 1) / samples)[None, :]
    eps = 1e-12
    grid = a[:, None] + w[:, None] * (eps + (1 - 2 * eps) * s)
    d = f.deriv(grid.ravel()).reshape(grid.shape)
    change = np.sign(d[:, :-1]) * np.sign(d[:, 1:]) < 0
    rows, cols = np.nonzero(change)
    if rows.size == 0:
        return np.empty(0)
    lo = grid[rows, cols].copy()
    hi = grid[rows, cols + 1].copy()
    dlo = d[rows, cols]
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        dm = f.deriv(mid)
        same = np.sign(dm) == np.sign(dlo)
        lo = np.where(same, mid, lo)
        dlo = np.where(same, dm, dlo)
        hi = np.where(same, hi, mid)
    return np.unique(0.5 * (lo + hi))


def sup_norm(f: FunctionModel) -> float:
    closed = getattr(f, "sup_closed_form", None)
    if closed is not None:
        return closed()
    pts = np.unique(np.concatenate([f.breakpoints(), critical_points(f)]))
    return float(max(np.abs(f.values(pts, s)).max() for s in (-1, 0, 1)))


def pointwise_osc(f: FunctionModel, t: float) -> float:
    l, v, r = eval_left(f, t), eval(f, t), eval_right(f, t)
    return float(max(abs(r - v), abs(l - v), abs(r - l)))
