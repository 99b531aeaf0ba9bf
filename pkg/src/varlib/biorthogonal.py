"""Biorthogonality checks, greedy biorthogonal selection, and the estimates built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .funcmodel import FunctionModel, LinearCombo, from_json as model_from_json, sup_norm, zero
from .intervals import Interval, IntervalFamily, MeshLadder, PreconditionError
from .varnorm import (MESH_GUARD, dyadic_grid, mesh_constrained_var, v2_family, v2_norm_value,
                      v2_sq_family)

TOL = 1e-12


# ---------------------------------------------------------------------------
# Budgets


def eps_k(eps_i, i: int, k: int):
    """(sum_{r=1}^{k-i+1} 2^-r) * eps_i; exact when eps_i is a Fraction or an int."""
    if not 1 <= i <= k:
        raise PreconditionError("need 1 <= i <= k")
    factor = 1 - Fraction(1, 2 ** (k - i + 1))
    if isinstance(eps_i, (Fraction, int)):
        return factor * eps_i
    return float(factor) * float(eps_i)


# ---------------------------------------------------------------------------
# Certified per-class bounds


def max_count(lo: float) -> float:
    """Largest number of intervals longer than lo with disjoint interiors in [0, 1]."""
    if lo <= 0.0:
        return math.inf
    return math.ceil(1.0 / lo) - 1


def class_bound_sq(H: FunctionModel, lo: float, hi: float, norm_sq: float | None = None) -> float:
    """Upper bound on v2^2(H, J) over families J whose lengths lie in (lo, hi]."""
    if norm_sq is None:
        norm_sq = v2_norm_value(H) ** 2
    b = min(norm_sq, hi * H.energy())
    c = max_count(lo)
    if math.isfinite(c):
        b = min(b, c * H.modulus(hi) ** 2)
    return float(b)


def tail_bound(H: FunctionModel, delta: float, norm_sq: float | None = None) -> float:
    """Upper bound on v2(H, J) over families with all lengths at most delta."""
    return math.sqrt(class_bound_sq(H, 0.0, delta, norm_sq))


# ---------------------------------------------------------------------------
# Witness partitions


@dataclass(frozen=True)
class WitnessLayout:
    """How a family of intervals is split among the members.

    Member i sits on ladder level ``levels[i]``; an interval goes to the level whose length
    window (d_l, d_{l-1}] holds its length.  Inside a level with several members, an interval
    goes to the member whose support holds its left end, else its right end, else the first
    member of the level.
    """

    ladder: MeshLadder
    levels: tuple[int, ...]
    supports: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        k = len(self.ladder)
        if any(not 0 <= l < k for l in self.levels):
            raise PreconditionError("member levels must index the ladder")
        if self.supports is not None and len(self.supports) != len(self.levels):
            raise PreconditionError("one support per member is required")
        by_level: dict[int, list[int]] = {}
        for i, l in enumerate(self.levels):
            by_level.setdefault(l, []).append(i)
        if set(by_level) != set(range(k)):
            raise PreconditionError("every ladder level needs at least one member")
        if self.supports is None and any(len(v) > 1 for v in by_level.values()):
            raise PreconditionError("members sharing a level need supports")
        if self.supports is not None:
            for v in by_level.values():
                sup = sorted(self.supports[i] for i in v)
                if any(b[0] < a[1] for a, b in zip(sup, sup[1:])):
                    raise PreconditionError("supports within a level must have disjoint interiors")
        object.__setattr__(self, "_by_level", by_level)

    @classmethod
    def sequence(cls, ladder: MeshLadder) -> "WitnessLayout":
        return cls(ladder, tuple(range(len(ladder))))

    def window(self, i: int) -> tuple[float, float]:
        return self.ladder.bounds(self.levels[i] + 1)

    def level_of(self, length: float) -> int:
        k = len(self.ladder)
        for j in range(1, k + 1):
            lo, hi = self.ladder.bounds(j)
            if lo < length <= hi:
                return j - 1
        return k - 1

    def members_at(self, level: int) -> list[int]:
        return self._by_level.get(level, [])

    def split(self, fam: IntervalFamily) -> list[IntervalFamily]:
        buckets: list[list[Interval]] = [[] for _ in self.levels]
        for I in fam:
            l = self.level_of(I.length)
            members = self.members_at(l)
            if not members:
                continue  # no member on this level: the interval feeds no cross sum
            if len(members) == 1:
                buckets[members[0]].append(I)
                continue
            target = None
            for probe in (I.lo, I.hi):
                for m in members:
                    a, b = self.supports[m]
                    if a <= probe <= b:
                        target = m
                        break
                if target is not None:
                    break
            buckets[members[0] if target is None else target].append(I)
        return [IntervalFamily(tuple(b)) for b in buckets]


# ---------------------------------------------------------------------------
# Biorthogonality check


@dataclass
class BiorthoWitness:
    epsilons: tuple[float, ...]
    layout: WitnessLayout
    rows: list[dict] = field(default_factory=list)
    certified: tuple[float, ...] = ()
    cardinality_ok: bool = True

    @property
    def violations(self) -> list[dict]:
        return [r for r in self.rows if not r["ok"]]

    @property
    def passed(self) -> bool:
        return not self.violations and self.cardinality_ok

    @property
    def certified_ok(self) -> bool:
        return bool(self.certified) and all(c <= e + TOL for c, e in zip(self.certified, self.epsilons))

    def worst(self) -> list[float]:
        out = [0.0] * len(self.epsilons)
        for r in self.rows:
            out[r["j"]] = max(out[r["j"]], r["defect"])
        return out

    def to_json(self) -> dict:
        return {"passed": self.passed, "violations": len(self.violations),
                "families_checked": len({r["source"] for r in self.rows}),
                "worst_defects": self.worst(), "epsilons": list(self.epsilons),
                "certified_bounds": list(self.certified), "certified_ok": self.certified_ok,
                "cardinality_ok": self.cardinality_ok,
                "ladder": list(self.layout.ladder.deltas), "levels": list(self.layout.levels)}


def cross_defects(family: Sequence[FunctionModel], parts: Sequence[IntervalFamily]) -> list[float]:
    """For each j, the sum over i != j of v2(H_i, part j)."""
    k = len(family)
    out = []
    for j in range(k):
        if len(parts[j]) == 0:
            out.append(0.0)
            continue
        out.append(float(sum(v2_family(family[i], parts[j]) for i in range(k) if i != j)))
    return out


def certified_defects(family: Sequence[FunctionModel], layout: WitnessLayout,
                      norms_sq: Sequence[float] | None = None) -> list[float]:
    """Upper bounds on the cross sums valid for every family of intervals."""
    k = len(family)
    if norms_sq is None:
        norms_sq = [v2_norm_value(H) ** 2 for H in family]
    sups = [sup_norm(H) for H in family]
    out = []
    for j in range(k):
        lo, hi = layout.window(j)
        total = 0.0
        siblings = []
        for i in range(k):
            if i == j:
                continue
            if layout.levels[i] == layout.levels[j]:
                siblings.append(sups[i])
            else:
                total += math.sqrt(class_bound_sq(family[i], lo, hi, norms_sq[i]))
        if siblings:
            # only the last interval starting in member j's support can reach a sibling support
            total += max(siblings)
        out.append(total)
    return out


def _window_family_kernel(ts, ys, lo, hi, best, parent):
    n = ts.shape[0]
    for b in range(1, n):
        best[b] = best[b - 1]
        parent[b] = -1
        for a in range(b - 1, -1, -1):
            L = ts[b] - ts[a]
            if L <= lo:
                continue
            if L > hi:
                break
            c = best[a] + (ys[b] - ys[a]) ** 2
            if c > best[b]:
                best[b] = c
                parent[b] = a


try:
    from numba import njit as _njit

    _window_family_kernel = _njit(cache=True)(_window_family_kernel)
except ImportError:  # pragma: no cover
    pass


def window_family_dp(H: FunctionModel, grid: np.ndarray, lo: float, hi: float
                     ) -> tuple[float, IntervalFamily]:
    """Largest v2^2(H, J) over grid families J with all lengths in (lo, hi]."""
    ts = np.ascontiguousarray(grid, dtype=float)
    ys = np.ascontiguousarray(H.values(ts), dtype=float)
    best = np.zeros(ts.size)
    parent = np.full(ts.size, -1, dtype=np.int64)
    _window_family_kernel(ts, ys, float(lo), float(hi) + MESH_GUARD, best, parent)
    pairs = []
    b = ts.size - 1
    while b > 0:
        a = int(parent[b])
        if a < 0:
            b -= 1
            continue
        pairs.append((float(ts[a]), float(ts[b])))
        b = a
    return float(best[-1]), IntervalFamily.from_pairs(pairs[::-1])


def adversarial_families(family: Sequence[FunctionModel], layout: WitnessLayout,
                         grid_level: int = 10) -> list[tuple[str, IntervalFamily]]:
    """Grid families built to make each member vary as much as possible on another member's class.

    Each class searches the global grid plus a local grid whose spacing resolves its length
    window, so short-interval classes are probed too.
    """
    out = []
    k = len(family)
    base = adversarial_grid(family, grid_level)
    for j in range(k):
        lo, hi = layout.window(j)
        others = [i for i in range(k) if i != j]
        if not others:
            continue
        step = hi / 8.0
        span = min(1.0, step * 2**grid_level)
        local = np.arange(int(round(span / step)) + 1) * step
        grid = np.unique(np.concatenate([base, local[local <= 1.0]]))
        targets = [(f"adv j={j} i={i}", family[i]) for i in others]
        if len(others) > 1:
            targets.append((f"adv j={j} sum", LinearCombo(tuple((1.0, family[i]) for i in others))))
        for name, H in targets:
            _, fam = window_family_dp(H, grid, lo, hi)
            if len(fam):
                out.append((name, fam))
    return out


def adversarial_grid(family: Sequence[FunctionModel], grid_level: int) -> np.ndarray:
    pts = [dyadic_grid(grid_level)]
    cap = 2**grid_level + 1
    for H in family:
        if H.breakpoint_count() <= cap:
            pts.append(H.breakpoints())
    return np.unique(np.concatenate(pts))


def check_biortho(family: Sequence[FunctionModel], epsilons: Sequence[float], ladder: MeshLadder,
                  trial_families: Sequence[IntervalFamily] = (), layout: WitnessLayout | None = None,
                  adversarial: bool = True, grid_level: int = 10) -> BiorthoWitness:
    """Evaluate the cross sums for every trial family and for adversarial grid families."""
    family = list(family)
    if len(family) != len(epsilons):
        raise PreconditionError("one epsilon per family member is required")
    if layout is None:
        if len(ladder) != len(family):
            raise PreconditionError("the ladder needs one scale per family member")
        layout = WitnessLayout.sequence(ladder)
    elif len(layout.levels) != len(family):
        raise PreconditionError("layout must list one level per family member")
    eps = tuple(float(e) for e in epsilons)
    wit = BiorthoWitness(eps, layout)
    sources = [(f"trial {n}", fam) for n, fam in enumerate(trial_families)]
    if adversarial and len(family) > 1:
        sources += adversarial_families(family, layout, grid_level)
    for name, fam in sources:
        parts = layout.split(fam)
        for l in range(len(layout.ladder)):
            lo, _ = layout.ladder.bounds(l + 1)
            n_l = sum(1 for I in fam if layout.level_of(I.length) == l and I.length > lo)
            if lo > 0 and n_l >= 1.0 / lo:
                wit.cardinality_ok = False
        for j, d in enumerate(cross_defects(family, parts)):
            wit.rows.append({"source": name, "j": j, "defect": d, "eps": eps[j],
                             "ok": d <= eps[j] + TOL})
    wit.certified = tuple(certified_defects(family, layout))
    return wit


# ---------------------------------------------------------------------------
# Greedy selection


@dataclass
class SelectionCertificate:
    epsilons: tuple[float, ...]
    mode: str
    indices: list[int] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    deltas: list[float] = field(default_factory=lambda: [1.0])
    thresholds: list[float] = field(default_factory=list)
    tail_checks: list[dict] = field(default_factory=list)
    sup_norms: list[float] = field(default_factory=list)
    models: list[dict] = field(default_factory=list)
    failure: str | None = None

    @property
    def complete(self) -> bool:
        return self.failure is None

    def ladder(self) -> MeshLadder:
        return MeshLadder(tuple(self.deltas[: max(len(self.indices), 1)]))

    def family(self) -> list[FunctionModel]:
        return [model_from_json(m) for m in self.models]

    def to_json(self) -> dict:
        return {"epsilons": list(self.epsilons), "mode": self.mode, "indices": self.indices,
                "labels": self.labels, "deltas": self.deltas, "thresholds": self.thresholds,
                "tail_checks": self.tail_checks, "sup_norms": self.sup_norms,
                "models": self.models, "failure": self.failure}

    @classmethod
    def from_json(cls, d: dict) -> "SelectionCertificate":
        try:
            return cls(tuple(d["epsilons"]), d["mode"], list(d["indices"]), list(d.get("labels", [])),
                       list(d["deltas"]), list(d.get("thresholds", [])), list(d.get("tail_checks", [])),
                       list(d.get("sup_norms", [])), list(d["models"]), d.get("failure"))
        except (KeyError, TypeError) as exc:
            raise PreconditionError(f"malformed certificate: {exc}") from exc

    def recheck(self) -> dict:
        """Re-derive every recorded inequality from the stored models."""
        fam = self.family()
        out = {"tail_checks_ok": True, "sup_norms_ok": True}
        for rec in self.tail_checks:
            b = sum(tail_bound(fam[i], rec["delta"]) for i in range(rec["step"]))
            if abs(b - rec["bound"]) > 1e-9 * max(1.0, b) or b > rec["target"] + TOL:
                out["tail_checks_ok"] = False
        for s, H in zip(self.sup_norms, fam):
            if abs(sup_norm(H) - s) > 1e-9:
                out["sup_norms_ok"] = False
        return out


def _mesh_min(H: FunctionModel, partition: np.ndarray | None) -> float:
    if partition is None:
        return H.min_breakpoint_gap()
    pts = np.unique(np.asarray(partition, dtype=float))
    return float(np.min(np.diff(pts))) if pts.size > 1 else 1.0


def _delta_start(prev_delta: float, mesh_min: float) -> float:
    return mesh_min if mesh_min < prev_delta else prev_delta / 2.0


def select_subsequence(candidates: Sequence[FunctionModel], epsilons: Sequence[float], length: int,
                       mode: str = "threshold", partitions: Sequence[np.ndarray] | None = None,
                       labels: Sequence[str] | None = None, max_halvings: int = 60,
                       dp_grid_level: int = 12) -> SelectionCertificate:
    """Greedy biorthogonal subsequence of a finite pool.

    ``threshold``: step k+1 takes the first later candidate whose sup norm is below
    min(sqrt(d_k) 2^-(k+3) min eps, eps_{k+1}), after d_k is halved until the chosen
    functions vary by at most eps_{k+1}/2 on families with lengths <= d_k.
    ``verified``: step k+1 takes the first later candidate and halving d_k for which the
    certified cross-sum bounds of the extended family meet the budgets eps_j^{k+1}.
    """
    if length < 1:
        raise PreconditionError("length must be at least 1")
    if len(epsilons) < length:
        raise PreconditionError("need an epsilon for every selected position")
    if mode not in ("threshold", "verified"):
        raise PreconditionError(f"unknown selection mode {mode!r}")
    pool = list(candidates)
    labels = list(labels) if labels is not None else [str(i) for i in range(len(pool))]
    eps = [float(e) for e in epsilons]
    cert = SelectionCertificate(tuple(eps[:length]), mode)
    if not pool:
        cert.failure = "empty candidate pool"
        return cert
    sups = [sup_norm(H) for H in pool]
    norms_sq: dict[int, float] = {}

    def nsq(i: int) -> float:
        if i not in norms_sq:
            norms_sq[i] = v2_norm_value(pool[i]) ** 2
        return norms_sq[i]

    def take(i: int):
        cert.indices.append(i)
        cert.labels.append(labels[i])
        cert.sup_norms.append(sups[i])
        cert.models.append(pool[i].to_json())

    take(0)
    while len(cert.indices) < length:
        k = len(cert.indices)
        last = cert.indices[-1]
        m_min = _mesh_min(pool[last], partitions[last] if partitions is not None else None)
        if mode == "threshold":
            d = _delta_start(cert.deltas[-1], m_min)
            target = eps[k] / 2.0
            found = None
            for _ in range(max_halvings + 1):
                bound = sum(tail_bound(pool[i], d, nsq(i)) for i in cert.indices)
                if bound <= target:
                    found = (d, bound)
                    break
                d /= 2.0
            if found is None:
                cert.failure = f"step {k + 1}: no delta within {max_halvings} halvings meets the tail bound"
                return cert
            d, bound = found
            rec = {"step": k, "delta": d, "bound": bound, "target": target}
            if 4.0 * 2.0**-dp_grid_level <= d:
                rec["dp_estimate"] = math.sqrt(sum(
                    mesh_constrained_var(pool[i], Interval(0.0, 1.0), d,
                                         dyadic_grid(dp_grid_level)).value for i in cert.indices))
            cert.tail_checks.append(rec)
            cert.deltas.append(d)
            thr = math.sqrt(d) * 2.0 ** -(k + 3) * min(eps[:k])
            cert.thresholds.append(thr)
            nxt = next((i for i in range(last + 1, len(pool)) if sups[i] < min(thr, eps[k])), None)
            if nxt is None:
                cert.failure = (f"step {k + 1}: no candidate after index {last} has sup norm below "
                                f"{min(thr, eps[k]):.3e}")
                return cert
            take(nxt)
        else:
            chosen = None
            budgets = [eps_k(eps[j], j + 1, k + 1) for j in range(k + 1)]
            for i in range(last + 1, len(pool)):
                d = _delta_start(cert.deltas[-1], m_min)
                fam = [pool[c] for c in cert.indices] + [pool[i]]
                nsqs = [nsq(c) for c in cert.indices] + [nsq(i)]
                for _ in range(max_halvings + 1):
                    layout = WitnessLayout.sequence(MeshLadder(tuple(cert.deltas) + (d,)))
                    cb = certified_defects(fam, layout, nsqs)
                    if all(c <= b + TOL for c, b in zip(cb, budgets)):
                        chosen = (i, d, cb)
                        break
                    d /= 2.0
                if chosen is not None:
                    break
            if chosen is None:
                cert.failure = (f"step {k + 1}: no candidate after index {last} admits a delta with "
                                f"certified cross sums inside the budgets")
                return cert
            i, d, cb = chosen
            bound = sum(tail_bound(pool[c], d, nsq(c)) for c in cert.indices)
            cert.tail_checks.append({"step": k, "delta": d, "bound": bound, "target": budgets[-1],
                                     "certified": cb})
            cert.deltas.append(d)
            cert.thresholds.append(budgets[-1])
            take(i)
    return cert


# ---------------------------------------------------------------------------
# Tree selection


def _tree_levels(nodes: Sequence[str]) -> list[int]:
    return [len(s) for s in nodes]


@dataclass
class TreeCertificate:
    depth: int
    embedding: dict[str, str] = field(default_factory=dict)
    deltas: list[float] = field(default_factory=lambda: [1.0])
    thresholds: list[float] = field(default_factory=list)
    failure: str | None = None

    def to_json(self) -> dict:
        return {"depth": self.depth, "embedding": self.embedding, "deltas": self.deltas,
                "thresholds": self.thresholds, "failure": self.failure}


def select_tree_subtree(candidates: dict[str, FunctionModel], epsilons: dict[str, float], depth: int,
                        max_halvings: int = 60) -> TreeCertificate:
    """Level-by-level greedy embedding s -> t_s into the candidate tree.

    Nodes are bit strings.  t_{s+b} must extend t_s + b.  Level l of the embedded tree gets a
    scale d_l, halved from the previous scale until the functions already chosen vary by at
    most min eps / 2 on families with lengths <= d_l; each node of level l + 1 then takes the
    shallowest extension whose sup norm is below sqrt(d_l) 2^-(l+3) min eps.
    """
    cert = TreeCertificate(depth)
    if "" not in candidates:
        cert.failure = "candidate tree has no root"
        return cert
    cert.embedding[""] = ""
    cand_depth = max(len(t) for t in candidates)
    for level in range(depth):
        chosen = [candidates[t] for t in cert.embedding.values()]
        next_eps = min(epsilons.get(s, math.inf) for s in _nodes_at(level + 1)) if epsilons else 1.0
        d = cert.deltas[-1] / 2.0
        for _ in range(max_halvings + 1):
            if sum(tail_bound(H, d) for H in chosen) <= next_eps / 2.0:
                break
            d /= 2.0
        else:
            cert.failure = f"level {level + 1}: no scale meets the tail bound"
            return cert
        cert.deltas.append(d)
        thr = math.sqrt(d) * 2.0 ** -(level + 3) * min(epsilons.get(s, math.inf)
                                                       for s in cert.embedding) if epsilons else 0.0
        cert.thresholds.append(thr)
        for s in _nodes_at(level + 1):
            base = cert.embedding[s[:-1]] + s[-1]
            pick = None
            for extra in range(0, cand_depth - len(base) + 1):
                for tail in _nodes_at(extra):
                    t = base + tail
                    if t in candidates and sup_norm(candidates[t]) < min(thr, epsilons.get(s, math.inf)):
                        pick = t
                        break
                if pick is not None:
                    break
            if pick is None:
                cert.failure = f"level {level + 1}: no admissible extension of {base!r}"
                return cert
            cert.embedding[s] = pick
    return cert


def _nodes_at(level: int) -> list[str]:
    if level == 0:
        return [""]
    return [format(i, f"0{level}b") for i in range(2**level)]


# ---------------------------------------------------------------------------
# Estimates on biorthogonal families


@dataclass
class EstimateReport:
    entries: dict[str, dict] = field(default_factory=dict)
    hypothesis_ok: bool = True
    eps_total: float = 0.0
    M: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def violations(self) -> list[str]:
        return [k for k, v in self.entries.items() if not v["ok"]]

    def to_json(self) -> dict:
        return {"entries": self.entries, "violations": self.violations,
                "hypothesis_ok": self.hypothesis_ok, "eps_total": self.eps_total, "M": self.M,
                "notes": self.notes}


def _combo(family, lam, idx) -> FunctionModel:
    terms = tuple((float(lam[i]), family[i]) for i in idx if lam[i] != 0.0)
    return LinearCombo(terms) if terms else zero()


def _record(rep: EstimateReport, name: str, lhs: float, rhs: float, strict: bool = False,
            reverse: bool = False):
    """Keep the worst case of lhs <= rhs (or lhs >= rhs when ``reverse``)."""
    slack = (lhs - rhs) if reverse else (rhs - lhs)
    ok = slack > -TOL * max(1.0, abs(lhs), abs(rhs))
    if strict and slack == 0.0 and lhs != 0.0:
        ok = False
    cur = rep.entries.get(name)
    if cur is None or slack < cur["slack"]:
        rep.entries[name] = {"lhs": lhs, "rhs": rhs, "slack": slack, "ok": ok and (cur is None or cur["ok"])}
    elif not ok:
        cur["ok"] = False


def estimate_bounds_check(family: Sequence[FunctionModel], epsilons: Sequence[float],
                          layout: WitnessLayout, coeffs: Sequence[float], fam: IntervalFamily,
                          F: Sequence[int] | None = None, G: Sequence[int] | None = None,
                          M: float | None = None, norms: Sequence[float] | None = None,
                          theta: float | None = None, check_punc: bool = False) -> EstimateReport:
    """Both sides of the seven per-family estimates and, optionally, the unconditionality ratio.

    Epsilons smaller than the cross sums actually realised on ``fam`` are raised to those sums
    (the estimates only use the family at hand), and ``hypothesis_ok`` records whether that
    was needed.  The fourth estimate is checked as v2(sum, J_j) >= |l_j| v2(H_j, J_j) - m eps_j;
    the version with an absolute value on the right fails whenever |l_j| v2(H_j, J_j) is small.
    """
    k = len(family)
    lam = np.asarray(coeffs, dtype=float)
    if lam.size != k or len(epsilons) != k:
        raise PreconditionError("coefficients and epsilons need one entry per member")
    G = sorted(set(range(k) if G is None else G))
    F = sorted(set(G if F is None else F))
    if not set(F) <= set(G):
        raise PreconditionError("F must be a subset of G")
    parts = layout.split(fam)
    realised = cross_defects(family, parts)
    eps = [max(float(e), r) for e, r in zip(epsilons, realised)]
    rep = EstimateReport()
    rep.hypothesis_ok = all(r <= e + TOL for r, e in zip(realised, epsilons))
    eps_tot = float(sum(eps))
    rep.eps_total = eps_tot
    if norms is None:
        norms = [v2_norm_value(H) for H in family]
    Mv = float(max(norms)) if M is None else float(M)
    rep.M = Mv
    own = [v2_family(family[j], parts[j]) for j in range(k)]
    mF = float(max((abs(lam[i]) for i in F), default=0.0))
    mG = float(max((abs(lam[i]) for i in G), default=0.0))
    SF = _combo(family, lam, F)
    SG = _combo(family, lam, G)

    # single-function estimate
    for i in range(k):
        rest = IntervalFamily(tuple(I for j in range(k) if j != i for I in parts[j]))
        _record(rep, "lprep_i", v2_family(family[i], rest), sum(eps[j] for j in range(k) if j != i))
    # per-class estimates for the partial sum over F
    for j in range(k):
        v = v2_family(SF, parts[j])
        if j not in F:
            _record(rep, "lprep_ii", v, mF * eps[j])
        else:
            a = abs(lam[j]) * own[j]
            _record(rep, "lprep_iii", v, a + mF * eps[j])
            _record(rep, "lprep_iv", v, a - mF * eps[j], reverse=True)
            if v < abs(a - mF * eps[j]) - TOL:
                rep.notes.append(f"absolute-value form of the fourth estimate fails at j={j}")
    vF2 = v2_sq_family(SF, fam)
    vG2 = v2_sq_family(SG, fam)
    _record(rep, "lul2_i", vF2, sum(lam[i] ** 2 * own[i] ** 2 for i in F) + mF**2 * (2 * Mv + eps_tot) * eps_tot)
    _record(rep, "lul2_ii", vG2, sum(lam[i] ** 2 * own[i] ** 2 for i in F) - mG**2 * 2 * Mv * eps_tot,
            reverse=True)
    _record(rep, "lul2_iii", vF2, vG2 + mG**2 * (4 * Mv + eps_tot) * eps_tot)
    if check_punc:
        th = float(min(norms)) if theta is None else float(theta)
        if th <= 2 * eps_tot:
            rep.notes.append("unconditionality ratio skipped: theta <= 2 eps")
        else:
            ratio = math.sqrt(1 + (4 * Mv + eps_tot) * eps_tot / (th - 2 * eps_tot) ** 2)
            _record(rep, "punc", v2_norm_value(SF), ratio * v2_norm_value(SG))
    return rep
