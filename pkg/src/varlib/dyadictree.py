"""Dyadic-tree combinatorics: S^p norms, the antichain decomposition, the L_s subtree partition,
finite-depth system bundles, the generating-system transform and basis-equivalence constants.

Nodes are bit strings: "" is the root, "01" is the node (0, 1).
"""

from __future__ import annotations

import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .biorthogonal import WitnessLayout, check_biortho
from .funcmodel import (FunctionModel, LinearCombo, RademacherPrimitive, from_json as model_from_json,
                        sup_norm)
from .intervals import (IntervalFamily, MeshLadder, PreconditionError, determination_defect,
                        random_family)
from .varmeasure import MeasureSpec, lebesgue
from .varnorm import domination_dp, dyadic_grid, v2_norm_value, v2_sq_family

TOL = 1e-12


def max_depth() -> int:
    """Depth cap for tree inputs, from VARLIB_MAX_DEPTH (default 12)."""
    raw = os.environ.get("VARLIB_MAX_DEPTH", "12")
    try:
        return int(raw)
    except ValueError as exc:
        raise PreconditionError(f"VARLIB_MAX_DEPTH must be an integer, got {raw!r}") from exc


# ---------------------------------------------------------------------------
# Nodes


def check_node(s: str) -> str:
    if not isinstance(s, str) or any(c not in "01" for c in s):
        raise PreconditionError(f"node {s!r} is not a bit string")
    return s


def nodes_at(n: int) -> list[str]:
    """All nodes of length n in lexicographic order."""
    return ["".join(b) for b in itertools.product("01", repeat=n)]


def nodes_upto(n: int) -> list[str]:
    """All nodes of length at most n, shallower first."""
    return [s for k in range(n + 1) for s in nodes_at(k)]


def is_prefix(s: str, t: str) -> bool:
    return t.startswith(s)


def incomparable(s: str, t: str) -> bool:
    return not (t.startswith(s) or s.startswith(t))


def branches(n: int) -> list[list[str]]:
    """Maximal chains of the tree of depth n, one per leaf."""
    return [[leaf[:k] for k in range(n + 1)] for leaf in nodes_at(n)]


def is_antichain(nodes: Iterable[str]) -> bool:
    ns = list(nodes)
    return all(incomparable(a, b) for a, b in itertools.combinations(ns, 2))


def is_maximal_antichain(nodes: Iterable[str], n: int) -> bool:
    """Every branch of the depth-n tree meets the set exactly once."""
    ns = set(nodes)
    return all(sum(1 for s in b if s in ns) == 1 for b in branches(n))


# ---------------------------------------------------------------------------
# Tree vectors


@dataclass(frozen=True)
class TreeVector:
    values: Mapping[str, float]

    def __post_init__(self):
        vals = {check_node(k): float(v) for k, v in dict(self.values).items()}
        object.__setattr__(self, "values", vals)

    @property
    def depth(self) -> int:
        return max((len(s) for s in self.values), default=0)

    def __getitem__(self, s: str) -> float:
        return self.values.get(s, 0.0)

    def support(self) -> list[str]:
        return sorted((s for s, v in self.values.items() if v != 0.0), key=lambda s: (len(s), s))

    def to_json(self) -> dict:
        return {s: self.values[s] for s in sorted(self.values, key=lambda s: (len(s), s))}

    @classmethod
    def from_json(cls, d) -> "TreeVector":
        if not isinstance(d, dict):
            raise PreconditionError("tree vector JSON must be an object keyed by bit strings")
        try:
            tv = cls({k: float(v) for k, v in d.items()})
        except (TypeError, ValueError) as exc:
            raise PreconditionError(f"malformed tree vector: {exc}") from exc
        if tv.depth > max_depth():
            raise PreconditionError(f"tree depth {tv.depth} exceeds the cap {max_depth()}")
        return tv

    @classmethod
    def loads(cls, text: str) -> "TreeVector":
        try:
            return cls.from_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise PreconditionError(f"tree vector file is not valid JSON: {exc}") from exc


def _closure(nodes: Iterable[str]) -> list[str]:
    out = {""}
    for s in nodes:
        out.update(s[:k] for k in range(len(s) + 1))
    return sorted(out, key=lambda s: (-len(s), s))  # deepest first


def sp_norm(x: TreeVector | Mapping[str, float], p: float = 2.0) -> tuple[float, list[str]]:
    """S^p norm by a bottom-up DP over the support closure, with an optimal antichain.

    Ties between a node and its children go to the node.
    """
    if p < 1:
        raise PreconditionError("p must be at least 1")
    if not isinstance(x, TreeVector):
        x = TreeVector(x)
    order = _closure(x.support())
    best: dict[str, float] = {}
    take: dict[str, bool] = {}
    for s in order:
        own = abs(x[s]) ** p
        kids = best.get(s + "0", 0.0) + best.get(s + "1", 0.0)
        take[s] = own >= kids
        best[s] = own if take[s] else kids
    witness: list[str] = []
    stack = [""]
    while stack:
        s = stack.pop()
        if s not in best:
            continue
        if take[s]:
            if best[s] > 0.0 or s == "":
                witness.append(s)
        else:
            stack.extend([s + "1", s + "0"])
    witness.sort(key=lambda s: (len(s), s))
    return best[""] ** (1.0 / p), witness


# ---------------------------------------------------------------------------
# Antichain decomposition of a weighted sum


@dataclass
class Lus2Result:
    antichain: list[str]
    branches: dict[str, list[str]]
    lhs: float
    rhs: float
    cases: dict[str, int]

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + TOL * max(1.0, abs(self.rhs))

    def to_json(self) -> dict:
        return {"antichain": self.antichain, "branches": self.branches, "lhs": self.lhs,
                "rhs": self.rhs, "holds": self.holds, "cases": self.cases}


def lus2_decompose(alpha: TreeVector | Mapping[str, float], lam: TreeVector | Mapping[str, float],
                   n: int) -> Lus2Result:
    """Maximal antichain A of the depth-n tree and branches b_t through each t in A with
    sum_s lam_s alpha_s <= sum_{t in A} lam_t * (alpha summed along b_t).

    Built bottom-up: at each subtree root the children's antichains are kept when the root
    weight does not exceed their total weight, else the root alone is kept together with the
    heaviest child branch.
    """
    if n < 0:
        raise PreconditionError("depth must be non-negative")
    a = alpha if isinstance(alpha, TreeVector) else TreeVector(alpha)
    l = lam if isinstance(lam, TreeVector) else TreeVector(lam)
    for s in nodes_upto(n):
        if a[s] < 0 or l[s] < 0:
            raise PreconditionError("both families must be non-negative")
    cases = {"keep_children": 0, "take_root": 0}

    def solve(r: str) -> tuple[list[str], dict[str, list[str]]]:
        if len(r) == n:
            return [r], {r: [r]}
        A0, B0 = solve(r + "0")
        A1, B1 = solve(r + "1")
        below = sum(l[t] for t in A0) + sum(l[t] for t in A1)
        if l[r] <= below:
            cases["keep_children"] += 1
            B = {t: [r] + b for t, b in list(B0.items()) + list(B1.items())}
            return A0 + A1, B
        cases["take_root"] += 1
        best_t, best_sum = None, -math.inf
        for t, b in list(B0.items()) + list(B1.items()):
            tot = sum(a[s] for s in b)
            if tot > best_sum:
                best_t, best_sum = t, tot
        merged = B0 if best_t in B0 else B1
        return [r], {r: [r] + merged[best_t]}

    A, B = solve("")
    lhs = float(sum(l[s] * a[s] for s in nodes_upto(n)))
    rhs = float(sum(l[t] * sum(a[s] for s in B[t]) for t in A))
    return Lus2Result(A, B, lhs, rhs, cases)


def branch_bound(alpha: TreeVector | Mapping[str, float], n: int) -> float:
    """Largest sum of alpha along a branch of the depth-n tree."""
    a = alpha if isinstance(alpha, TreeVector) else TreeVector(alpha)
    return max(sum(a[s] for s in b) for b in branches(n))


# ---------------------------------------------------------------------------
# Level sets and the almost disjoint subtrees


def interleave(u: str, s: str) -> str:
    """The node t with t(2i-1) = u(i) and t(2i) = s(i) (1-based positions)."""
    if len(u) != len(s):
        raise PreconditionError("interleave needs equal lengths")
    return "".join(a + b for a, b in zip(u, s))


def level_sets(s: str) -> list[str]:
    """Nodes of length 2|s| whose even (1-based) positions spell s."""
    check_node(s)
    return [interleave(u, s) for u in nodes_at(len(s))]


def level_set_properties(n: int) -> dict[str, bool]:
    """Exhaustive check of the four level-set properties for all s of length at most n."""
    L = {s: level_sets(s) for s in nodes_upto(n)}
    l1 = all(len(L[s]) == 2 ** len(s) and all(len(t) == 2 * len(s) for t in L[s]) for s in L)
    l2 = all(set(t[:2 * k] for t in L[s2]) == set(L[s2[:k]]) for s2 in L for k in range(len(s2) + 1))
    l3 = True
    for s1, s2 in itertools.combinations(L, 2):
        if incomparable(s1, s2):
            if not all(incomparable(a, b) for a in L[s1] for b in L[s2]):
                l3 = False
                break
    l4 = True
    for k in range(n + 1):
        allk = [t for s in nodes_at(k) for t in L[s]]
        if len(allk) != len(set(allk)) or set(allk) != set(nodes_at(2 * k)):
            l4 = False
    return {"L1": l1, "L2": l2, "L3": l3, "L4": l4}


@dataclass
class SubtreeT:
    sigma: str
    depth: int
    nodes: list[str]
    iso: dict[str, str]

    def to_json(self) -> dict:
        return {"sigma": self.sigma, "depth": self.depth, "nodes": self.nodes, "iso": self.iso}


def subtree_T(sigma_prefix: str, depth: int) -> SubtreeT:
    """Union of L_{sigma|k} for k <= depth, with the order isomorphism from the depth-D tree."""
    check_node(sigma_prefix)
    if len(sigma_prefix) < depth:
        raise PreconditionError("sigma prefix must be at least as long as the depth")
    iso = {u: interleave(u, sigma_prefix[:len(u)]) for u in nodes_upto(depth)}
    nodes = sorted(set(iso.values()), key=lambda s: (len(s), s))
    return SubtreeT(sigma_prefix[:depth], depth, nodes, iso)


def order_isomorphic(iso: Mapping[str, str]) -> bool:
    """u is a prefix of v exactly when iso(u) is a prefix of iso(v)."""
    return all(is_prefix(u, v) == is_prefix(iso[u], iso[v]) for u in iso for v in iso)


# ---------------------------------------------------------------------------
# Grids and signed measure differences over grid families


def parse_grid(spec) -> np.ndarray:
    """A point set given as a list or as "dyadic:k"."""
    if isinstance(spec, str):
        if spec.startswith("dyadic:"):
            return dyadic_grid(int(spec.split(":", 1)[1]))
        raise PreconditionError(f"unknown grid spec {spec!r}")
    g = np.unique(np.asarray(spec, dtype=float))
    if g.size and (g[0] < 0.0 or g[-1] > 1.0):
        raise PreconditionError("grid points must lie in [0, 1]")
    return g


def extreme_grid_union(D: np.ndarray, DL: np.ndarray) -> float:
    """Largest |sum_i (D[b_i] - DL[a_i])| over a_1 < b_1 < a_2 < b_2 < ... (indices).

    With D and DL the right and left distribution functions of a signed measure on a grid,
    this is the largest |measure of the union| over closed-disjoint grid families.
    """
    def best(sign: float) -> float:
        val, opened = 0.0, -math.inf
        for k in range(D.size):
            close = opened + sign * D[k]
            opened = max(opened, val - sign * DL[k])
            val = max(val, close)
        return val

    return float(max(best(1.0), best(-1.0)))


def _cdfs(mu: MeasureSpec, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return mu.cdf(grid), mu.cdf_left(grid)


# ---------------------------------------------------------------------------
# System bundles


@dataclass
class SystemBundle:
    """Finite-depth family (G_s, nu_s, I_s) with point sets Q_n, constants and tolerances.

    ``eps_bio`` holds per-node biorthogonality budgets and ``layouts`` the witness layout of
    each level (members in lexicographic node order); both only matter for generating bundles.
    """

    depth: int
    G: dict[str, FunctionModel]
    nu: dict[str, MeasureSpec]
    I: dict[str, IntervalFamily]
    Q: list
    M: float
    Lam: float
    theta: float
    eps: list[float]
    eps_bio: dict[str, float] = field(default_factory=dict)
    layouts: dict[int, WitnessLayout] = field(default_factory=dict)
    bio_total: float | None = None

    def __post_init__(self):
        if self.depth < 0:
            raise PreconditionError("depth must be non-negative")
        need = nodes_upto(self.depth)
        for name, table in (("G", self.G), ("nu", self.nu), ("I", self.I)):
            missing = [s for s in need if s not in table]
            if missing:
                raise PreconditionError(f"bundle is missing {name} at nodes {missing[:4]}")
        if len(self.Q) < self.depth + 1 or len(self.eps) < self.depth + 1:
            raise PreconditionError("bundle needs Q_n and eps_n for every level up to its depth")
        if any(e <= 0 for e in self.eps):
            raise PreconditionError("tolerances must be positive")

    def grid(self, n: int) -> np.ndarray:
        return parse_grid(self.Q[n])

    @property
    def eps_total(self) -> float:
        """Biorthogonality total: ``bio_total`` when recorded, else the largest level sum of
        the per-node budgets."""
        if self.bio_total is not None:
            return float(self.bio_total)
        sums = [sum(self.eps_bio.get(s, 0.0) for s in nodes_at(n)) for n in range(1, self.depth + 1)]
        return float(max(sums, default=0.0))

    def to_json(self) -> dict:
        nodes = {}
        for s in nodes_upto(self.depth):
            d = {"G": self.G[s].to_json(), "nu": self.nu[s].to_json(), "I": self.I[s].to_json()}
            if s in self.eps_bio:
                d["eps_bio"] = self.eps_bio[s]
            nodes[s] = d
        layouts = {str(n): {"ladder": list(L.ladder.deltas), "levels": list(L.levels),
                            "supports": None if L.supports is None else [list(x) for x in L.supports]}
                   for n, L in sorted(self.layouts.items())}
        Q = [q if isinstance(q, str) else list(map(float, q)) for q in self.Q]
        return {"depth": self.depth, "constants": {"M": self.M, "Lambda": self.Lam, "theta": self.theta},
                "eps": list(map(float, self.eps)), "Q": Q, "nodes": nodes, "layouts": layouts,
                "bio_total": self.bio_total}

    @classmethod
    def from_json(cls, d: dict) -> "SystemBundle":
        try:
            depth = int(d["depth"])
            if depth > max_depth():
                raise PreconditionError(f"bundle depth {depth} exceeds the cap {max_depth()}")
            nodes = d["nodes"]
            G = {s: model_from_json(v["G"]) for s, v in nodes.items()}
            nu = {s: MeasureSpec.from_json(v["nu"]) for s, v in nodes.items()}
            I = {s: IntervalFamily.from_json(v["I"]) for s, v in nodes.items()}
            eps_bio = {s: float(v["eps_bio"]) for s, v in nodes.items() if "eps_bio" in v}
            layouts = {}
            for n, L in d.get("layouts", {}).items():
                sup = L.get("supports")
                layouts[int(n)] = WitnessLayout(MeshLadder(tuple(L["ladder"])), tuple(L["levels"]),
                                                None if sup is None else tuple(tuple(x) for x in sup))
            c = d["constants"]
            return cls(depth, G, nu, I, list(d["Q"]), float(c["M"]), float(c["Lambda"]),
                       float(c["theta"]), [float(e) for e in d["eps"]], eps_bio, layouts,
                       None if d.get("bio_total") is None else float(d["bio_total"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, PreconditionError):
                raise
            raise PreconditionError(f"malformed bundle: {exc!r}") from exc

    def save(self, directory: str) -> str:
        os.makedirs(directory, exist_ok=True)
        path = os.path.join(directory, "bundle.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)
        return path

    @classmethod
    def load(cls, directory: str) -> "SystemBundle":
        path = os.path.join(directory, "bundle.json") if os.path.isdir(directory) else directory
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_json(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise PreconditionError(f"cannot read bundle at {path}: {exc}") from exc


@dataclass
class SystemReport:
    kind: str
    checks: list[dict] = field(default_factory=list)

    @property
    def failures(self) -> list[dict]:
        return [c for c in self.checks if not c["ok"]]

    @property
    def passed(self) -> bool:
        return not self.failures

    def add(self, condition: str, node, value: float, bound: float, ok: bool, **extra):
        row = {"condition": condition, "node": node, "value": float(value), "bound": float(bound),
               "ok": bool(ok)}
        row.update(extra)
        self.checks.append(row)

    def worst(self) -> dict[str, float]:
        """Per condition, the smallest slack seen (negative means violated)."""
        out: dict[str, float] = {}
        for c in self.checks:
            slack = c["bound"] - c["value"] if c["condition"] != "6" else c["value"] - c["bound"]
            out[c["condition"]] = min(out.get(c["condition"], math.inf), slack)
        return out

    def to_json(self) -> dict:
        return {"kind": self.kind, "passed": self.passed, "checked": len(self.checks),
                "failures": self.failures, "worst_slack": self.worst()}


def _trial_families(grid: np.ndarray, rng: np.random.Generator, count: int) -> list[IntervalFamily]:
    gaps = np.diff(grid)
    if gaps.size == 0:
        return []
    lo = float(np.max(gaps)) * 2.5
    hi = min(0.25, float(np.median(gaps)) * 120)
    hi = max(hi, lo)
    return [random_family(rng, int(rng.integers(1, 9)), lo, hi) for _ in range(count)]


def validate_system(bundle: SystemBundle, kind: str = "plain", seed: int = 0,
                    trials: int = 6, coeff_draws: int = 3, grid_level: int = 10) -> SystemReport:
    """Check the system conditions level by level, plus the extra conditions of ``kind``.

    Determination is probed with random trial families and coefficient vectors drawn from
    ``seed``; domination and the measure conditions are maximised exactly over grid families.
    """
    if kind not in ("plain", "s2", "generating"):
        raise PreconditionError(f"unknown system kind {kind!r}")
    rng = np.random.default_rng(seed)
    rep = SystemReport(kind)
    D = bundle.depth
    grids = [bundle.grid(n) for n in range(D + 1)]
    for n in range(D):
        if not set(grids[n].tolist()) <= set(grids[n + 1].tolist()):
            rep.add("Q", n, 1.0, 0.0, False, detail="point sets must increase with n")
    for n in range(D + 1):
        eps_n = bundle.eps[n]
        level = nodes_at(n)
        for s in level:
            G = bundle.G[s]
            norm = v2_norm_value(G)
            rep.add("1", s, norm, bundle.M, norm <= bundle.M + TOL, part="norm")
            mass = bundle.nu[s].total()
            rep.add("1", s, mass, bundle.Lam, mass <= bundle.Lam + TOL, part="mass")
            sup = sup_norm(G)
            rep.add("2", s, sup, eps_n, sup <= eps_n + TOL)
            margin, fam = domination_dp(G, bundle.nu[s], 1.0, grids[n])
            rep.add("4", s, margin, eps_n, margin <= eps_n + TOL,
                    family=fam.to_json() if margin > eps_n + TOL else None)
            own = v2_sq_family(G, bundle.I[s])
            rep.add("6", s, own, bundle.theta, own > bundle.theta)
        models = [bundle.G[s] for s in level]
        fams = _trial_families(grids[n], rng, trials)
        coeffs = [tuple(1.0 for _ in models)] + [tuple(rng.standard_normal(len(models)))
                                                for _ in range(coeff_draws)]
        defect = determination_defect(models, grids[n], fams, coeffs)
        rep.add("3", n, defect, eps_n, defect <= eps_n + TOL)
    for s, t in itertools.combinations(nodes_upto(D), 2):
        if incomparable(s, t):
            ok = True
            try:
                IntervalFamily(bundle.I[s].intervals + bundle.I[t].intervals)
            except PreconditionError:
                ok = False
            rep.add("5", [s, t], 0.0 if ok else 1.0, 0.0, ok)
    if kind == "s2":
        _check_s2(bundle, grids, rep)
    if kind == "generating":
        _check_generating(bundle, grids, rep, grid_level)
    return rep


def _check_s2(bundle: SystemBundle, grids, rep: SystemReport) -> None:
    D = bundle.depth
    for n in range(D + 1):
        g = grids[n]
        for s in nodes_at(n):
            Fs, Ls = _cdfs(bundle.nu[s], g)
            for m in range(n + 1, D + 1):
                for u in nodes_at(m - n):
                    Ft, Lt = _cdfs(bundle.nu[s + u], g)
                    val = extreme_grid_union(Ft - Fs, Lt - Ls)
                    rep.add("s2", [s, s + u], val, bundle.eps[n], val < bundle.eps[n])


def _check_generating(bundle: SystemBundle, grids, rep: SystemReport, grid_level: int) -> None:
    D = bundle.depth
    for n in range(D + 1):
        g = grids[n]
        for s in nodes_at(n):
            Fs, Ls = _cdfs(bundle.nu[s], g)
            for m in range(n + 1, D + 1):
                tails = nodes_at(m - n - 1)
                for u0 in tails:
                    F0, L0 = _cdfs(bundle.nu[s + "0" + u0], g)
                    for u1 in tails:
                        F1, L1 = _cdfs(bundle.nu[s + "1" + u1], g)
                        val = extreme_grid_union(0.5 * (F0 + F1) - Fs, 0.5 * (L0 + L1) - Ls)
                        rep.add("s2gen", [s, s + "0" + u0, s + "1" + u1], val, bundle.eps[n],
                                val < bundle.eps[n])
    for n in range(1, D + 1):
        level = nodes_at(n)
        layout = bundle.layouts.get(n)
        budgets = [bundle.eps_bio.get(s, 0.0) for s in level]
        if layout is None or not all(b > 0 for b in budgets):
            rep.add("bio", n, 1.0, 0.0, False, detail="level lacks a witness layout or budgets")
            continue
        wit = check_biortho([bundle.G[s] for s in level], budgets, layout.ladder, layout=layout,
                            grid_level=grid_level)
        worst = wit.worst()
        for s, w, b in zip(level, worst, budgets):
            rep.add("bio", s, w, b, w <= b + TOL)
        if not wit.cardinality_ok:
            rep.add("bio", n, 1.0, 0.0, False, detail="class cardinality bound broken")


# ---------------------------------------------------------------------------
# Transform of a generating system


@dataclass
class TransformResult:
    bundle: SystemBundle
    eps: float
    theta_prime: float
    constants: dict

    def to_json(self) -> dict:
        return {"eps": self.eps, "theta_prime": self.theta_prime, "constants": self.constants,
                "tolerances": self.bundle.eps}


def gen1_transform(bundle: SystemBundle) -> TransformResult:
    """Average a generating bundle of depth 2n over the level sets L_s into a bundle of depth n.

    G_s = 2^{-|s|/2} sum H_t, nu_s = 2^{-|s|} sum mu_t and I_s = union of J_t over t in L_s;
    Q_k = P_{2k} and eps'_k = theta 2^{-k/2} + 2^{k/2} eps_{2k}.  The new constants are
    (M + eps, Lambda, theta - (2M + eps) eps) with eps the bundle's biorthogonality total.
    """
    n = bundle.depth // 2
    eps = bundle.eps_total
    theta_p = bundle.theta - (2 * bundle.M + eps) * eps
    constants = {"M": bundle.M + eps, "Lambda": bundle.Lam, "theta": theta_p, "eps": eps}
    if theta_p <= 0:
        raise PreconditionError(f"theta' = {theta_p} is not positive; constants {constants}")
    G, nu, I = {}, {}, {}
    for k in range(n + 1):
        for s in nodes_at(k):
            L = level_sets(s)
            if k == 0:
                G[s] = bundle.G[""]
                nu[s] = bundle.nu[""]
                I[s] = bundle.I[""]
                continue
            w = 2.0 ** (-k / 2)
            G[s] = LinearCombo(tuple((w, bundle.G[t]) for t in L))
            acc = bundle.nu[L[0]]
            for t in L[1:]:
                acc = acc + bundle.nu[t]
            nu[s] = acc.scaled(2.0 ** -k)
            ivs = tuple(J for t in L for J in bundle.I[t])
            try:
                I[s] = IntervalFamily(ivs)
            except PreconditionError as exc:
                raise PreconditionError(f"families over L_{s} overlap: {exc}") from exc
    Q = [bundle.Q[2 * k] for k in range(n + 1)]
    eps_new = [bundle.theta / 2 ** (k / 2) + 2 ** (k / 2) * bundle.eps[2 * k] for k in range(n + 1)]
    out = SystemBundle(n, G, nu, I, Q, bundle.M + eps, bundle.Lam, theta_p, eps_new, bio_total=eps)
    return TransformResult(out, eps, theta_p, constants)


# ---------------------------------------------------------------------------
# Basis-equivalence constants


def s2_constants(M: float, Lam: float, theta: float, eps: float, eps_hat: float) -> tuple[float, float]:
    """(c, C) for a tree family built from a system with tolerance sum eps_hat and
    biorthogonality total eps."""
    low = theta - (eps + 2 * M) * eps
    c = math.sqrt(low) if low > 0 else 0.0
    C = math.sqrt(Lam + 3 * eps_hat + (2 * M + eps) * eps)
    return c, C


def c0_constant(C: float, mu_norm: float, M: float, eps: float) -> float:
    """Upper c0 constant of a biorthogonal family dominated by one measure."""
    return math.sqrt(C * mu_norm + eps * (2 * M + 1 + eps))


def coefficient_samples(nodes: Sequence[str], count: int, rng: np.random.Generator,
                        target: str = "s2") -> list[dict[str, float]]:
    """Gaussian, sign and unit vectors, plus (for s2) vectors carried by one branch or one level."""
    nodes = list(nodes)
    out: list[dict[str, float]] = [{s: 1.0 if s == u else 0.0 for s in nodes} for u in nodes]
    depth = max((len(s) for s in nodes), default=0)
    if target == "s2":
        for b in branches(depth):
            out.append({s: (1.0 if s in b else 0.0) for s in nodes})
        for k in range(depth + 1):
            out.append({s: (1.0 if len(s) == k else 0.0) for s in nodes})
    while len(out) < count:
        if len(out) % 2:
            v = rng.standard_normal(len(nodes))
        else:
            v = rng.choice([-1.0, 1.0], len(nodes))
        out.append(dict(zip(nodes, map(float, v))))
    return out[:max(count, len(nodes))]


def _norm_of(args) -> float:
    terms = args
    if not terms:
        return 0.0
    return v2_norm_value(LinearCombo(tuple(terms)))


@dataclass
class EquivalenceReport:
    target: str
    c_hat: float
    C_hat: float
    samples: int
    skipped: int
    predicted: dict
    consistent: bool | None
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"target": self.target, "c_hat": self.c_hat, "C_hat": self.C_hat,
                "samples": self.samples, "skipped": self.skipped, "predicted": self.predicted,
                "consistent": self.consistent, "notes": self.notes}


def equivalence_constants(family: Mapping[str, FunctionModel], target: str,
                          coeff_samples: Sequence[Mapping[str, float]],
                          constants: Mapping[str, float] | None = None, tol: float = 1e-2,
                          jobs: int = 1) -> EquivalenceReport:
    """Smallest and largest ratio ||sum lam_s G_s||_V2 / ||lam||_target over the samples.

    ``constants`` may hold M, Lambda, theta, eps, eps_hat (for s2) or C, mu_norm, M, eps (for
    c0); the closed-form bounds are then reported and compared with the ratios.
    """
    if target not in ("s2", "c0"):
        raise PreconditionError(f"unknown target {target!r}")
    nodes = sorted(family, key=lambda s: (len(s), s))
    notes: list[str] = []
    jobs_in, denoms = [], []
    skipped = 0
    for lam in coeff_samples:
        vec = {s: float(lam.get(s, 0.0)) for s in nodes}
        if target == "s2":
            den = sp_norm(TreeVector(vec), 2.0)[0]
        else:
            den = max(abs(v) for v in vec.values()) if vec else 0.0
        if den == 0.0:
            skipped += 1
            continue
        jobs_in.append([(vec[s], family[s]) for s in nodes if vec[s] != 0.0])
        denoms.append(den)
    if skipped:
        notes.append(f"{skipped} zero coefficient vectors skipped")
    if jobs > 1 and len(jobs_in) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            norms = list(pool.map(_norm_of, jobs_in, chunksize=max(1, len(jobs_in) // (4 * jobs))))
    else:
        norms = [_norm_of(j) for j in jobs_in]
    ratios = [v / d for v, d in zip(norms, denoms)]
    c_hat = float(min(ratios)) if ratios else math.nan
    C_hat = float(max(ratios)) if ratios else math.nan
    predicted: dict = {}
    consistent = None
    if constants:
        if target == "s2":
            c, C = s2_constants(constants["M"], constants["Lambda"], constants["theta"],
                                constants["eps"], constants["eps_hat"])
            predicted = {"c": c, "C": C}
            consistent = bool(ratios) and c_hat >= c - tol and C_hat <= C + tol
        else:
            K = c0_constant(constants["C"], constants["mu_norm"], constants["M"], constants["eps"])
            predicted = {"K": K}
            consistent = bool(ratios) and C_hat <= K + tol
    return EquivalenceReport(target, c_hat, C_hat, len(ratios), skipped, predicted, consistent, notes)


# ---------------------------------------------------------------------------
# Reference bundle


def rademacher_generating_bundle(depth: int = 2, level: int = 14, amplitude: float = 1.0,
                                 theta: float = 0.12, tolerance: float = 2.0**-6) -> SystemBundle:
    """Windowed Rademacher primitives on disjoint cells, one cell per node, dominated by
    amplitude^2 times Lebesgue measure.

    Node number i (shallower first) owns cell [i w, (i+1) w] with w = 2^-(depth+1); J_t is the
    cell's dyadic pieces of length 2^-level, so v2^2(H_t, J_t) = amplitude^2 w.  Every level
    uses the same witness: one length class with members assigned by cell.
    """
    w = 2.0 ** -(depth + 1)
    if level <= depth + 1:
        raise PreconditionError("the Rademacher level must exceed depth + 1")
    nodes = nodes_upto(depth)
    cell = {s: (i * w, (i + 1) * w) for i, s in enumerate(nodes)}
    step = 2.0 ** -level
    G, nu, I = {}, {}, {}
    for s in nodes:
        lo, hi = cell[s]
        G[s] = RademacherPrimitive(level, amplitude, lo, hi)
        nu[s] = lebesgue(amplitude**2)
        pieces = int(round(w / step))
        I[s] = IntervalFamily.from_pairs((lo + k * step, lo + (k + 1) * step) for k in range(pieces))
    sup = abs(amplitude) * 2.0 ** (-level / 2)
    eps_bio = {s: sup for s in nodes if s}
    layouts = {n: WitnessLayout(MeshLadder((1.0,)), tuple(0 for _ in nodes_at(n)),
                                tuple(cell[s] for s in nodes_at(n)))
               for n in range(1, depth + 1)}
    return SystemBundle(depth, G, nu, I, [f"dyadic:{level}"] * (depth + 1), abs(amplitude) * math.sqrt(w),
                        amplitude**2, theta, [tolerance] * (depth + 1), eps_bio, layouts)
