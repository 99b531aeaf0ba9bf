"""Small closed-form examples run by ``varlib selftest``."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .biorthogonal import check_biortho, select_subsequence, select_tree_subtree
from .dyadictree import (equivalence_constants, gen1_transform, lus2_decompose, level_sets,
                         rademacher_generating_bundle, sp_norm, subtree_T, validate_system)
from .funcmodel import (LinearCombo, RademacherPrimitive, StepFunction, eval, eval_left, eval_right,
                        identity, indicator, right_step, sup_norm, zero)
from .intervals import (Interval, IntervalFamily, MeshLadder, PreconditionError, determination_defect,
                        mesh_class_partition, refines)
from .synthesis import build_tent_level, rademacher_sum, synthesize, synthesize_discrete
from .varmeasure import MeasureSpec, atomic_part, dist_bounds, lebesgue, tau
from .varnorm import domination_margin, dyadic_grid, mesh_constrained_var, v2_family, v2_norm


def _close(a: float, b: float, tol: float = 1e-12) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(b))


def _jump_example() -> StepFunction:
    return StepFunction.combine([(1.0, indicator(0.25, 0.5)), (2.0, indicator(0.5, 1.0, lo_closed=False))])


def _ex_mesh_classes():
    fam = IntervalFamily.from_pairs([(0, 0.6), (0.7, 0.8), (0.9, 0.95)])
    parts = mesh_class_partition(fam, MeshLadder((1.0, 0.5, 0.09)))
    return [len(p) for p in parts] == [1, 1, 1]


def _ex_refines():
    a = IntervalFamily.from_pairs([(0.1, 0.2)])
    b = IntervalFamily.from_pairs([(0.0, 0.5)])
    c = IntervalFamily.from_pairs([(0.1, 0.6)])
    return refines(b, b) and refines(a, b) and not refines(c, b)


def _ex_determination():
    return determination_defect([identity()], [0.0, 0.5, 1.0],
                                [IntervalFamily.from_pairs([(0.0, 1.0)])]) == 0.0


def _ex_eval():
    chi = right_step(0.5)
    r1 = RademacherPrimitive(1)
    combo = LinearCombo(((2.0, identity()), (-1.0, identity())))
    return ((eval(chi, 0.5), eval_left(chi, 0.5), eval_right(chi, 0.5)) == (1.0, 0.0, 1.0)
            and _close(eval(r1, 0.5), math.sqrt(2) * 0.5) and _close(eval(combo, 0.3), 0.3))


def _ex_sup():
    return _close(sup_norm(_jump_example()), 2.0) and sup_norm(zero()) == 0.0


def _ex_tau():
    return tau(RademacherPrimitive(3), 0.3) == 0.0 and _close(tau(right_step(0.5), 0.5), 1.0)


def _ex_atoms():
    return len(atomic_part(RademacherPrimitive(4))) == 0 and len(atomic_part(_jump_example())) == 2


def _ex_v2():
    res = v2_norm(identity())
    fam_ok = v2_family(identity(), IntervalFamily(())) == 0.0 and _close(
        v2_family(identity(), IntervalFamily.from_pairs([(0, 1)])), 1.0)
    return _close(res.value, 1.0) and fam_ok and _close(v2_norm(RademacherPrimitive(3)).value, 1.0)


def _ex_mesh_var():
    g = dyadic_grid(6)
    jump = mesh_constrained_var(right_step(0.5), Interval(0.0, 1.0), 0.125, g).value
    lin = mesh_constrained_var(identity(), Interval(0.0, 1.0), 0.125, g).value
    return _close(jump, 1.0) and lin <= 0.125


def _ex_domination():
    return domination_margin(zero(), lebesgue(), 1.0, dyadic_grid(4)) == 0.0


def _ex_dist_zero():
    b = dist_bounds(zero())
    return b.lower == 0.0 and b.upper == 0.0


def _ex_biortho_single():
    return check_biortho([RademacherPrimitive(2)], [0.1], MeshLadder((1.0,))).passed


def _ex_select_flat():
    pool = [right_step(0.5), right_step(0.25), right_step(0.75)]
    cert = select_subsequence(pool, [0.5, 0.25], 2)
    one = select_subsequence(pool, [0.5], 1)
    return cert.failure is not None and cert.failure.startswith("step 2") and one.indices == [0]


def _ex_tree_select():
    flat = {s: right_step(0.5) for s in ("", "0", "1", "00", "01", "10", "11")}
    cert = select_tree_subtree(flat, {s: 0.1 for s in flat}, 1)
    root = select_tree_subtree(flat, {}, 0)
    return cert.failure is not None and root.embedding == {"": ""}


def _ex_synth():
    empty = synthesize_discrete(())
    half = synthesize(MeasureSpec(((0.5, 1.0),)), 2)
    lev1 = build_tent_level(lebesgue(), 1)
    lev0 = build_tent_level(lebesgue(), 0)
    return (sup_norm(empty) == 0.0 and _close(eval(half.f, 0.5), 1.0) and _close(eval(half.f, 0.4), 0.0)
            and np.allclose(lev1.quantiles, [0, 0.5, 1]) and np.allclose(lev1.peaks, [0.25, 0.75])
            and _close(sup_norm(lev1.H), 0.5, 1e-9) and _close(sup_norm(lev0.H), math.sqrt(0.5), 1e-9)
            and sup_norm(rademacher_sum([])) == 0.0)


def _ex_sp_norm():
    chain = {"": 1.0, "0": -3.0, "01": 2.0}
    return (_close(sp_norm(chain)[0], 3.0) and _close(sp_norm({"0": 3.0, "1": 4.0})[0], 5.0)
            and _close(sp_norm({"": 2, "0": 1, "1": 3, "00": 1, "01": 1, "10": 2, "11": 2})[0],
                       math.sqrt(11)))


def _ex_lus2():
    base = lus2_decompose({"": 2.0}, {"": 3.0}, 0)
    case2 = lus2_decompose({"": 1, "0": 1, "1": 2}, {"": 10, "0": 1, "1": 1}, 1)
    return (base.antichain == [""] and base.lhs == base.rhs == 6.0
            and case2.antichain == [""] and case2.branches[""] == ["", "1"])


def _ex_levels():
    return (level_sets("1") == ["01", "11"] and len(level_sets("01")) == 4
            and subtree_T("0", 1).nodes == ["", "00", "10"] and subtree_T("0110", 0).nodes == [""])


def _ex_system_violation():
    b = rademacher_generating_bundle(1, 8)
    b.I["1"] = b.I["0"]
    rep = validate_system(b, "plain", trials=1, coeff_draws=0)
    bad = [c["node"] for c in rep.failures if c["condition"] == "5"]
    return bad == [["0", "1"]]


def _ex_transform():
    b = rademacher_generating_bundle(0, 8)
    tr = gen1_transform(b)
    return tr.bundle.G[""] is b.G[""]


def _ex_equiv_single():
    G = RademacherPrimitive(3)
    rep = equivalence_constants({"": G}, "s2", [{"": 2.0}, {"": -0.5}])
    return _close(rep.c_hat, 1.0) and _close(rep.C_hat, 1.0)


def _ex_bad_measure():
    try:
        MeasureSpec.loads('{"atoms": [{"t": 0.5}]}')
    except PreconditionError:
        return True
    return False


EXAMPLES: dict[str, Callable[[], bool]] = {
    "mesh_classes": _ex_mesh_classes,
    "refinement": _ex_refines,
    "determination_exact_endpoints": _ex_determination,
    "one_sided_values": _ex_eval,
    "sup_norm": _ex_sup,
    "atom_size": _ex_tau,
    "atomic_part": _ex_atoms,
    "v2_basic": _ex_v2,
    "mesh_limited_variation": _ex_mesh_var,
    "domination_zero": _ex_domination,
    "distance_zero": _ex_dist_zero,
    "biortho_single": _ex_biortho_single,
    "selection_flat_pool": _ex_select_flat,
    "tree_selection": _ex_tree_select,
    "synthesis_basic": _ex_synth,
    "sp_norm": _ex_sp_norm,
    "lus2_cases": _ex_lus2,
    "level_sets": _ex_levels,
    "system_violation": _ex_system_violation,
    "transform_depth0": _ex_transform,
    "equivalence_single": _ex_equiv_single,
    "malformed_measure": _ex_bad_measure,
}


def run_selftest() -> dict[str, dict]:
    out = {}
    for name, fn in EXAMPLES.items():
        try:
            ok = bool(fn())
            out[name] = {"ok": ok}
        except Exception as exc:  # a crash is a failed example, reported by name
            out[name] = {"ok": False, "error": f"{type(exc).__name__}: {exc}"}
    return out
