import math

import numpy as np
import pytest

from varlib.biorthogonal import cross_defects
from varlib.dyadictree import (SystemBundle, TreeVector, c0_constant, coefficient_samples,
                               equivalence_constants, extreme_grid_union, gen1_transform, incomparable,
                               is_antichain, level_sets, lus2_decompose, max_depth, nodes_upto,
                               order_isomorphic, parse_grid, rademacher_generating_bundle, s2_constants,
                               sp_norm, subtree_T, validate_system)
from varlib.funcmodel import LinearCombo, RademacherPrimitive
from varlib.intervals import IntervalFamily, PreconditionError, random_family
from varlib.varmeasure import lebesgue
from varlib.varnorm import v2_norm_value


def test_sp_norm_examples():
    assert sp_norm({"": 1.0, "0": -3.0, "01": 2.0})[0] == 3.0
    assert sp_norm({"0": 3.0, "1": 4.0})[0] == 5.0
    val, wit = sp_norm({"": 2, "0": 1, "1": 3, "00": 1, "01": 1, "10": 2, "11": 2})
    assert val == pytest.approx(math.sqrt(11))
    assert wit == ["1", "00", "01"] and is_antichain(wit)


def test_sp_norm_tie_prefers_shallow():
    val, wit = sp_norm({"": 2.0, "0": 1.0, "1": math.sqrt(3)})
    assert val == pytest.approx(2.0) and wit == [""]


def test_sp_norm_chain_is_max():
    rng = np.random.default_rng(0)
    for _ in range(50):
        branch = "".join(rng.choice(["0", "1"], 6))
        x = {branch[:k]: float(rng.normal()) for k in range(7)}
        assert sp_norm(x)[0] == pytest.approx(max(abs(v) for v in x.values()))


def test_tree_vector_json_and_cap(monkeypatch):
    tv = TreeVector.loads('{"": 1, "01": -2}')
    assert tv.depth == 2 and tv.support() == ["", "01"]
    with pytest.raises(PreconditionError):
        TreeVector.loads('{"0a": 1}')
    monkeypatch.setenv("VARLIB_MAX_DEPTH", "3")
    assert max_depth() == 3
    with pytest.raises(PreconditionError):
        TreeVector.loads('{"0101": 1}')


def test_lus2_base_case():
    res = lus2_decompose({"": 2.0}, {"": 3.0}, 0)
    assert res.antichain == [""] and res.branches[""] == [""]
    assert res.lhs == res.rhs == 6.0


def test_lus2_case_one():
    res = lus2_decompose({"": 1, "0": 1, "1": 2}, {"": 1, "0": 1, "1": 1}, 1)
    assert sorted(res.antichain) == ["0", "1"]
    assert (res.lhs, res.rhs) == (4.0, 5.0)


def test_lus2_case_two():
    res = lus2_decompose({"": 1, "0": 1, "1": 2}, {"": 10, "0": 1, "1": 1}, 1)
    assert res.antichain == [""] and res.branches[""] == ["", "1"]
    assert res.holds


def test_level_set_examples():
    assert level_sets("") == [""]
    assert level_sets("1") == ["01", "11"]
    assert sorted(level_sets("01")) == ["0001", "0011", "1001", "1011"]
    allk = [t for s in ("00", "01", "10", "11") for t in level_sets(s)]
    assert len(allk) == 16 and len(set(allk)) == 16


def test_subtree_examples():
    assert subtree_T("0", 1).nodes == ["", "00", "10"]
    assert subtree_T("0110", 0).nodes == [""]
    a, b = subtree_T("00", 2), subtree_T("01", 2)
    assert set(a.nodes) & set(b.nodes) == {"", "00", "10"}
    c, d = subtree_T("0", 2 - 1), subtree_T("1", 1)
    assert set(c.nodes) & set(d.nodes) == {""}
    assert order_isomorphic(a.iso)
    with pytest.raises(PreconditionError):
        subtree_T("0", 2)


def test_subtrees_diverging_at_first_bit():
    for s1 in ("00", "01"):
        for s2 in ("10", "11"):
            assert set(subtree_T(s1, 2).nodes) & set(subtree_T(s2, 2).nodes) == {""}


def test_extreme_grid_union_small():
    # single grid interval carries the signed difference
    D = np.array([0.0, 0.3, 0.1])
    assert extreme_grid_union(D, D) == pytest.approx(0.3)
    assert parse_grid("dyadic:2").tolist() == [0, 0.25, 0.5, 0.75, 1.0]


def depth_zero_bundle():
    cells = IntervalFamily.from_pairs((i / 8, (i + 1) / 8) for i in range(8))
    return SystemBundle(0, {"": RademacherPrimitive(3)}, {"": lebesgue()}, {"": cells}, ["dyadic:3"],
                        1.0, 1.0, 0.5, [0.5])


def test_depth_zero_bundle_conditions():
    rep = validate_system(depth_zero_bundle(), "plain")
    by = {c["condition"]: c for c in rep.checks}
    assert all(c["ok"] for c in rep.checks if c["condition"] in ("1", "4", "6"))
    assert by["6"]["value"] == pytest.approx(1.0)


def test_violation_is_pinpointed():
    b = rademacher_generating_bundle(1, 8)
    b.I["1"] = b.I["0"]
    rep = validate_system(b, "plain", trials=1, coeff_draws=0)
    assert [c["node"] for c in rep.failures if c["condition"] == "5"] == [["0", "1"]]


def test_incomplete_bundle_rejected():
    with pytest.raises(PreconditionError):
        SystemBundle(1, {"": RademacherPrimitive(3)}, {"": lebesgue()}, {"": IntervalFamily(())},
                     ["dyadic:3"] * 2, 1.0, 1.0, 0.5, [0.5, 0.5])


def test_bundle_roundtrip(tmp_path):
    b = rademacher_generating_bundle(2, 10)
    b.save(str(tmp_path))
    back = SystemBundle.load(str(tmp_path))
    assert back.to_json() == b.to_json()


def test_transform_depth_zero_is_identity():
    b = rademacher_generating_bundle(0, 8)
    tr = gen1_transform(b)
    assert tr.bundle.G[""] is b.G[""]


def test_transform_is_linear():
    b = rademacher_generating_bundle(2, 14)
    doubled = rademacher_generating_bundle(2, 14, amplitude=2.0, theta=0.48)
    tr1, tr2 = gen1_transform(b).bundle, gen1_transform(doubled).bundle
    pts = np.linspace(0, 1, 513)
    for s in tr1.G:
        assert np.allclose(tr2.G[s].values(pts), 2 * tr1.G[s].values(pts), atol=1e-15)


def test_transform_rejects_small_theta():
    b = rademacher_generating_bundle(2, 10, theta=1e-4)
    with pytest.raises(PreconditionError):
        gen1_transform(b)


def test_transform_keeps_branches_disjoint():
    tr = gen1_transform(rademacher_generating_bundle(2, 10)).bundle
    for s in nodes_upto(1):
        for t in nodes_upto(1):
            if incomparable(s, t):
                IntervalFamily(tr.I[s].intervals + tr.I[t].intervals)


def test_transformed_cross_sums_within_total():
    b = rademacher_generating_bundle(2, 14)
    tr = gen1_transform(b)
    G = [tr.bundle.G["0"], tr.bundle.G["1"]]
    owners = [[b.I[t].intervals[0].lo for t in level_sets(s)] for s in ("0", "1")]
    w = 1 / 8
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(200):
        fam = random_family(rng, int(rng.integers(1, 20)), 2.0**-16, 0.3)
        parts = [[], []]
        for I in fam:
            mid = 0.5 * (I.lo + I.hi)
            j = 0 if any(lo <= mid <= lo + w for lo in owners[0]) else 1
            parts[j].append(I)
        d = cross_defects(G, [IntervalFamily(tuple(p)) for p in parts])
        worst = max(worst, sum(d))
    assert worst <= tr.eps


def test_constants_closed_forms():
    c, C = s2_constants(0.5, 1.0, 0.3, 0.01, 0.05)
    assert c == pytest.approx(math.sqrt(0.3 - 1.01 * 0.01))
    assert C == pytest.approx(math.sqrt(1 + 0.15 + 1.01 * 0.01))
    assert c0_constant(1.0, 1.0, 1.0, 0.75) == pytest.approx(math.sqrt(1 + 0.75 * 3.75))


def test_equivalence_single_function():
    G = RademacherPrimitive(3)
    for target in ("s2", "c0"):
        rep = equivalence_constants({"": G}, target, [{"": 2.0}, {"": -0.5}, {"": 0.0}])
        assert rep.c_hat == pytest.approx(1.0) and rep.C_hat == pytest.approx(1.0)
        assert rep.skipped == 1


def test_equivalence_chain_coefficients():
    fam = {"": RademacherPrimitive(2, 1.0, 0.0, 0.5), "0": RademacherPrimitive(4, 1.0, 0.5, 1.0)}
    lam = {"": 1.0, "0": -2.0}
    rep = equivalence_constants(fam, "s2", [lam])
    expected = v2_norm_value(LinearCombo(((1.0, fam[""]), (-2.0, fam["0"])))) / 2.0
    assert rep.c_hat == pytest.approx(expected)


def test_coefficient_samples_cover_units():
    rng = np.random.default_rng(0)
    nodes = nodes_upto(2)
    samples = coefficient_samples(nodes, 40, rng)
    assert len(samples) == 40
    for u in nodes:
        assert {s: 1.0 if s == u else 0.0 for s in nodes} in samples
