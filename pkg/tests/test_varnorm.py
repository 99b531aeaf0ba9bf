import math

import numpy as np
import pytest

from varlib.funcmodel import (LinearCombo, RademacherPrimitive, StepFunction, identity, indicator,
                              piecewise_linear, right_step, zero)
from varlib.intervals import Interval, IntervalFamily, Partition, PreconditionError, random_family
from varlib.varmeasure import MeasureSpec, lebesgue
from varlib.varnorm import (domination_dp, domination_margin, dyadic_grid, mesh_constrained_var, v2,
                            v2_family, v2_norm, v2_sq_family, witness_value)


def jump_example():
    return StepFunction.combine([(1.0, indicator(0.25, 0.5)), (2.0, indicator(0.5, 1.0, lo_closed=False))])


def test_v2_examples():
    assert v2(zero(), Partition((0.0, 0.3, 1.0))) == 0.0
    assert v2(identity(), Partition((0.0, 0.5, 1.0))) == pytest.approx(math.sqrt(0.5))
    assert v2(jump_example(), Partition((0.0, 0.25, 0.5, 0.75))) == pytest.approx(math.sqrt(2))
    assert v2(identity(), Partition(())) == 0.0


def test_v2_family_examples():
    assert v2_family(identity(), IntervalFamily(())) == 0.0
    assert v2_family(identity(), IntervalFamily.from_pairs([(0, 1)])) == 1.0
    P = Partition((0.0, 0.5, 1.0))
    assert v2_family(identity(), P.to_family()) == pytest.approx(v2(identity(), P))


@pytest.mark.parametrize("n", range(0, 13))
def test_rademacher_norm_is_one(n):
    assert v2_norm(RademacherPrimitive(n)).value == pytest.approx(1.0, abs=1e-12)


def test_monotone_norm_witness():
    res = v2_norm(identity())
    assert res.value == pytest.approx(1.0)
    assert [t for t, _ in res.witness] == [0.0, 1.0]


def test_jump_example_norm():
    res = v2_norm(jump_example())
    assert res.value == pytest.approx(4.0)
    assert witness_value(jump_example(), res.witness) == pytest.approx(res.value, rel=1e-12)


def test_witness_reproduces_value():
    rng = np.random.default_rng(0)
    for _ in range(30):
        ts = np.concatenate([[0.0], np.sort(rng.uniform(0, 1, 8)), [1.0]])
        f = piecewise_linear(ts, np.concatenate([[0.0], rng.normal(size=9)]))
        g = LinearCombo(((1.0, f), (0.7, right_step(float(rng.uniform(0.1, 0.9))))))
        for h in (f, g):
            res = v2_norm(h)
            assert witness_value(h, res.witness) == pytest.approx(res.value, rel=1e-12)


def test_pruned_equals_full():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        k = int(rng.integers(2, 30))
        ts = np.linspace(0, 1, k)
        ys = np.concatenate([[0.0], rng.normal(size=k - 1)])
        f = piecewise_linear(ts, ys)
        assert v2_norm(f, "pruned").value == pytest.approx(v2_norm(f).value, rel=1e-12, abs=1e-14)


def test_norm_scales():
    f = LinearCombo(((1.0, RademacherPrimitive(2)), (0.5, right_step(0.3))))
    base = v2_norm(f)
    for lam in (-3.0, 0.25, 2.0):
        scaled = v2_norm(LinearCombo(((lam, f),)))
        assert scaled.norm == pytest.approx(abs(lam) * base.norm, rel=1e-12)
        assert [t for t, _ in scaled.witness] == [t for t, _ in base.witness]


def test_triangle_and_additivity():
    rng = np.random.default_rng(7)
    models = [RademacherPrimitive(2), RademacherPrimitive(5), jump_example(), identity()]
    for _ in range(200):
        f, g = rng.choice(len(models), 2)
        f, g = models[f], LinearCombo(((float(rng.normal()), models[g]),))
        fam = random_family(rng, int(rng.integers(1, 8)), 1e-3, 0.4)
        a, b, s = v2_family(f, fam), v2_family(g, fam), v2_family(f + g, fam)
        # reverse triangle inequality, stated with the difference f - g
        assert abs(a - b) <= v2_family(f - g, fam) + 1e-12
        assert s <= a + b + 1e-12
        ivs = list(fam)
        cut = int(rng.integers(0, len(ivs) + 1))
        left, right = IntervalFamily(tuple(ivs[:cut])), IntervalFamily(tuple(ivs[cut:]))
        assert v2_sq_family(f, fam) == pytest.approx(v2_sq_family(f, left) + v2_sq_family(f, right),
                                                     rel=1e-12, abs=1e-15)


def test_mesh_var_examples():
    g = dyadic_grid(8)
    for d in (0.5, 0.125, 2.0**-5):
        assert mesh_constrained_var(identity(), Interval(0, 1), d, g).value <= d + 1e-15
        assert mesh_constrained_var(right_step(0.5), Interval(0, 1), d, g).value == pytest.approx(1.0)


def test_mesh_var_spacing_guard():
    with pytest.raises(PreconditionError):
        mesh_constrained_var(identity(), Interval(0, 1), 2.0**-4, dyadic_grid(3))


def test_mesh_var_monotone():
    R = RademacherPrimitive(3)
    g6, g8 = dyadic_grid(6), dyadic_grid(8)
    vals = [mesh_constrained_var(R, Interval(0, 1), 2.0**-k, g8).value for k in range(1, 7)]
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))
    for k in range(1, 5):
        d = 2.0**-k
        assert (mesh_constrained_var(R, Interval(0, 1), d, g8).value
                >= mesh_constrained_var(R, Interval(0, 1), d, g6).value - 1e-15)


def test_mesh_var_rademacher_regression():
    R = RademacherPrimitive(3)
    a = mesh_constrained_var(R, Interval(0, 1), 0.25, dyadic_grid(6)).value
    b = mesh_constrained_var(R, Interval(0, 1), 0.125, dyadic_grid(6)).value
    assert b <= a <= 1.0 + 1e-12
    from varlib.oracles import brute_mesh_var

    g4 = dyadic_grid(4)
    got = mesh_constrained_var(R, Interval(0, 1), 0.25, g4).value
    assert got == pytest.approx(brute_mesh_var(g4, R.values(g4), 0.25), rel=1e-12)


def test_domination_examples():
    assert domination_margin(zero(), lebesgue(), 1.0, dyadic_grid(5)) == 0.0
    assert domination_margin(right_step(0.5), MeasureSpec(((0.5, 1.0),)), 1.0, np.linspace(0, 1, 9)) == 0.0


def test_domination_family_realises_margin():
    G = LinearCombo(((1.5, RademacherPrimitive(3)),))
    m, fam = domination_dp(G, lebesgue(), 1.0, dyadic_grid(6))
    assert m > 0
    realised = v2_sq_family(G, fam) - sum(I.length for I in fam)
    assert realised == pytest.approx(m, rel=1e-12)
