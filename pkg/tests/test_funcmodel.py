import math

import numpy as np
import pytest

from varlib.funcmodel import (DomainError, GridSample, LinearCombo, RademacherPrimitive, StepFunction,
                              eval, eval_left, eval_right, from_json, identity, indicator, jump_points,
                              loads, piecewise_linear, pointwise_osc, right_step, sup_norm, zero)
from varlib.intervals import PreconditionError
from varlib.varmeasure import lebesgue
from varlib.synthesis import build_tent_level
from varlib.varnorm import v2_norm_value


def jump_example():
    return StepFunction.combine([(1.0, indicator(0.25, 0.5)), (2.0, indicator(0.5, 1.0, lo_closed=False))])


def test_one_sided_values_of_step():
    chi = right_step(0.5)
    assert (eval(chi, 0.5), eval_left(chi, 0.5), eval_right(chi, 0.5)) == (1.0, 0.0, 1.0)


def test_rademacher_first_level_value():
    assert eval(RademacherPrimitive(1), 0.5) == pytest.approx(math.sqrt(2) * 0.5, abs=1e-15)


def test_linear_combo_collapses():
    combo = LinearCombo(((2.0, identity()), (-1.0, identity())))
    for t in (0.0, 0.3, 0.77, 1.0):
        assert eval(combo, t) == pytest.approx(t)


def test_endpoint_conventions_and_domain():
    f = right_step(1.0)
    assert eval_right(f, 1.0) == eval(f, 1.0)
    assert eval_left(identity(), 0.0) == 0.0
    with pytest.raises(DomainError):
        eval(identity(), 1.5)


@pytest.mark.parametrize("n", [0, 1, 3, 7, 12])
def test_rademacher_sup_norm(n):
    R = RademacherPrimitive(n)
    assert sup_norm(R) == pytest.approx(2.0 ** (-n / 2), rel=1e-15)
    pts = np.linspace(0, 1, 4097)
    assert np.abs(R.values(pts)).max() <= sup_norm(R) + 1e-15


def test_sup_norm_steps_and_zero():
    assert sup_norm(jump_example()) == 2.0
    assert sup_norm(zero()) == 0.0


def test_tent_sup_norm_matches_formula():
    L = build_tent_level(lebesgue(), 3)
    assert sup_norm(L.H) == pytest.approx(math.sqrt(2.0**-4), rel=1e-9)


def test_pointwise_osc():
    assert pointwise_osc(RademacherPrimitive(4), 0.3) == 0.0
    assert pointwise_osc(right_step(0.5), 0.5) == 1.0
    assert pointwise_osc(jump_example(), 0.5) == 1.0


def test_jump_points_examples():
    assert len(jump_points(RademacherPrimitive(5))) == 0
    js = [(j.t, j.left, j.at, j.right) for j in jump_points(jump_example())]
    assert js == [(0.25, 0.0, 1.0, 1.0), (0.5, 1.0, 1.0, 2.0)]


def test_shared_jump_merges():
    f = LinearCombo(((1.0, right_step(0.4)), (2.0, right_step(0.4))))
    js = list(jump_points(f))
    assert len(js) == 1 and (js[0].left, js[0].at, js[0].right) == (0.0, 3.0, 3.0)


def test_osc_zero_iff_no_jumps():
    models = [RademacherPrimitive(3), jump_example(), identity(), right_step(0.7, 2.0)]
    for f in models:
        pts = np.unique(np.concatenate([np.linspace(0, 1, 257), f.breakpoints()]))
        any_osc = any(pointwise_osc(f, t) > 0 for t in pts)
        assert any_osc == (len(jump_points(f)) > 0)


def test_one_sided_limits_match_numeric():
    f = LinearCombo(((1.0, RademacherPrimitive(3)), (0.5, right_step(0.3)), (1.0, identity())))
    for t in (0.3, 0.5, 0.8125):
        assert eval_left(f, t) == pytest.approx(eval(f, t - 1e-12), abs=1e-9)
        assert eval_right(f, t) == pytest.approx(eval(f, t + 1e-12), abs=1e-9)


def test_jump_energy_below_norm():
    f = jump_example()
    energy = sum((j.at - j.left) ** 2 + (j.at - j.right) ** 2 for j in jump_points(f))
    assert energy <= v2_norm_value(f) ** 2 + 1e-12


def test_grid_sample_csv_and_heuristic_jumps():
    g = GridSample.from_csv("t,value\n0,0\n0.25,0.01\n0.5,0.02\n0.75,1.02\n1,1.03\n")
    js = jump_points(g)
    assert js.heuristic and [j.t for j in js] == [0.75]
    assert GridSample.from_csv(g.to_csv()).vals == g.vals


def test_grid_sample_requires_origin():
    with pytest.raises(PreconditionError):
        GridSample((0.0, 1.0), (1.0, 2.0))


def test_json_roundtrip_all_kinds():
    L = build_tent_level(lebesgue(), 2)
    models = [identity(), jump_example(), RademacherPrimitive(4, 0.5, 0.25, 0.75), L.H,
              LinearCombo(((2.0, RademacherPrimitive(2)), (1.0, right_step(0.3)))),
              piecewise_linear([0, 0.5, 1], [0, 1, 0])]
    pts = np.linspace(0, 1, 101)
    for f in models:
        back = loads(f.dumps())
        assert np.allclose(back.values(pts), f.values(pts))
        assert np.allclose(from_json(f.to_json()).values(pts, -1), f.values(pts, -1))


def test_step_rejects_nonzero_origin():
    with pytest.raises(PreconditionError):
        StepFunction(((0.0, 0.0, 1.0, 1.0),))
