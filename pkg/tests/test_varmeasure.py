import json
import math

import numpy as np
import pytest

from varlib.funcmodel import (LinearCombo, RademacherPrimitive, StepFunction, identity, indicator,
                              piecewise_linear, right_step, zero)
from varlib.intervals import PreconditionError
from varlib.synthesis import rademacher_sum, synthesize, synthesize_discrete
from varlib.varmeasure import (MeasureSpec, atomic_part, dist_bounds, estimate_cdf,
                               measure_algebra_check, parse_ladder, restricted_lebesgue, tau)
from varlib.varnorm import v2_norm_value

LADDER = tuple(2.0**-k for k in range(2, 9))


def jump_example():
    return StepFunction.combine([(1.0, indicator(0.25, 0.5)), (2.0, indicator(0.5, 1.0, lo_closed=False))])


def test_measure_spec_basics():
    mu = MeasureSpec(((0.5, 2.0),), (0.0, 1.0), (0.0, 1.0))
    assert mu.total() == 3.0
    assert mu.discrete_total() == 2.0
    assert mu.cdf(np.array([0.49, 0.5]))[1] - mu.cdf(np.array([0.49, 0.5]))[0] == pytest.approx(2.01)
    assert MeasureSpec.loads(json.dumps(mu.to_json())).total() == 3.0


def test_measure_spec_rejects_bad_input():
    with pytest.raises(PreconditionError):
        MeasureSpec(((0.5, -1.0),))
    with pytest.raises(PreconditionError):
        MeasureSpec.loads("{not json")


def test_tau_examples():
    f = jump_example()
    assert tau(f, 0.25) == 1.0 and tau(f, 0.5) == 1.0
    assert tau(RademacherPrimitive(3), 0.3) == 0.0
    spike = StepFunction(((0.4, 0.0, 1.5, 0.0),))
    assert tau(spike, 0.4) == pytest.approx(2 * 1.5**2)


def test_atomic_part_examples():
    assert len(atomic_part(RademacherPrimitive(6))) == 0
    ap = atomic_part(jump_example())
    assert list(ap) == [(0.25, 1.0), (0.5, 1.0)] and ap.total() == 2.0
    atoms = [(0.2, 0.5), (0.45, 2.0), (0.9, 0.25)]
    h = LinearCombo(tuple((math.sqrt(m), right_step(t)) for t, m in atoms))
    got = list(atomic_part(h))
    assert [t for t, _ in got] == [t for t, _ in atoms]
    assert np.allclose([m for _, m in got], [m for _, m in atoms], rtol=1e-12)


def test_identity_has_no_measure():
    est = estimate_cdf(identity(), ladder=LADDER)
    assert np.all(est.table <= np.array(LADDER)[:, None] + 1e-15)


def test_jump_cdf_is_step():
    est = estimate_cdf(right_step(0.5), ladder=LADDER)
    assert np.allclose(est.extrapolated[est.xs < 0.5], 0.0)
    assert np.allclose(est.extrapolated[est.xs >= 0.5], 1.0)


def test_cdf_monotone_in_x_and_delta():
    f = LinearCombo(((1.0, RademacherPrimitive(4)), (0.3, right_step(0.6))))
    est = estimate_cdf(f, ladder=LADDER)
    assert np.all(np.diff(est.table, axis=1) >= -1e-15)
    assert np.all(np.diff(est.table, axis=0) <= 1e-15)


def test_atom_jump_matches_tau():
    f = LinearCombo(((1.0, RademacherPrimitive(5)), (0.7, right_step(0.375)), (-0.4, right_step(0.8125))))
    est = estimate_cdf(f, xs=np.arange(257) / 256, ladder=LADDER)
    for t, m in atomic_part(f):
        i = int(np.searchsorted(est.xs, t))
        jump = est.extrapolated[i] - est.extrapolated[i - 1]
        # the cell just before the atom carries at most the continuous mass of one cell
        assert jump == pytest.approx(m, abs=2.0 ** -8 * 1.01 + 2 * math.sqrt(m) * 2.0 ** -4)


def test_rademacher_sum_cdf_is_lebesgue():
    f = rademacher_sum([2, 8])
    est = estimate_cdf(f, xs=np.arange(5) / 4, ladder=(2.0**-6, 2.0**-7))
    assert np.max(np.abs(est.extrapolated - est.xs)) < 0.15


def test_bad_ladder():
    with pytest.raises(PreconditionError):
        estimate_cdf(identity(), ladder=(0.1, 0.2))
    assert parse_ladder("2^-2..2^-4") == (0.25, 0.125, 0.0625)


def test_dist_bounds_examples():
    b = dist_bounds(jump_example())
    assert (b.lower, b.upper) == (math.sqrt(2), 3 * math.sqrt(2))
    assert b.lower < 2 < b.upper
    z = dist_bounds(zero())
    assert (z.lower, z.upper) == (0.0, 0.0)


def test_dist_bounds_continuous_coincide():
    f = rademacher_sum([2, 8])
    est = estimate_cdf(f, xs=[0.0, 1.0], ladder=(2.0**-6, 2.0**-7))
    b = dist_bounds(f, est)
    assert b.lower == b.upper
    assert b.lower == pytest.approx(1.0, abs=0.1)


def test_measure_below_norm_squared():
    fixtures = [jump_example(), RademacherPrimitive(3), rademacher_sum([2, 8]), identity(),
                piecewise_linear([0, 0.4, 1], [0, 0.8, 0.1]), right_step(0.3, -2.0)]
    for f in fixtures:
        est = estimate_cdf(f, xs=[0.0, 1.0], ladder=LADDER)
        assert est.total() <= v2_norm_value(f) ** 2 + 1e-12


def test_algebra_zero_scaling():
    rep = measure_algebra_check(RademacherPrimitive(3), right_step(0.4), 0.0, ladder=LADDER[:4])
    assert rep.entries["scaling"].ok and rep.ok


def test_algebra_singular_supports():
    f1 = synthesize(restricted_lebesgue(0.0, 0.4), 2, max_level=14).f
    f2 = synthesize(restricted_lebesgue(0.6, 1.0), 2, max_level=14).f
    rep = measure_algebra_check(f1, f2, 1.7, ladder=LADDER[2:], disjoint_supports=True)
    assert rep.ok, rep.to_json()


def test_smooth_perturbation_keeps_measure():
    f = rademacher_sum([2, 8])
    g = LinearCombo(((1.0, f), (0.3, identity())))
    xs = np.arange(9) / 8
    a = estimate_cdf(f, xs=xs, ladder=(2.0**-8, 2.0**-9)).extrapolated
    b = estimate_cdf(g, xs=xs, ladder=(2.0**-8, 2.0**-9)).extrapolated
    assert np.max(np.abs(a - b)) < 0.05


def test_lower_bound_for_difference_on_support():
    f1 = synthesize(restricted_lebesgue(0.0, 0.4), 2, max_level=14).f
    f2 = synthesize(restricted_lebesgue(0.6, 1.0), 2, max_level=14).f
    xs = np.arange(17) / 16
    lad = (2.0**-7, 2.0**-8)
    m2 = np.diff(estimate_cdf(f2, xs=xs, ladder=lad).extrapolated)
    md = np.diff(estimate_cdf(f2 - f1, xs=xs, ladder=lad).extrapolated)
    inside = xs[1:] > 0.6
    assert np.all(md[inside] >= m2[inside] - 0.02)


def test_synthesized_discrete_measure():
    h = synthesize_discrete([(0.3, 4.0), (0.6, 9.0)])
    assert list(atomic_part(h)) == [(0.3, 4.0), (0.6, 9.0)]
    assert dist_bounds(h).lower == pytest.approx(math.sqrt(13))


def test_plot_rows_shape():
    est = estimate_cdf(RademacherPrimitive(2), xs=[0.0, 0.5, 1.0], ladder=(0.25, 0.125))
    assert len(est.plot_rows()) == 6
    assert est.to_json()["total"] == est.total()
