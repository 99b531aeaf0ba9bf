import json

import numpy as np
import pytest

from varlib.funcmodel import RademacherPrimitive, identity
from varlib.intervals import (Interval, IntervalFamily, MeshLadder, Partition, PreconditionError,
                              determination_defect, dyadic_subfamilies, mesh_class_partition,
                              random_family, refines)


def fam(*pairs):
    return IntervalFamily.from_pairs(pairs)


def test_partition_mesh_and_empty():
    P = Partition((0.0, 0.25, 1.0))
    assert P.mesh() == 0.75
    assert P.min_gap() == 0.25
    assert Partition(()).empty
    with pytest.raises(PreconditionError):
        Partition((0.5, 0.2))
    with pytest.raises(PreconditionError):
        Partition((0.5,))


def test_interval_rules():
    assert Interval(0.2, 0.5).length == pytest.approx(0.3)
    assert Interval(0.3, 0.3).degenerate
    with pytest.raises(PreconditionError):
        Interval(0.3, 0.3, lo_closed=False)
    with pytest.raises(PreconditionError):
        Interval(0.6, 0.2)


def test_family_classes():
    touching = fam((0.0, 0.5), (0.5, 1.0))
    assert not touching.closed_disjoint
    assert fam((0.0, 0.4), (0.5, 1.0)).closed_disjoint
    with pytest.raises(PreconditionError):
        fam((0.0, 0.6), (0.5, 1.0))


def test_family_json_roundtrip():
    f = IntervalFamily((Interval(0.1, 0.2, lo_closed=False), Interval(0.3, 0.9)))
    back = IntervalFamily.from_json(json.loads(f.dumps()))
    assert back == f


def test_mesh_classes_example():
    parts = mesh_class_partition(fam((0, 0.6), (0.7, 0.8), (0.9, 0.95)), MeshLadder((1.0, 0.5, 0.09)))
    assert [[(I.lo, I.hi) for I in p] for p in parts] == [[(0, 0.6)], [(0.7, 0.8)], [(0.9, 0.95)]]


def test_mesh_classes_empty_family():
    parts = mesh_class_partition(IntervalFamily(()), MeshLadder((1.0, 0.5)))
    assert [len(p) for p in parts] == [0, 0]


def test_mesh_classes_cover_random_families():
    rng = np.random.default_rng(3)
    for _ in range(200):
        f = random_family(rng, int(rng.integers(1, 10)), 1e-4, 0.5)
        ladder = MeshLadder(tuple(sorted(rng.uniform(1e-4, 0.9, 3), reverse=True)))
        parts = mesh_class_partition(f, ladder)
        flat = [I for p in parts for I in p]
        assert sorted(flat, key=lambda I: I.lo) == sorted(f, key=lambda I: I.lo)
        for j, p in enumerate(parts, start=1):
            lo, hi = ladder.bounds(j)
            assert all(lo < I.length <= hi for I in p)


def test_invalid_ladder():
    with pytest.raises(PreconditionError):
        MeshLadder((1.0, 0.5, 0.5))


def test_refines_examples():
    coarse = fam((0.0, 0.5))
    assert refines(coarse, coarse)
    assert refines(fam((0.1, 0.2)), coarse)
    assert not refines(fam((0.1, 0.6)), coarse)


def test_refines_transitive():
    rng = np.random.default_rng(5)
    hits = 0
    for _ in range(300):
        a, b, c = (random_family(rng, int(rng.integers(1, 5)), 0.01, 0.6) for _ in range(3))
        if refines(a, b) and refines(b, c):
            hits += 1
            assert refines(a, c)
    # nested construction guarantees some non-trivial chains
    outer = fam((0.0, 0.9))
    mid = fam((0.1, 0.5), (0.6, 0.8))
    inner = fam((0.2, 0.3), (0.65, 0.7))
    assert refines(inner, mid) and refines(mid, outer) and refines(inner, outer)


def test_determination_exact_endpoints():
    trial = [fam((0.125, 0.375), (0.5, 0.75))]
    grid = [0.0, 0.125, 0.375, 0.5, 0.75, 1.0]
    assert determination_defect([RademacherPrimitive(3)], grid, trial) == 0.0
    assert determination_defect([identity()], [0.0, 0.5, 1.0], [fam((0.0, 1.0))]) == 0.0


def test_determination_sparse_grid_is_infinite():
    assert determination_defect([identity()], [0.0, 1.0], [fam((0.2, 0.3))]) == np.inf


def test_determination_rademacher_regression():
    rng = np.random.default_rng(11)
    trials = [f for f in (random_family(rng, 4, 0.07, 0.3) for _ in range(60)) if f.min_length() > 0.07][:20]
    assert len(trials) == 20
    grid = np.arange(33) / 32
    d = determination_defect([RademacherPrimitive(3)], grid, trials)
    # per-interval matching bound; exhaustive search over refinements is below it
    assert d == pytest.approx(0.1062831137418325, rel=1e-9)


def test_determination_monotone_under_refinement():
    rng = np.random.default_rng(2)
    trials = [random_family(rng, 3, 0.1, 0.3) for _ in range(15)]
    models = [RademacherPrimitive(2), RademacherPrimitive(4)]
    coeffs = [(1.0, -0.5), (0.3, 2.0)]
    coarse = determination_defect(models, np.arange(17) / 16, trials, coeffs)
    fine = determination_defect(models, np.arange(65) / 64, trials, coeffs)
    assert fine <= coarse + 1e-12


def test_dyadic_subfamilies_count():
    assert len(dyadic_subfamilies(2)) == 15


def test_determination_bounds_exhaustive_search():
    from varlib.oracles import brute_snap_defect

    R = RademacherPrimitive(3)
    rng = np.random.default_rng(4)
    grid = np.arange(17) / 16
    for _ in range(25):
        f = random_family(rng, 2, 0.15, 0.4)
        if f.min_length() <= 2 / 16:
            continue
        mine = determination_defect([R], grid, [f])
        exact = brute_snap_defect(R.values, grid, [(I.lo, I.hi) for I in f])
        assert mine >= exact - 1e-12
