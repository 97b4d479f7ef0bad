import math

import numpy as np
import pytest

from dabounds.complexity import (
    NormSpec,
    RademacherMode,
    covering_number_greedy,
    ghost_generator,
    norm_distance,
    rademacher_empirical,
    rademacher_expected,
    uniform_entropy_estimate,
)
from dabounds.domains import DiscreteDomain
from dabounds.exceptions import InvalidInputError
from dabounds.hypotheses import EvaluationMatrix, FiniteFunctionClass, LinearModel, LossFunction

from oracles import minimal_cover_size, rademacher_brute_force


def test_norm_examples():
    n1 = NormSpec.l1w([1.0], [4])
    assert norm_distance(np.zeros(4), np.zeros(4), n1) == 0.0
    assert norm_distance(np.zeros(4), np.full(4, 2.0), n1) == 2.0
    nt = NormSpec.l1tau(0.5, 3, 2)
    assert norm_distance([np.zeros(3), np.zeros(2)], [np.ones(3), np.full(2, 3.0)], nt) == 2.0
    with pytest.raises(InvalidInputError):
        norm_distance([np.zeros(2), np.zeros(2)], [np.zeros(2), np.zeros(2)], nt)
    with pytest.raises(InvalidInputError):
        NormSpec.l1w([0.5, 0.5], [3])


def test_norm_axioms(rng):
    for _ in range(100):
        K = int(rng.integers(1, 4))
        sizes = rng.integers(1, 6, size=K)
        w = rng.dirichlet(np.ones(K))
        w[-1] = 1 - w[:-1].sum()
        norm = NormSpec.l1w(w, sizes)
        a, b, c = (rng.normal(size=int(sizes.sum())) for _ in range(3))
        assert abs(norm_distance(a, b, norm) - norm_distance(b, a, norm)) < 1e-12
        assert norm_distance(a, c, norm) <= norm_distance(a, b, norm) + norm_distance(b, c, norm) + 1e-9
        s = rng.uniform(0.1, 3)
        assert norm_distance(s * a, s * b, norm) == pytest.approx(s * norm_distance(a, b, norm), rel=1e-12)


def _matrix(rows):
    return EvaluationMatrix(np.asarray(rows, dtype=float), (0.0, 1.0))


def test_cover_examples():
    norm = NormSpec.l1w([1.0], [3])
    assert covering_number_greedy(_matrix([[0.2, 0.4, 0.1]] * 5), 1e-9, norm) == 1
    m = _matrix([[0, 0, 0], [1, 1, 1], [0.5, 0.5, 0.5]])
    assert covering_number_greedy(m, 1.01, norm) == 1
    # three functions at mutual distance exactly 1
    tri = EvaluationMatrix(1.5 * np.array([[0, 0, 0], [1, 1, 0], [1, 0, 1]], float), (0.0, 1.5))
    d = [norm_distance(tri.values[i], tri.values[j], norm) for i, j in ((0, 1), (0, 2), (1, 2))]
    assert d == [1.0, 1.0, 1.0]
    assert covering_number_greedy(tri, 0.5, norm) == 3


def test_cover_properties_against_oracle(rng):
    for _ in range(40):
        m = int(rng.integers(1, 7))
        V = rng.uniform(0, 1, size=(m, 4))
        norm = NormSpec.l1w([0.5, 0.5], [2, 2])
        coef = norm.column_coefficients()
        xis = np.sort(rng.uniform(0.01, 0.6, size=4))
        sizes = [covering_number_greedy(_matrix(V), x, norm) for x in xis]
        assert all(a >= b for a, b in zip(sizes, sizes[1:]))
        for x, s in zip(xis, sizes):
            assert minimal_cover_size(V.tolist(), coef.tolist(), x) <= s <= m
        diam = max(norm_distance(a, b, norm) for a in V for b in V)
        assert covering_number_greedy(_matrix(V), diam + 1e-9, norm) == 1


def _two_point_domain():
    return DiscreteDomain.from_points([(0.0, 1.0), (1.0, 0.0)], [0.5, 0.5])


def test_uniform_entropy_examples():
    dom = _two_point_domain()
    clip = LossFunction("squared", (0.0, 1.0))
    single = FiniteFunctionClass((LinearModel([0.3]),), clip)
    norm = NormSpec.l1w([1.0], [8])
    gen = ghost_generator([dom], [4])
    assert uniform_entropy_estimate(single, gen, 0.1, norm, 5, seed=1) == 0.0
    wide = FiniteFunctionClass(tuple(LinearModel([t]) for t in (0.0, 0.5, 1.0)), clip)
    assert uniform_entropy_estimate(wide, gen, 10.0, norm, 5, seed=1) == 0.0
    # 8 labels on a point mass at x = 1: f_j = clip((j/8 - y)^2) with y = 0 are 8 distinct constants
    pm = DiscreteDomain.point_mass([1.0], 0.0)
    eight = FiniteFunctionClass(tuple(LinearModel([math.sqrt(j / 8)]) for j in range(8)), clip)
    est = uniform_entropy_estimate(eight, ghost_generator([pm], [3]), 0.1, NormSpec.l1w([1.0], [6]), 3, seed=2)
    assert est == pytest.approx(math.log(8), abs=1e-15)


def test_uniform_entropy_monotone_and_bounded(rng):
    dom = DiscreteDomain(rng.uniform(-1, 1, size=(6, 1)), rng.uniform(-1, 1, size=6), np.full(6, 1 / 6))
    fc = FiniteFunctionClass(tuple(LinearModel([t]) for t in np.linspace(-1, 1, 9)), LossFunction("squared", (0.0, 1.0)))
    norm = NormSpec.l1w([1.0], [10])
    vals = [uniform_entropy_estimate(fc, ghost_generator([dom], [5]), xi, norm, 4, seed=3) for xi in (0.01, 0.05, 0.2, 0.5)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert vals[0] <= math.log(9) + 1e-15


def test_rademacher_examples():
    zero = EvaluationMatrix(np.zeros((1, 5)), (0.0, 1.0))
    assert rademacher_empirical(zero, 10, 0).value == 0.0
    one = EvaluationMatrix(np.ones((1, 1)), (0.0, 1.0))
    est = rademacher_empirical(one, 10, 0)
    assert est.value == 1.0 and est.exact and est.std_error == 0.0
    ident = EvaluationMatrix(np.array([[1.0, -1.0]]), (-1.0, 1.0))
    assert rademacher_empirical(ident, 10, 0).value == 0.5


def test_exact_rademacher_matches_brute_force(rng):
    for n in (1, 3, 7, 10):
        V = rng.uniform(0, 1, size=(3, n))
        est = rademacher_empirical(EvaluationMatrix(V, (0.0, 1.0)), 1, 0)
        assert est.exact and est.mc_trials == 2**n
        assert est.value == pytest.approx(rademacher_brute_force(V.tolist()), abs=1e-12)


def test_mc_agrees_with_exact(rng):
    V = rng.uniform(0, 1, size=(4, 12))
    m = EvaluationMatrix(V, (0.0, 1.0))
    exact = rademacher_empirical(m, 1, 0).value
    mc = rademacher_empirical(m, 20000, 5, exact=False)
    assert not mc.exact
    assert abs(mc.value - exact) <= 4 * mc.std_error


def test_nested_classes_monotone(rng):
    V = rng.uniform(0, 1, size=(5, 9))
    small = rademacher_empirical(EvaluationMatrix(V[:2], (0.0, 1.0)), 1, 0).value
    big = rademacher_empirical(EvaluationMatrix(V, (0.0, 1.0)), 1, 0).value
    assert small <= big


def test_exact_limit():
    with pytest.raises(InvalidInputError):
        rademacher_empirical(EvaluationMatrix(np.zeros((1, 21)), (0.0, 1.0)), 5, 0, exact=True)


def test_rademacher_expected_examples():
    clip = LossFunction("squared", (0.0, 1.0))
    pm = DiscreteDomain.point_mass([1.0], 0.0)
    zero = FiniteFunctionClass((LinearModel([0.0]),), clip)
    assert rademacher_expected(zero, pm, 4, 5, 10, 0).value == 0.0
    one = FiniteFunctionClass((LinearModel([1.0]),), clip)
    est = rademacher_expected(one, pm, 1, 5, 10, 0)
    assert est.value == 1.0 and est.mode is RademacherMode.EXPECTED_OVER_DATA
    # on a point mass every dataset is identical, so both estimators see the same matrix
    fc = FiniteFunctionClass(tuple(LinearModel([t]) for t in (0.2, 0.7)), clip)
    expd = rademacher_expected(fc, pm, 6, 3, 10, 0)
    emp = rademacher_empirical(EvaluationMatrix(np.repeat(fc.evaluate(pm).values, 6, axis=1), (0.0, 1.0)), 1, 0)
    assert abs(expd.value - emp.value) <= 4 * (expd.std_error + emp.std_error) + 1e-12
