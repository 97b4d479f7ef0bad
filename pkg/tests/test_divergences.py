import numpy as np
import pytest

from dabounds.divergences import (
    DivergenceMode,
    DivergenceReport,
    discrepancy_distance,
    divergence_report,
    ipm,
    q_quantity,
    weighted_ipm,
)
from dabounds.domains import Dataset, DiscreteDomain
from dabounds.exceptions import InvalidInputError
from dabounds.fixtures import clipped_loss_fixture
from dabounds.hypotheses import FiniteFunctionClass, LinearModel, LossFunction

ABS = LossFunction("absolute")
CLIP = LossFunction("absolute", (0.0, 1.0))


def random_domain(r, m=4, dim=1, labels=None):
    p = r.dirichlet(np.ones(m))
    p[-1] = 1.0 - p[:-1].sum()
    X = r.uniform(-1, 1, size=(m, dim))
    y = r.uniform(-1, 1, size=m) if labels is None else labels(X)
    return DiscreteDomain(X, y, p)


def random_class(r, size=3, dim=1, loss=CLIP):
    return FiniteFunctionClass(tuple(LinearModel(r.uniform(-2, 2, size=dim)) for _ in range(size)), loss)


def test_ipm_two_function_example():
    # z1 = (x=0, y=0), z2 = (x=1, y=0); f_theta = |theta x - y| clipped: f_0 = (0,0), f_1 = (0,1)
    S = DiscreteDomain.from_points([(0.0, 0.0), (1.0, 0.0)], [0.5, 0.5])
    T = DiscreteDomain.from_points([(0.0, 0.0), (1.0, 0.0)], [1.0, 0.0])
    fc = FiniteFunctionClass((LinearModel([1.0]), LinearModel([0.0])), CLIP)
    assert ipm(fc, S, T) == 0.5
    assert ipm(fc, S, S) == 0.0
    const = FiniteFunctionClass((LinearModel([0.0]),), LossFunction("absolute", (1.0, 2.0)))
    assert ipm(const, S, T) == 0.0


def test_discrepancy_examples():
    hyps = [LinearModel([0.0]), LinearModel([1.0])]
    S, T = DiscreteDomain.point_mass([1.0]), DiscreteDomain.point_mass([2.0])
    assert discrepancy_distance(hyps, ABS, S, T) == 1.0
    assert discrepancy_distance(hyps, ABS, S, S) == 0.0
    assert discrepancy_distance(hyps[:1], ABS, S, T) == 0.0


def test_q_examples():
    T = DiscreteDomain.point_mass([1.0])
    hyps = [LinearModel([0.0])]
    gS, gT = LinearModel([1.0]), LinearModel([2.0])
    assert q_quantity(hyps, ABS, T, gS, gT) == 1.0
    assert q_quantity(hyps, ABS, T, gT, gS) == 1.0
    assert q_quantity(hyps, ABS, T, gS, gS) == 0.0
    assert q_quantity(hyps, ABS, T, lambda X: X[:, 0], lambda X: 2 * X[:, 0]) == 1.0


def test_weighted_ipm_examples():
    fc = FiniteFunctionClass((LinearModel([1.0]),), CLIP)
    T = DiscreteDomain.from_points([(1.0, 0.0), (0.0, 0.0)], [0.0, 1.0])
    S1 = DiscreteDomain.from_points([(1.0, 0.0), (0.0, 0.0)], [0.2, 0.8])
    S2 = DiscreteDomain.from_points([(1.0, 0.0), (0.0, 0.0)], [0.6, 0.4])
    assert weighted_ipm(fc, [S1, S2], T, [0.5, 0.5]) == pytest.approx(0.4, abs=1e-15)
    assert weighted_ipm(fc, [S1, S2], T, [1.0, 0.0]) == ipm(fc, S1, T)
    assert weighted_ipm(fc, [T, T], T, [0.3, 0.7]) == 0.0
    with pytest.raises(InvalidInputError):
        weighted_ipm(fc, [S1], T, [0.5, 0.5])


def test_ipm_semimetric_axioms(rng):
    for _ in range(200):
        fc = random_class(rng, size=int(rng.integers(1, 5)))
        S, T, U = (random_domain(rng) for _ in range(3))
        d = ipm(fc, S, T)
        assert d >= 0
        assert abs(d - ipm(fc, T, S)) <= 1e-12
        assert d <= ipm(fc, S, U) + ipm(fc, U, T) + 1e-9


def test_ipm_bounded_by_disc_plus_q(rng):
    for _ in range(100):
        hyps = [LinearModel(rng.uniform(-2, 2, size=1)) for _ in range(3)]
        gS, gT = LinearModel(rng.uniform(-2, 2, size=1)), LinearModel(rng.uniform(-2, 2, size=1))
        hyps.append(gS)
        fc = FiniteFunctionClass(tuple(hyps), CLIP)
        X = rng.uniform(-1, 1, size=(4, 1))
        S = DiscreteDomain(X, gS.predict(X), rng.dirichlet(np.ones(4)))
        pT = rng.dirichlet(np.ones(4))
        T = DiscreteDomain(X, gT.predict(X), pT)
        rep = divergence_report(fc, S, T, gS, gT)
        assert rep.mode is DivergenceMode.EXACT_DISCRETE
        assert rep.ipm <= rep.disc + rep.q + 1e-9


def test_report_rejects_violation():
    with pytest.raises(InvalidInputError):
        DivergenceReport(0.5, 0.1, 0.1, DivergenceMode.EXACT_DISCRETE)
    # empirical mode records values without the relation check
    DivergenceReport(0.5, 0.1, 0.1, DivergenceMode.EMPIRICAL_SAMPLES)


def test_q_triangle_inequality(rng):
    for _ in range(100):
        hyps = [LinearModel(rng.uniform(-2, 2, size=1)) for _ in range(3)]
        T = random_domain(rng)
        gA, gB, gC = (LinearModel(rng.uniform(-2, 2, size=1)) for _ in range(3))
        assert q_quantity(hyps, CLIP, T, gA, gC) <= q_quantity(hyps, CLIP, T, gA, gB) + q_quantity(hyps, CLIP, T, gB, gC) + 1e-9


def test_clipped_loss_fixture():
    fx = clipped_loss_fixture()
    assert ipm(fx.fclass, fx.source, fx.target) == 0.0
    disc = discrepancy_distance(fx.fclass.hypotheses, fx.fclass.loss, fx.source, fx.target)
    assert disc == pytest.approx(0.21, abs=1e-12)


def test_empirical_mode_and_kv():
    fc = FiniteFunctionClass((LinearModel([1.0]),), CLIP)
    S = Dataset([[0.0], [1.0]], [0.0, 0.0])
    T = Dataset([[0.0]], [0.0])
    rep = divergence_report(fc, S, T)
    assert rep.mode is DivergenceMode.EMPIRICAL_SAMPLES and rep.ipm == 0.5 and rep.q is None
    assert rep.to_kv() == "ipm=0.5\ndisc=0.0\nmode=empirical_samples\n"
