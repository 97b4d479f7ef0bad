"""Exit criteria, one test per criterion; each records a pass/fail line."""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from dabounds import bounds, concentration, experiments
from dabounds.divergences import discrepancy_distance, divergence_report, ipm
from dabounds.domains import DiscreteDomain
from dabounds.fixtures import (
    bernoulli_domain,
    clipped_loss_fixture,
    identity_function,
    symmetrization_combined_fixture,
    symmetrization_multi_fixture,
    two_point_class,
    two_point_domain,
)
from dabounds.hypotheses import FiniteFunctionClass, LinearModel, LossFunction

import acceptance_log
from determinism_cases import CASES, check
from oracles import bernoulli_two_sided_tail, chain_check, grid_simplex, symmetrization_probabilities

pytestmark = pytest.mark.acceptance

TRIALS = 100_000


def _pooled(a, b):
    return math.sqrt(a.std_gap**2 / a.repeats + b.std_gap**2 / b.repeats)


def _slope(curve):
    n = np.array([r.n_total for r in curve], float)
    m = np.array([r.mean_gap for r in curve])
    return float(np.polyfit(n, m, 1)[0])


def test_criterion_1_multi_source_curves():
    cfg = experiments.default_multi_source_config(repeats=10, n_max=1000)
    t0 = time.perf_counter()
    res = experiments.run_multi_source(cfg)
    elapsed = time.perf_counter() - t0
    finals = {g: res.curve(g)[-1] for g in res.params}
    decreasing = all(res.curve(g)[-1].mean_gap < res.curve(g)[0].mean_gap for g in res.params)
    best = finals[0.5]
    minimal = all(best.mean_gap <= r.mean_gap + 2 * _pooled(best, r) for r in finals.values())
    detail = ", ".join(f"w={g}: {r.mean_gap:.4g}" for g, r in finals.items())
    detail += f"; slopes {[round(_slope(res.curve(g)), 8) for g in res.params]}; {elapsed:.1f}s"
    ok = decreasing and minimal and elapsed < 120
    acceptance_log.record(1, "multi-source curves decrease, w=0.5 minimal at 2 pooled SE", ok, detail)
    assert ok, detail


def test_criterion_2_combined_curves():
    cfg = experiments.default_combined_config(repeats=20, n_max=2000)
    t0 = time.perf_counter()
    res = experiments.run_combined(cfg)
    elapsed = time.perf_counter() - t0
    taus = res.params
    decreasing = all(res.curve(t)[-1].mean_gap < res.curve(t)[0].mean_gap and _slope(res.curve(t)) < 0 for t in taus)
    finals = [res.curve(t)[-1] for t in taus]
    ordered = all(a.mean_gap <= b.mean_gap + 2 * _pooled(a, b) for a, b in zip(finals, finals[1:]))
    tau_star = bounds.optimal_tau(2000, cfg.target_train_size).tau
    detail = ", ".join(f"tau={t}: {r.mean_gap:.4g}" for t, r in zip(taus, finals))
    detail += f"; tau*={tau_star:.3f}; {elapsed:.1f}s"
    ok = decreasing and ordered and elapsed < 180
    acceptance_log.record(2, "combined curves decrease, ordered in tau at 2 pooled SE", ok, detail)
    assert ok, detail


def test_criterion_3_concentration_suite():
    f = identity_function()
    grid = [0.02, 0.05, 0.1, 0.15, 0.2, 0.3]
    curves = {
        "multi K=1": concentration.verify_deviation_multi(f, [bernoulli_domain()], [1.0], [100], grid, TRIALS, 31),
        "multi K=2": concentration.verify_deviation_multi(
            f, [bernoulli_domain(0.3), bernoulli_domain(0.8)], [0.4, 0.6], [40, 60], grid, TRIALS, 32),
        "combined": concentration.verify_deviation_combined(
            f, bernoulli_domain(0.3), bernoulli_domain(0.8), 0.3, 60, 20, grid, TRIALS, 33),
    }
    doms, w, Ns = [bernoulli_domain(0.3), bernoulli_domain(0.8)], [0.4, 0.6], [20, 30]
    H = concentration.weighted_mean_statistic(f, doms, w)
    c = [[wk / n] * n for wk, n in zip(w, Ns)]
    curves["mcdiarmid"] = concentration.verify_mcdiarmid_generalized(H, c, doms, Ns, grid, TRIALS, 34)
    violations = {k: v.violation_count for k, v in curves.items()}
    bern = concentration.verify_deviation_multi(f, [bernoulli_domain()], [1.0], [100], [0.1], TRIALS, 35)
    exact = float(bernoulli_two_sided_tail(100, Fraction(1, 2), Fraction(1, 10)))
    got = float(bern.empirical_tail[0])
    se = math.sqrt(exact * (1 - exact) / TRIALS)
    oracle_ok = abs(got - exact) <= 4 * se and got <= 2 * math.exp(-2)
    ok = all(v == 0 for v in violations.values()) and oracle_ok
    detail = f"violations {violations}; Bernoulli tail {got:.5f} vs exact {exact:.5f} (4 SE = {4 * se:.5f})"
    acceptance_log.record(3, "concentration tails under their bounds, Bernoulli oracle", ok, detail)
    assert ok, detail


def _pairs():
    return [(Fraction(1), Fraction(t) ** 2) for t in (Fraction(0), Fraction(1, 2), Fraction(1))]


def _means(p):
    return [(1 - p) * a + p * b for a, b in _pairs()]


def _sym_cases():
    fx = symmetrization_multi_fixture()
    ps3 = [Fraction(3, 10), Fraction(6, 10), Fraction(45, 100)]
    w3 = [Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)]
    half = Fraction(1, 2)
    d3 = sum(wk * abs(p - half) for wk, p in zip(w3, ps3))
    yield ("K=3 N=6",
           lambda: concentration.verify_symmetrization_multi(fx.fclass, list(fx.domains), fx.target, list(fx.weight),
                                                             list(fx.Ns), fx.xi, TRIALS, 41),
           symmetrization_probabilities(_pairs(), ps3, [6] * 3, w3, _means(half), d3 + Fraction(26, 100),
                                        Fraction(26, 100)))
    ps2, w2 = [Fraction(3, 10), Fraction(6, 10)], [half, half]
    d2 = sum(wk * abs(p - half) for wk, p in zip(w2, ps2))
    xp = Fraction(51, 100)
    yield ("K=2 N=6",
           lambda: concentration.verify_symmetrization_multi(two_point_class(), [two_point_domain(0.3),
                                                             two_point_domain(0.6)], two_point_domain(0.5),
                                                             [0.5, 0.5], [6, 6], float(d2 + xp), TRIALS, 42),
           symmetrization_probabilities(_pairs(), ps2, [6, 6], w2, _means(half), d2 + xp, xp))
    cx = symmetrization_combined_fixture()
    pt = Fraction(9, 10)
    dc = half * abs(half - pt)
    yield ("combined N_S=N_T=4",
           lambda: concentration.verify_symmetrization_combined(cx.fclass, cx.domains[0], cx.domains[1], cx.weight[0],
                                                                4, 4, cx.xi, TRIALS, 43),
           symmetrization_probabilities(_pairs(), [half, pt], [4, 4], [half, half], _means(pt),
                                        dc + Fraction(71, 100), Fraction(71, 100)))


def test_criterion_4_symmetrization_oracle():
    parts, ok = [], True
    for name, run, (lhs, rhs) in _sym_cases():
        r = run()
        exact_ok = lhs <= 2 * rhs
        match = all(abs(mc - float(ex)) <= 4 * math.sqrt(float(ex) * (1 - float(ex)) / r.mc_trials)
                    for mc, ex in ((r.lhs_prob, lhs), (r.rhs_prob, rhs)))
        ok &= exact_ok and match and r.gate_satisfied
        parts.append(f"{name}: lhs {r.lhs_prob:.4f}/{float(lhs):.4f}, rhs {r.rhs_prob:.4f}/{float(rhs):.4f}")
    detail = "; ".join(parts)
    acceptance_log.record(4, "symmetrization MC matches enumeration, lhs <= 2 rhs exactly", ok, detail)
    assert ok, detail


def test_criterion_5_divergence_algebra():
    rng = np.random.default_rng(5)
    clip = LossFunction("absolute", (0.0, 1.0))
    worst, axioms = -math.inf, True
    for _ in range(100):
        gS, gT = (LinearModel(rng.uniform(-2, 2, size=1)) for _ in range(2))
        fc = FiniteFunctionClass((*(LinearModel(rng.uniform(-2, 2, size=1)) for _ in range(3)), gS), clip)
        X = rng.uniform(-1, 1, size=(4, 1))
        S = DiscreteDomain(X, gS.predict(X), rng.dirichlet(np.ones(4)))
        T = DiscreteDomain(X, gT.predict(X), rng.dirichlet(np.ones(4)))
        U = DiscreteDomain(X, rng.uniform(-1, 1, size=4), rng.dirichlet(np.ones(4)))
        rep = divergence_report(fc, S, T, gS, gT)
        worst = max(worst, rep.ipm - rep.disc - rep.q)
        d = ipm(fc, S, T)
        axioms &= d >= 0 and ipm(fc, S, S) == 0 and abs(d - ipm(fc, T, S)) <= 1e-12
        axioms &= d <= ipm(fc, S, U) + ipm(fc, U, T) + 1e-9
    fx = clipped_loss_fixture()
    r_ipm = ipm(fx.fclass, fx.source, fx.target)
    r_disc = discrepancy_distance(fx.fclass.hypotheses, fx.fclass.loss, fx.source, fx.target)
    ok = worst <= 1e-9 and axioms and r_ipm == 0 and r_disc > 0.1
    detail = f"max(ipm - disc - Q) = {worst:.3g}; axioms {axioms}; witness ipm={r_ipm}, disc={r_disc:.4g}"
    acceptance_log.record(5, "divergence algebra", ok, detail)
    assert ok, detail


def test_criterion_6_bounds():
    worst = 0.0
    cases = [
        bounds.bound_multi_uen(0.0, 1.3, [0.2, 0.8], [40, 90], 1.0, 0.05),
        bounds.bound_multi_rademacher(0.0, [0.1, 0.3], [0.2, 0.8], [40, 90], 2.0, 0.05),
        bounds.bound_combined_uen(0.0, 1.3, 0.3, 40, 90, 1.0, 0.05),
        bounds.bound_combined_rademacher(0.0, 0.1, 0.2, 0.0, 40, 90, 1.0, 0.05),
    ]
    for rep in cases:
        base = bounds.classical_baseline(rep)
        for t in ("divergence_term", "complexity_term", "confidence_term", "total"):
            worst = max(worst, abs(getattr(rep, t) - getattr(base, t)))
    optimal = True
    for Ns in ([5, 8], [2, 9, 4], [1, 3, 7], [30, 30]):
        opt = bounds.multi_radicand(bounds.optimal_weights(Ns), Ns)
        optimal &= all(opt <= sum(float(wk) ** 2 / n for wk, n in zip(w, Ns)) + 1e-15 for w in grid_simplex(len(Ns)))
    for N_S, N_T in ((3900, 100), (200, 100), (7, 7)):
        opt = bounds.combined_radicand(bounds.optimal_tau(N_S, N_T), N_S, N_T)
        optimal &= all(opt <= bounds.combined_radicand(t / 100, N_S, N_T) + 1e-15 for t in range(100))
    rng = np.random.default_rng(6)
    form = 0.0
    for _ in range(500):
        K = int(rng.integers(1, 5))
        Ns = [int(n) for n in rng.integers(1, 50, size=K)]
        w = rng.dirichlet(np.ones(K))
        w[-1] = max(0.0, 1.0 - w[:-1].sum())
        form = max(form, abs(bounds.multi_radicand(w, Ns) - bounds.multi_radicand_product_form(w, Ns)))
    ok = worst <= 1e-12 and optimal and form <= 1e-9
    detail = f"coincidence err {worst:.3g}; optimal beats grid {optimal}; product-form err {form:.3g}"
    acceptance_log.record(6, "bound coincidence and optimality", ok, detail)
    assert ok, detail


def test_criterion_7_chain_inequality():
    half = Fraction(1, 2)
    suite = [
        ([Fraction(3, 10)], [5], [Fraction(1)], half),
        ([Fraction(3, 10), Fraction(6, 10)], [4, 4], [half, half], half),
        ([Fraction(1, 10), Fraction(9, 10)], [3, 5], [Fraction(1, 4), Fraction(3, 4)], Fraction(2, 10)),
        ([Fraction(3, 10), Fraction(6, 10), Fraction(45, 100)], [3, 3, 3], [Fraction(1, 3)] * 3, Fraction(7, 10)),
    ]
    checked = failures = 0
    for ps, Ns, w, pt in suite:
        c, f = chain_check(_pairs(), ps, Ns, w, pt)
        checked, failures = checked + c, failures + f
    ok = failures == 0 and checked > 0
    detail = f"{checked} outcomes enumerated, {failures} failures"
    acceptance_log.record(7, "chain inequality under exhaustive enumeration", ok, detail)
    assert ok, detail


def test_criterion_8_determinism():
    bad = {}
    for name in CASES:
        good, why = check(name)
        if not good:
            bad[name] = why
    ok = not bad
    detail = f"{len(CASES)} seeded entry points; failures: {bad or 'none'}"
    acceptance_log.record(8, "byte-identical across runs and 1 vs 8 threads", ok, detail)
    assert ok, detail
