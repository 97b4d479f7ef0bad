"""Monte-Carlo checks of deviation, McDiarmid-type and symmetrization inequalities.

All verifiers work on discrete domains so that expectations are exact.
Sample means are simulated through per-source multinomial counts over the
finite support, which is distributionally identical to drawing the points
and averaging.  Streams are keyed by ``(purpose, source index, trial block)``
so results do not depend on ``n_jobs`` and a zero-weight source leaves the
others' draws untouched.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ._parallel import ordered_map
from ._seeding import check_seed, derive_rng, trial_blocks
from .divergences import class_expectations, ipm, weighted_ipm
from .domains import Dataset, DiscreteDomain
from .exceptions import InvalidCertificateError, InvalidInputError, PreconditionError, UnsupportedInputError
from .hypotheses import FiniteFunctionClass, as_tau, as_weights

__all__ = [
    "SLACK_SIGMAS",
    "BoundedFunction",
    "TailCurve",
    "SymmetrizationResult",
    "verify_deviation_multi",
    "verify_deviation_combined",
    "verify_mcdiarmid_generalized",
    "verify_mcdiarmid_classical",
    "verify_symmetrization_multi",
    "verify_symmetrization_combined",
    "deviation_bound_multi",
    "deviation_bound_combined",
    "mcdiarmid_bound",
    "literal_statistic_multi",
    "literal_statistic_combined",
    "literal_deviation_bound_multi",
    "normalized_statistic_multi",
    "weighted_mean_statistic",
    "check_bounded_difference",
    "chain_terms",
]

SLACK_SIGMAS = 4.0
SPOT_CHECK_STATES = 50
SPOT_CHECK_TOL = 1e-12
MEAN_RUN_FACTOR = 10


@dataclass(frozen=True)
class BoundedFunction:
    """A vectorized ``f(features, labels)`` with values in ``value_range``."""

    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    value_range: tuple[float, float]

    def __post_init__(self):
        a, b = (float(v) for v in self.value_range)
        if not a < b:
            raise InvalidInputError(f"value_range needs a < b, got {self.value_range}")
        object.__setattr__(self, "value_range", (a, b))

    @property
    def range_width(self) -> float:
        return self.value_range[1] - self.value_range[0]

    def on_support(self, domain: DiscreteDomain) -> np.ndarray:
        v = np.broadcast_to(np.asarray(self.fn(domain.features, domain.labels), dtype=float), (domain.size,))
        a, b = self.value_range
        if np.any(v < a - SPOT_CHECK_TOL) or np.any(v > b + SPOT_CHECK_TOL):
            raise InvalidInputError(f"function leaves its declared range [{a}, {b}] on the support")
        return np.array(v)


@dataclass(frozen=True, eq=False)
class TailCurve:
    xi_grid: np.ndarray
    empirical_tail: np.ndarray
    theoretical_bound: np.ndarray
    mc_trials: int

    def __post_init__(self):
        xi = np.asarray(self.xi_grid, dtype=float)
        emp = np.asarray(self.empirical_tail, dtype=float)
        bnd = np.asarray(self.theoretical_bound, dtype=float)
        if not (xi.shape == emp.shape == bnd.shape) or xi.ndim != 1:
            raise InvalidInputError("tail curve arrays must be 1-D and equally long")
        if np.any(emp < 0) or np.any(emp > 1):
            raise InvalidInputError("empirical tail must lie in [0, 1]")
        if self.mc_trials < 1:
            raise InvalidInputError("mc_trials must be >= 1")
        for name, arr in (("xi_grid", xi), ("empirical_tail", emp), ("theoretical_bound", bnd)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def std_error(self) -> np.ndarray:
        p = self.empirical_tail
        return np.sqrt(p * (1.0 - p) / self.mc_trials)

    @property
    def violations(self) -> np.ndarray:
        return self.empirical_tail > self.theoretical_bound + SLACK_SIGMAS * self.std_error

    @property
    def violation_count(self) -> int:
        return int(self.violations.sum())

    def is_monotone(self) -> bool:
        """Nonincreasing in ``xi`` up to ``4/sqrt(trials)``."""
        slack = SLACK_SIGMAS / math.sqrt(self.mc_trials)
        return bool(np.all(np.diff(self.empirical_tail) <= slack))

    def to_csv(self) -> str:
        lines = ["xi,empirical_tail,theoretical_bound,std_error"]
        for row in zip(self.xi_grid, self.empirical_tail, self.theoretical_bound, self.std_error):
            lines.append(",".join(format(float(v), ".17g") for v in row))
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")


def _check_grid(xi_grid) -> np.ndarray:
    xi = np.asarray(xi_grid, dtype=float).reshape(-1)
    if xi.size == 0 or np.any(xi <= 0) or np.any(np.diff(xi) <= 0) or not np.all(np.isfinite(xi)):
        raise InvalidInputError("xi_grid must be a nonempty ascending sequence of positive reals")
    return xi


def _check_trials(mc_trials) -> int:
    if isinstance(mc_trials, bool) or int(mc_trials) != mc_trials or mc_trials < 1:
        raise InvalidInputError(f"mc_trials must be a positive integer, got {mc_trials!r}")
    return int(mc_trials)


def _check_discrete(domains) -> list[DiscreteDomain]:
    out = list(domains)
    for d in out:
        if not isinstance(d, DiscreteDomain):
            raise UnsupportedInputError(
                f"exact expectations need DiscreteDomain inputs, got {type(d).__name__}"
            )
    return out


def _check_sizes(Ns, k: int) -> list[int]:
    Ns = [int(n) for n in Ns]
    if len(Ns) != k:
        raise InvalidInputError(f"{k} domains but {len(Ns)} sample sizes")
    if any(n < 1 for n in Ns):
        raise InvalidInputError("sample sizes must be positive")
    return Ns


# ---------------------------------------------------------------- bounds


def deviation_bound_multi(xi_tilde, w, Ns, range_width) -> np.ndarray:
    """Normalized form ``2 exp(-2 xi^2 / ((b-a)^2 sum_k w_k^2 / N_k))``."""
    w = as_weights(w)
    r = float(sum(wk * wk / n for wk, n in zip(w.w, Ns)))
    xi = np.asarray(xi_tilde, dtype=float)
    if r == 0.0:
        return np.zeros_like(xi)
    return np.minimum(2.0 * np.exp(-2.0 * xi * xi / (range_width**2 * r)), 2.0)


def deviation_bound_combined(xi_tilde, tau, N_S, N_T, range_width) -> np.ndarray:
    """Normalized form ``2 exp(-2 xi^2 / ((b-a)^2 (tau^2/N_T + (1-tau)^2/N_S)))``."""
    t = as_tau(tau).tau
    return deviation_bound_multi(xi_tilde, [1.0 - t, t], [N_S, N_T], range_width)


def mcdiarmid_bound(xi, c_matrix) -> np.ndarray:
    """One-sided ``exp(-2 xi^2 / sum_k sum_n (c_n^(k))^2)``."""
    s = float(sum(float(np.sum(np.asarray(c, dtype=float) ** 2)) for c in c_matrix))
    xi = np.asarray(xi, dtype=float)
    if s == 0.0:
        return np.zeros_like(xi)
    return np.exp(-2.0 * xi * xi / s)


def normalized_statistic_multi(values: Sequence[np.ndarray], w) -> float:
    """``sum_k w_k mean(values_k)``."""
    w = as_weights(w)
    return float(sum(wk * float(np.mean(v)) for wk, v in zip(w.w, values)))


def literal_statistic_multi(values: Sequence[np.ndarray], w) -> float:
    """``sum_k w_k (prod_{i!=k} N_i) sum_n f(z_n^(k))`` without normalization."""
    w = as_weights(w)
    Ns = [len(v) for v in values]
    return float(
        sum(wk * math.prod(n for i, n in enumerate(Ns) if i != k) * float(np.sum(v))
            for k, (wk, v) in enumerate(zip(w.w, values)))
    )


def literal_statistic_combined(target_values, source_values, tau) -> float:
    """``tau N_S sum f(target) + (1-tau) N_T sum f(source)``."""
    t = as_tau(tau).tau
    return t * len(source_values) * float(np.sum(target_values)) + (1.0 - t) * len(target_values) * float(
        np.sum(source_values)
    )


def literal_deviation_bound_multi(xi, w, Ns, range_width) -> float:
    """``2 exp(-2 xi^2 / ((b-a)^2 prod N (sum_k w_k^2 prod_{i!=k} N_i)))`` for the literal statistic."""
    w = as_weights(w)
    P = math.prod(Ns)
    S = sum(wk * wk * math.prod(n for i, n in enumerate(Ns) if i != k) for k, wk in enumerate(w.w))
    if S == 0:
        return 0.0
    return min(2.0 * math.exp(-2.0 * xi * xi / (range_width**2 * P * S)), 2.0)


# ---------------------------------------------------------------- sampling


def _block_means(rng: np.random.Generator, domain: DiscreteDomain, n: int, size: int, V: np.ndarray) -> np.ndarray:
    """``(size, rows(V))`` sample means of ``V`` (rows over the support) over ``n`` draws."""
    counts = rng.multinomial(n, domain.probabilities, size=size)
    return counts @ V.T / n


def _weighted_sample_means(seed, purpose, domains, Ns, weights, Vs, b, size) -> np.ndarray:
    out = None
    for k, (dom, n, wk, V) in enumerate(zip(domains, Ns, weights, Vs)):
        m = _block_means(derive_rng(seed, purpose, k, b), dom, n, size, V)
        out = wk * m if out is None else out + wk * m
    return out


def _tail_curve(seed, domains, Ns, weights, fvals, centering, xi, bound, mc_trials, n_jobs) -> TailCurve:
    Vs = [v.reshape(1, -1) for v in fvals]

    def block(item):
        b, size = item
        stat = _weighted_sample_means(seed, "deviation", domains, Ns, weights, Vs, b, size)[:, 0]
        dev = np.abs(stat - centering)
        return (dev[:, None] > xi[None, :]).sum(axis=0)

    counts = sum(ordered_map(block, trial_blocks(mc_trials), n_jobs))
    return TailCurve(xi, counts / mc_trials, bound, mc_trials)


def verify_deviation_multi(
    f: BoundedFunction,
    sources: Sequence[DiscreteDomain],
    w,
    Ns: Sequence[int],
    xi_grid,
    mc_trials: int,
    seed: int,
    *,
    n_jobs: int = 1,
) -> TailCurve:
    """Tail of ``|sum_k w_k (E^(S_k) f - mean_k f)|`` against the multi-source deviation bound."""
    sources = _check_discrete(sources)
    w = as_weights(w)
    if len(w) != len(sources):
        raise InvalidInputError(f"{len(sources)} sources but {len(w)} weights")
    Ns = _check_sizes(Ns, len(sources))
    xi = _check_grid(xi_grid)
    mc_trials = _check_trials(mc_trials)
    check_seed(seed)
    fvals = [f.on_support(d) for d in sources]
    centering = float(sum(wk * float(v @ d.probabilities) for wk, v, d in zip(w.w, fvals, sources)))
    bound = deviation_bound_multi(xi, w, Ns, f.range_width)
    return _tail_curve(seed, sources, Ns, list(w.w), fvals, centering, xi, bound, mc_trials, n_jobs)


def verify_deviation_combined(
    f: BoundedFunction,
    source: DiscreteDomain,
    target: DiscreteDomain,
    tau,
    N_S: int,
    N_T: int,
    xi_grid,
    mc_trials: int,
    seed: int,
    *,
    n_jobs: int = 1,
) -> TailCurve:
    """Tail of ``|E F_tau - F_tau|`` with ``F_tau = tau mean_T f + (1-tau) mean_S f``.

    The source is stream 0 and the target stream 1, so ``tau = 0`` replays the
    single-source multi curve on ``source`` exactly.
    """
    source, target = _check_discrete([source, target])
    t = as_tau(tau).tau
    Ns = _check_sizes([N_S, N_T], 2)
    xi = _check_grid(xi_grid)
    mc_trials = _check_trials(mc_trials)
    check_seed(seed)
    doms = [source, target]
    weights = [1.0 - t, t]
    fvals = [f.on_support(d) for d in doms]
    centering = float(sum(wk * float(v @ d.probabilities) for wk, v, d in zip(weights, fvals, doms)))
    bound = deviation_bound_combined(xi, t, Ns[0], Ns[1], f.range_width)
    return _tail_curve(seed, doms, Ns, weights, fvals, centering, xi, bound, mc_trials, n_jobs)


# ---------------------------------------------------------------- McDiarmid


def weighted_mean_statistic(f: BoundedFunction, domains: Sequence[DiscreteDomain], w):
    """``H`` for the weighted mean ``sum_k w_k mean_k f``, in index form.

    The returned callable takes ``indices[k]`` of shape ``(trials, N_k)``
    (support indices into ``domains[k]``) and returns ``(trials,)`` values.
    Its bounded-difference constants are ``c_n^(k) = (b-a) w_k / N_k``.
    """
    w = as_weights(w)
    fvals = [f.on_support(d) for d in domains]

    def H(indices):
        return sum(wk * fv[np.asarray(idx)].mean(axis=-1) for wk, fv, idx in zip(w.w, fvals, indices))

    return H


def _sample_indices(rng, domain: DiscreteDomain, size: int, n: int) -> np.ndarray:
    return rng.choice(domain.size, size=(size, n), p=domain.probabilities)


def check_bounded_difference(H, c_matrix, domains, Ns, seed, states: int = SPOT_CHECK_STATES) -> None:
    """Spot-check ``|H(z) - H(z')| <= c_n^(k)`` for one-coordinate changes.

    At each of ``states`` random states one random coordinate is replaced by
    every support point of its domain.  Raises InvalidCertificateError on
    the first excess beyond ``1e-12``.
    """
    rng = derive_rng(seed, "spot-check")
    sizes = [int(n) for n in Ns]
    total = sum(sizes)
    for _ in range(states):
        z = [_sample_indices(rng, d, 1, n) for d, n in zip(domains, sizes)]
        base = float(np.asarray(H(z)).reshape(-1)[0])
        pos = int(rng.integers(total))
        k = 0
        while pos >= sizes[k]:
            pos -= sizes[k]
            k += 1
        for v in range(domains[k].size):
            z2 = [a.copy() for a in z]
            z2[k][0, pos] = v
            change = abs(float(np.asarray(H(z2)).reshape(-1)[0]) - base)
            if change > float(c_matrix[k][pos]) + SPOT_CHECK_TOL:
                raise InvalidCertificateError(
                    f"bounded-difference constant c[{k}][{pos}] = {c_matrix[k][pos]!r} is exceeded "
                    f"by an observed change of {change!r}"
                )


def verify_mcdiarmid_generalized(
    H,
    c_matrix: Sequence[Sequence[float]],
    domains: Sequence[DiscreteDomain],
    Ns: Sequence[int],
    xi_grid,
    mc_trials: int,
    seed: int,
    *,
    n_jobs: int = 1,
) -> TailCurve:
    """One-sided tail ``P{H - E H >= xi}`` against ``exp(-2 xi^2 / sum c^2)``.

    ``H`` is in index form (see :func:`weighted_mean_statistic`).  ``E H`` is
    estimated from a separate run ``10x`` larger; with ``delta`` four standard
    errors of that estimate, exceedances are counted at ``xi + delta`` so the
    centering error cannot manufacture violations.
    """
    domains = _check_discrete(domains)
    Ns = _check_sizes(Ns, len(domains))
    if len(c_matrix) != len(domains) or any(len(c) != n for c, n in zip(c_matrix, Ns)):
        raise InvalidInputError("c_matrix must have one row of length N_k per domain")
    if any(float(c) < 0 for row in c_matrix for c in row):
        raise InvalidInputError("bounded-difference constants must be >= 0")
    xi = _check_grid(xi_grid)
    mc_trials = _check_trials(mc_trials)
    check_seed(seed)
    check_bounded_difference(H, c_matrix, domains, Ns, seed)

    def draw(purpose):
        def block(item):
            b, size = item
            z = [_sample_indices(derive_rng(seed, purpose, k, b), d, size, n) for k, (d, n) in enumerate(zip(domains, Ns))]
            return np.asarray(H(z), dtype=float).reshape(size)

        return block

    def moments(item):
        h = draw("mcdiarmid-mean")(item)
        return float(h.sum()), float((h * h).sum())

    n_mean = MEAN_RUN_FACTOR * mc_trials
    parts = ordered_map(moments, trial_blocks(n_mean), n_jobs)
    s = math.fsum(p[0] for p in parts)
    ss = math.fsum(p[1] for p in parts)
    mean = s / n_mean
    var = max(ss / n_mean - mean * mean, 0.0)
    delta = SLACK_SIGMAS * math.sqrt(var / n_mean)

    def tail(item):
        h = draw("mcdiarmid")(item)
        return ((h - mean)[:, None] >= (xi + delta)[None, :]).sum(axis=0)

    counts = sum(ordered_map(tail, trial_blocks(mc_trials), n_jobs))
    return TailCurve(xi, counts / mc_trials, mcdiarmid_bound(xi, c_matrix), mc_trials)


def verify_mcdiarmid_classical(H, c, domain: DiscreteDomain, N: int, xi_grid, mc_trials, seed, *, n_jobs=1) -> TailCurve:
    """Same-distribution McDiarmid: one block of ``N`` i.i.d. draws."""
    return verify_mcdiarmid_generalized(H, [c], [domain], [N], xi_grid, mc_trials, seed, n_jobs=n_jobs)


# ---------------------------------------------------------------- symmetrization


@dataclass(frozen=True)
class SymmetrizationResult:
    lhs_prob: float
    rhs_prob: float
    lhs_std_error: float
    rhs_std_error: float
    xi: float
    xi_prime: float
    gate_satisfied: bool
    mc_trials: int

    @property
    def combined_std_error(self) -> float:
        """Std error of ``lhs - 2 rhs`` treating the two estimates as independent."""
        return math.sqrt(self.lhs_std_error**2 + 4.0 * self.rhs_std_error**2)

    @property
    def inequality_holds(self) -> bool:
        return self.lhs_prob <= 2.0 * self.rhs_prob + SLACK_SIGMAS * self.combined_std_error

    def to_kv(self) -> str:
        return (
            f"lhs_prob={self.lhs_prob!r}\nrhs_prob={self.rhs_prob!r}\n"
            f"lhs_std_error={self.lhs_std_error!r}\nrhs_std_error={self.rhs_std_error!r}\n"
            f"xi={self.xi!r}\nxi_prime={self.xi_prime!r}\n"
            f"gate_satisfied={str(self.gate_satisfied).lower()}\n"
            f"inequality_holds={str(self.inequality_holds).lower()}\nmc_trials={self.mc_trials}\n"
        )


def _symmetrization(seed, fclass, domains, Ns, weights, target_means, xi, xi_prime, sample_product, mc_trials, n_jobs):
    Vs = [fclass.values(d.features, d.labels) for d in domains]

    def block(item):
        b, size = item
        m = _weighted_sample_means(seed, "sample", domains, Ns, weights, Vs, b, size)
        g = _weighted_sample_means(seed, "ghost", domains, Ns, weights, Vs, b, size)
        lhs = np.max(np.abs(target_means[None, :] - m), axis=1) > xi
        rhs = np.max(np.abs(g - m), axis=1) > xi_prime / 2.0
        return np.array([lhs.sum(), rhs.sum()])

    counts = sum(ordered_map(block, trial_blocks(mc_trials), n_jobs))
    pl, pr = counts / mc_trials
    gate = xi_prime > 0 and sample_product >= 8.0 * fclass.range_width**2 / xi_prime**2
    return SymmetrizationResult(
        float(pl), float(pr),
        math.sqrt(pl * (1 - pl) / mc_trials), math.sqrt(pr * (1 - pr) / mc_trials),
        float(xi), float(xi_prime), bool(gate), mc_trials,
    )


def verify_symmetrization_multi(
    fclass: FiniteFunctionClass,
    sources: Sequence[DiscreteDomain],
    target: DiscreteDomain,
    w,
    Ns: Sequence[int],
    xi: float,
    mc_trials: int,
    seed: int,
    *,
    n_jobs: int = 1,
) -> SymmetrizationResult:
    """Estimate ``P{sup|E^T f - E_w f| > xi}`` and ``P{sup|E'_w f - E_w f| > xi'/2}``.

    ``xi' = xi - D_w`` with ``D_w`` the exact weighted IPM; the sample-size
    gate ``prod N_k >= 8 (b-a)^2 / xi'^2`` is reported, not enforced.
    """
    *sources, target = _check_discrete([*sources, target])
    w = as_weights(w)
    if len(w) != len(sources):
        raise InvalidInputError(f"{len(sources)} sources but {len(w)} weights")
    Ns = _check_sizes(Ns, len(sources))
    mc_trials = _check_trials(mc_trials)
    check_seed(seed)
    D_w = weighted_ipm(fclass, sources, target, w)
    if not xi > D_w:
        raise PreconditionError(f"xi = {xi!r} must exceed the weighted discrepancy D_w = {D_w!r}")
    return _symmetrization(seed, fclass, sources, Ns, list(w.w), class_expectations(fclass, target),
                           xi, xi - D_w, math.prod(Ns), mc_trials, n_jobs)


def verify_symmetrization_combined(
    fclass: FiniteFunctionClass,
    source: DiscreteDomain,
    target: DiscreteDomain,
    tau,
    N_S: int,
    N_T: int,
    xi: float,
    mc_trials: int,
    seed: int,
    *,
    n_jobs: int = 1,
) -> SymmetrizationResult:
    """Source+target version: ``E_tau = tau mean_T + (1-tau) mean_S``, ``xi' = xi - (1-tau) D``."""
    source, target = _check_discrete([source, target])
    t = as_tau(tau).tau
    Ns = _check_sizes([N_S, N_T], 2)
    mc_trials = _check_trials(mc_trials)
    check_seed(seed)
    D = (1.0 - t) * ipm(fclass, source, target)
    if not xi > D:
        raise PreconditionError(f"xi = {xi!r} must exceed (1 - tau) D = {D!r}")
    return _symmetrization(seed, fclass, [source, target], Ns, [1.0 - t, t], class_expectations(fclass, target),
                           xi, xi - D, Ns[0] * Ns[1], mc_trials, n_jobs)


# ---------------------------------------------------------------- excess-risk chain


def chain_terms(fclass: FiniteFunctionClass, samples: Sequence[Dataset], target: DiscreteDomain, w) -> tuple[float, float]:
    """``(excess, 2 sup_f |E^T f - E_w f|)`` for one sample outcome.

    ``excess = E^T f_w - min_f E^T f`` where ``f_w`` minimizes the weighted
    empirical risk (ties broken toward the lowest index).  The chain
    ``0 <= excess <= 2 sup`` holds for every outcome.
    """
    w = as_weights(w)
    if len(samples) != len(w):
        raise InvalidInputError(f"{len(samples)} samples but {len(w)} weights")
    emp = sum(wk * fclass.values(s.features, s.labels).mean(axis=1) for wk, s in zip(w.w, samples))
    exact = class_expectations(fclass, target)
    chosen = int(np.argmin(emp))
    excess = float(exact[chosen] - exact.min())
    return excess, 2.0 * float(np.max(np.abs(exact - emp)))
