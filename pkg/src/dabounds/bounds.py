"""Closed-form generalization bounds for domain adaptation.

Four evaluators (multi-source and source+target, each with a uniform-entropy
and a Rademacher flavour), the classical same-distribution baselines they
reduce to at zero divergence, and the rate-optimal weights.

All evaluators return the bound value that holds with probability at least
``1 - epsilon``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exceptions import InvalidInputError
from .hypotheses import MixCoefficient, SimplexWeights, as_tau, as_weights

__all__ = [
    "Theorem",
    "BoundReport",
    "bound_multi_uen",
    "bound_multi_rademacher",
    "bound_combined_uen",
    "bound_combined_rademacher",
    "classical_uen",
    "classical_rademacher",
    "classical_baseline",
    "optimal_weights",
    "optimal_tau",
    "multi_radicand",
    "multi_radicand_product_form",
    "combined_radicand",
    "convergence_ratios_multi",
    "convergence_ratios_combined",
    "convergence_condition_holds",
]

DECOMPOSITION_TOL = 1e-12


class Theorem(str, enum.Enum):
    MULTI_UEN = "multi_uen"
    MULTI_RADEMACHER = "multi_rademacher"
    COMBINED_UEN = "combined_uen"
    COMBINED_RADEMACHER = "combined_rademacher"
    CLASSICAL_UEN = "classical_uen"
    CLASSICAL_RADEMACHER = "classical_rademacher"


@dataclass(frozen=True)
class BoundReport:
    theorem: Theorem
    divergence_term: float
    complexity_term: float
    confidence_term: float
    total: float
    inputs: dict = field(default_factory=dict)
    gate_satisfied: bool | None = None

    def __post_init__(self):
        object.__setattr__(self, "theorem", Theorem(self.theorem))
        parts = self.divergence_term + self.complexity_term + self.confidence_term
        if abs(self.total - parts) > DECOMPOSITION_TOL * max(1.0, abs(self.total)):
            raise InvalidInputError("bound total does not match its decomposition")
        if self.total < self.divergence_term:
            raise InvalidInputError("bound total is below its divergence term")

    def to_kv(self) -> str:
        lines = [
            f"theorem={self.theorem.value}",
            f"divergence_term={self.divergence_term!r}",
            f"complexity_term={self.complexity_term!r}",
            f"confidence_term={self.confidence_term!r}",
            f"total={self.total!r}",
        ]
        if self.gate_satisfied is not None:
            lines.append(f"gate_satisfied={str(self.gate_satisfied).lower()}")
        for k, v in self.inputs.items():
            if isinstance(v, (list, tuple)):
                v = ",".join(repr(float(x)) if isinstance(x, float) else str(x) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"input.{k}={v}")
        return "\n".join(lines) + "\n"

    CSV_HEADER = "theorem,divergence_term,complexity_term,confidence_term,total,gate_satisfied"

    def to_csv_row(self) -> str:
        gate = "" if self.gate_satisfied is None else str(self.gate_satisfied).lower()
        nums = ",".join(
            format(v, ".17g")
            for v in (self.divergence_term, self.complexity_term, self.confidence_term, self.total)
        )
        return f"{self.theorem.value},{nums},{gate}"


def _check_epsilon(epsilon, allow_one=False):
    ok = 0.0 < epsilon <= 1.0 if allow_one else 0.0 < epsilon < 1.0
    if not ok:
        interval = "(0, 1]" if allow_one else "(0, 1)"
        raise InvalidInputError(f"epsilon must lie in {interval}, got {epsilon!r}")


def _check_nonneg(name, v):
    if not (v >= 0 and math.isfinite(v)):
        raise InvalidInputError(f"{name} must be a finite nonnegative number, got {v!r}")


def _check_sizes(Ns) -> list[int]:
    Ns = [int(n) for n in Ns]
    if not Ns or any(n < 1 for n in Ns):
        raise InvalidInputError("sample sizes must be positive integers")
    return Ns


def _check_width(range_width):
    if not (range_width > 0 and math.isfinite(range_width)):
        raise InvalidInputError(f"range_width must be positive, got {range_width!r}")


def multi_radicand(w, Ns) -> float:
    """``sum_k w_k^2 / N_k``."""
    w = as_weights(w)
    Ns = _check_sizes(Ns)
    if len(w) != len(Ns):
        raise InvalidInputError(f"{len(w)} weights but {len(Ns)} sample sizes")
    return float(sum(wk * wk / n for wk, n in zip(w.w, Ns)))


def multi_radicand_product_form(w, Ns) -> float:
    """``(sum_k w_k^2 prod_{i!=k} N_i) / prod_k N_k`` evaluated in exact rationals."""
    w = as_weights(w)
    Ns = _check_sizes(Ns)
    total = math.prod(Ns)
    num = sum(
        Fraction(float(wk)) ** 2 * math.prod(n for i, n in enumerate(Ns) if i != k)
        for k, wk in enumerate(w.w)
    )
    return float(num / total)


def combined_radicand(tau, N_S, N_T) -> float:
    """``(1 - tau)^2 / N_S + tau^2 / N_T``."""
    t = as_tau(tau).tau
    N_S, N_T = _check_sizes([N_S, N_T])
    return (1.0 - t) ** 2 / N_S + t * t / N_T


def _uen_radical(ln_uen, epsilon, range_width, radicand) -> float:
    return math.sqrt((ln_uen - math.log(epsilon / 8.0)) * 32.0 * range_width**2 * radicand)


def _gate(sample_product: int, range_width: float, xi_prime: float) -> bool:
    if xi_prime <= 0:
        return False
    return sample_product >= 8.0 * range_width**2 / xi_prime**2


def bound_multi_uen(D_w, ln_uen, w, Ns, range_width, epsilon) -> BoundReport:
    """Multi-source bound with the uniform entropy number.

    ``D_w + sqrt((ln N - ln(eps/8)) * 32 (b-a)^2 * sum_k w_k^2/N_k)``.
    ``gate_satisfied`` reports ``prod N_k >= 8 (b-a)^2 / xi'^2`` at
    ``xi' = total - D_w``.
    """
    w = as_weights(w)
    _check_epsilon(epsilon)
    _check_nonneg("D_w", D_w)
    _check_nonneg("ln_uen", ln_uen)
    _check_width(range_width)
    Ns = _check_sizes(Ns)
    radical = _uen_radical(ln_uen, epsilon, range_width, multi_radicand(w, Ns))
    return BoundReport(
        Theorem.MULTI_UEN,
        float(D_w),
        radical,
        0.0,
        float(D_w) + radical,
        inputs=dict(D_w=float(D_w), ln_uen=float(ln_uen), w=list(w), Ns=Ns,
                    range_width=float(range_width), epsilon=float(epsilon)),
        gate_satisfied=_gate(math.prod(Ns), range_width, radical),
    )


def bound_multi_rademacher(D_w, rademachers, w, Ns, range_width, epsilon) -> BoundReport:
    """``D_w + 2 sum_k w_k R_k + sqrt(sum_k (b-a)^2 w_k^2 ln(1/eps) / (2 N_k))``."""
    w = as_weights(w)
    _check_epsilon(epsilon, allow_one=True)
    _check_nonneg("D_w", D_w)
    _check_width(range_width)
    Ns = _check_sizes(Ns)
    R = [float(r) for r in rademachers]
    if not (len(R) == len(w) == len(Ns)):
        raise InvalidInputError("weights, Rademacher complexities and sample sizes must align")
    for r in R:
        _check_nonneg("rademacher complexity", r)
    complexity = 2.0 * float(sum(wk * r for wk, r in zip(w.w, R)))
    confidence = math.sqrt(range_width**2 * math.log(1.0 / epsilon) / 2.0 * multi_radicand(w, Ns))
    return BoundReport(
        Theorem.MULTI_RADEMACHER,
        float(D_w),
        complexity,
        confidence,
        float(D_w) + complexity + confidence,
        inputs=dict(D_w=float(D_w), rademachers=R, w=list(w), Ns=Ns,
                    range_width=float(range_width), epsilon=float(epsilon)),
    )


def bound_combined_uen(D, ln_uen, tau, N_S, N_T, range_width, epsilon) -> BoundReport:
    """``(1-tau) D + sqrt((ln N - ln(eps/8)) * 32 (b-a)^2 ((1-tau)^2/N_S + tau^2/N_T))``."""
    t = as_tau(tau).tau
    _check_epsilon(epsilon)
    _check_nonneg("D", D)
    _check_nonneg("ln_uen", ln_uen)
    _check_width(range_width)
    N_S, N_T = _check_sizes([N_S, N_T])
    div = (1.0 - t) * float(D)
    radical = _uen_radical(ln_uen, epsilon, range_width, combined_radicand(t, N_S, N_T))
    return BoundReport(
        Theorem.COMBINED_UEN,
        div,
        radical,
        0.0,
        div + radical,
        inputs=dict(D=float(D), ln_uen=float(ln_uen), tau=t, N_S=N_S, N_T=N_T,
                    range_width=float(range_width), epsilon=float(epsilon)),
        gate_satisfied=_gate(N_S * N_T, range_width, radical),
    )


def bound_combined_rademacher(D, R_source_expected, R_target_empirical, tau, N_S, N_T,
                              range_width, epsilon) -> BoundReport:
    """Source+target bound with Rademacher complexities.

    divergence  ``(1-tau) D``
    complexity  ``2 (1-tau) R_S + 2 tau R_T``
    confidence  ``3 tau sqrt((b-a) ln(4/eps) / (2 N_T))
                + (1-tau) sqrt((b-a)^2 ln(2/eps)/2 * (tau^2/N_T + (1-tau)^2/N_S))``
    """
    t = as_tau(tau).tau
    _check_epsilon(epsilon)
    for name, v in (("D", D), ("R_source_expected", R_source_expected), ("R_target_empirical", R_target_empirical)):
        _check_nonneg(name, v)
    _check_width(range_width)
    N_S, N_T = _check_sizes([N_S, N_T])
    div = (1.0 - t) * float(D)
    complexity = 2.0 * (1.0 - t) * float(R_source_expected) + 2.0 * t * float(R_target_empirical)
    # the target term keeps (b-a) unsquared, as stated for the bound
    confidence = 3.0 * t * math.sqrt(range_width * math.log(4.0 / epsilon) / (2.0 * N_T)) + (1.0 - t) * math.sqrt(
        range_width**2 * math.log(2.0 / epsilon) / 2.0 * combined_radicand(t, N_S, N_T)
    )
    return BoundReport(
        Theorem.COMBINED_RADEMACHER,
        div,
        complexity,
        confidence,
        div + complexity + confidence,
        inputs=dict(D=float(D), R_source_expected=float(R_source_expected),
                    R_target_empirical=float(R_target_empirical), tau=t, N_S=N_S, N_T=N_T,
                    range_width=float(range_width), epsilon=float(epsilon)),
    )


def classical_uen(ln_uen, n, range_width, epsilon) -> BoundReport:
    """Same-distribution baseline ``sqrt((ln N - ln(eps/8)) * 32 (b-a)^2 / n)``.

    ``n`` may be an effective (non-integer) sample size.
    """
    _check_epsilon(epsilon)
    _check_nonneg("ln_uen", ln_uen)
    _check_width(range_width)
    if not n > 0:
        raise InvalidInputError("n must be positive")
    radical = _uen_radical(ln_uen, epsilon, range_width, 1.0 / n)
    return BoundReport(Theorem.CLASSICAL_UEN, 0.0, radical, 0.0, radical,
                       inputs=dict(ln_uen=float(ln_uen), n=float(n), range_width=float(range_width),
                                   epsilon=float(epsilon)))


def classical_rademacher(rademacher, n, range_width, epsilon) -> BoundReport:
    """Same-distribution baseline ``2 R + sqrt((b-a)^2 ln(1/eps) / (2 n))``."""
    _check_epsilon(epsilon, allow_one=True)
    _check_nonneg("rademacher", rademacher)
    _check_width(range_width)
    if not n > 0:
        raise InvalidInputError("n must be positive")
    complexity = 2.0 * float(rademacher)
    confidence = math.sqrt(range_width**2 * math.log(1.0 / epsilon) / 2.0 / n)
    return BoundReport(Theorem.CLASSICAL_RADEMACHER, 0.0, complexity, confidence, complexity + confidence,
                       inputs=dict(rademacher=float(rademacher), n=float(n), range_width=float(range_width),
                                   epsilon=float(epsilon)))


def classical_baseline(report: BoundReport) -> BoundReport:
    """The same-distribution bound a domain-adaptation report reduces to at zero divergence.

    Weighted sample sizes enter through the effective size ``1 / radicand``.
    The source+target Rademacher bound has a classical counterpart only at
    ``tau = 0`` (source-only learning at confidence ``eps/2``).
    """
    p = report.inputs
    th = report.theorem
    if th is Theorem.MULTI_UEN:
        return classical_uen(p["ln_uen"], 1.0 / multi_radicand(p["w"], p["Ns"]), p["range_width"], p["epsilon"])
    if th is Theorem.MULTI_RADEMACHER:
        R = float(sum(wk * r for wk, r in zip(p["w"], p["rademachers"])))
        return classical_rademacher(R, 1.0 / multi_radicand(p["w"], p["Ns"]), p["range_width"], p["epsilon"])
    if th is Theorem.COMBINED_UEN:
        n_eff = 1.0 / combined_radicand(p["tau"], p["N_S"], p["N_T"])
        return classical_uen(p["ln_uen"], n_eff, p["range_width"], p["epsilon"])
    if th is Theorem.COMBINED_RADEMACHER:
        if p["tau"] != 0.0:
            raise InvalidInputError("the source+target Rademacher bound has a classical form only at tau = 0")
        return classical_rademacher(p["R_source_expected"], p["N_S"], p["range_width"], p["epsilon"] / 2.0)
    raise InvalidInputError(f"{th.value} is already a classical bound")


def optimal_weights(Ns) -> SimplexWeights:
    """``w_k = N_k / sum N``, the minimizer of ``sum w_k^2 / N_k`` on the simplex."""
    Ns = _check_sizes(Ns)
    total = sum(Ns)
    w = np.array([n / total for n in Ns])
    # absorb rounding so the simplex invariant holds to 1e-12
    w[-1] = 1.0 - w[:-1].sum()
    return SimplexWeights(w)


def optimal_tau(N_S, N_T) -> MixCoefficient:
    """``tau = N_T / (N_T + N_S)``."""
    N_S, N_T = _check_sizes([N_S, N_T])
    return MixCoefficient(N_T / (N_T + N_S))


def convergence_ratios_multi(ln_uens: Sequence[float], Ns_seq: Sequence[Sequence[int]], w, range_width) -> np.ndarray:
    """``ln N / (prod N / (32 (b-a)^2 sum_k w_k^2 prod_{i!=k} N_i))`` along a sequence."""
    _check_width(range_width)
    return np.array(
        [float(l) * 32.0 * range_width**2 * multi_radicand(w, Ns) for l, Ns in zip(ln_uens, Ns_seq, strict=True)]
    )


def convergence_ratios_combined(ln_uens, N_S_seq, N_T, tau) -> np.ndarray:
    """``ln N / (N_S N_T / ((1-tau)^2 N_T + tau^2 N_S))`` along a sequence of ``N_S``."""
    return np.array(
        [float(l) * combined_radicand(tau, n_s, N_T) for l, n_s in zip(ln_uens, N_S_seq, strict=True)]
    )


def convergence_condition_holds(ratios: Sequence[float], growth_tol: float = 1e-12) -> bool:
    """Finite-sequence proxy for "the ratio stays bounded as N grows".

    True when every ratio is finite and the second half of the sequence never
    exceeds the maximum of the first half (no blow-up in the tail).
    """
    r = np.asarray(ratios, dtype=float)
    if r.size == 0 or not np.all(np.isfinite(r)):
        return False
    head = r[: r.size // 2 + 1]
    return bool(np.all(r[r.size // 2 :] <= head.max() * (1.0 + growth_tol) + growth_tol))
