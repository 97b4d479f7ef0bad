"""Complexity measures of finite function classes.

Weighted l1 norms over sample blocks, greedy covering numbers, a sampled
lower estimate of the uniform entropy number, and Rademacher complexities
(exact sign enumeration for N <= 20, Monte Carlo above).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._parallel import ordered_map
from ._seeding import check_seed, derive_rng, derive_seed, trial_blocks
from .domains import Dataset, DiscreteDomain, LinearGaussianDomainSpec, sample_discrete, sample_linear_gaussian
from .exceptions import InvalidInputError
from .hypotheses import EvaluationMatrix, FiniteFunctionClass, as_tau, as_weights

__all__ = [
    "NormKind",
    "NormSpec",
    "RademacherMode",
    "RademacherEstimate",
    "norm_distance",
    "covering_number_greedy",
    "uniform_entropy_estimate",
    "rademacher_empirical",
    "rademacher_expected",
]

EXACT_SIGN_LIMIT = 20
_SIGN_CHUNK = 1 << 14


class NormKind(str, enum.Enum):
    L1W = "l1w"
    L1TAU = "l1tau"


@dataclass(frozen=True)
class NormSpec:
    """Block-weighted l1 norm.

    ``L1W``: K blocks (one per source) weighted by simplex weights ``w``.
    ``L1TAU``: two blocks ordered ``(target, source)`` weighted ``(tau, 1-tau)``.
    Each block's absolute values are averaged over the block size.
    """

    kind: NormKind
    block_sizes: tuple[int, ...]
    w: tuple[float, ...] | None = None
    tau: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", NormKind(self.kind))
        sizes = tuple(int(s) for s in self.block_sizes)
        if any(s < 1 for s in sizes):
            raise InvalidInputError("block sizes must be positive")
        object.__setattr__(self, "block_sizes", sizes)
        if self.kind is NormKind.L1W:
            if self.w is None:
                raise InvalidInputError("L1W norm needs weights w")
            w = as_weights(self.w)
            if len(w) != len(sizes):
                raise InvalidInputError(f"L1W norm has {len(w)} weights but {len(sizes)} blocks")
            object.__setattr__(self, "w", tuple(w))
        else:
            if self.tau is None:
                raise InvalidInputError("L1TAU norm needs tau")
            if len(sizes) != 2:
                raise InvalidInputError("L1TAU norm has exactly two blocks (target, source)")
            object.__setattr__(self, "tau", as_tau(self.tau).tau)

    @classmethod
    def l1w(cls, w, block_sizes) -> "NormSpec":
        return cls(NormKind.L1W, tuple(block_sizes), w=tuple(np.asarray(w, dtype=float).tolist()))

    @classmethod
    def l1tau(cls, tau, n_target, n_source) -> "NormSpec":
        return cls(NormKind.L1TAU, (n_target, n_source), tau=float(tau))

    @property
    def block_weights(self) -> tuple[float, ...]:
        if self.kind is NormKind.L1W:
            return self.w
        return (self.tau, 1.0 - self.tau)

    @property
    def total_size(self) -> int:
        return sum(self.block_sizes)

    def column_coefficients(self) -> np.ndarray:
        """Per-sample multipliers ``weight_k / size_k`` laid out block after block."""
        return np.concatenate(
            [np.full(n, wk / n) for wk, n in zip(self.block_weights, self.block_sizes)]
        )


def _flatten_blocks(values, norm: NormSpec) -> np.ndarray:
    if isinstance(values, np.ndarray) and values.ndim == 1:
        flat = values
    elif isinstance(values, (list, tuple)) and values and np.ndim(values[0]) >= 1:
        blocks = [np.asarray(b, dtype=float).reshape(-1) for b in values]
        if tuple(b.size for b in blocks) != norm.block_sizes:
            raise InvalidInputError(
                f"block lengths {tuple(b.size for b in blocks)} do not match {norm.block_sizes}"
            )
        flat = np.concatenate(blocks)
    else:
        flat = np.asarray(values, dtype=float).reshape(-1)
    if flat.size != norm.total_size:
        raise InvalidInputError(f"got {flat.size} values for blocks of total size {norm.total_size}")
    return flat


def norm_distance(fa_values, fb_values, norm: NormSpec) -> float:
    """``||fa - fb||`` in the block-weighted l1 norm.

    Values may be given per block (list of arrays) or already concatenated.
    """
    a = _flatten_blocks(fa_values, norm)
    b = _flatten_blocks(fb_values, norm)
    return float(np.abs(a - b) @ norm.column_coefficients())


def covering_number_greedy(matrix: EvaluationMatrix, xi: float, norm: NormSpec) -> int:
    """Size of a greedy radius-``xi`` cover using class members as centers.

    The first uncovered function becomes a center and absorbs every function
    within distance ``xi`` (closed ball); repeat until all are covered.
    """
    if not xi > 0:
        raise InvalidInputError(f"xi must be > 0, got {xi}")
    V = matrix.values
    if V.shape[1] != norm.total_size:
        raise InvalidInputError(f"matrix has {V.shape[1]} columns, norm expects {norm.total_size}")
    coef = norm.column_coefficients()
    uncovered = np.ones(V.shape[0], dtype=bool)
    centers = 0
    while uncovered.any():
        pivot = int(np.flatnonzero(uncovered)[0])
        idx = np.flatnonzero(uncovered)
        dist = np.abs(V[idx] - V[pivot]) @ coef
        uncovered[idx[dist <= xi]] = False
        uncovered[pivot] = False
        centers += 1
    return centers


def uniform_entropy_estimate(
    fclass: FiniteFunctionClass,
    generator: Callable[[np.random.Generator], Sequence[Dataset]],
    xi: float,
    norm: NormSpec,
    realizations: int,
    seed: int,
    *,
    n_jobs: int = 1,
) -> float:
    """Largest ``ln N(F, xi, norm)`` over sampled ghost-augmented realizations.

    ``generator(rng)`` returns the blocks of one realization (for the
    multi-source norm, K datasets of size ``2 N_k``; for the tau norm, the
    target then the source block), matching ``norm.block_sizes``.  The result
    is a lower estimate of the supremum; ``ln |F|`` bounds it from above.
    """
    if realizations < 1:
        raise InvalidInputError("realizations must be >= 1")
    check_seed(seed)

    def one(r: int) -> float:
        blocks = generator(derive_rng(seed, r))
        vals = np.hstack([fclass.values(b.features, b.labels) for b in blocks])
        m = EvaluationMatrix(vals, fclass.value_range)
        return math.log(covering_number_greedy(m, xi, norm))

    return float(max(ordered_map(one, range(realizations), n_jobs)))


def ghost_generator(domains: Sequence, sizes: Sequence[int], seed_offset: int = 0):
    """Generator of realizations with blocks of ``2 * sizes[k]`` draws from ``domains[k]``."""

    def gen(rng: np.random.Generator) -> list[Dataset]:
        out = []
        for dom, n in zip(domains, sizes):
            s = int(rng.integers(0, 2**63 - 1))
            if isinstance(dom, DiscreteDomain):
                out.append(sample_discrete(dom, 2 * n, s))
            else:
                out.append(sample_linear_gaussian(dom, 2 * n, s))
        return out

    return gen


class RademacherMode(str, enum.Enum):
    EMPIRICAL_FIXED_SAMPLE = "empirical_fixed_sample"
    EXPECTED_OVER_DATA = "expected_over_data"


@dataclass(frozen=True)
class RademacherEstimate:
    value: float
    std_error: float
    mc_trials: int
    mode: RademacherMode
    exact: bool = False

    def __post_init__(self):
        if self.value < 0 or self.std_error < 0:
            raise InvalidInputError("Rademacher estimate and its std error must be >= 0")


def _sup_abs_correlation(signs: np.ndarray, V: np.ndarray) -> np.ndarray:
    # signs (m, N), V (F, N) -> (m,)
    return np.max(np.abs(signs @ V.T), axis=1) / V.shape[1]


def _exact_rademacher(V: np.ndarray) -> float:
    n = V.shape[1]
    # sigma and -sigma give the same |sum|: fix sigma_0 = +1
    half = 1 << (n - 1)
    bits = np.arange(n - 1, dtype=np.int64)
    total = 0.0
    for start in range(0, half, _SIGN_CHUNK):
        ints = np.arange(start, min(start + _SIGN_CHUNK, half), dtype=np.int64)
        rest = ((ints[:, None] >> bits) & 1) * 2.0 - 1.0
        signs = np.hstack([np.ones((ints.size, 1)), rest])
        total += float(_sup_abs_correlation(signs, V).sum())
    return total / half


def rademacher_empirical(
    matrix: EvaluationMatrix,
    mc_trials: int,
    seed: int,
    *,
    exact: bool | None = None,
    n_jobs: int = 1,
) -> RademacherEstimate:
    """``E_sigma max_f (1/N)|sum_n sigma_n f(z_n)|`` on a fixed sample.

    Enumerates all sign patterns when ``N <= 20`` (unless ``exact=False``);
    otherwise averages ``mc_trials`` random sign vectors.
    """
    if mc_trials < 1:
        raise InvalidInputError("mc_trials must be >= 1")
    check_seed(seed)
    V = matrix.values
    n = V.shape[1]
    if exact is None:
        exact = n <= EXACT_SIGN_LIMIT
    if exact:
        if n > EXACT_SIGN_LIMIT:
            raise InvalidInputError(f"exact enumeration is limited to N <= {EXACT_SIGN_LIMIT}")
        return RademacherEstimate(_exact_rademacher(V), 0.0, 1 << n, RademacherMode.EMPIRICAL_FIXED_SAMPLE, True)

    def block(item):
        b, size = item
        rng = derive_rng(seed, b)
        signs = rng.integers(0, 2, size=(size, n)) * 2.0 - 1.0
        vals = _sup_abs_correlation(signs, V)
        return vals.sum(), (vals * vals).sum()

    parts = ordered_map(block, trial_blocks(mc_trials), n_jobs)
    s = sum(p[0] for p in parts)
    ss = sum(p[1] for p in parts)
    mean = s / mc_trials
    var = max(ss / mc_trials - mean * mean, 0.0) * mc_trials / max(mc_trials - 1, 1)
    return RademacherEstimate(float(mean), math.sqrt(var / mc_trials), mc_trials, RademacherMode.EMPIRICAL_FIXED_SAMPLE)


def rademacher_expected(
    fclass: FiniteFunctionClass,
    domain,
    n: int,
    outer_trials: int,
    inner_trials: int,
    seed: int,
    *,
    n_jobs: int = 1,
) -> RademacherEstimate:
    """Rademacher complexity averaged over ``outer_trials`` datasets of size ``n``.

    Each dataset gets :func:`rademacher_empirical` with ``inner_trials`` sign
    draws; the reported std error is that of the outer mean, which already
    carries the inner Monte-Carlo noise.
    """
    if outer_trials < 1 or inner_trials < 1:
        raise InvalidInputError("trial counts must be >= 1")
    check_seed(seed)

    def one(t: int) -> float:
        s = derive_seed(seed, 0, t)
        if isinstance(domain, DiscreteDomain):
            data = sample_discrete(domain, n, s)
        elif isinstance(domain, LinearGaussianDomainSpec):
            data = sample_linear_gaussian(domain, n, s)
        else:
            raise InvalidInputError(f"unsupported domain type {type(domain).__name__}")
        return rademacher_empirical(fclass.evaluate(data), inner_trials, derive_seed(seed, 1, t)).value

    vals = np.array(ordered_map(one, range(outer_trials), n_jobs))
    se = float(vals.std(ddof=1) / math.sqrt(outer_trials)) if outer_trials > 1 else 0.0
    return RademacherEstimate(float(vals.mean()), se, outer_trials * inner_trials, RademacherMode.EXPECTED_OVER_DATA)
