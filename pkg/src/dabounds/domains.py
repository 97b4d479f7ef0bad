"""Data domains: exactly enumerable discrete domains and linear-Gaussian generators."""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Union

import numpy as np

from .exceptions import ConfigurationError, InvalidInputError

__all__ = [
    "BetaMode",
    "LinearGaussianDomainSpec",
    "DiscreteDomain",
    "Dataset",
    "sample_linear_gaussian",
    "sample_discrete",
    "exact_expectation",
    "write_dataset_csv",
    "read_dataset_csv",
]


class BetaMode(str, enum.Enum):
    PER_SAMPLE = "per_sample"
    FIXED = "fixed"


@dataclass(frozen=True)
class LinearGaussianDomainSpec:
    """``y = <x, beta> + R`` with i.i.d. Gaussian inputs.

    Each input coordinate is ``N(x_mean, x_std**2)``, each coefficient
    ``N(beta_mean, beta_std**2)`` and ``R ~ N(0, noise_std**2)``; the second
    parameter is always a standard deviation.  With ``beta_mode=PER_SAMPLE``
    a fresh coefficient vector is drawn for every row.
    """

    input_dim: int = 100
    x_mean: float = 0.0
    x_std: float = 1.0
    beta_mean: float = 1.0
    beta_std: float = 5.0
    noise_std: float = 0.5
    beta_mode: BetaMode = BetaMode.PER_SAMPLE

    def __post_init__(self):
        try:
            object.__setattr__(self, "beta_mode", BetaMode(self.beta_mode))
        except ValueError as exc:
            raise ConfigurationError(f"unknown beta_mode {self.beta_mode!r}") from exc
        if isinstance(self.input_dim, bool) or int(self.input_dim) != self.input_dim or self.input_dim < 1:
            raise ConfigurationError(f"input_dim must be a positive integer, got {self.input_dim!r}")
        object.__setattr__(self, "input_dim", int(self.input_dim))
        for name in ("x_mean", "x_std", "beta_mean", "beta_std", "noise_std"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")
        if not self.x_std > 0:
            raise ConfigurationError(f"x_std must be > 0, got {self.x_std}")
        if self.beta_std < 0:
            raise ConfigurationError(f"beta_std must be >= 0, got {self.beta_std}")
        if self.noise_std < 0:
            raise ConfigurationError(f"noise_std must be >= 0, got {self.noise_std}")


@dataclass(frozen=True, eq=False)
class DiscreteDomain:
    """Finite-support distribution over points ``z = (x, y)``.

    ``features`` is ``(m, I)``, ``labels`` is ``(m,)``; for domains over
    inputs only, labels may be left at zero.
    """

    features: np.ndarray
    labels: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.features, dtype=float))
        if np.ndim(self.features) == 1:
            X = X.T  # a flat list is m one-dimensional points
        y = np.asarray(self.labels, dtype=float).reshape(-1)
        p = np.asarray(self.probabilities, dtype=float).reshape(-1)
        if X.shape[0] == 0:
            raise ConfigurationError("support must be nonempty")
        if not (X.shape[0] == y.shape[0] == p.shape[0]):
            raise ConfigurationError("support features, labels and probabilities differ in length")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ConfigurationError("probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ConfigurationError(f"probabilities must sum to 1 (got {p.sum()!r})")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ConfigurationError("support points must be finite")
        for name, arr in (("features", X), ("labels", y), ("probabilities", p)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_points(cls, points, probabilities) -> "DiscreteDomain":
        """Build from a sequence of ``(x, y)`` pairs; ``x`` scalar or vector."""
        pts = list(points)
        if not pts:
            raise ConfigurationError("support must be nonempty")
        xs = [np.atleast_1d(np.asarray(x, dtype=float)) for x, _ in pts]
        if len({x.shape for x in xs}) != 1:
            raise ConfigurationError("all support points must have equal x dimension")
        return cls(np.vstack(xs), np.array([y for _, y in pts], dtype=float), probabilities)

    @classmethod
    def point_mass(cls, x, y=0.0) -> "DiscreteDomain":
        return cls.from_points([(x, y)], [1.0])

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def input_dim(self) -> int:
        return self.features.shape[1]

    def relabel(self, labeling: Callable[[np.ndarray], np.ndarray]) -> "DiscreteDomain":
        """Same input distribution, labels ``y = labeling(x)``."""
        return DiscreteDomain(self.features, np.asarray(labeling(self.features), dtype=float), self.probabilities)


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    domain_tag: str = ""

    def __post_init__(self):
        # C order keeps BLAS summation order, and so fitted bits, independent of how the data arrived
        X = np.ascontiguousarray(self.features, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.ascontiguousarray(self.labels, dtype=float).reshape(-1)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise InvalidInputError(
                f"features have {X.shape[0]} rows but labels have {y.shape[0]} entries"
            )
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def input_dim(self) -> int:
        return self.features.shape[1]

    def equals(self, other: "Dataset") -> bool:
        return (
            self.domain_tag == other.domain_tag
            and self.features.shape == other.features.shape
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )

    def split(self, n_first: int) -> tuple["Dataset", "Dataset"]:
        """Rows ``[:n_first]`` and ``[n_first:]`` as two datasets with the same tag."""
        return (
            Dataset(self.features[:n_first], self.labels[:n_first], self.domain_tag),
            Dataset(self.features[n_first:], self.labels[n_first:], self.domain_tag),
        )


Domain = Union[DiscreteDomain, Dataset]


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InvalidInputError(f"n must be a positive integer, got {n!r}")
    return int(n)


def sample_linear_gaussian(
    spec: LinearGaussianDomainSpec,
    n: int,
    seed,
    *,
    beta: np.ndarray | None = None,
    domain_tag: str = "",
) -> Dataset:
    """Draw ``n`` labeled rows from a linear-Gaussian domain.

    Draw order from ``default_rng(seed)``: inputs ``(n, I)``, then the
    coefficients (``(n, I)`` per-sample or ``(I,)`` fixed), then the noise.
    Passing ``beta`` pins the coefficient vector (fixed mode only), which is
    how several domains share one ``beta`` within an experiment replication.
    """
    if not isinstance(spec, LinearGaussianDomainSpec):
        raise ConfigurationError("spec must be a LinearGaussianDomainSpec")
    n = _check_n(n)
    rng = np.random.default_rng(seed)
    d = spec.input_dim
    X = rng.normal(spec.x_mean, spec.x_std, size=(n, d))
    if spec.beta_mode is BetaMode.PER_SAMPLE:
        if beta is not None:
            raise ConfigurationError("an explicit beta requires beta_mode=fixed")
        B = rng.normal(spec.beta_mean, spec.beta_std, size=(n, d))
        signal = np.einsum("ij,ij->i", X, B)
    else:
        if beta is None:
            b = rng.normal(spec.beta_mean, spec.beta_std, size=d)
        else:
            b = np.asarray(beta, dtype=float).reshape(-1)
            if b.shape != (d,):
                raise InvalidInputError(f"beta must have length {d}")
        signal = X @ b
    y = signal + rng.normal(0.0, spec.noise_std, size=n)
    return Dataset(X, y, domain_tag)


def draw_beta(spec: LinearGaussianDomainSpec, seed) -> np.ndarray:
    """One coefficient vector from the spec's ``beta`` distribution."""
    return np.random.default_rng(seed).normal(spec.beta_mean, spec.beta_std, size=spec.input_dim)


def sample_discrete(domain: DiscreteDomain, n: int, seed, *, domain_tag: str = "") -> Dataset:
    n = _check_n(n)
    rng = np.random.default_rng(seed)
    idx = rng.choice(domain.size, size=n, p=domain.probabilities)
    return Dataset(domain.features[idx], domain.labels[idx], domain_tag)


def exact_expectation(domain: DiscreteDomain, f: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> float:
    """``sum_i p_i f(z_i)``; ``f`` is vectorized over ``(features, labels)``."""
    vals = np.broadcast_to(np.asarray(f(domain.features, domain.labels), dtype=float), (domain.size,))
    return float(vals @ domain.probabilities)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_dataset_csv(data: Dataset, path) -> None:
    """Header ``x_0,...,x_{I-1},y``; 17 significant digits per value."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x_{i}" for i in range(data.input_dim)] + ["y"])
    for row, y in zip(data.features, data.labels):
        w.writerow([_fmt(v) for v in row] + [_fmt(y)])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_dataset_csv(path, domain_tag: str = "") -> Dataset:
    text = Path(path).read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise InvalidInputError(f"{path}: empty file")
    header = rows[0]
    if not header or header[-1] != "y" or header[:-1] != [f"x_{i}" for i in range(len(header) - 1)]:
        raise InvalidInputError(f"{path}: header must be x_0,...,x_(I-1),y")
    body = [r for r in rows[1:] if r]
    if not body:
        raise InvalidInputError(f"{path}: no data rows")
    if any(len(r) != len(header) for r in body):
        raise InvalidInputError(f"{path}: ragged rows")
    try:
        arr = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise InvalidInputError(f"{path}: non-numeric value") from exc
    return Dataset(arr[:, :-1], arr[:, -1], domain_tag)
