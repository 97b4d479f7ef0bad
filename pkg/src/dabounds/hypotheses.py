"""Losses, linear hypotheses, finite function classes and least-squares ERM.

The two least-squares solvers are exposed both as plain functions over
:class:`~dabounds.domains.Dataset` lists and as scikit-learn regressors
(:class:`WeightedSourceRegressor`, :class:`CombinedDomainRegressor`) so they
drop into pipelines, ``clone`` and ``get_params``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .domains import Dataset
from .exceptions import ConfigurationError, DegenerateDesignError, InvalidInputError

__all__ = [
    "LossKind",
    "LossFunction",
    "LinearModel",
    "SimplexWeights",
    "MixCoefficient",
    "FiniteFunctionClass",
    "EvaluationMatrix",
    "empirical_risk",
    "weighted_empirical_risk",
    "combined_empirical_risk",
    "fit_weighted_least_squares",
    "fit_combined_least_squares",
    "argmin_over_class",
    "WeightedSourceRegressor",
    "CombinedDomainRegressor",
]

# condition-number guard of the normal equations
MAX_CONDITION = 1e12


class LossKind(str, enum.Enum):
    SQUARED = "squared"
    ABSOLUTE = "absolute"


@dataclass(frozen=True)
class LossFunction:
    kind: LossKind = LossKind.SQUARED
    clip_range: tuple[float, float] | None = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", LossKind(self.kind))
        except ValueError as exc:
            raise ConfigurationError(f"unknown loss kind {self.kind!r}") from exc
        if self.clip_range is not None:
            a, b = (float(v) for v in self.clip_range)
            if not a < b:
                raise ConfigurationError(f"clip_range needs a < b, got {self.clip_range}")
            object.__setattr__(self, "clip_range", (a, b))

    def __call__(self, prediction, target) -> np.ndarray:
        diff = np.asarray(prediction, dtype=float) - np.asarray(target, dtype=float)
        out = diff * diff if self.kind is LossKind.SQUARED else np.abs(diff)
        if self.clip_range is not None:
            out = np.clip(out, *self.clip_range)
        return out

    @property
    def range_width(self) -> float:
        if self.clip_range is None:
            raise InvalidInputError("an unclipped loss has unbounded range")
        return self.clip_range[1] - self.clip_range[0]

    def unclipped(self) -> "LossFunction":
        return LossFunction(self.kind, None)


@dataclass(frozen=True, eq=False)
class LinearModel:
    """``g(x) = <x, coefficients>`` with no intercept."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float).reshape(-1)
        if c.size == 0 or not np.all(np.isfinite(c)):
            raise InvalidInputError("coefficients must be a nonempty finite vector")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def input_dim(self) -> int:
        return self.coefficients.shape[0]

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if self.input_dim == 1 else X.reshape(1, -1)
        if X.shape[1] != self.input_dim:
            raise InvalidInputError(f"model has {self.input_dim} coefficients, inputs have {X.shape[1]} columns")
        return X @ self.coefficients

    __call__ = predict

    def to_csv_row(self) -> str:
        return ",".join(format(v, ".17g") for v in self.coefficients)

    def write_csv(self, path) -> None:
        header = ",".join(f"theta_{i}" for i in range(self.input_dim))
        Path(path).write_text(f"{header}\n{self.to_csv_row()}\n", encoding="utf-8")

    @classmethod
    def read_csv(cls, path) -> "LinearModel":
        lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
        if len(lines) != 2:
            raise InvalidInputError(f"{path}: expected a header and one coefficient row")
        return cls([float(v) for v in lines[1].split(",")])


@dataclass(frozen=True, eq=False)
class SimplexWeights:
    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float).reshape(-1)
        if w.size == 0:
            raise ConfigurationError("weights must be nonempty")
        if np.any(w < 0) or np.any(w > 1) or not np.all(np.isfinite(w)):
            raise ConfigurationError(f"weights must lie in [0, 1], got {w.tolist()}")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ConfigurationError(f"weights must sum to 1, got sum {w.sum()!r}")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    def __len__(self) -> int:
        return self.w.shape[0]

    def __iter__(self):
        return iter(self.w.tolist())


@dataclass(frozen=True)
class MixCoefficient:
    tau: float

    def __post_init__(self):
        t = float(self.tau)
        if not (0.0 <= t < 1.0):
            raise ConfigurationError(f"tau must lie in [0, 1), got {self.tau!r}")
        object.__setattr__(self, "tau", t)

    def __float__(self) -> float:
        return self.tau


def as_weights(w) -> SimplexWeights:
    return w if isinstance(w, SimplexWeights) else SimplexWeights(w)


def as_tau(tau) -> MixCoefficient:
    return tau if isinstance(tau, MixCoefficient) else MixCoefficient(tau)


@dataclass(frozen=True, eq=False)
class EvaluationMatrix:
    """``values[j, n] = f_j(z_n)`` for a class with range ``value_range``."""

    values: np.ndarray
    value_range: tuple[float, float]

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v.reshape(1, -1)
        if v.ndim != 2 or v.shape[0] == 0:
            raise InvalidInputError("evaluation matrix must be a nonempty 2-D array")
        a, b = (float(x) for x in self.value_range)
        if not a < b:
            raise InvalidInputError(f"value_range needs a < b, got {self.value_range}")
        if not np.all(np.isfinite(v)) or np.any(v < a) or np.any(v > b):
            raise InvalidInputError(f"evaluation matrix has entries outside [{a}, {b}]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "value_range", (a, b))

    @property
    def n_functions(self) -> int:
        return self.values.shape[0]

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class FiniteFunctionClass:
    """``F = {z -> loss(g(x), y) : g in hypotheses}`` with clipped (bounded) loss."""

    hypotheses: tuple
    loss: LossFunction

    def __post_init__(self):
        hyps = tuple(h if isinstance(h, LinearModel) else LinearModel(h) for h in self.hypotheses)
        if not hyps:
            raise ConfigurationError("function class must be nonempty")
        if len({h.input_dim for h in hyps}) != 1:
            raise ConfigurationError("all hypotheses must share one input dimension")
        if self.loss.clip_range is None:
            raise ConfigurationError("function classes need a loss with clip_range (bounded range)")
        object.__setattr__(self, "hypotheses", hyps)

    def __len__(self) -> int:
        return len(self.hypotheses)

    @property
    def input_dim(self) -> int:
        return self.hypotheses[0].input_dim

    @property
    def value_range(self) -> tuple[float, float]:
        return self.loss.clip_range

    @property
    def range_width(self) -> float:
        return self.loss.range_width

    @property
    def coefficient_matrix(self) -> np.ndarray:
        return np.vstack([h.coefficients for h in self.hypotheses])

    def values(self, features, labels) -> np.ndarray:
        """Raw ``(|F|, N)`` array of loss values."""
        X = np.asarray(features, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.shape[1] != self.input_dim:
            raise InvalidInputError(f"class expects {self.input_dim} input columns, got {X.shape[1]}")
        preds = self.coefficient_matrix @ X.T
        return self.loss(preds, np.asarray(labels, dtype=float)[None, :])

    def evaluate(self, data) -> EvaluationMatrix:
        """Evaluation matrix on a Dataset or on a DiscreteDomain's support."""
        return EvaluationMatrix(self.values(data.features, data.labels), self.value_range)


def _check_nonempty(data: Dataset, name="dataset"):
    if len(data) == 0:
        raise InvalidInputError(f"{name} is empty")


def empirical_risk(model: LinearModel, data: Dataset, loss: LossFunction) -> float:
    _check_nonempty(data)
    return float(np.mean(loss(model.predict(data.features), data.labels)))


def weighted_empirical_risk(model, sources: Sequence[Dataset], w, loss: LossFunction) -> float:
    """``sum_k w_k * empirical_risk(model, sources[k], loss)``."""
    w = as_weights(w)
    if len(sources) != len(w):
        raise InvalidInputError(f"{len(sources)} sources but {len(w)} weights")
    return float(sum(wk * empirical_risk(model, s, loss) for wk, s in zip(w.w, sources)))


def combined_empirical_risk(model, source: Dataset, target: Dataset, tau, loss: LossFunction) -> float:
    """``tau * target risk + (1 - tau) * source risk``."""
    t = as_tau(tau).tau
    return t * empirical_risk(model, target, loss) + (1.0 - t) * empirical_risk(model, source, loss)


def _solve_normal_equations(blocks: Sequence[tuple[float, np.ndarray, np.ndarray]]) -> np.ndarray:
    """Solve ``(sum c X^T X) theta = sum c X^T y`` for blocks ``(c, X, y)``."""
    dims = {X.shape[1] for _, X, _ in blocks}
    if len(dims) != 1:
        raise InvalidInputError("all datasets must share one input dimension")
    d = dims.pop()
    A = np.zeros((d, d))
    rhs = np.zeros(d)
    for c, X, y in blocks:
        if c == 0.0:
            continue
        A += c * (X.T @ X)
        rhs += c * (X.T @ y)
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise DegenerateDesignError(f"normal equations are ill-conditioned (condition {cond:.3g})")
    return np.linalg.solve(A, rhs)


def fit_weighted_least_squares(sources: Sequence[Dataset], w) -> LinearModel:
    """Minimize ``sum_k (w_k/N_k) sum_n (<x, theta> - y)^2`` via the normal equations."""
    w = as_weights(w)
    if len(sources) != len(w):
        raise InvalidInputError(f"{len(sources)} sources but {len(w)} weights")
    for s in sources:
        _check_nonempty(s, "source dataset")
    return LinearModel(
        _solve_normal_equations([(wk / len(s), s.features, s.labels) for wk, s in zip(w.w, sources)])
    )


def fit_combined_least_squares(source: Dataset, target: Dataset, tau) -> LinearModel:
    """Minimize ``(tau/N_T) sum_T r^2 + ((1-tau)/N_S) sum_S r^2``."""
    t = as_tau(tau).tau
    _check_nonempty(source, "source dataset")
    _check_nonempty(target, "target dataset")
    return LinearModel(
        _solve_normal_equations(
            [
                ((1.0 - t) / len(source), source.features, source.labels),
                (t / len(target), target.features, target.labels),
            ]
        )
    )


def argmin_over_class(fclass, risk: Callable[[LinearModel], float]) -> int:
    """Index of the minimal-risk hypothesis; ties go to the lowest index."""
    hyps = fclass.hypotheses if isinstance(fclass, FiniteFunctionClass) else list(fclass)
    if not hyps:
        raise InvalidInputError("empty class")
    best, best_val = 0, math.inf
    for j, h in enumerate(hyps):
        v = float(risk(h))
        if v < best_val:
            best, best_val = j, v
    return best


class WeightedSourceRegressor(RegressorMixin, BaseEstimator):
    """No-intercept least squares on stacked source data with simplex weights.

    Rows are tagged with their source index through ``domain``; source ``k``
    contributes with per-row weight ``weights[k] / N_k``.

    Parameters
    ----------
    weights : array-like of shape (K,), default=None
        Simplex weights; ``None`` means uniform over the sources present.
    """

    def __init__(self, weights=None):
        self.weights = weights

    def fit(self, X, y, domain=None):
        X, y = validate_data(self, X, y, y_numeric=True)
        domain = np.zeros(len(y), dtype=int) if domain is None else np.asarray(domain).astype(int)
        if domain.shape != y.shape:
            raise InvalidInputError("domain must give one source index per row")
        n_sources = int(domain.max()) + 1
        w = np.full(n_sources, 1.0 / n_sources) if self.weights is None else np.asarray(self.weights, dtype=float)
        w = as_weights(w)
        if len(w) != n_sources:
            raise InvalidInputError(f"{n_sources} sources tagged but {len(w)} weights given")
        sources = [Dataset(X[domain == k], y[domain == k]) for k in range(n_sources)]
        self.coef_ = fit_weighted_least_squares(sources, w).coefficients.copy()
        self.n_sources_ = n_sources
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False)
        return X @ self.coef_

    def to_model(self) -> LinearModel:
        check_is_fitted(self, "coef_")
        return LinearModel(self.coef_)


class CombinedDomainRegressor(RegressorMixin, BaseEstimator):
    """No-intercept least squares on source rows plus a few target rows.

    ``is_target`` marks target rows; the objective is the ``tau``-blend of the
    target and source mean squared errors.
    """

    def __init__(self, tau=0.0):
        self.tau = tau

    def fit(self, X, y, is_target=None):
        X, y = validate_data(self, X, y, y_numeric=True)
        if is_target is None:
            raise InvalidInputError("is_target is required")
        mask = np.asarray(is_target, dtype=bool)
        if mask.shape != y.shape:
            raise InvalidInputError("is_target must flag every row")
        model = fit_combined_least_squares(Dataset(X[~mask], y[~mask]), Dataset(X[mask], y[mask]), self.tau)
        self.coef_ = model.coefficients.copy()
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False)
        return X @ self.coef_
