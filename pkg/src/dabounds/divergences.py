"""IPM, discrepancy distance and the labeling-difference quantity Q.

All suprema run over finite classes, so they are exact maxima.  Expectations
are exact on :class:`DiscreteDomain` (probability-weighted support sums) and
plug-in means on :class:`Dataset`.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .domains import Dataset, DiscreteDomain
from .hypotheses import FiniteFunctionClass, LinearModel, LossFunction, as_weights
from .exceptions import InvalidInputError

__all__ = [
    "DivergenceMode",
    "DivergenceReport",
    "ipm",
    "discrepancy_distance",
    "q_quantity",
    "weighted_ipm",
    "divergence_report",
]

Source = Union[DiscreteDomain, Dataset]
Labeling = Callable[[np.ndarray], np.ndarray]

RELATION_TOL = 1e-9


class DivergenceMode(str, enum.Enum):
    EXACT_DISCRETE = "exact_discrete"
    EMPIRICAL_SAMPLES = "empirical_samples"


def _mass(src: Source) -> np.ndarray:
    if isinstance(src, DiscreteDomain):
        return src.probabilities
    if isinstance(src, Dataset):
        if len(src) == 0:
            raise InvalidInputError("empty dataset")
        return np.full(len(src), 1.0 / len(src))
    raise InvalidInputError(f"expected DiscreteDomain or Dataset, got {type(src).__name__}")


def _mode(*srcs: Source) -> DivergenceMode:
    if all(isinstance(s, DiscreteDomain) for s in srcs):
        return DivergenceMode.EXACT_DISCRETE
    return DivergenceMode.EMPIRICAL_SAMPLES


def class_expectations(fclass: FiniteFunctionClass, src: Source) -> np.ndarray:
    """``E f`` for every ``f`` in the class, shape ``(|F|,)``."""
    return fclass.values(src.features, src.labels) @ _mass(src)


def _predictions(hypotheses: Sequence[LinearModel], X: np.ndarray) -> np.ndarray:
    hyps = [h if isinstance(h, LinearModel) else LinearModel(h) for h in hypotheses]
    if not hyps:
        raise InvalidInputError("need at least one hypothesis")
    return np.vstack([h.predict(X) for h in hyps])


def _label(g, X) -> np.ndarray:
    out = g.predict(X) if isinstance(g, LinearModel) else g(X)
    return np.broadcast_to(np.asarray(out, dtype=float), (X.shape[0],))


def ipm(fclass: FiniteFunctionClass, S: Source, T: Source) -> float:
    """``max_f |E_S f - E_T f|``."""
    return float(np.max(np.abs(class_expectations(fclass, S) - class_expectations(fclass, T))))


def _pairwise_expected_loss(hypotheses, loss: LossFunction, src: Source) -> np.ndarray:
    P = _predictions(hypotheses, src.features)
    mass = _mass(src)
    # (G, G) matrix of E loss(g1(x), g2(x)), one row of pairs at a time
    return np.stack([loss(P[i][None, :], P) @ mass for i in range(P.shape[0])])


def discrepancy_distance(hypotheses, loss: LossFunction, S_inputs: Source, T_inputs: Source) -> float:
    """Max over ordered pairs of ``|E_S loss(g1, g2) - E_T loss(g1, g2)|``.

    With the absolute loss this is the H-delta-H divergence variant used for
    classification.  Labels of the two sources are ignored.
    """
    return float(
        np.max(
            np.abs(
                _pairwise_expected_loss(hypotheses, loss, S_inputs)
                - _pairwise_expected_loss(hypotheses, loss, T_inputs)
            )
        )
    )


def q_quantity(hypotheses, loss: LossFunction, T_inputs: Source, gS: Labeling, gT: Labeling) -> float:
    """``max_g |E_T loss(g(x), gT(x)) - E_T loss(g(x), gS(x))|``.

    ``gS``/``gT`` are :class:`LinearModel` instances or callables mapping an
    ``(n, I)`` input array to ``n`` labels.
    """
    X = T_inputs.features
    P = _predictions(hypotheses, X)
    mass = _mass(T_inputs)
    eT = loss(P, _label(gT, X)[None, :]) @ mass
    eS = loss(P, _label(gS, X)[None, :]) @ mass
    return float(np.max(np.abs(eT - eS)))


def weighted_ipm(fclass: FiniteFunctionClass, sources: Sequence[Source], T: Source, w) -> float:
    """``sum_k w_k * ipm(F, S_k, T)``."""
    w = as_weights(w)
    if len(sources) != len(w):
        raise InvalidInputError(f"{len(sources)} sources but {len(w)} weights")
    return float(sum(wk * ipm(fclass, s, T) for wk, s in zip(w.w, sources)))


@dataclass(frozen=True)
class DivergenceReport:
    ipm: float
    disc: float
    q: float | None
    mode: DivergenceMode

    def __post_init__(self):
        object.__setattr__(self, "mode", DivergenceMode(self.mode))
        for name in ("ipm", "disc", "q"):
            v = getattr(self, name)
            if v is not None and not v >= 0:
                raise InvalidInputError(f"{name} must be >= 0, got {v}")
        if (
            self.mode is DivergenceMode.EXACT_DISCRETE
            and self.q is not None
            and self.ipm > self.disc + self.q + RELATION_TOL
        ):
            raise InvalidInputError(
                f"ipm {self.ipm!r} exceeds disc + q = {self.disc + self.q!r}; the relation needs "
                "the source labeling function to belong to the hypothesis set"
            )

    def to_kv(self) -> str:
        lines = [f"ipm={self.ipm!r}", f"disc={self.disc!r}"]
        if self.q is not None:
            lines.append(f"q={self.q!r}")
        lines.append(f"mode={self.mode.value}")
        return "\n".join(lines) + "\n"


def divergence_report(
    fclass: FiniteFunctionClass,
    S: Source,
    T: Source,
    gS: Labeling | None = None,
    gT: Labeling | None = None,
) -> DivergenceReport:
    """IPM, discrepancy and (when both labelings are given) Q in one report.

    The IPM is taken on ``S``/``T`` as given; when labelings are supplied the
    caller is expected to have labeled the domains with them.
    """
    q = None
    if gS is not None and gT is not None:
        q = q_quantity(fclass.hypotheses, fclass.loss, T, gS, gT)
    return DivergenceReport(
        ipm=ipm(fclass, S, T),
        disc=discrepancy_distance(fclass.hypotheses, fclass.loss, S, T),
        q=q,
        mode=_mode(S, T),
    )
