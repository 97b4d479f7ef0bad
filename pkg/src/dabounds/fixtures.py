"""Small exactly-enumerable instances used by the verification suite and CLI."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .concentration import BoundedFunction
from .domains import DiscreteDomain
from .hypotheses import FiniteFunctionClass, LinearModel, LossFunction

__all__ = [
    "bernoulli_domain",
    "identity_function",
    "two_point_domain",
    "two_point_class",
    "ClippedLossFixture",
    "clipped_loss_fixture",
    "SymmetrizationFixture",
    "symmetrization_multi_fixture",
    "symmetrization_combined_fixture",
]


def bernoulli_domain(p: float = 0.5) -> DiscreteDomain:
    """Inputs ``{0, 1}`` with ``P(x = 1) = p``; labels zero."""
    return DiscreteDomain(np.array([[0.0], [1.0]]), np.zeros(2), np.array([1.0 - p, p]))


def identity_function() -> BoundedFunction:
    """``f(x, y) = x_0`` with range ``[0, 1]``."""
    return BoundedFunction(lambda X, y: X[:, 0], (0.0, 1.0))


def two_point_domain(p: float) -> DiscreteDomain:
    """Support ``{(x=0, y=1), (x=1, y=0)}`` with ``P(second point) = p``."""
    return DiscreteDomain(np.array([[0.0], [1.0]]), np.array([1.0, 0.0]), np.array([1.0 - p, p]))


def two_point_class(thetas=(0.0, 0.5, 1.0)) -> FiniteFunctionClass:
    """Squared loss of ``x -> theta x`` clipped to ``[0, 1]``.

    On the two-point support ``f_theta`` is ``1`` at the first point and
    ``theta^2`` at the second.
    """
    return FiniteFunctionClass(tuple(LinearModel([t]) for t in thetas), LossFunction("squared", (0.0, 1.0)))


@dataclass(frozen=True)
class ClippedLossFixture:
    fclass: FiniteFunctionClass
    source: DiscreteDomain
    target: DiscreteDomain


def clipped_loss_fixture() -> ClippedLossFixture:
    """Zero IPM with a positive discrepancy distance.

    Joint laws with different input marginals always differ, so equal joint
    distributions cannot separate the two quantities.  Here the labels sit
    far enough from every prediction that the clipped loss is the constant
    ``1`` on both domains (IPM ``0``), while the hypotheses still disagree
    differently on the two inputs: ``E loss(0, x) = x^2`` gives
    ``|0.25 - 0.04| = 0.21``.
    """
    fclass = FiniteFunctionClass((LinearModel([0.0]), LinearModel([1.0])), LossFunction("squared", (0.0, 1.0)))
    return ClippedLossFixture(
        fclass,
        DiscreteDomain.point_mass([0.5], 10.0),
        DiscreteDomain.point_mass([0.2], -10.0),
    )


@dataclass(frozen=True)
class SymmetrizationFixture:
    fclass: FiniteFunctionClass
    domains: tuple  # sources (multi) or (source, target) (combined)
    target: DiscreteDomain
    Ns: tuple
    weight: tuple  # w (multi) or (tau,) (combined)
    xi: float


def symmetrization_multi_fixture(K: int = 3, N: int = 6, xi_prime: float = 0.26) -> SymmetrizationFixture:
    """``K`` two-point sources of size ``N``, equal weights, target ``p = 0.5``.

    With ``K = 3, N = 6`` the sample-size gate holds for ``xi' >= 0.19``.
    """
    ps = (0.3, 0.6, 0.45, 0.55)[:K]
    sources = tuple(two_point_domain(p) for p in ps)
    target = two_point_domain(0.5)
    w = tuple([1.0 / K] * K)
    if K == 3:
        w = (0.25, 0.25, 0.5)
    # D_w for the default class: sum_k w_k |p_k - 0.5| (f_0 separates the points)
    D_w = sum(wk * abs(p - 0.5) for wk, p in zip(w, ps))
    return SymmetrizationFixture(two_point_class(), sources, target, tuple([N] * K), w, D_w + xi_prime)


def symmetrization_combined_fixture(tau: float = 0.5, N_S: int = 4, N_T: int = 4, xi_prime: float = 0.71) -> SymmetrizationFixture:
    """Source ``p = 0.5``, target ``p = 0.9``; the gate needs ``xi' >= 0.7072`` at ``N_S = N_T = 4``."""
    source = two_point_domain(0.5)
    target = two_point_domain(0.9)
    D = abs(0.5 - 0.9)
    return SymmetrizationFixture(two_point_class(), (source, target), target, (N_S, N_T), (tau,),
                                 (1.0 - tau) * D + xi_prime)
