"""Exact primary/secondary growth rates for IID strings.

For an IID process with one-digit law ``p`` and weight ``phi`` the joint
weighted entropy has closed forms

* additive weight:        ``WE(n) = n(n-1)*A0 + n*A1`` with
  ``A0 = H(p) * E[phi]`` and ``A1 = H^w_phi(p)``;
* multiplicative weight:  ``WE(n) = n * H^w_phi(p) * (E[phi])^(n-1)``,
  parameterized by the per-step factor ``B0 = E[phi]`` and
  ``B1 = H^w_phi(p)``.

``B0`` is reported both as the factor and as its log, because the
multiplicative rate limit is the log of the factor; keeping the two
separate avoids any beta-vs-log-beta confusion downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import DiscreteModel, require_nonnegative_phi, standard_entropy, weighted_entropy


@dataclass(frozen=True)
class AdditiveRatePair:
    """Primary rate A0 (nats/step^2) and secondary rate A1 (nats/step)."""

    a0: float
    a1: float

    def we(self, n: int) -> float:
        """Closed-form joint WE at length n."""
        return n * (n - 1) * self.a0 + n * self.a1


@dataclass(frozen=True)
class MultiplicativeRatePair:
    """Per-step factor B0 = E[phi] (with its log) and B1 = H^w_phi(p).

    ``degenerate`` flags E[phi] == 0, where WE(n) = 0 for n >= 2 and the
    log-rate is reported as the -inf sentinel in ``b0_log``.
    """

    b0: float
    b0_log: float
    b1: float
    degenerate: bool = False

    def we(self, n: int) -> float:
        if n >= 2 and self.b0 == 0.0:
            return 0.0
        return n * self.b1 * self.b0 ** (n - 1)

    def log_we(self, n: int) -> float:
        """ln WE(n); overflow-free for large n (requires B0, B1 > 0)."""
        if self.b0 <= 0.0 or self.b1 <= 0.0:
            return -math.inf
        return math.log(n) + math.log(self.b1) + (n - 1) * self.b0_log


def iid_additive_rates(model: DiscreteModel) -> AdditiveRatePair:
    """A0 = H(p) E[phi], A1 = -sum phi p ln p."""
    h = standard_entropy(model.pmf)
    return AdditiveRatePair(a0=h * model.mean_phi(), a1=weighted_entropy(model))


def iid_multiplicative_rates(model: DiscreteModel) -> MultiplicativeRatePair:
    """B0 = E[phi] >= 0, B1 = H^w_phi(p).  Requires phi >= 0."""
    require_nonnegative_phi(model)
    b0 = model.mean_phi()
    degenerate = b0 == 0.0
    b0_log = -math.inf if degenerate else math.log(b0)
    return MultiplicativeRatePair(
        b0=b0, b0_log=b0_log, b1=weighted_entropy(model), degenerate=degenerate
    )


def iid_multiplicative_we(model: DiscreteModel, n: int) -> float:
    """Exact joint WE for the multiplicative weight: n H^w (E phi)^(n-1)."""
    return iid_multiplicative_rates(model).we(n)
