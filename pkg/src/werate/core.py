"""Foundational types and exact weighted-information primitives.

Everything here works on finite alphabets and is exact up to rounding:
the weighted information of a single outcome, the weighted entropy of a
one-digit law, and a brute-force enumeration of the joint weighted
entropy over all strings of a given length.  The enumeration is the
ground-truth oracle that every recursion/closed form elsewhere in the
package is tested against.

Conventions
-----------
* All logarithms are natural.  Conversion to bits happens only at
  output time via :class:`LogBase`.
* ``0 * log 0`` and ``0 * log inf`` evaluate to 0.  This is implemented
  by branching on ``phi(x) == 0`` or ``p(x) == 0`` before any log is
  taken, never by relying on IEEE semantics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import (
    EnumerationLimitError,
    InfiniteInformationError,
    ModelValidationError,
)

#: Hard cap on the number of strings a brute-force enumeration may visit.
ENUMERATION_GUARD = 10**7

#: Normalization below this deviation is accepted and silently repaired.
RENORM_TOLERANCE = 1e-9

LN2 = math.log(2.0)


class LogBase(Enum):
    """Output log base.  Internal computation is always in nats."""

    NATURAL = "nat"
    BASE2 = "bits"

    def from_nats(self, value: float) -> float:
        """Convert a value expressed in nats to this base."""
        if self is LogBase.NATURAL:
            return value
        return value / LN2

    def to_nats(self, value: float) -> float:
        if self is LogBase.NATURAL:
            return value
        return value * LN2


def validate_pmf(p, *, name: str = "pmf") -> np.ndarray:
    """Validate and repair a probability vector.

    Entries must be >= 0 (tiny negative rounding noise below 1e-12 is
    clipped) and the total mass must be within 1e-9 of 1, in which case
    the vector is renormalized exactly; larger deviations are rejected.
    """
    arr = np.asarray(p, dtype=float).copy()
    if arr.ndim != 1 or arr.size == 0:
        raise ModelValidationError(f"{name} must be a non-empty 1-d vector")
    if not np.all(np.isfinite(arr)):
        raise ModelValidationError(f"{name} has non-finite entries")
    if np.any(arr < -1e-12):
        raise ModelValidationError(f"{name} has negative entries")
    arr[arr < 0.0] = 0.0
    total = arr.sum()
    if abs(total - 1.0) >= RENORM_TOLERANCE:
        raise ModelValidationError(
            f"{name} sums to {total!r}, more than {RENORM_TOLERANCE} away from 1"
        )
    return arr / total


@dataclass(frozen=True)
class DiscreteModel:
    """A finite alphabet with a one-digit law ``pmf`` and weight ``phi``.

    ``pmf[x]`` is the probability of symbol ``x`` and ``phi[x]`` its
    (dimensionless) value.  ``phi`` may take either sign; call sites
    that require nonnegativity (multiplicative weights, kernels) check
    it explicitly via :func:`require_nonnegative_phi`.
    """

    pmf: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        pmf = validate_pmf(self.pmf)
        phi = np.asarray(self.phi, dtype=float).copy()
        if phi.shape != pmf.shape:
            raise ModelValidationError("phi and pmf must have the same length")
        if not np.all(np.isfinite(phi)):
            raise ModelValidationError("phi has non-finite entries")
        pmf.setflags(write=False)
        phi.setflags(write=False)
        object.__setattr__(self, "pmf", pmf)
        object.__setattr__(self, "phi", phi)

    @property
    def alphabet_size(self) -> int:
        return self.pmf.size

    def mean_phi(self) -> float:
        """E_p[phi]."""
        return float(self.pmf @ self.phi)


def require_nonnegative_phi(model: DiscreteModel) -> None:
    if np.any(model.phi < 0.0):
        raise ModelValidationError("phi must be >= 0 for multiplicative use")


def _neg_plogp(p: np.ndarray) -> np.ndarray:
    """-p*ln(p) elementwise with the 0*log 0 = 0 convention."""
    out = np.zeros_like(p)
    mask = p > 0.0
    out[mask] = -p[mask] * np.log(p[mask])
    return out


def weighted_information(x: int, model: DiscreteModel) -> float:
    """Weighted information -phi(x) * ln p(x) of a single outcome.

    Raises
    ------
    InfiniteInformationError
        If ``p(x) == 0`` while ``phi(x) != 0``.
    """
    if not 0 <= x < model.alphabet_size:
        raise ModelValidationError(f"symbol {x} outside alphabet")
    phi = float(model.phi[x])
    p = float(model.pmf[x])
    if phi == 0.0:
        return 0.0
    if p == 0.0:
        raise InfiniteInformationError(
            f"outcome {x} has probability 0 but weight {phi}"
        )
    return -phi * math.log(p)


def standard_entropy(pmf) -> float:
    """Shannon entropy H(p) = -sum p ln p in nats."""
    p = validate_pmf(pmf)
    return float(_neg_plogp(p).sum())


def weighted_entropy(model: DiscreteModel) -> float:
    """One-digit weighted entropy -sum phi(x) p(x) ln p(x) in nats."""
    return float(model.phi @ _neg_plogp(model.pmf))


def one_digit_we(model: DiscreteModel) -> float:
    """Alias for :func:`weighted_entropy` (the one-digit H^w)."""
    return weighted_entropy(model)


class WFKind(Enum):
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"
    CONSTANT = "constant"
    CUSTOM = "custom"


@dataclass(frozen=True)
class JointWF:
    """Weight function on strings.

    Additive/multiplicative kinds take the one-digit ``phi`` from
    ``model`` and sum/multiply it over the digits of each string.
    ``Constant(c)`` maps every string to ``c``, and ``Custom`` wraps an
    explicit per-string evaluator.
    """

    kind: WFKind
    model: Optional[DiscreteModel] = None
    constant: float = 1.0
    evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @classmethod
    def additive(cls, model: DiscreteModel) -> "JointWF":
        return cls(WFKind.ADDITIVE, model=model)

    @classmethod
    def multiplicative(cls, model: DiscreteModel) -> "JointWF":
        require_nonnegative_phi(model)
        return cls(WFKind.MULTIPLICATIVE, model=model)

    @classmethod
    def const(cls, c: float) -> "JointWF":
        return cls(WFKind.CONSTANT, constant=float(c))

    @classmethod
    def custom(cls, evaluator: Callable[[np.ndarray], np.ndarray]) -> "JointWF":
        return cls(WFKind.CUSTOM, evaluator=evaluator)

    def values(self, strings: np.ndarray) -> np.ndarray:
        """Evaluate the WF on an (m, n) integer matrix of strings."""
        strings = np.asarray(strings, dtype=np.intp)
        if self.kind is WFKind.CONSTANT:
            return np.full(strings.shape[0], self.constant)
        if self.kind is WFKind.CUSTOM:
            return np.asarray(self.evaluator(strings), dtype=float)
        digits = self.model.phi[strings]
        if self.kind is WFKind.ADDITIVE:
            return digits.sum(axis=1)
        return digits.prod(axis=1)


def enumerate_strings(alphabet_size: int, n: int) -> np.ndarray:
    """All strings of length ``n`` as a (k^n, n) integer matrix.

    Row order matches a flat row-major (C-order) indexing of the cube
    ``(k,)*n``: the last digit varies fastest.
    """
    count = alphabet_size**n
    if count > ENUMERATION_GUARD:
        raise EnumerationLimitError(
            f"{alphabet_size}^{n} = {count} strings exceeds the "
            f"{ENUMERATION_GUARD} enumeration guard"
        )
    idx = np.arange(count)
    out = np.empty((count, n), dtype=np.intp)
    for j in range(n - 1, -1, -1):
        out[:, j] = idx % alphabet_size
        idx //= alphabet_size
    return out


def iid_joint_pmf(model: DiscreteModel, n: int) -> np.ndarray:
    """Flat product law p(x_0)...p(x_{n-1}) over all k^n strings."""
    strings = enumerate_strings(model.alphabet_size, n)
    return model.pmf[strings].prod(axis=1)


def joint_weighted_entropy_enumerated(
    joint_pmf: np.ndarray,
    wf: JointWF,
    n: int,
    alphabet_size: Optional[int] = None,
) -> float:
    """Joint weighted entropy by explicit summation over every string.

    ``joint_pmf`` is the flat (row-major over ``(k,)*n``) vector of
    string probabilities.  This is the ground-truth oracle: O(k^n) work,
    no recursions, no transfer operators.

    Raises
    ------
    EnumerationLimitError
        If ``k^n`` exceeds :data:`ENUMERATION_GUARD`.
    """
    joint_pmf = np.asarray(joint_pmf, dtype=float).ravel()
    if alphabet_size is None:
        if wf.model is None:
            raise ModelValidationError(
                "alphabet_size is required when the WF carries no model"
            )
        alphabet_size = wf.model.alphabet_size
    if joint_pmf.size != alphabet_size**n:
        raise ModelValidationError(
            f"joint pmf has {joint_pmf.size} entries, expected {alphabet_size}**{n}"
        )
    strings = enumerate_strings(alphabet_size, n)
    w = wf.values(strings)
    return float(w @ _neg_plogp(joint_pmf))
