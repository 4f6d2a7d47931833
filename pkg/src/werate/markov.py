"""Finite-state Markov chains: stationary laws, entropy rate, exact joint
weighted entropy for additive weights, and the secondary additive rate.

The exact joint WE is computed by a single forward pass that carries,
per state, four accumulators: the occupation mass, the expected running
weight sum, the expected accumulated information, and their
cross-moment.  Cost is O(n * k^2) per length-n evaluation, which makes
lengths in the thousands routine.

The secondary rate A1 (which requires a centered weight, E_pi[phi] = 0)
is evaluated as a pair of absolutely convergent series over s-step
transition kernels, truncated using the a-priori geometric bound
2(1-rho)^s available for chains with strictly positive transitions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .core import RENORM_TOLERANCE, enumerate_strings, validate_pmf
from .errors import DoeblinError, ModelValidationError

__all__ = [
    "FiniteMarkovModel",
    "DoeblinReport",
    "SecondaryRateResult",
    "stationary_distribution",
    "entropy_rate",
    "doeblin_report",
    "exact_joint_we_additive",
    "exact_joint_we_additive_profile",
    "primary_rate_additive",
    "secondary_rate_additive",
    "markov_joint_pmf",
]


def validate_stochastic_matrix(P) -> np.ndarray:
    """Row-stochastic validation with the same repair policy as PMFs."""
    arr = np.asarray(P, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ModelValidationError("transition matrix must be square and non-empty")
    rows = [validate_pmf(arr[i], name=f"row {i} of P") for i in range(arr.shape[0])]
    return np.vstack(rows)


def _is_irreducible(P: np.ndarray) -> bool:
    n_comp, _ = connected_components(csr_matrix(P > 0), connection="strong")
    return n_comp == 1


def stationary_distribution(P) -> np.ndarray:
    """Unique stationary law of an irreducible row-stochastic matrix.

    Solves pi (P - I) = 0 with the normalization sum(pi) = 1 as a dense
    linear system.  Reducible chains are rejected with a diagnostic
    rather than silently returning one of several stationary laws.
    """
    P = validate_stochastic_matrix(P)
    if not _is_irreducible(P):
        raise ModelValidationError(
            "transition matrix is reducible; the stationary law is not unique"
        )
    k = P.shape[0]
    A = P.T - np.eye(k)
    A[-1, :] = 1.0
    b = np.zeros(k)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:  # degenerate numerics
        raise ModelValidationError(f"stationary solve failed: {exc}") from exc
    if np.any(pi < -1e-12):
        raise ModelValidationError("stationary solve produced negative mass")
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = np.abs(pi @ P - pi).max()
    if residual > 1e-10:
        raise ModelValidationError(f"stationary residual {residual} exceeds 1e-10")
    return pi


@dataclass(frozen=True)
class FiniteMarkovModel:
    """Row-stochastic kernel ``P`` with stationary law ``pi`` and an
    optional initial law ``lam`` (defaults to ``pi``).

    A supplied ``pi`` is checked against pi P = pi (1e-10); a supplied
    ``lam`` must be supported inside supp(pi).
    """

    P: np.ndarray
    lam: Optional[np.ndarray] = None
    pi: Optional[np.ndarray] = None

    def __post_init__(self):
        P = validate_stochastic_matrix(self.P)
        if self.pi is None:
            pi = stationary_distribution(P)
        else:
            pi = validate_pmf(self.pi, name="pi")
            if pi.size != P.shape[0]:
                raise ModelValidationError("pi has the wrong length")
            residual = np.abs(pi @ P - pi).max()
            if residual > 1e-10:
                raise ModelValidationError(
                    f"supplied pi is not stationary (residual {residual})"
                )
        if self.lam is None:
            lam = pi.copy()
        else:
            lam = validate_pmf(self.lam, name="lambda")
            if lam.size != P.shape[0]:
                raise ModelValidationError("lambda has the wrong length")
            if np.any((lam > 0) & (pi == 0)):
                raise ModelValidationError("supp(lambda) must lie inside supp(pi)")
        for a in (P, pi, lam):
            a.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "lam", lam)

    @property
    def state_count(self) -> int:
        return self.P.shape[0]

    def initial_law(self, initial: str) -> np.ndarray:
        if initial == "pi":
            return self.pi
        if initial == "lambda":
            return self.lam
        raise ModelValidationError(f"initial must be 'pi' or 'lambda', got {initial!r}")


@dataclass(frozen=True)
class DoeblinReport:
    """Doeblin positivity data: rho = min transition probability, the
    smallest k with a strictly positive k-step kernel, and the geometric
    mixing bound s -> 2 (1-rho)^s."""

    rho: float
    k: int
    geometric_bound: Callable[[int], float]


def doeblin_report(model: FiniteMarkovModel, k_max: int = 64) -> DoeblinReport:
    rho = float(model.P.min())
    Pk = np.eye(model.state_count)
    for k in range(1, k_max + 1):
        Pk = Pk @ model.P
        if np.all(Pk > 0.0):
            return DoeblinReport(
                rho=rho, k=k, geometric_bound=lambda s, r=rho: 2.0 * (1.0 - r) ** s
            )
    raise DoeblinError(f"no strictly positive iterate of P up to k_max={k_max}")


def entropy_rate(model: FiniteMarkovModel) -> float:
    """h = -sum_x pi(x) sum_y p(y|x) ln p(y|x), with 0 ln 0 = 0."""
    P = model.P
    plogp = np.where(P > 0.0, P * np.log(np.where(P > 0.0, P, 1.0)), 0.0)
    return float(-(model.pi @ plogp.sum(axis=1)))


def _neg_plnp_matrix(P: np.ndarray) -> np.ndarray:
    return np.where(P > 0.0, -P * np.log(np.where(P > 0.0, P, 1.0)), 0.0)


def exact_joint_we_additive_profile(
    model: FiniteMarkovModel,
    phi,
    lengths,
    initial: str = "pi",
    include_initial_log: bool = True,
) -> np.ndarray:
    """Exact joint WE at several lengths from one forward pass.

    ``lengths`` must be increasing; returns one WE value per length.
    With ``include_initial_log=False`` the -ln(initial) boundary term is
    dropped, which corresponds to measuring information only along the
    transitions (the natural reading for initial laws without a
    density).
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (model.state_count,):
        raise ModelValidationError("phi has the wrong length")
    lengths = [int(n) for n in lengths]
    if not lengths or any(n < 1 for n in lengths):
        raise ModelValidationError("lengths must be positive")
    if any(b <= a for a, b in zip(lengths, lengths[1:])):
        raise ModelValidationError("lengths must be strictly increasing")

    P = model.P
    N = _neg_plnp_matrix(P)  # entrywise -p ln p
    lam = model.initial_law(initial)

    m = lam.copy()
    a = lam * phi
    if include_initial_log:
        b = np.where(lam > 0.0, -lam * np.log(np.where(lam > 0.0, lam, 1.0)), 0.0)
    else:
        b = np.zeros_like(lam)
    c = phi * b

    out = np.empty(len(lengths))
    pos = 0
    if lengths[0] == 1:
        out[0] = c.sum()
        pos = 1
    for t in range(1, lengths[-1]):
        info_in = m @ N            # mass-weighted fresh information per target state
        b_new = b @ P + info_in
        c = c @ P + a @ N + phi * b_new
        m_new = m @ P
        a = a @ P + m_new * phi
        m, b = m_new, b_new
        if pos < len(lengths) and lengths[pos] == t + 1:
            out[pos] = c.sum()
            pos += 1
    return out


def exact_joint_we_additive(
    model: FiniteMarkovModel,
    phi,
    n: int,
    initial: str = "pi",
    include_initial_log: bool = True,
) -> float:
    """Exact E[(sum_j phi(X_j)) * (-ln lam(X_0) - sum_l ln p(X_l|X_{l-1}))]."""
    return float(
        exact_joint_we_additive_profile(
            model, phi, [n], initial=initial, include_initial_log=include_initial_log
        )[0]
    )


def primary_rate_additive(model: FiniteMarkovModel, phi) -> float:
    """A0 = E_pi[phi] * h."""
    phi = np.asarray(phi, dtype=float)
    return float(model.pi @ phi) * entropy_rate(model)


@dataclass(frozen=True)
class SecondaryRateResult:
    """A1 with the series-truncation diagnostics."""

    a1: float
    truncation_depth: int
    rho: float
    tail_bound: float

    def __float__(self) -> float:
        return self.a1


def secondary_rate_additive(
    model: FiniteMarkovModel, phi, tol: float = 1e-12, s_max: int = 1_000_000
) -> SecondaryRateResult:
    """Secondary additive rate A1 for a centered weight on a positive chain.

    Evaluates the two absolutely convergent series

        A1 = -sum_{s>=0} [ u^T P^s phi  +  (phi*pi)^T P^s r ]

    with u(y) = sum_x pi(x) p(x,y) ln p(x,y) and r(y) = sum_z p(y,z) ln p(y,z),
    truncated once the remaining tail is below ``tol`` under the Doeblin
    bound.  Preconditions: all P entries > 0 and |E_pi[phi]| <= 1e-10.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (model.state_count,):
        raise ModelValidationError("phi has the wrong length")
    mean = float(model.pi @ phi)
    if abs(mean) > 1e-10:
        raise ModelValidationError(
            f"secondary rate requires E_pi[phi] = 0, got {mean}"
        )
    rho = float(model.P.min())
    if rho <= 0.0:
        raise DoeblinError("secondary-rate series requires all P entries > 0")

    P = model.P
    k = model.state_count
    lnP = np.log(P)
    plogp = P * lnP
    u = model.pi @ plogp                  # source-side conditioning term
    r = plogp.sum(axis=1)                 # per-state expected log transition
    w = phi * model.pi

    # per-branch a-priori bound constant (both branches share it)
    const = 2.0 * k * k * np.abs(phi).max() * np.abs(plogp).max()

    v_fwd = phi.copy()                    # P^s phi
    v_bwd = w.copy()                      # (phi*pi)^T P^s
    total = 0.0
    s = 0
    while True:
        total += float(u @ v_fwd) + float(v_bwd @ r)
        tail = 2.0 * const * (1.0 - rho) ** (s + 1) / rho
        if tail < tol or s >= s_max:
            break
        v_fwd = P @ v_fwd
        v_bwd = v_bwd @ P
        s += 1
    return SecondaryRateResult(
        a1=-total, truncation_depth=s, rho=rho, tail_bound=tail
    )


def markov_joint_pmf(
    model: FiniteMarkovModel, n: int, initial: str = "pi"
) -> np.ndarray:
    """Flat joint law over all k^n strings (enumeration-oracle helper)."""
    init = model.initial_law(initial)
    strings = enumerate_strings(model.state_count, n)
    probs = init[strings[:, 0]].copy()
    for j in range(1, n):
        probs *= model.P[strings[:, j - 1], strings[:, j]]
    return probs
