"""Metric pressure, tilted and twisted constructions, the variational
principle, and the topological entropy/pressure example.

For a weighted kernel W(x,y) = phi(x) p(y|x) on a finite chain, the
partition function Xi_n = pi^T W^{n-1} phi grows like mu^n, and
log(mu) plays the role of a metric pressure: every stationary ergodic
candidate law Q with compatible support satisfies

    h(Q) + E_Q[ln W(X_0, X_1)] <= log(mu),

with equality exactly at the twisted chain
p~(y|x) = W(x,y) Phi(y) / (mu Phi(x)), whose stationary law is
pi~ = Psi * Phi.  The auditor below checks the inequality for arbitrary
candidates and the equality witness at the twisted chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .core import enumerate_strings
from .errors import ModelValidationError
from .markov import FiniteMarkovModel, entropy_rate
from .spectral import (
    KreinRutmanResult,
    build_weighted_kernel,
    krein_rutman,
    standard_normal_pdf,
    topo_indicator_kernel,
)

__all__ = [
    "TwistedChain",
    "VariationalAudit",
    "partition_function",
    "partition_function_log",
    "pressure_estimate",
    "tilted_pmf",
    "twist",
    "variational_audit",
    "random_twist_audits",
    "kl_twisted_vs_tilted",
    "kl_twisted_vs_tilted_enumerated",
    "topological_entropy",
    "topological_entropy_direct",
    "topological_pressure",
]


def _weighted_kernel_matrices(model: FiniteMarkovModel, phi):
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (model.state_count,):
        raise ModelValidationError("phi has the wrong length")
    if np.any(phi < 0.0):
        raise ModelValidationError("phi must be >= 0")
    return phi, phi[:, None] * model.P


def partition_function_log(model: FiniteMarkovModel, phi, n: int) -> float:
    """ln(Xi_n) with Xi_n = pi^T W^{n-1} phi, carried in log scale."""
    if n < 2:
        raise ModelValidationError("partition function needs n >= 2")
    phi, W = _weighted_kernel_matrices(model, phi)
    u = model.pi.copy()
    scale = 0.0
    for _ in range(n - 1):
        u = u @ W
        t = u.sum()
        if t == 0.0:
            return -math.inf
        u /= t
        scale += math.log(t)
    val = float(u @ phi)
    return scale + math.log(val)


def partition_function(model: FiniteMarkovModel, phi, n: int) -> float:
    return math.exp(partition_function_log(model, phi, n))


def pressure_estimate(model: FiniteMarkovModel, phi, n_max: int) -> np.ndarray:
    """The sequence (1/n) ln Xi_n for n = 2..n_max (index 0 <-> n=2)."""
    if n_max < 2:
        raise ModelValidationError("n_max must be >= 2")
    phi, W = _weighted_kernel_matrices(model, phi)
    out = np.empty(n_max - 1)
    u = model.pi.copy()
    scale = 0.0
    for n in range(2, n_max + 1):
        u = u @ W
        t = u.sum()
        u /= t
        scale += math.log(t)
        out[n - 2] = (scale + math.log(float(u @ phi))) / n
    return out


def tilted_pmf(model: FiniteMarkovModel, phi, n: int) -> np.ndarray:
    """Flat per-string law op_n(x) ∝ pi(x_0) prod W(x_{j-1},x_j) phi(x_{n-1}).

    Enumerates all k^n strings; guarded by the global enumeration cap.
    """
    phi, W = _weighted_kernel_matrices(model, phi)
    strings = enumerate_strings(model.state_count, n)
    vals = model.pi[strings[:, 0]].copy()
    for j in range(1, n):
        vals *= W[strings[:, j - 1], strings[:, j]]
    vals *= phi[strings[:, n - 1]]
    total = vals.sum()
    if total <= 0.0:
        raise ModelValidationError("tilted law has no mass (kernel too sparse)")
    return vals / total


@dataclass(frozen=True)
class TwistedChain:
    """The exponential change of measure achieving variational equality.

    ``chain`` carries p~(y|x) = W(x,y) Phi(y) / (mu Phi(x)) with its
    stationary law pi~ = Psi Phi (both validated to 1e-10 at
    construction time by the FiniteMarkovModel invariants)."""

    chain: FiniteMarkovModel
    mu: float
    kr: KreinRutmanResult


def twist(model: FiniteMarkovModel, phi, kr: Optional[KreinRutmanResult] = None) -> TwistedChain:
    phi, W = _weighted_kernel_matrices(model, phi)
    if kr is None:
        kr = krein_rutman(build_weighted_kernel(model, phi))
    F, G = kr.phi_right, kr.psi_left
    P_tw = W * F[None, :] / (kr.mu * F[:, None])
    pi_tw = G * F
    chain = FiniteMarkovModel(P=P_tw, pi=pi_tw)
    return TwistedChain(chain=chain, mu=kr.mu, kr=kr)


@dataclass(frozen=True)
class VariationalAudit:
    """One candidate's entropy rate, mean log-kernel, and slack.

    ``slack = log(mu) - h_Q - L_Q``; nonnegative for admissible
    candidates, zero at the twisted chain.  ``applicable`` is False when
    the candidate puts mass where the kernel vanishes (L_Q = -inf)."""

    h_q: float
    l_q: float
    slack: float
    applicable: bool = True


def variational_audit(
    Q: FiniteMarkovModel, model: FiniteMarkovModel, phi, kr: Optional[KreinRutmanResult] = None
) -> VariationalAudit:
    phi, W = _weighted_kernel_matrices(model, phi)
    if Q.state_count != model.state_count:
        raise ModelValidationError("candidate chain has the wrong state count")
    if kr is None:
        kr = krein_rutman(build_weighted_kernel(model, phi))
    b0 = math.log(kr.mu)
    h_q = entropy_rate(Q)
    mass = Q.pi[:, None] * Q.P
    if np.any((mass > 0.0) & (W <= 0.0)):
        return VariationalAudit(h_q=h_q, l_q=-math.inf, slack=math.inf, applicable=False)
    lnW = np.where(mass > 0.0, np.log(np.where(W > 0.0, W, 1.0)), 0.0)
    l_q = float(np.sum(mass * lnW))
    return VariationalAudit(h_q=h_q, l_q=l_q, slack=b0 - h_q - l_q)


def random_twist_audits(
    model: FiniteMarkovModel,
    phi,
    count: int,
    seed: int,
    concentration: float = 50.0,
    kr: Optional[KreinRutmanResult] = None,
) -> List[VariationalAudit]:
    """Audit ``count`` Dirichlet perturbations of the twisted chain.

    Each candidate's rows are drawn Dirichlet(concentration * p~_row),
    which keeps supports compatible by construction and concentrates
    near the equality witness, where violations would be easiest to
    produce numerically.
    """
    if kr is None:
        kr = krein_rutman(build_weighted_kernel(model, phi))
    tw = twist(model, phi, kr)
    rng = np.random.default_rng(seed)
    audits = []
    for _ in range(count):
        rows = [rng.dirichlet(concentration * row) for row in tw.chain.P]
        Q = FiniteMarkovModel(P=np.vstack(rows))
        audits.append(variational_audit(Q, model, phi, kr))
    return audits


def kl_twisted_vs_tilted(
    model: FiniteMarkovModel, phi, n: int, kr: Optional[KreinRutmanResult] = None
) -> float:
    """KL(p~_n || op_n) in closed form.

    The per-string ratio telescopes to
    ln Xi_n - (n-1) ln mu + ln Psi(x_0) - ln pi(x_0) + ln Phi(x_{n-1}) - ln phi(x_{n-1}),
    so under the stationary twisted law the KL divergence needs only the
    twisted marginal.  Requires a strictly positive phi and pi.
    """
    phi_arr = np.asarray(phi, dtype=float)
    if np.any(phi_arr <= 0.0) or np.any(model.pi <= 0.0):
        raise ModelValidationError("KL closed form requires phi > 0 and pi > 0")
    if kr is None:
        kr = krein_rutman(build_weighted_kernel(model, phi_arr))
    tw = twist(model, phi_arr, kr)
    pi_tw = tw.chain.pi
    F, G = kr.phi_right, kr.psi_left
    value = (
        partition_function_log(model, phi_arr, n)
        - (n - 1) * math.log(kr.mu)
        + float(pi_tw @ (np.log(G) - np.log(model.pi)))
        + float(pi_tw @ (np.log(F) - np.log(phi_arr)))
    )
    return value


def kl_twisted_vs_tilted_enumerated(
    model: FiniteMarkovModel, phi, n: int, kr: Optional[KreinRutmanResult] = None
) -> float:
    """Enumeration cross-check of :func:`kl_twisted_vs_tilted` (small n)."""
    phi_arr = np.asarray(phi, dtype=float)
    if kr is None:
        kr = krein_rutman(build_weighted_kernel(model, phi_arr))
    tw = twist(model, phi_arr, kr)
    from .markov import markov_joint_pmf

    p_tw = markov_joint_pmf(tw.chain, n, initial="pi")
    p_tilt = tilted_pmf(model, phi_arr, n)
    mask = p_tw > 0.0
    if np.any(mask & (p_tilt <= 0.0)):
        raise ModelValidationError("twisted law not absolutely continuous w.r.t. tilted law")
    return float(np.sum(p_tw[mask] * (np.log(p_tw[mask]) - np.log(p_tilt[mask]))))


# ---------------------------------------------------------------------------
# Topological entropy / pressure example
# ---------------------------------------------------------------------------

def topological_entropy(
    a: float, x_max: float = 8.0, nodes: int = 200
) -> tuple[float, KreinRutmanResult]:
    """log(mu) for the kernel p(x) 1(|x-y| > a) under the standard
    normal reference density; this is the growth rate of the reference
    volume of the constraint set {|x_i - x_{i+1}| > a}."""
    op = topo_indicator_kernel(a, x_max, nodes)
    kr = krein_rutman(op)
    return math.log(kr.mu), kr


def topological_entropy_direct(
    a: float, n: int, x_max: float = 8.0, nodes: int = 200
) -> float:
    """(1/n) ln nu^n(A_0^{n-1}) by direct quadrature recursion.

    Iterates v <- T v with T(x, y) = p(y) 1(|x-y| > a) starting from
    v = 1, then closes with the p-weighted integral; log-scaled to
    survive large n.
    """
    if n < 1:
        raise ModelValidationError("n must be >= 1")
    x, w = np.polynomial.legendre.leggauss(nodes)
    x = x_max * x
    w = x_max * w
    dens = standard_normal_pdf(x)
    from .spectral import _separation_indicator

    T = dens[None, :] * _separation_indicator(x, a)
    Tw = T * w[None, :]
    v = np.ones(nodes)
    scale = 0.0
    for _ in range(n - 1):
        v = Tw @ v
        t = v.sum()
        if t <= 0.0:
            return -math.inf
        v /= t
        scale += math.log(t)
    total = float(np.sum(w * dens * v))
    return (scale + math.log(total)) / n


def topological_pressure(
    chi: Callable[[np.ndarray], np.ndarray],
    a: float,
    x_max: float = 8.0,
    nodes: int = 200,
) -> tuple[float, KreinRutmanResult]:
    """log(mu) for the kernel e^{chi(x)} 1(|x-y| > a) with flat
    reference measure: the growth rate of the chi-weighted volume."""
    op = topo_indicator_kernel(a, x_max, nodes, chi=chi)
    kr = krein_rutman(op)
    return math.log(kr.mu), kr
