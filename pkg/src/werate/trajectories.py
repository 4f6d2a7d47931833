"""Trajectory simulation and empirical verification of the almost-sure
limits: the per-symbol log-likelihood (SMB), the additive weighted
information at the 1/n^2 scale, and the multiplicative weighted
information at the (1/n) log scale.

All estimators accumulate log-likelihoods incrementally along the path;
no string probability is ever materialized.  Checkpoints are geometric
(powers of two) so that convergence plots are log-uniform, and every
report carries a contiguous-block batch standard error as a CLT-scale
yardstick.  Runs are reproducible: a (model, n, seed) triple always
yields the same path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.signal import lfilter

from .errors import InfiniteInformationError, ModelValidationError
from .markov import FiniteMarkovModel, entropy_rate
from .spectral import gauss_legendre_nodes

__all__ = [
    "Ar1Process",
    "Trajectory",
    "ConvergenceReport",
    "checkpoint_schedule",
    "simulate",
    "empirical_smb",
    "empirical_wi_additive",
    "empirical_wi_multiplicative",
    "ar1_expectation",
]

LN_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Ar1Process:
    """Stationary Gaussian recursion X_{k+1} = alpha X_k + N(0, 1)."""

    alpha: float

    def __post_init__(self):
        if not abs(self.alpha) < 1.0:
            raise ModelValidationError("|alpha| must be < 1")

    @property
    def stationary_var(self) -> float:
        return 1.0 / (1.0 - self.alpha * self.alpha)

    @property
    def entropy_rate(self) -> float:
        return 0.5 * (LN_2PI + 1.0)


Model = Union[FiniteMarkovModel, Ar1Process]


@dataclass(frozen=True)
class Trajectory:
    path: np.ndarray
    seed: int
    kind: str  # "finite" or "ar1"


def simulate(model: Model, n: int, seed: int) -> Trajectory:
    """Sample a length-n path; identical (model, n, seed) -> identical path."""
    if n < 2:
        raise ModelValidationError("n must be >= 2")
    rng = np.random.default_rng(seed)
    if isinstance(model, FiniteMarkovModel):
        u = rng.random(n)
        cum_rows = np.cumsum(model.P, axis=1)
        cum_init = np.cumsum(model.lam)
        k = model.state_count
        states = np.empty(n, dtype=np.intp)
        s = min(int(np.searchsorted(cum_init, u[0], side="right")), k - 1)
        states[0] = s
        for t in range(1, n):
            s = min(int(np.searchsorted(cum_rows[s], u[t], side="right")), k - 1)
            states[t] = s
        return Trajectory(path=states, seed=seed, kind="finite")
    if isinstance(model, Ar1Process):
        z = rng.standard_normal(n)
        x0 = math.sqrt(model.stationary_var) * z[0]
        rest, _ = lfilter([1.0], [1.0, -model.alpha], z[1:], zi=np.array([model.alpha * x0]))
        path = np.concatenate(([x0], rest))
        return Trajectory(path=path, seed=seed, kind="ar1")
    raise ModelValidationError(f"unsupported model type {type(model)!r}")


def checkpoint_schedule(n: int) -> np.ndarray:
    """Powers of two up to n, with n itself appended."""
    cps = [1 << k for k in range(1, n.bit_length()) if (1 << k) < n]
    cps.append(n)
    return np.asarray(cps, dtype=np.intp)


@dataclass(frozen=True)
class ConvergenceReport:
    """Running normalized estimates against a theoretical limit.

    ``estimates[i]`` is the statistic at path length ``checkpoints[i]``;
    ``final_error = |estimates[-1] - target|``; ``batch_se`` is a
    contiguous-block standard error of the final estimate.  ``aux``
    carries statistic-specific extras (e.g. the separately reported
    (1/n) ln(-ln f_n) term, or skipped checkpoints)."""

    statistic: str
    target: float
    checkpoints: np.ndarray
    estimates: np.ndarray
    final_error: float
    batch_se: float
    aux: dict = field(default_factory=dict)


def _info_increments(traj: Trajectory, model: Model) -> np.ndarray:
    """Per-step -ln of the (conditional) likelihood along the path."""
    if isinstance(model, FiniteMarkovModel):
        states = traj.path
        lam0 = model.lam[states[0]]
        if lam0 <= 0.0:
            raise InfiniteInformationError("path starts at a zero-mass state")
        probs = model.P[states[:-1], states[1:]]
        if np.any(probs <= 0.0):
            raise InfiniteInformationError("zero-probability transition encountered")
        inc = np.empty(states.size)
        inc[0] = -math.log(lam0)
        inc[1:] = -np.log(probs)
        return inc
    x = traj.path
    var = model.stationary_var
    inc = np.empty(x.size)
    inc[0] = 0.5 * (LN_2PI + math.log(var)) + 0.5 * x[0] * x[0] / var
    resid = x[1:] - model.alpha * x[:-1]
    inc[1:] = 0.5 * LN_2PI + 0.5 * resid * resid
    return inc


def _phi_values(traj: Trajectory, phi) -> np.ndarray:
    if traj.kind == "finite":
        phi = np.asarray(phi, dtype=float)
        return phi[traj.path]
    return np.asarray(phi(traj.path), dtype=float)


def _block_se(values: np.ndarray, blocks: int = 16) -> float:
    usable = values[: values.size - values.size % blocks]
    means = usable.reshape(blocks, -1).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(blocks))


def ar1_expectation(model: Ar1Process, g: Callable[[np.ndarray], np.ndarray]) -> float:
    """E_pi[g(X)] under the stationary N(0, 1/(1-alpha^2)) law (quadrature)."""
    sigma = math.sqrt(model.stationary_var)
    x, w = gauss_legendre_nodes(-8.0 * sigma, 8.0 * sigma, 400)
    dens = np.exp(-0.5 * x * x / sigma**2) / (sigma * math.sqrt(2.0 * math.pi))
    return float(np.sum(w * dens * np.asarray(g(x), dtype=float)))


def empirical_smb(traj: Trajectory, model: Model) -> ConvergenceReport:
    """-(1/n) ln f_n along the path against the entropy rate h."""
    inc = _info_increments(traj, model)
    n = inc.size
    cps = checkpoint_schedule(n)
    cum = np.cumsum(inc)
    estimates = cum[cps - 1] / cps
    target = (
        entropy_rate(model) if isinstance(model, FiniteMarkovModel) else model.entropy_rate
    )
    return ConvergenceReport(
        statistic="smb",
        target=target,
        checkpoints=cps,
        estimates=estimates,
        final_error=abs(float(estimates[-1]) - target),
        batch_se=_block_se(inc),
    )


def empirical_wi_additive(traj: Trajectory, model: Model, phi) -> ConvergenceReport:
    """(sum_j phi(X_j)) * (-ln f_n) / n^2 against alpha*h, alpha = E_pi[phi]."""
    inc = _info_increments(traj, model)
    pv = _phi_values(traj, phi)
    n = inc.size
    cps = checkpoint_schedule(n)
    cum_i = np.cumsum(inc)
    cum_p = np.cumsum(pv)
    estimates = cum_p[cps - 1] * cum_i[cps - 1] / cps.astype(float) ** 2
    if isinstance(model, FiniteMarkovModel):
        alpha = float(model.pi @ np.asarray(phi, dtype=float))
        h = entropy_rate(model)
    else:
        alpha = ar1_expectation(model, phi)
        h = model.entropy_rate
    target = alpha * h
    # block-level products give a CLT-scale se for the product statistic
    blocks = 16
    m = n - n % blocks
    pb = pv[:m].reshape(blocks, -1).mean(axis=1) * inc[:m].reshape(blocks, -1).mean(axis=1)
    batch_se = float(pb.std(ddof=1) / math.sqrt(blocks))
    return ConvergenceReport(
        statistic="wi_additive",
        target=target,
        checkpoints=cps,
        estimates=estimates,
        final_error=abs(float(estimates[-1]) - target),
        batch_se=batch_se,
    )


def empirical_wi_multiplicative(traj: Trajectory, model: Model, phi) -> ConvergenceReport:
    """(1/n) ln[ prod_j phi(X_j) * (-ln f_n) ] against ln(beta) = E_pi[ln phi].

    The bookkeeping term (1/n) ln(-ln f_n) -> 0 is reported separately in
    ``aux``; checkpoints where -ln f_n <= 0 (possible for densities) are
    skipped and flagged.
    """
    inc = _info_increments(traj, model)
    pv = _phi_values(traj, phi)
    if np.any(pv <= 0.0):
        raise ModelValidationError("multiplicative WI needs phi > 0 on visited states")
    n = inc.size
    cps = checkpoint_schedule(n)
    cum_i = np.cumsum(inc)[cps - 1]
    cum_lp = np.cumsum(np.log(pv))[cps - 1]
    valid = cum_i > 0.0
    skipped = [int(c) for c in cps[~valid]]
    cps_v = cps[valid]
    if cps_v.size == 0:
        raise InfiniteInformationError("-ln f_n never positive at any checkpoint")
    log_info_term = np.log(cum_i[valid]) / cps_v
    estimates = cum_lp[valid] / cps_v + log_info_term
    if isinstance(model, FiniteMarkovModel):
        target = float(model.pi @ np.log(np.asarray(phi, dtype=float)))
    else:
        target = ar1_expectation(model, lambda x: np.log(phi(x)))
    return ConvergenceReport(
        statistic="wi_multiplicative",
        target=target,
        checkpoints=cps_v,
        estimates=estimates,
        final_error=abs(float(estimates[-1]) - target),
        batch_se=_block_se(np.log(pv)),
        aux={"log_info_term": float(log_info_term[-1]), "skipped_checkpoints": skipped},
    )
