"""Weighted transfer operators and their Krein-Rutman (Perron) data.

The central object is the kernel W(u, v) = phi(u) p(v|u) acting on
L2(X, nu).  For finite alphabets nu is counting measure and W is a plain
matrix; continuous kernels are discretized on Gauss-Legendre nodes
(Nystrom style), with the quadrature weights playing the role of nu.

Power iteration is the primary eigensolver: it matches the positivity /
contraction structure of the problem and scales to quadrature sizes.  A
dense eigensolve is kept only as a small-instance oracle.

The exact multiplicative joint WE is evaluated by the two-block
expression: a boundary term -<lam ln lam, W^{n-1} phi> plus a bulk sum
of sandwich products lam W^{T(l-1)} [phi(x) p(y|x) ln p(y|x)] W^{n-1-l} phi.
All iterated products are carried as normalized vectors with a running
log scale, so lengths in the hundreds do not overflow even when the
eigenvalue is far from 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConvergenceError, DoeblinError, ModelValidationError
from .markov import FiniteMarkovModel

__all__ = [
    "KernelOperator",
    "KreinRutmanResult",
    "HSReport",
    "MultiplicativeRateReport",
    "SecondaryRateMultResult",
    "ContinuousKernelSpec",
    "build_weighted_kernel",
    "example41_discrete",
    "example41_continuous",
    "ar1_gaussian_kernel",
    "topo_indicator_kernel",
    "gauss_legendre_nodes",
    "check_doeblin",
    "hilbert_schmidt_check",
    "hilbert_schmidt_refinement",
    "krein_rutman",
    "dense_spectral_radius",
    "operator_norm",
    "primary_rate_multiplicative",
    "exact_joint_we_multiplicative",
    "exact_joint_we_multiplicative_log",
    "secondary_rate_multiplicative",
    "stabilize_kernel_mu",
    "standard_normal_pdf",
    "kernel_from_spec",
    "phi_from_spec",
]


def standard_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def gauss_legendre_nodes(lo: float, hi: float, count: int):
    """Gauss-Legendre nodes and weights transformed to [lo, hi]."""
    xi, w = np.polynomial.legendre.leggauss(count)
    half = 0.5 * (hi - lo)
    return half * xi + 0.5 * (hi + lo), half * w


@dataclass(frozen=True)
class KernelOperator:
    """Discrete(ized) kernel on L2(nodes, node_weights).

    ``W[i, j]`` approximates W(nodes[i], nodes[j]); ``node_weights`` are
    counting weights (all ones) for finite alphabets and quadrature
    weights otherwise.  Application and inner products consistently
    carry the weights:

        (W f)(x_i)   = sum_j W[i,j] w_j f_j
        (g W^T)(y_j) = sum_i g_i w_i W[i,j]
        <f, g>       = sum_i w_i f_i g_i
    """

    nodes: np.ndarray
    node_weights: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        w = np.array(self.node_weights, dtype=float)
        W = np.array(self.W, dtype=float)
        k = nodes.size
        if w.shape != (k,) or W.shape != (k, k):
            raise ModelValidationError("kernel operator shape mismatch")
        if np.any(w <= 0.0):
            raise ModelValidationError("node weights must be positive")
        if np.any(W < 0.0) or not np.all(np.isfinite(W)):
            raise ModelValidationError("kernel entries must be finite and >= 0")
        for a in (nodes, w, W):
            a.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "node_weights", w)
        object.__setattr__(self, "W", W)

    @property
    def size(self) -> int:
        return self.nodes.size

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.W @ (self.node_weights * f)

    def apply_adjoint(self, g: np.ndarray) -> np.ndarray:
        return (g * self.node_weights) @ self.W

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(np.sum(self.node_weights * f * g))

    def norm(self, f: np.ndarray) -> float:
        return math.sqrt(self.inner(f, f))


@dataclass(frozen=True)
class ContinuousKernelSpec:
    """Transition density on an interval, to be Nystrom-discretized.

    ``transition_density(u, v)`` must be vectorized over same-shaped
    arrays and return p(v|u) relative to Lebesgue measure on [lo, hi].
    """

    transition_density: Callable[[np.ndarray, np.ndarray], np.ndarray]
    lo: float
    hi: float
    nodes: int


def build_weighted_kernel(model, phi) -> KernelOperator:
    """W(u, v) = phi(u) p(v|u) for a finite chain or a continuous spec.

    ``phi`` is a vector for :class:`FiniteMarkovModel` inputs and a
    vectorized callable for :class:`ContinuousKernelSpec` inputs.
    Requires phi >= 0.
    """
    if isinstance(model, FiniteMarkovModel):
        phi = np.asarray(phi, dtype=float)
        if phi.shape != (model.state_count,):
            raise ModelValidationError("phi has the wrong length")
        if np.any(phi < 0.0):
            raise ModelValidationError("phi must be >= 0 for the weighted kernel")
        k = model.state_count
        return KernelOperator(
            nodes=np.arange(k, dtype=float),
            node_weights=np.ones(k),
            W=phi[:, None] * model.P,
        )
    if isinstance(model, ContinuousKernelSpec):
        x, w = gauss_legendre_nodes(model.lo, model.hi, model.nodes)
        phi_vals = np.asarray(phi(x), dtype=float)
        if np.any(phi_vals < 0.0):
            raise ModelValidationError("phi must be >= 0 for the weighted kernel")
        U, V = np.meshgrid(x, x, indexing="ij")
        W = phi_vals[:, None] * model.transition_density(U, V)
        return KernelOperator(nodes=x, node_weights=w, W=W)
    raise ModelValidationError(f"unsupported kernel source {type(model)!r}")


# ---------------------------------------------------------------------------
# Named kernel families
# ---------------------------------------------------------------------------

def example41_discrete(N: int, phi) -> KernelOperator:
    """Countable geometric-decay chain truncated to states {0..N}.

    p(y|x) = [1 - e^{-(x+1)}] e^{-(x+1) y} on Z_+, truncated without row
    renormalization (the neglected tail is geometrically small in N).
    ``phi`` may be a length-(N+1) vector or a callable on the states.
    """
    x = np.arange(N + 1, dtype=float)
    phi_vals = np.asarray(phi(x) if callable(phi) else phi, dtype=float)
    if phi_vals.shape != (N + 1,):
        raise ModelValidationError("phi has the wrong length")
    if np.any(phi_vals < 0.0):
        raise ModelValidationError("phi must be >= 0")
    P = (1.0 - np.exp(-(x[:, None] + 1.0))) * np.exp(-(x[:, None] + 1.0) * x[None, :])
    return KernelOperator(
        nodes=x, node_weights=np.ones(N + 1), W=phi_vals[:, None] * P
    )


def example41_continuous(x_max: float, nodes: int, phi) -> KernelOperator:
    """Continuous counterpart on R_+: p(y|x) = (x+1) e^{-(x+1) y}."""
    spec = ContinuousKernelSpec(
        transition_density=lambda u, v: (u + 1.0) * np.exp(-(u + 1.0) * v),
        lo=0.0,
        hi=x_max,
        nodes=nodes,
    )
    return build_weighted_kernel(spec, phi)


def ar1_gaussian_kernel(alpha: float, x_max: float, nodes: int, phi) -> KernelOperator:
    """AR(1) Gaussian transition p(v|u) = N(alpha*u, 1) density on [-x_max, x_max]."""
    if not abs(alpha) < 1.0:
        raise ModelValidationError("|alpha| must be < 1")
    spec = ContinuousKernelSpec(
        transition_density=lambda u, v: standard_normal_pdf(v - alpha * u),
        lo=-x_max,
        hi=x_max,
        nodes=nodes,
    )
    return build_weighted_kernel(spec, phi)


def topo_indicator_kernel(
    a: float, x_max: float, nodes: int, chi: Optional[Callable] = None
) -> KernelOperator:
    """Indicator kernel e^{chi(x)} 1(|x - y| > a) on [-x_max, x_max].

    With the default chi = log of the standard normal density, log(mu)
    is the topological entropy of the |x_i - x_{i+1}| > a constraint set
    under the Gaussian reference measure; a general chi gives the
    topological pressure with flat reference measure.
    """
    if a < 0.0:
        raise ModelValidationError("a must be >= 0")
    x, w = gauss_legendre_nodes(-x_max, x_max, nodes)
    if chi is None:
        weight_vals = standard_normal_pdf(x)
    else:
        weight_vals = np.exp(np.asarray(chi(x), dtype=float))
    W = weight_vals[:, None] * _separation_indicator(x, a)
    return KernelOperator(nodes=x, node_weights=w, W=W)


def _separation_indicator(x: np.ndarray, a: float) -> np.ndarray:
    # a = 0 excludes only the measure-zero diagonal, which the continuum
    # integrals never see; discretizing it as a hole would bias mu by
    # O(node weight)
    if a == 0.0:
        return np.ones((x.size, x.size))
    return (np.abs(x[:, None] - x[None, :]) > a).astype(float)


# ---------------------------------------------------------------------------
# Positivity / compactness checks
# ---------------------------------------------------------------------------

def check_doeblin(op: KernelOperator, k_max: int = 8) -> Optional[int]:
    """Smallest k >= 0 whose (k+1)-step iterated kernel is strictly
    positive at every node pair, or None if none exists up to k_max."""
    A = op.W
    step = op.W * op.node_weights[None, :]
    for k in range(k_max + 1):
        if np.all(A > 0.0):
            return k
        A = A @ step
    return None


@dataclass(frozen=True)
class HSReport:
    """Discretized Hilbert-Schmidt cross norm integral(W(x,y) W(y,x))."""

    hs_value: float
    finite: bool


def hilbert_schmidt_check(op: KernelOperator) -> HSReport:
    value = float(
        np.sum(op.node_weights[:, None] * op.node_weights[None, :] * op.W * op.W.T)
    )
    return HSReport(hs_value=value, finite=bool(np.isfinite(value)))


def hilbert_schmidt_refinement(
    factory: Callable[[int], KernelOperator],
    start: int,
    doublings: int = 3,
    growth_tol: float = 2.0,
) -> tuple[bool, list]:
    """Flag non-finiteness of the continuum cross integral by divergence
    under refinement.

    ``factory(param)`` builds the kernel at resolution/extent ``param``.
    Returns (finite, history): the flag is False when the discretized
    value keeps growing by more than ``growth_tol`` per doubling, which
    is how an operator that is not Hilbert-Schmidt on the continuum
    manifests on finite grids.
    """
    history = []
    param = start
    for _ in range(doublings + 1):
        history.append((param, hilbert_schmidt_check(factory(param)).hs_value))
        param *= 2
    values = [v for _, v in history]
    growing = all(b > growth_tol * a for a, b in zip(values, values[1:]))
    return (not growing, history)


# ---------------------------------------------------------------------------
# Krein-Rutman data via power iteration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KreinRutmanResult:
    """Principal eigenvalue mu with right/left eigenfunctions.

    ``phi_right`` solves W Phi = mu Phi and ``psi_left`` solves
    Psi W^T = mu Psi, both strictly positive, normalized so that
    <psi_left, phi_right> = 1 and ||phi_right|| = 1 in L2(nu).
    ``gap_estimate`` is the empirical contraction factor delta of the
    non-principal components (1 - ratio of successive iterate-difference
    norms); it is an observed quantity, not a certified bound.
    """

    mu: float
    phi_right: np.ndarray
    psi_left: np.ndarray
    gap_estimate: float
    residual_right: float
    residual_left: float
    iterations: int


def krein_rutman(
    op: KernelOperator,
    tol: float = 1e-13,
    max_iter: int = 100_000,
    check_positivity: bool = True,
    k_max: int = 8,
) -> KreinRutmanResult:
    """Power iteration on W (right) and W^T (left) from positive starts.

    Stops once successive Rayleigh quotients move by less than ``tol``
    (relative) on both sides.  Raises ConvergenceError on iteration
    exhaustion or if the kernel annihilates the positive cone.
    """
    if check_positivity and check_doeblin(op, k_max=k_max) is None:
        raise DoeblinError(
            f"no strictly positive kernel iterate up to k_max={k_max}; "
            "Krein-Rutman data is not available"
        )
    f = np.ones(op.size)
    g = np.ones(op.size)
    f /= op.norm(f)
    g /= op.norm(g)
    mu_r = mu_l = 0.0
    prev_diff_r = prev_diff_l = np.nan
    ratios = []
    iterations = 0
    for it in range(1, max_iter + 1):
        iterations = it
        fy = op.apply(f)
        gy = op.apply_adjoint(g)
        nf = op.norm(fy)
        ng = op.norm(gy)
        if nf == 0.0 or ng == 0.0:
            raise ConvergenceError("kernel annihilates the positive cone")
        new_mu_r = op.inner(f, fy) / op.inner(f, f)
        new_mu_l = op.inner(g, gy) / op.inner(g, g)
        f_new = fy / nf
        g_new = gy / ng
        diff_r = op.norm(f_new - f)
        diff_l = op.norm(g_new - g)
        if np.isfinite(prev_diff_r) and prev_diff_r > 0 and diff_r > 0:
            ratios.append(diff_r / prev_diff_r)
        prev_diff_r, prev_diff_l = diff_r, diff_l
        converged = (
            abs(new_mu_r - mu_r) < tol * max(1.0, abs(new_mu_r))
            and abs(new_mu_l - mu_l) < tol * max(1.0, abs(new_mu_l))
            and it > 2
        )
        f, g, mu_r, mu_l = f_new, g_new, new_mu_r, new_mu_l
        if converged:
            break
    else:
        raise ConvergenceError(
            f"power iteration did not converge in {max_iter} iterations"
        )
    mu = 0.5 * (mu_r + mu_l)
    # strict positivity is part of the KR contract
    if np.any(f <= 0.0) or np.any(g <= 0.0):
        raise ConvergenceError("eigenfunction lost strict positivity")
    f = f / op.norm(f)
    g = g / op.inner(g, f)
    res_r = op.norm(op.apply(f) - mu * f)
    res_l = op.norm(op.apply_adjoint(g) - mu * g)
    if ratios:
        tail = ratios[-min(len(ratios), 10):]
        contraction = float(np.clip(np.median(tail), 0.0, 1.0 - 1e-15))
    else:
        contraction = 0.0  # converged within two sweeps (rank-one-like kernel)
    return KreinRutmanResult(
        mu=float(mu),
        phi_right=f,
        psi_left=g,
        gap_estimate=1.0 - contraction,
        residual_right=float(res_r),
        residual_left=float(res_l),
        iterations=iterations,
    )


def dense_spectral_radius(op: KernelOperator) -> float:
    """Spectral radius from a dense eigensolve (small-instance oracle)."""
    A = op.W * op.node_weights[None, :]
    return float(np.abs(np.linalg.eigvals(A)).max())


def operator_norm(op: KernelOperator) -> float:
    """L2(nu) operator norm (largest singular value); reported separately
    from mu since the two coincide only for symmetrizable kernels."""
    d = np.sqrt(op.node_weights)
    A = d[:, None] * op.W * d[None, :]
    return float(np.linalg.svd(A, compute_uv=False)[0])


# ---------------------------------------------------------------------------
# Multiplicative rates and the exact WE recursion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiplicativeRateReport:
    """B0 = ln(mu) together with the verified operator conditions."""

    b0: float
    mu: float
    kr: KreinRutmanResult
    conditions: dict


def primary_rate_multiplicative(
    model: FiniteMarkovModel, phi, k_max: int = 8
) -> MultiplicativeRateReport:
    op = build_weighted_kernel(model, phi)
    doeblin_k = check_doeblin(op, k_max=k_max)
    if doeblin_k is None:
        raise DoeblinError(f"no strictly positive kernel iterate up to {k_max}")
    hs = hilbert_schmidt_check(op)
    kr = krein_rutman(op, check_positivity=False)
    conditions = {
        "doeblin_k": doeblin_k,
        "hilbert_schmidt": hs.hs_value,
        # finite alphabets satisfy boundedness of p|ln p| and the L2
        # membership of phi / lam ln lam / pi ln pi automatically
        "bounded_plogp": True,
        "l2_functions": True,
    }
    return MultiplicativeRateReport(
        b0=math.log(kr.mu), mu=kr.mu, kr=kr, conditions=conditions
    )


def _signed_logsumexp(logs: np.ndarray, signs: np.ndarray):
    """Signed sum of exp(logs): returns (log|sum|, sign)."""
    finite = logs > -np.inf
    if not np.any(finite):
        return -math.inf, 0.0
    m = logs[finite].max()
    s = float(np.sum(signs[finite] * np.exp(logs[finite] - m)))
    if s == 0.0:
        return -math.inf, 0.0
    return m + math.log(abs(s)), math.copysign(1.0, s)


def exact_joint_we_multiplicative_log(
    weights: np.ndarray,
    W: np.ndarray,
    M: np.ndarray,
    lam: np.ndarray,
    phi: np.ndarray,
    n: int,
):
    """Log-scale evaluation of the two-block multiplicative WE formula.

    Parameters are already discretized: ``weights`` the nu-weights, ``W``
    the kernel values, ``M[x, y] = phi(x) p(y|x) ln p(y|x)``, ``lam`` the
    initial density at the nodes, ``phi`` the weight values.  Returns
    (ln|WE|, sign).
    """
    if n < 1:
        raise ModelValidationError("n must be >= 1")
    k = lam.size
    A_right = W * weights[None, :]       # f -> W f
    A_left = weights[:, None] * W        # u -> u W^T  (row-vector action)
    Mw = weights[:, None] * M * weights[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        lam_log_lam = np.where(lam > 0.0, lam * np.log(np.where(lam > 0.0, lam, 1.0)), 0.0)

    # forward scan u_l = lam (W^T)^{l-1}, l = 1..n-1, normalized in l1
    us = np.empty((n, k))
    su = np.empty(n)
    u = lam.astype(float).copy()
    scale = 0.0
    for l in range(1, n):
        us[l] = u
        su[l] = scale
        u = u @ A_left
        t = np.abs(u).sum()
        if t == 0.0:
            raise ConvergenceError("forward vector vanished in WE recursion")
        u /= t
        scale += math.log(t)

    # backward scan v_m = W^m phi, m = 0..n-1
    vs = np.empty((n, k))
    sv = np.empty(n)
    v = phi.astype(float).copy()
    t = np.abs(v).sum()
    if t == 0.0:
        raise ModelValidationError("phi is identically zero")
    v /= t
    scale = math.log(t)
    vs[0] = v
    sv[0] = scale
    for m in range(1, n):
        v = A_right @ v
        t = np.abs(v).sum()
        if t == 0.0:
            raise ConvergenceError("backward vector vanished in WE recursion")
        v /= t
        scale += math.log(t)
        vs[m] = v
        sv[m] = scale

    logs = np.empty(n)
    signs = np.empty(n)
    boundary = -float(np.sum(weights * lam_log_lam * vs[n - 1]))
    if boundary == 0.0:
        logs[0], signs[0] = -math.inf, 0.0
    else:
        logs[0] = math.log(abs(boundary)) + sv[n - 1]
        signs[0] = math.copysign(1.0, boundary)
    for l in range(1, n):
        val = -float(us[l] @ Mw @ vs[n - 1 - l])
        if val == 0.0:
            logs[l], signs[l] = -math.inf, 0.0
        else:
            logs[l] = math.log(abs(val)) + su[l] + sv[n - 1 - l]
            signs[l] = math.copysign(1.0, val)
    return _signed_logsumexp(logs, signs)


def _finite_we_mult_inputs(model: FiniteMarkovModel, phi, initial: str):
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (model.state_count,):
        raise ModelValidationError("phi has the wrong length")
    if np.any(phi < 0.0):
        raise ModelValidationError("phi must be >= 0")
    P = model.P
    W = phi[:, None] * P
    lnP = np.where(P > 0.0, np.log(np.where(P > 0.0, P, 1.0)), 0.0)
    M = W * lnP
    lam = model.initial_law(initial)
    return np.ones(model.state_count), W, M, lam, phi


def exact_joint_we_multiplicative(
    model: FiniteMarkovModel, phi, n: int, initial: str = "pi"
) -> float:
    """Exact joint WE for a multiplicative weight on a finite chain."""
    weights, W, M, lam, phi = _finite_we_mult_inputs(model, phi, initial)
    log_we, sign = exact_joint_we_multiplicative_log(weights, W, M, lam, phi, n)
    if sign == 0.0:
        return 0.0
    return sign * math.exp(log_we)


@dataclass(frozen=True)
class SecondaryRateMultResult:
    """B1 with both candidate eigenfunction pairings.

    ``b1`` uses the pairing Psi(source) Phi(target) inside the double
    sum, which is the variant the finite-n ratio WE(n)/(n mu^n)
    converges to; ``b1_alt_pairing`` is the transposed pairing, kept for
    diagnosis."""

    b1: float
    b1_alt_pairing: float
    mu: float
    kr: KreinRutmanResult

    def __float__(self) -> float:
        return self.b1


def secondary_rate_multiplicative(
    model: FiniteMarkovModel, phi
) -> SecondaryRateMultResult:
    """B1 = -(1/mu^2) <Psi,phi> <Phi,pi> sum_{x,y} Psi(x) Phi(y) phi(x) p(y|x) ln p(y|x)."""
    op = build_weighted_kernel(model, phi)
    kr = krein_rutman(op)
    phi = np.asarray(phi, dtype=float)
    P = model.P
    lnP = np.where(P > 0.0, np.log(np.where(P > 0.0, P, 1.0)), 0.0)
    M = (phi[:, None] * P) * lnP
    F, G = kr.phi_right, kr.psi_left
    pref = -(1.0 / kr.mu**2) * float(G @ phi) * float(F @ model.pi)
    b1 = pref * float(G @ M @ F)
    b1_alt = pref * float(F @ M @ G)
    return SecondaryRateMultResult(b1=b1, b1_alt_pairing=b1_alt, mu=kr.mu, kr=kr)


_PHI_FAMILIES = {
    # named one-node weight families for kernel/trajectory spec documents
    "const": lambda p: (lambda x: np.full_like(np.asarray(x, dtype=float), p.get("value", 1.0))),
    "exp_neg": lambda p: (lambda x: np.exp(-np.asarray(x, dtype=float))),
    "exp_neg_quad": lambda p: (
        lambda x, c=p.get("coeff", 0.25): np.exp(-c * np.asarray(x, dtype=float) ** 2)
    ),
    "square": lambda p: (lambda x: np.asarray(x, dtype=float) ** 2),
}


def phi_from_spec(spec) -> Callable[[np.ndarray], np.ndarray]:
    """Resolve a named one-node weight family: {"name": ..., ...params}
    ("kind" is accepted as an alias for "name")."""
    if not isinstance(spec, dict):
        raise ModelValidationError("phi spec must be an object with a 'name'")
    name = spec.get("name", spec.get("kind"))
    if name not in _PHI_FAMILIES:
        raise ModelValidationError(
            f"unknown phi family {name!r}; known: {sorted(_PHI_FAMILIES)}"
        )
    return _PHI_FAMILIES[name](spec)


def kernel_from_spec(spec: dict) -> KernelOperator:
    """Build a KernelOperator from a kernel spec document.

    Supported kinds: an explicit ``matrix`` (with optional node weights),
    or the named parametric families ``example41_discrete {N}``,
    ``example41_continuous {x_max, nodes}``, ``ar1_gaussian {alpha,
    x_max, nodes}`` and ``topo_indicator {a, x_max, nodes}``.  Weight
    values come either as an explicit ``phi`` list (discrete kinds) or a
    named ``phi`` family object.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ModelValidationError("kernel spec must be an object with a 'kind'")
    kind = spec["kind"]
    if kind == "matrix":
        W = np.asarray(spec["W"], dtype=float)
        k = W.shape[0]
        nodes = np.asarray(spec.get("nodes", np.arange(k)), dtype=float)
        weights = np.asarray(spec.get("node_weights", np.ones(k)), dtype=float)
        return KernelOperator(nodes=nodes, node_weights=weights, W=W)
    phi = spec.get("phi", {"name": "const"})
    phi_fn = phi_from_spec(phi) if isinstance(phi, dict) else np.asarray(phi, dtype=float)
    if kind == "example41_discrete":
        return example41_discrete(int(spec["N"]), phi_fn)
    if kind == "example41_continuous":
        if not callable(phi_fn):
            raise ModelValidationError("continuous kernels need a named phi family")
        return example41_continuous(float(spec["x_max"]), int(spec["nodes"]), phi_fn)
    if kind == "ar1_gaussian":
        if not callable(phi_fn):
            raise ModelValidationError("continuous kernels need a named phi family")
        return ar1_gaussian_kernel(
            float(spec["alpha"]), float(spec["x_max"]), int(spec["nodes"]), phi_fn
        )
    if kind == "topo_indicator":
        return topo_indicator_kernel(
            float(spec["a"]), float(spec["x_max"]), int(spec["nodes"])
        )
    raise ModelValidationError(f"unknown kernel kind {kind!r}")


def stabilize_kernel_mu(
    factory: Callable[[int], KernelOperator],
    start: int,
    rtol: float = 1e-8,
    max_doublings: int = 8,
    kr_tol: float = 1e-13,
):
    """Double a resolution parameter until mu stabilizes.

    ``factory(param)`` builds the kernel at resolution ``param`` (node
    count or truncation size).  Returns (param, kr, history) where
    history is the list of (param, mu) pairs visited.
    """
    param = start
    kr = krein_rutman(factory(param), tol=kr_tol)
    history = [(param, kr.mu)]
    for _ in range(max_doublings):
        new_param = 2 * param
        new_kr = krein_rutman(factory(new_param), tol=kr_tol)
        history.append((new_param, new_kr.mu))
        if abs(new_kr.mu - kr.mu) <= rtol * max(1.0, abs(new_kr.mu)):
            return new_param, new_kr, history
        param, kr = new_param, new_kr
    raise ConvergenceError(
        f"mu did not stabilize within {rtol} after {max_doublings} doublings: {history}"
    )
