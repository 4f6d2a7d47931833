"""werate: weighted information and weighted entropy rates.

Computes exact and asymptotic growth rates of the weighted entropy
H^w_phi(f_n) = -E[phi_n(X) ln f_n(X)] for IID, finite-state Markov and
Gaussian processes, with additive and multiplicative weight functions.
"""

__version__ = "0.1.0"

from .core import (
    DiscreteModel,
    JointWF,
    LogBase,
    WFKind,
    joint_weighted_entropy_enumerated,
    one_digit_we,
    standard_entropy,
    weighted_entropy,
    weighted_information,
)
from .errors import (
    ConvergenceError,
    DoeblinError,
    EnumerationLimitError,
    InfiniteInformationError,
    ModelValidationError,
    WerateError,
)
from .iid import (
    AdditiveRatePair,
    MultiplicativeRatePair,
    iid_additive_rates,
    iid_multiplicative_rates,
    iid_multiplicative_we,
)
from .markov import (
    FiniteMarkovModel,
    entropy_rate,
    exact_joint_we_additive,
    primary_rate_additive,
    secondary_rate_additive,
    stationary_distribution,
)
from .spectral import (
    KernelOperator,
    KreinRutmanResult,
    build_weighted_kernel,
    exact_joint_we_multiplicative,
    krein_rutman,
    primary_rate_multiplicative,
    secondary_rate_multiplicative,
)

__all__ = [name for name in dir() if not name.startswith("_")]
