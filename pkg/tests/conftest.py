"""Shared test utilities and the acceptance-criterion reporter.

Acceptance tests register one result per criterion (or sub-criterion);
the terminal summary prints one PASS/FAIL line for each at the end of
the run, independent of output capture.
"""

from __future__ import annotations

import numpy as np

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record_acceptance(cid: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS.append((cid, bool(passed), detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid, passed, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status}  {cid}  {detail}")


def random_discrete(rng: np.random.Generator, max_alphabet: int = 4, nonnegative: bool = False):
    """A random DiscreteModel with strictly positive probabilities."""
    from werate.core import DiscreteModel

    k = int(rng.integers(2, max_alphabet + 1))
    pmf = rng.dirichlet(np.ones(k) * 2.0)
    lo = 0.1 if nonnegative else -2.0
    phi = rng.uniform(lo, 2.0, size=k)
    return DiscreteModel(pmf=pmf, phi=phi)


def random_positive_chain(rng: np.random.Generator, min_states: int = 2, max_states: int = 5):
    """A random all-positive finite Markov chain."""
    from werate.markov import FiniteMarkovModel

    k = int(rng.integers(min_states, max_states + 1))
    P = rng.dirichlet(np.ones(k) * 2.0, size=k)
    return FiniteMarkovModel(P=P)
