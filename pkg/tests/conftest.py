import numpy as np
import pytest

from netac.generators import random_instance
from netac.graph import InteractionGraph
from netac.model import AgentSpace, FactoredMdp
from netac.policy import SoftmaxPolicy


def single_agent(P_by_action, reward, r_max=1.0):
    """One agent with no neighbours; P_by_action[a] is an |S|x|S| matrix."""
    P = np.asarray(P_by_action, dtype=float)  # (A, S, S)
    A, S, _ = P.shape
    # kernel rows are (s, a) little-endian: row = s + S * a
    table = np.zeros((S * A, S))
    for s in range(S):
        for a in range(A):
            table[s + S * a] = P[a, s]
    return FactoredMdp(InteractionGraph(1), [AgentSpace(S, A)], [table], [reward], r_max)


@pytest.fixture
def two_state_chain():
    # one action; P = [[0.5, 0.5], [1, 0]] has stationary (2/3, 1/3)
    mdp = single_agent([[[0.5, 0.5], [1.0, 0.0]]], [[1.0], [0.0]])
    return mdp, SoftmaxPolicy.uniform(mdp.state_counts, mdp.action_counts)


@pytest.fixture
def chain3():
    return random_instance(3, "line", 2, 2, seed=4, coupling=0.5)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def record():
    """Log one PASS/FAIL line for an acceptance criterion."""

    def _record(name: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
        print(line)
        _ACCEPTANCE.append(line)

    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
