"""Random networked-MDP instances for decay and bound experiments."""
from __future__ import annotations

import numpy as np

from .graph import InteractionGraph
from .model import AgentSpace, FactoredMdp
from .policy import SoftmaxPolicy


def _simplex_rows(rng: np.random.Generator, rows: int, k: int) -> np.ndarray:
    """Rows of normalised uniform variates."""
    x = rng.random((rows, k))
    return x / x.sum(axis=1, keepdims=True)


def make_topology(n: int | None, topology: str | tuple) -> InteractionGraph:
    """``topology`` is "line", "grid" (with n given via a (rows, cols) tuple) or ("grid", r, c)."""
    if topology == "line":
        return InteractionGraph.line(n)
    if isinstance(topology, (tuple, list)) and topology[0] == "grid":
        return InteractionGraph.grid(int(topology[1]), int(topology[2]))
    if isinstance(topology, str) and topology.startswith("grid"):
        r, c = topology[4:].strip("()").lower().split("x")
        return InteractionGraph.grid(int(r), int(c))
    raise ValueError(f"unknown topology {topology!r}")


def random_instance(n: int, topology="line", states: int = 2, actions: int = 3, seed: int = 0,
                    coupling: float | None = None, r_max: float = 1.0):
    """Random kernels, rewards and policy on a line or grid.

    With ``coupling=None`` each kernel row is an independent normalised uniform
    draw.  With ``coupling=lam`` every row of agent i is
    ``(1 - lam) * base_i + lam * row`` for one shared random ``base_i``, which
    caps every interaction coefficient at ``lam`` and yields weakly coupled
    instances.
    """
    rng = np.random.default_rng(seed)
    graph = make_topology(n, topology)
    spaces = [AgentSpace(states, actions) for _ in range(graph.n)]
    kernels, rewards, theta = [], [], []
    for i in range(graph.n):
        rows = states ** len(graph.neighbors[i]) * actions
        K = _simplex_rows(rng, rows, states)
        if coupling is not None:
            base = _simplex_rows(rng, 1, states)
            K = (1.0 - coupling) * base + coupling * K
            K /= K.sum(axis=1, keepdims=True)
        kernels.append(K)
        rewards.append(rng.random((states, actions)) * r_max)
        probs = rng.dirichlet(np.ones(actions), size=states)
        theta.append(np.log(probs))
    mdp = FactoredMdp(graph, spaces, kernels, rewards, r_max)
    return mdp, SoftmaxPolicy(theta)
