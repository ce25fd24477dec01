"""Networked (factored) MDP model and its text file format.

Ordering conventions
--------------------
* Local state-action pair of agent i: ``z_i = s_i * |A_i| + a_i`` (state is the
  slow coordinate).
* Kernel rows of agent i are indexed by the mixed-radix tuple
  ``(s_j for j in N_i (ascending), a_i)``, little-endian, so the lowest-numbered
  neighbour's state varies fastest and the own action slowest.
* Joint states, joint pairs and neighbourhood pairs are little-endian over the
  (sorted) agent list: agent 0 varies fastest.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .graph import InteractionGraph
from .indexing import MixedRadixIndex

ROW_TOL = 1e-12


@dataclass(frozen=True)
class AgentSpace:
    state_count: int
    action_count: int

    def __post_init__(self):
        if self.state_count < 1 or self.action_count < 1:
            raise ValueError(f"state/action counts must be >= 1, got {self}")

    @property
    def pair_count(self) -> int:
        return self.state_count * self.action_count


class LocalKernel:
    """P_i(s_i' | s_{N_i}, a_i) as a dense (rows, |S_i|) table."""

    def __init__(self, table, row_index: MixedRadixIndex, agent: int | None = None):
        table = np.array(table, dtype=float)
        if table.ndim != 2 or table.shape[0] != row_index.size:
            raise ValueError(
                f"agent {agent}: kernel must have {row_index.size} rows, got shape {table.shape}")
        bad = _first_bad_row(table)
        if bad is not None:
            raise ValueError(f"agent {agent}: kernel row {bad} is not a probability vector")
        table.setflags(write=False)
        self.table = table
        self.row_index = row_index

    def row(self, s_nbrs: Sequence[int], a_i: int) -> np.ndarray:
        return self.table[self.row_index.encode(tuple(s_nbrs) + (a_i,))]


class LocalReward:
    """r_i(s_i, a_i) as a (|S_i|, |A_i|) table."""

    def __init__(self, table, r_max: float, agent: int | None = None):
        table = np.array(table, dtype=float)
        if table.ndim != 2:
            raise ValueError(f"agent {agent}: reward table must be 2-d")
        if np.any(table < 0) or np.any(table > r_max):
            s, a = np.argwhere((table < 0) | (table > r_max))[0]
            raise ValueError(
                f"agent {agent}: reward[{s}, {a}] = {table[s, a]} outside [0, {r_max}]")
        table.setflags(write=False)
        self.table = table


def _first_bad_row(table: np.ndarray):
    bad = (np.any(table < 0, axis=1)) | (np.abs(table.sum(axis=1) - 1.0) > ROW_TOL)
    idx = np.flatnonzero(bad)
    return int(idx[0]) if idx.size else None


class FactoredMdp:
    """Graph, per-agent spaces, local kernels and local rewards.

    Also acts as a simulation environment (``reset``/``step``) for the trainer.
    """

    def __init__(self, graph: InteractionGraph, spaces: Sequence[AgentSpace],
                 kernels: Sequence, rewards: Sequence, r_max: float = 1.0):
        n = graph.n
        if len(spaces) != n or len(kernels) != n or len(rewards) != n:
            raise ValueError("need one space, kernel and reward per agent")
        self.graph = graph
        self.spaces = tuple(spaces)
        self.r_max = float(r_max)
        self.kernel_index = tuple(
            MixedRadixIndex([spaces[j].state_count for j in graph.neighbors[i]]
                            + [spaces[i].action_count])
            for i in range(n))
        ks, rs = [], []
        for i in range(n):
            k = kernels[i]
            if not isinstance(k, LocalKernel):
                k = LocalKernel(k, self.kernel_index[i], agent=i)
            if k.table.shape != (self.kernel_index[i].size, spaces[i].state_count):
                raise ValueError(
                    f"agent {i}: kernel shape {k.table.shape} does not match "
                    f"({self.kernel_index[i].size}, {spaces[i].state_count})")
            r = rewards[i]
            if not isinstance(r, LocalReward):
                r = LocalReward(r, self.r_max, agent=i)
            if r.table.shape != (spaces[i].state_count, spaces[i].action_count):
                raise ValueError(f"agent {i}: reward shape {r.table.shape} mismatches space")
            ks.append(k)
            rs.append(r)
        self.kernels = tuple(ks)
        self.rewards = tuple(rs)
        self._cum = [np.cumsum(k.table, axis=1) for k in ks]

    # -- spaces ---------------------------------------------------------------
    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def state_counts(self) -> tuple[int, ...]:
        return tuple(sp.state_count for sp in self.spaces)

    @property
    def action_counts(self) -> tuple[int, ...]:
        return tuple(sp.action_count for sp in self.spaces)

    def state_index(self) -> MixedRadixIndex:
        return MixedRadixIndex(self.state_counts)

    def pair_index(self, agents: Sequence[int] | None = None) -> MixedRadixIndex:
        """Index over joint pairs z_agents (all agents by default)."""
        agents = range(self.n) if agents is None else agents
        return MixedRadixIndex([self.spaces[j].pair_count for j in agents])

    def kernel_row(self, i: int, s: Sequence[int], a_i: int) -> int:
        nb = self.graph.neighbors[i]
        return self.kernel_index[i].encode(tuple(s[j] for j in nb) + (a_i,))

    # -- dynamics -------------------------------------------------------------
    def joint_transition_prob(self, s: Sequence[int], a: Sequence[int],
                              s_next: Sequence[int]) -> float:
        if not (len(s) == len(a) == len(s_next) == self.n):
            raise ValueError("joint state/action tuples must have one entry per agent")
        p = 1.0
        for i in range(self.n):
            p *= self.kernels[i].table[self.kernel_row(i, s, a[i]), s_next[i]]
        return float(p)

    def sample_step(self, s: Sequence[int], a: Sequence[int],
                    rng: np.random.Generator) -> list[int]:
        u = rng.random(self.n)
        out = []
        for i in range(self.n):
            cum = self._cum[i][self.kernel_row(i, s, a[i])]
            k = int(np.searchsorted(cum, u[i], side="right"))
            out.append(min(k, len(cum) - 1))
        return out

    def local_rewards(self, s: Sequence[int], a: Sequence[int]) -> list[float]:
        return [float(self.rewards[i].table[s[i], a[i]]) for i in range(self.n)]

    # environment protocol used by the trainer
    def reset(self, rng: np.random.Generator) -> list[int]:
        return [int(rng.integers(c)) for c in self.state_counts]

    def step(self, s, a, rng):
        return self.local_rewards(s, a), self.sample_step(s, a, rng)


def joint_transition_prob(mdp: FactoredMdp, s, a, s_next) -> float:
    return mdp.joint_transition_prob(s, a, s_next)


def sample_step(mdp: FactoredMdp, s, a, rng) -> list[int]:
    return mdp.sample_step(s, a, rng)


# -- model file -----------------------------------------------------------------
#
# {
#   "n": 3,
#   "edges": [[0, 1], [1, 2]],
#   "r_max": 1.0,
#   "agents": [
#     {"states": 2, "actions": 3,
#      "kernel": [[p(s'=0), p(s'=1)], ...],   # rows in the kernel order above
#      "reward": [[r(s=0,a=0), ...], ...]},
#     ...
#   ],
#   "theta": [[[...]], ...]                   # optional, per agent (|S_i|, |A_i|)
# }

def mdp_to_dict(mdp: FactoredMdp) -> dict:
    return {
        "n": mdp.n,
        "edges": [list(e) for e in mdp.graph.edges],
        "r_max": mdp.r_max,
        "agents": [
            {"states": sp.state_count, "actions": sp.action_count,
             "kernel": k.table.tolist(), "reward": r.table.tolist()}
            for sp, k, r in zip(mdp.spaces, mdp.kernels, mdp.rewards)
        ],
    }


def mdp_from_dict(doc: dict) -> FactoredMdp:
    try:
        n = int(doc["n"])
        graph = InteractionGraph(n, doc.get("edges", []))
        agents = doc["agents"]
        r_max = float(doc.get("r_max", 1.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed model file: {exc}") from exc
    if len(agents) != n:
        raise ConfigError(f"model declares n={n} but lists {len(agents)} agents")
    try:
        spaces = [AgentSpace(int(a["states"]), int(a["actions"])) for a in agents]
        return FactoredMdp(graph, spaces, [a["kernel"] for a in agents],
                           [a["reward"] for a in agents], r_max)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model: {exc}") from exc


def save_model(path, mdp: FactoredMdp, policy=None) -> None:
    doc = mdp_to_dict(mdp)
    if policy is not None:
        doc["theta"] = [t.tolist() for t in policy.theta]
    Path(path).write_text(json.dumps(doc, indent=1))


def load_model(path):
    """Return ``(mdp, theta_or_None)`` from a model file."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read model file {path}: {exc}") from exc
    mdp = mdp_from_dict(doc)
    theta = doc.get("theta")
    if theta is not None:
        theta = [np.asarray(t, dtype=float) for t in theta]
    return mdp, theta
