"""Multi-access-point wireless network with deadline-constrained packets.

Users sit on a rows x cols grid; access points sit on the grid vertices, so a
user at (r, c) reaches the four APs at (r, c), (r, c+1), (r+1, c), (r+1, c+1).
Two users conflict iff they share an AP.

Local state of user i: bits (e_1, ..., e_d), e_m = 1 iff a packet with m slots
left is queued; flat index sum_m e_m 2^(m-1).  Action 0 is "don't send",
action k >= 1 sends the most urgent packet to the k-th AP of the user's sorted
AP list.

One step resolves, in this order: sends, collisions / successes, deadline
decrement with expiry, arrivals.  Randomness is consumed as two uniform
vectors of length n per step (success, arrival), so a user's transition only
reads its own draws.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .graph import InteractionGraph


@dataclass
class WirelessConfig:
    rows: int = 3
    cols: int = 3
    deadline: int = 2
    arrival: list[float] | None = None  # p_i per user
    success: list[float] | None = None  # q_k per AP
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigError(f"degenerate grid {self.rows}x{self.cols}")
        if self.deadline < 1:
            raise ConfigError("deadline must be >= 1")
        for name, vals, count in (("arrival", self.arrival, self.rows * self.cols),
                                  ("success", self.success, (self.rows + 1) * (self.cols + 1))):
            if vals is None:
                continue
            if len(vals) != count:
                raise ConfigError(f"{name} needs {count} entries, got {len(vals)}")
            if any(not 0.0 <= v <= 1.0 for v in vals):
                raise ConfigError(f"{name} probabilities must lie in [0, 1]")


@dataclass(frozen=True)
class AlohaParams:
    p_send: float

    def __post_init__(self):
        if not 0.0 <= self.p_send <= 1.0:
            raise ConfigError("p_send must lie in [0, 1]")


def state_bits(index: int, deadline: int) -> tuple[int, ...]:
    return tuple((index >> m) & 1 for m in range(deadline))


def bits_index(bits: Sequence[int]) -> int:
    return sum(int(b) << m for m, b in enumerate(bits))


class WirelessEnv:
    def __init__(self, config: WirelessConfig, rng: np.random.Generator | None = None):
        self.config = config
        R, C, d = config.rows, config.cols, config.deadline
        self.n = R * C
        self.deadline = d
        self.n_aps = (R + 1) * (C + 1)
        self.aps: list[tuple[int, ...]] = []
        for r in range(R):
            for c in range(C):
                self.aps.append(tuple(sorted(
                    u * (C + 1) + v for u in (r, r + 1) for v in (c, c + 1))))
        self.sharers = np.zeros(self.n_aps, dtype=int)
        for ys in self.aps:
            self.sharers[list(ys)] += 1
        users_of = [[] for _ in range(self.n_aps)]
        for i, ys in enumerate(self.aps):
            for k in ys:
                users_of[k].append(i)
        self.graph = InteractionGraph(
            self.n, [(u, v) for us in users_of for u in us for v in us if u < v])
        if rng is None:
            rng = np.random.default_rng(config.seed)
        self.p = np.asarray(config.arrival if config.arrival is not None else rng.random(self.n), dtype=float)
        self.q = np.asarray(config.success if config.success is not None else rng.random(self.n_aps), dtype=float)
        self.state_counts = tuple(2 ** d for _ in range(self.n))
        self.action_counts = tuple(1 + len(ys) for ys in self.aps)
        # earliest packet slot for every state index (-1 when empty)
        self._earliest = [next((m for m, b in enumerate(state_bits(k, d)) if b), -1)
                          for k in range(2 ** d)]

    def reset(self, rng: np.random.Generator) -> list[int]:
        return [int(x) for x in rng.integers(0, 2 ** self.deadline, size=self.n)]

    def effective_actions(self, s: Sequence[int], a: Sequence[int]) -> list[int]:
        return [a_i if self._earliest[s_i] >= 0 else 0 for s_i, a_i in zip(s, a)]

    def step(self, s: Sequence[int], a: Sequence[int], rng: np.random.Generator):
        """Return ``(rewards, next_state)``."""
        n, d = self.n, self.deadline
        u_succ = rng.random(n)
        u_arr = rng.random(n)
        target = [-1] * n
        load: dict[int, int] = {}
        for i in range(n):
            if a[i] and self._earliest[s[i]] >= 0:
                k = self.aps[i][a[i] - 1]
                target[i] = k
                load[k] = load.get(k, 0) + 1
        rewards = [0.0] * n
        nxt = [0] * n
        for i in range(n):
            state = s[i]
            k = target[i]
            if k >= 0 and load[k] == 1 and u_succ[i] < self.q[k]:
                rewards[i] = 1.0
                state &= ~(1 << self._earliest[state])
            state >>= 1  # slot 1 expires, the rest move one slot closer
            if u_arr[i] < self.p[i]:
                state |= 1 << (d - 1)
            nxt[i] = state
        return rewards, nxt


def build_wireless(config: WirelessConfig) -> WirelessEnv:
    return WirelessEnv(config)


def wireless_step(env: WirelessEnv, state, action, rng):
    return env.step(state, action, rng)


# -- ALOHA baseline ---------------------------------------------------------------

def aloha_policy(env: WirelessEnv, params: AlohaParams) -> list[np.ndarray]:
    """Per-user (|S_i|, |A_i|) action-probability tables.

    Send with probability p_send, to AP k with weight q_k / (#users sharing k);
    all-zero weights fall back to a uniform AP choice.
    """
    tables = []
    for i, ys in enumerate(env.aps):
        w = np.array([env.q[k] / env.sharers[k] for k in ys])
        w = w / w.sum() if w.sum() > 0 else np.full(len(ys), 1.0 / len(ys))
        row = np.concatenate([[1.0 - params.p_send], params.p_send * w])
        T = np.tile(row, (env.state_counts[i], 1))
        T[0] = 0.0
        T[0, 0] = 1.0  # empty queue: nothing to send
        tables.append(T)
    return tables


def sample_actions(tables: Sequence[np.ndarray], s: Sequence[int], rng: np.random.Generator) -> list[int]:
    u = rng.random(len(s))
    out = []
    for i, s_i in enumerate(s):
        cum = np.cumsum(tables[i][s_i])
        out.append(min(int(np.searchsorted(cum, u[i] * cum[-1], side="right")), len(cum) - 1))
    return out


def evaluate_policy(env, tables: Sequence[np.ndarray], steps: int, episodes: int,
                    rng: np.random.Generator, trace_path=None) -> float:
    """Mean over episodes of the time-averaged network reward (1/n) sum_i r_i."""
    means = []
    writer = fh = None
    if trace_path is not None:
        fh = open(trace_path, "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(["episode", "step", "user", "state", "action", "reward"])
    try:
        for ep in range(episodes):
            s = env.reset(rng)
            total = 0.0
            for t in range(steps):
                a = sample_actions(tables, s, rng)
                r, s_next = env.step(s, a, rng)
                total += sum(r)
                if writer is not None:
                    for i in range(env.n):
                        writer.writerow([ep, t, i, "".join(map(str, state_bits(s[i], env.deadline))),
                                         a[i], r[i]])
                s = s_next
            means.append(total / (steps * env.n))
    finally:
        if fh is not None:
            fh.close()
    return float(np.mean(means))


@dataclass
class AlohaSweep:
    p_values: list[float]
    rewards: list[float] = field(default_factory=list)

    @property
    def best(self) -> tuple[float, float]:
        k = int(np.argmax(self.rewards))
        return self.p_values[k], self.rewards[k]


def aloha_sweep(env: WirelessEnv, p_values=(0.2, 0.4, 0.6, 0.8), steps: int = 10_000,
                episodes: int = 5, seed: int = 0) -> AlohaSweep:
    sweep = AlohaSweep(list(p_values))
    for p in p_values:
        rng = np.random.default_rng(seed)
        sweep.rewards.append(evaluate_policy(env, aloha_policy(env, AlohaParams(p)), steps, episodes, rng))
    return sweep
