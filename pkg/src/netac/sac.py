"""Scalable actor-critic: truncated-Q TD critic plus localized softmax actor.

A single trajectory drives both timescales.  Per step t, in order:

1. every agent receives r_i(t) and the environment moves to s(t+1);
2. a(t+1) is sampled from the current policy;
3. critic: mu_i <- (1-a)mu_i + a r_i(t), and the truncated table entry at
   z_{N_i^k}(t) moves toward r_i(t) - mu_i^t + Q_i(z_{N_i^k}(t+1)) (old mu);
4. actor: theta_i += eta_t * Gamma * grad log zeta_i(a_i(t)|s_i(t)) *
   (1/n) sum_{j in N_i^k} Q_j^t(z_{N_j^k}(t)), using the tables as they were
   before step 3.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError
from .policy import SoftmaxPolicy

DENSE_TABLE_LIMIT = 1 << 20


@dataclass(frozen=True)
class StepSchedule:
    """alpha_t = alpha0/(1+t)^alpha_exp (critic), eta_t = eta0/(1+t)^eta_exp (actor)."""

    alpha0: float = 1.0
    eta0: float = 10.0
    alpha_exp: float = 0.75
    eta_exp: float = 0.99

    def __post_init__(self):
        if not 0.0 < self.alpha0 <= 1.0:
            raise ConfigError("alpha0 must lie in (0, 1]")
        if self.eta0 < 0:
            raise ConfigError("eta0 must be nonnegative")
        if not 0.5 < self.alpha_exp <= 1.0 or not 0.5 < self.eta_exp <= 1.0:
            raise ConfigError("step-size exponents must lie in (0.5, 1]")
        if self.eta0 > 0 and self.eta_exp <= self.alpha_exp:
            raise ConfigError("actor must run on the slower timescale (eta_exp > alpha_exp)")

    def alpha(self, t: int) -> float:
        return self.alpha0 / (1.0 + t) ** self.alpha_exp

    def eta(self, t: int) -> float:
        return self.eta0 / (1.0 + t) ** self.eta_exp

    def ratio_exponent(self) -> float:
        """Any d above this makes sum (eta_t/alpha_t)^d finite."""
        return 1.0 / (self.eta_exp - self.alpha_exp)


class TruncatedQTable:
    """Critic table over Z_{N_i^kappa}; the dummy entry always reads 0.

    Tables above ``DENSE_TABLE_LIMIT`` entries are stored sparsely (unvisited
    entries read 0), which is what makes kappa-hop tables on dense conflict
    graphs feasible.
    """

    def __init__(self, agent: int, kappa: int, size: int, dummy: int = 0):
        if not 0 <= dummy < size:
            raise ValueError("dummy pair outside the table")
        self.agent = agent
        self.kappa = kappa
        self.size = size
        self.dummy = dummy
        self.dense = size <= DENSE_TABLE_LIMIT
        self._values = np.zeros(size) if self.dense else {}
        self._max_abs = 0.0
        self._argmax = dummy

    def __getitem__(self, idx: int) -> float:
        if idx == self.dummy:
            return 0.0
        if self.dense:
            return float(self._values[idx])
        return self._values.get(idx, 0.0)

    def __setitem__(self, idx: int, value: float) -> None:
        if idx == self.dummy:
            return
        self._values[idx] = value
        a = abs(value)
        if a >= self._max_abs:
            self._max_abs, self._argmax = a, idx
        elif idx == self._argmax:
            self._rescan()

    def _rescan(self) -> None:
        if self.dense:
            k = int(np.argmax(np.abs(self._values)))
            self._max_abs, self._argmax = float(abs(self._values[k])), k
        elif self._values:
            k = max(self._values, key=lambda j: abs(self._values[j]))
            self._max_abs, self._argmax = abs(self._values[k]), k
        else:
            self._max_abs, self._argmax = 0.0, self.dummy

    def max_abs(self) -> float:
        return self._max_abs

    def to_array(self) -> np.ndarray:
        if self.dense:
            out = self._values.copy()
        else:
            out = np.zeros(self.size)
            for k, v in self._values.items():
                out[k] = v
        out[self.dummy] = 0.0
        return out

    def copy(self) -> "TruncatedQTable":
        other = TruncatedQTable(self.agent, self.kappa, self.size, self.dummy)
        other._values = self._values.copy()
        other._max_abs, other._argmax = self._max_abs, self._argmax
        return other


class CriticState:
    def __init__(self, tables: Sequence[TruncatedQTable], mu: Sequence[float] | None = None):
        self.tables = list(tables)
        self.mu = [0.0] * len(self.tables) if mu is None else [float(m) for m in mu]

    @classmethod
    def zeros(cls, table_sizes: Sequence[int], kappa: int, dummy: int = 0) -> "CriticState":
        return cls([TruncatedQTable(i, kappa, size, dummy) for i, size in enumerate(table_sizes)])

    @property
    def kappa(self) -> int:
        return self.tables[0].kappa

    def max_abs(self) -> float:
        return max(t.max_abs() for t in self.tables)

    def copy(self) -> "CriticState":
        return CriticState([t.copy() for t in self.tables], self.mu)


def critic_step(state: CriticState, i: int, z_now: int, reward: float, z_next: int,
                alpha: float) -> CriticState:
    """In-place average-reward TD update of agent i's critic; returns ``state``."""
    mu_old = state.mu[i]
    state.mu[i] = (1.0 - alpha) * mu_old + alpha * reward
    table = state.tables[i]
    if z_now != table.dummy:
        table[z_now] = (1.0 - alpha) * table[z_now] + alpha * (reward - mu_old + table[z_next])
    return state


def rescale_factor(state: CriticState) -> float:
    return 1.0 / (1.0 + state.max_abs())


def actor_step(policy: SoftmaxPolicy, critic: CriticState, s: Sequence[int], a: Sequence[int],
               z_local: Sequence[int], neighborhoods: Sequence[Sequence[int]], eta: float,
               rescale: bool = False) -> list[np.ndarray]:
    """Gradient step for every agent; returns the per-agent estimates g_i.

    ``z_local[j]`` is the flat index of z_{N_j^kappa}(t) in agent j's table.
    Uses the critic as passed, so call it with the pre-update tables.
    """
    n = len(s)
    gamma = rescale_factor(critic) if rescale else 1.0
    qvals = [critic.tables[j][z_local[j]] for j in range(n)]
    grads = []
    for i in range(n):
        weight = sum(qvals[j] for j in neighborhoods[i]) / n
        g = policy.grad_log(i, s[i], a[i]) * weight
        policy.theta[i] += eta * gamma * g
        grads.append(g)
    return grads


@dataclass
class TrainerConfig:
    kappa: int = 1
    horizon: int = 200_000
    schedule: StepSchedule = field(default_factory=StepSchedule)
    rescale: bool = False
    seed: int = 0
    cadence: int = 100
    oracle_every: int = 1000

    def __post_init__(self):
        if self.kappa < 0:
            raise ConfigError("kappa must be nonnegative")
        if self.horizon < 1:
            raise ConfigError("horizon must be at least 1")
        if self.cadence < 1 or self.oracle_every < 1:
            raise ConfigError("cadence and oracle_every must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunMetrics:
    steps: list = field(default_factory=list)
    mean_reward: list = field(default_factory=list)
    mean_mu_hat: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)  # oracle metrics: name -> list of (step, value)
    reward_trace: np.ndarray | None = None  # (1/n) sum_i r_i(t) for every t
    max_abs_q: float = 0.0  # sup over t of max_i ||Q_i^t||_inf

    def terminal_reward(self, window: int) -> float:
        return float(np.mean(self.reward_trace[-window:]))


class Trainer:
    """Runs the scalable actor-critic on any environment exposing
    ``n, graph, state_counts, action_counts, reset(rng), step(s, a, rng)``."""

    def __init__(self, env, config: TrainerConfig, policy: SoftmaxPolicy | None = None,
                 critic: CriticState | None = None):
        self.env = env
        self.config = config
        n = env.n
        self.n = n
        self.nA = list(env.action_counts)
        pair_counts = [s * a for s, a in zip(env.state_counts, env.action_counts)]
        self.neighborhoods = [env.graph.kappa_neighborhood(i, config.kappa) for i in range(n)]
        self.strides = []
        sizes = []
        for nb in self.neighborhoods:
            st, size = [], 1
            for j in nb:
                st.append(size)
                size *= pair_counts[j]
            self.strides.append(st)
            sizes.append(size)
        self.table_sizes = sizes
        self.policy = policy if policy is not None else SoftmaxPolicy.uniform(
            env.state_counts, env.action_counts)
        if critic is None:
            critic = CriticState.zeros(sizes, config.kappa)
        elif critic.kappa != config.kappa or [t.size for t in critic.tables] != sizes:
            raise ConfigError(f"critic tables built for kappa={critic.kappa} do not match "
                              f"config kappa={config.kappa}")
        self.critic = critic

    def local_indices(self, s: Sequence[int], a: Sequence[int]) -> list[int]:
        z = [s_j * na + a_j for s_j, a_j, na in zip(s, a, self.nA)]
        return [sum(z[j] * st for j, st in zip(nb, strides))
                for nb, strides in zip(self.neighborhoods, self.strides)]

    def run(self, oracle_hook: Callable[[int, SoftmaxPolicy], dict] | None = None,
            rng: np.random.Generator | None = None) -> tuple[SoftmaxPolicy, RunMetrics]:
        cfg = self.config
        sched = cfg.schedule
        rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        n, policy, critic = self.n, self.policy, self.critic
        frozen = sched.eta0 == 0.0
        probs = [np.cumsum(t, axis=1) for t in policy.tables()]

        def sample(state):
            u = rng.random(n)
            out = []
            for i in range(n):
                row = probs[i][state[i]]
                out.append(min(int(np.searchsorted(row, u[i] * row[-1], side="right")), len(row) - 1))
            return out

        metrics = RunMetrics()
        trace = np.empty(cfg.horizon)
        s = list(self.env.reset(rng))
        a = sample(s)
        z_now = self.local_indices(s, a)
        max_abs_q = 0.0

        def snapshot(t):
            metrics.steps.append(t)
            metrics.mean_reward.append(float(trace[t - 1]) if t > 0 else float("nan"))
            metrics.mean_mu_hat.append(float(np.mean(critic.mu)))

        if oracle_hook is not None:
            self._record(metrics, 0, oracle_hook(0, policy))

        for t in range(cfg.horizon):
            rewards, s_next = self.env.step(s, a, rng)
            trace[t] = sum(rewards) / n
            a_next = sample(s_next)
            z_next = self.local_indices(s_next, a_next)
            alpha = sched.alpha(t)

            if not frozen:
                # actor reads the critic before this step's update
                gamma = 1.0 / (1.0 + critic.max_abs()) if cfg.rescale else 1.0
                qvals = [critic.tables[j][z_now[j]] for j in range(n)]

            for i in range(n):
                critic_step(critic, i, z_now[i], rewards[i], z_next[i], alpha)

            if not frozen:
                beta = sched.eta(t) * gamma
                for i in range(n):
                    weight = sum(qvals[j] for j in self.neighborhoods[i]) / n
                    if weight == 0.0:
                        continue
                    row = policy.theta[i][s[i]]
                    p = np.exp(row - row.max())
                    p /= p.sum()
                    g = -p * weight
                    g[a[i]] += weight
                    row += beta * g
                    probs[i][s[i]] = np.cumsum(np.exp(row - row.max()))

            m = critic.max_abs()
            if m > max_abs_q:
                max_abs_q = m
            s, a, z_now = s_next, a_next, z_next
            step = t + 1
            if step % cfg.cadence == 0 or step == cfg.horizon:
                snapshot(step)
            if oracle_hook is not None and (step % cfg.oracle_every == 0 or step == cfg.horizon):
                self._record(metrics, step, oracle_hook(step, policy))

        metrics.reward_trace = trace
        metrics.max_abs_q = max_abs_q
        return policy, metrics

    @staticmethod
    def _record(metrics: RunMetrics, step: int, values: dict) -> None:
        for k, v in values.items():
            metrics.extra.setdefault(k, []).append((step, float(v)))


def run(env, config: TrainerConfig, oracle_hook=None, policy: SoftmaxPolicy | None = None):
    """Convenience wrapper: returns ``(final_policy, metrics, critic)``."""
    trainer = Trainer(env, config, policy)
    final, metrics = trainer.run(oracle_hook)
    return final, metrics, trainer.critic


def oracle_hook_for(mdp) -> Callable[[int, SoftmaxPolicy], dict]:
    """Exact J(theta) and ||grad J(theta)|| evaluated by the oracle."""
    from . import oracle

    def hook(step, policy):
        chain = oracle.InducedChain(mdp, policy)
        J, _ = oracle.average_reward(mdp, policy, chain)
        return {"J_exact": J, "grad_norm": oracle.gradient_norm(
            oracle.exact_policy_gradient(mdp, policy, chain))}

    return hook


def gradient_floor_bound(L: float, c: float, rho: float, kappa: int, mu_d: float) -> float:
    """Asymptotic liminf bound on ||grad J|| (reported, not asserted)."""
    return L * c * rho ** (kappa + 1) / (1.0 - mu_d)


__all__ = ["StepSchedule", "TruncatedQTable", "CriticState", "critic_step", "actor_step",
           "rescale_factor", "TrainerConfig", "RunMetrics", "Trainer", "run", "oracle_hook_for",
           "gradient_floor_bound"]
