"""Localized tabular softmax policies."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

# Bound on ||grad log zeta_i|| for the softmax parameterisation.
GRAD_LOG_BOUND = math.sqrt(2.0)


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


class SoftmaxPolicy:
    """theta[i] has shape (|S_i|, |A_i|); zeta_i(.|s_i) = softmax(theta[i][s_i])."""

    def __init__(self, theta: Sequence[np.ndarray]):
        self.theta = [np.array(t, dtype=float) for t in theta]
        for i, t in enumerate(self.theta):
            if t.ndim != 2:
                raise ValueError(f"theta[{i}] must be 2-d, got shape {t.shape}")

    @classmethod
    def uniform(cls, state_counts, action_counts) -> "SoftmaxPolicy":
        return cls([np.zeros((s, a)) for s, a in zip(state_counts, action_counts)])

    @property
    def n(self) -> int:
        return len(self.theta)

    def copy(self) -> "SoftmaxPolicy":
        return SoftmaxPolicy([t.copy() for t in self.theta])

    def distribution(self, i: int, s_i: int) -> np.ndarray:
        return softmax(self.theta[i][s_i])

    def tables(self) -> list[np.ndarray]:
        """Per-agent (|S_i|, |A_i|) action probability tables."""
        return [softmax(t, axis=1) for t in self.theta]

    def grad_log(self, i: int, s_i: int, a_i: int) -> np.ndarray:
        g = np.zeros_like(self.theta[i])
        g[s_i] = -self.distribution(i, s_i)
        g[s_i, a_i] += 1.0
        return g

    def sample(self, s: Sequence[int], rng: np.random.Generator) -> list[int]:
        u = rng.random(self.n)
        out = []
        for i, s_i in enumerate(s):
            cum = np.cumsum(self.distribution(i, s_i))
            out.append(min(int(np.searchsorted(cum, u[i] * cum[-1], side="right")), len(cum) - 1))
        return out

    def flat(self) -> np.ndarray:
        return np.concatenate([t.ravel() for t in self.theta])

    def assign_flat(self, vec: np.ndarray) -> None:
        k = 0
        for t in self.theta:
            t[...] = np.asarray(vec[k:k + t.size]).reshape(t.shape)
            k += t.size


def policy_distribution(policy: SoftmaxPolicy, i: int, s_i: int) -> np.ndarray:
    return policy.distribution(i, s_i)


def grad_log_policy(policy: SoftmaxPolicy, i: int, s_i: int, a_i: int) -> np.ndarray:
    return policy.grad_log(i, s_i, a_i)
