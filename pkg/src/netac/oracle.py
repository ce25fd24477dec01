"""Exact (brute-force / linear-algebra) oracle for small networked MDPs.

The policy-induced chain on joint pairs factors as ``P = T @ Pi`` where
``T[z, s']`` is the joint next-state kernel and ``Pi[s', z']`` places the policy
mass ``zeta(a'|s')`` on pairs whose state is ``s'``.  Every Poisson, stationary
and fixed-point solve below is reduced through the state chain ``M = Pi @ T``
whose size is |S| instead of |Z|.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .errors import ModelClassError, NonErgodicError, NumericalError, SizeGuardError
from .model import FactoredMdp
from .policy import GRAD_LOG_BOUND, SoftmaxPolicy

SIZE_GUARD = 10**7
DIRECT_SOLVE_LIMIT = 4096
DENSE_MATRIX_LIMIT = 20000


class InducedChain:
    """Markov chain on joint state-action pairs induced by (mdp, policy)."""

    def __init__(self, mdp: FactoredMdp, policy: SoftmaxPolicy, size_guard: int = SIZE_GUARD):
        if not isinstance(mdp, FactoredMdp):
            raise ModelClassError(
                f"exact oracle needs a FactoredMdp, got {type(mdp).__name__}; "
                "environments whose transitions depend on neighbour actions are not supported")
        zindex = mdp.pair_index()
        if zindex.size > size_guard:
            raise SizeGuardError(f"|Z| = {zindex.size} exceeds the size guard {size_guard}")
        self.mdp = mdp
        self.policy = policy
        self.zindex = zindex
        self.sindex = mdp.state_index()
        n = mdp.n
        acts = np.asarray(mdp.action_counts)
        coords = zindex.all_coords()
        self.z_coords = coords
        self.s_coords = coords // acts
        self.a_coords = coords % acts
        self.s_of_z = self.sindex.encode_array(self.s_coords)

        probs = policy.tables()
        pol = np.ones(zindex.size)
        for i in range(n):
            pol *= probs[i][self.s_coords[:, i], self.a_coords[:, i]]
        self.policy_weight = pol

        T = np.ones((zindex.size, 1))
        for i in range(n):
            nb = mdp.graph.neighbors[i]
            cols = np.column_stack([self.s_coords[:, j] for j in nb] + [self.a_coords[:, i]])
            rows = mdp.kernel_index[i].encode_array(cols)
            Pi = mdp.kernels[i].table[rows]
            T = (Pi[:, :, None] * T[:, None, :]).reshape(zindex.size, -1)
        self.T = T
        self.Pi = sp.csr_matrix((pol, (self.s_of_z, np.arange(zindex.size))),
                                shape=(self.sindex.size, zindex.size))
        self.M = np.asarray(self.Pi @ T)

    @property
    def size(self) -> int:
        return self.zindex.size

    def apply(self, v: np.ndarray) -> np.ndarray:
        """P @ v."""
        return self.T @ (self.Pi @ v)

    def apply_transpose(self, u: np.ndarray) -> np.ndarray:
        """P.T @ u."""
        return self.Pi.T @ (self.T.T @ u)

    def matrix(self) -> np.ndarray:
        if self.size > DENSE_MATRIX_LIMIT:
            raise SizeGuardError(f"dense transition matrix refused for |Z| = {self.size}")
        return self.T[:, self.s_of_z] * self.policy_weight[None, :]

    def reward(self, i: int) -> np.ndarray:
        return self.mdp.rewards[i].table[self.s_coords[:, i], self.a_coords[:, i]]

    def local_index(self, agents: Sequence[int]) -> np.ndarray:
        """Flat index of z_agents for every joint pair."""
        return self.mdp.pair_index(agents).encode_array(self.z_coords[:, list(agents)])

    @cached_property
    def state_distribution(self) -> np.ndarray:
        _check_ergodic(self.M)
        return _stationary_direct(self.M) if self.M.shape[0] <= DIRECT_SOLVE_LIMIT \
            else _stationary_power(self.M)

    @cached_property
    def pi(self) -> np.ndarray:
        pi = self.state_distribution[self.s_of_z] * self.policy_weight
        if np.any(pi <= 0):
            z = int(np.argmin(pi))
            raise NonErgodicError(f"stationary mass of pair {self.zindex.decode(z)} is zero")
        return pi


def induced_chain(mdp: FactoredMdp, policy: SoftmaxPolicy, size_guard: int = SIZE_GUARD) -> InducedChain:
    return InducedChain(mdp, policy, size_guard)


# -- stationary distributions ---------------------------------------------------

def _period(adj: sp.csr_matrix) -> int:
    n = adj.shape[0]
    dist = np.full(n, -1)
    dist[0] = 0
    frontier = [0]
    g = 0
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj.indices[adj.indptr[u]:adj.indptr[u + 1]]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
                else:
                    g = math.gcd(g, dist[u] + 1 - dist[v])
        frontier = nxt
    return g


def _check_ergodic(P: np.ndarray) -> None:
    adj = sp.csr_matrix(P > 0)
    ncomp, labels = connected_components(adj, directed=True, connection="strong")
    if ncomp > 1:
        # closed classes: no edge leaving the component
        src, dst = adj.nonzero()
        leaving = np.zeros(ncomp, dtype=bool)
        leaving[labels[src][labels[src] != labels[dst]]] = True
        closed = int(np.sum(~leaving))
        if closed > 1:
            raise NonErgodicError(f"chain has {closed} closed communicating classes")
        raise NonErgodicError(f"chain is not irreducible ({ncomp} communicating classes, "
                              "transient states have zero stationary mass)")
    if _period(adj) != 1:
        raise NonErgodicError(f"chain is periodic with period {_period(adj)}")


def _stationary_direct(P: np.ndarray) -> np.ndarray:
    n = P.shape[0]
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        nu = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise NonErgodicError(f"stationary system is singular: {exc}") from exc
    nu = np.clip(nu, 0.0, None)
    return nu / nu.sum()


def _stationary_power(P, tol: float = 1e-14, max_iter: int = 10**6, apply_t=None, n=None) -> np.ndarray:
    """Power iteration nu <- nu P until the l1 change drops below ``tol``."""
    if apply_t is None:
        apply_t = lambda v: P.T @ v  # noqa: E731
        n = P.shape[0]
    nu = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = apply_t(nu)
        nxt /= nxt.sum()
        if np.abs(nxt - nu).sum() < tol:
            return nxt
        nu = nxt
    raise NumericalError("power iteration did not converge")


def stationary_distribution(chain, method: str = "auto") -> np.ndarray:
    """Stationary distribution of an InducedChain (over Z) or of a plain matrix.

    ``method`` is "direct" (linear solve), "power" (power iteration) or
    "auto" (direct up to 4096 states).
    """
    if isinstance(chain, InducedChain):
        if method == "power" or (method == "auto" and chain.M.shape[0] > DIRECT_SOLVE_LIMIT):
            _check_ergodic(chain.M)
            return _stationary_power(None, apply_t=chain.apply_transpose, n=chain.size)
        return chain.pi
    P = np.asarray(chain, dtype=float)
    if P.size > SIZE_GUARD:
        raise SizeGuardError(f"matrix with {P.shape[0]} states exceeds the size guard")
    _check_ergodic(P)
    if method == "power" or (method == "auto" and P.shape[0] > DIRECT_SOLVE_LIMIT):
        return _stationary_power(P)
    return _stationary_direct(P)


def _chain(mdp, policy, chain):
    return chain if chain is not None else InducedChain(mdp, policy)


def average_reward(mdp: FactoredMdp, policy: SoftmaxPolicy, chain: InducedChain | None = None):
    """Return ``(J, [J_1, ..., J_n])``."""
    chain = _chain(mdp, policy, chain)
    Ji = np.array([chain.pi @ chain.reward(i) for i in range(mdp.n)])
    return float(Ji.mean()), Ji


# -- Q functions ------------------------------------------------------------------

def _solve_state(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    if A.shape[0] <= DIRECT_SOLVE_LIMIT:
        try:
            return np.linalg.solve(A, b)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular system: {exc}") from exc
    x, info = spla.gmres(A, b, rtol=1e-14, atol=0.0, restart=200, maxiter=2000)
    if info != 0:
        raise NumericalError(f"gmres failed to converge (info={info})")
    return x


def local_q_function(mdp: FactoredMdp, policy: SoftmaxPolicy, i: int,
                     chain: InducedChain | None = None) -> np.ndarray:
    """Relative value Q_i over Z, normalised to zero stationary mean."""
    chain = _chain(mdp, policy, chain)
    r = chain.reward(i)
    rt = r - chain.pi @ r
    nu = chain.state_distribution
    ns = nu.size
    A = np.eye(ns) - chain.M + np.outer(np.ones(ns), nu)
    w = _solve_state(A, chain.Pi @ rt)
    Q = rt + chain.T @ w
    resid = np.abs(Q - rt - chain.apply(Q)).max()
    if resid > 1e-10:
        raise NumericalError(f"Poisson residual {resid:.3e} for agent {i}")
    return Q


def discounted_q(mdp: FactoredMdp, policy: SoftmaxPolicy, i: int, gamma: float,
                 chain: InducedChain | None = None) -> np.ndarray:
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    chain = _chain(mdp, policy, chain)
    r = chain.reward(i)
    ns = chain.M.shape[0]
    w = _solve_state(np.eye(ns) - gamma * chain.M, chain.Pi @ r)
    return r + gamma * (chain.T @ w)


def all_q_functions(mdp, policy, chain=None) -> list[np.ndarray]:
    chain = _chain(mdp, policy, chain)
    return [local_q_function(mdp, policy, i, chain) for i in range(mdp.n)]


def truncated_q(mdp: FactoredMdp, policy: SoftmaxPolicy, i: int, kappa: int,
                weight_scheme: str = "conditional", chain: InducedChain | None = None,
                Q: np.ndarray | None = None) -> np.ndarray:
    """Truncated Q over Z_{N_i^kappa}.

    ``weight_scheme`` is "conditional" (weights pi(z_- | z_N)) or "uniform".
    """
    chain = _chain(mdp, policy, chain)
    if Q is None:
        Q = local_q_function(mdp, policy, i, chain)
    nbrs = mdp.graph.kappa_neighborhood(i, kappa)
    loc = chain.local_index(nbrs)
    size = mdp.pair_index(nbrs).size
    if weight_scheme in ("conditional", "conditional-stationary"):
        mass = np.bincount(loc, weights=chain.pi, minlength=size)
        if np.any(mass <= 0):
            k = int(np.flatnonzero(mass <= 0)[0])
            raise NumericalError(
                f"conditional weights undefined: local pair {mdp.pair_index(nbrs).decode(k)} "
                f"of agents {nbrs} has zero stationary mass")
        return np.bincount(loc, weights=chain.pi * Q, minlength=size) / mass
    if weight_scheme == "uniform":
        return np.bincount(loc, weights=Q, minlength=size) / np.bincount(loc, minlength=size)
    raise ValueError(f"unknown weight scheme {weight_scheme!r}")


def max_perturbation(chain: InducedChain, Q: np.ndarray, i: int, kappa: int) -> float:
    """Exact sup of |Q(z) - Q(z')| over pairs agreeing on N_i^kappa."""
    nbrs = chain.mdp.graph.kappa_neighborhood(i, kappa)
    loc = chain.local_index(nbrs)
    size = chain.mdp.pair_index(nbrs).size
    hi = np.full(size, -np.inf)
    lo = np.full(size, np.inf)
    np.maximum.at(hi, loc, Q)
    np.minimum.at(lo, loc, Q)
    return float(np.max(hi - lo))


# -- policy gradients -------------------------------------------------------------

def _score_expectation(chain: InducedChain, i: int, weight: np.ndarray) -> np.ndarray:
    """sum_z weight(z) * grad log zeta_i(a_i|s_i) as an (|S_i|, |A_i|) table."""
    S, A = chain.policy.theta[i].shape
    s, a = chain.s_coords[:, i], chain.a_coords[:, i]
    G = np.bincount(s * A + a, weights=weight, minlength=S * A).reshape(S, A)
    row = G.sum(axis=1, keepdims=True)
    return G - chain.policy.tables()[i] * row


def exact_policy_gradient(mdp: FactoredMdp, policy: SoftmaxPolicy,
                          chain: InducedChain | None = None, qs=None) -> list[np.ndarray]:
    chain = _chain(mdp, policy, chain)
    qs = qs if qs is not None else all_q_functions(mdp, policy, chain)
    Qbar = np.mean(qs, axis=0)
    return [_score_expectation(chain, i, chain.pi * Qbar) for i in range(mdp.n)]


def approx_policy_gradient(mdp: FactoredMdp, policy: SoftmaxPolicy, kappa: int,
                           weight_scheme: str = "conditional",
                           chain: InducedChain | None = None, qs=None) -> list[np.ndarray]:
    """Gradient estimate built from truncated Q functions of the kappa-hop neighbours."""
    chain = _chain(mdp, policy, chain)
    qs = qs if qs is not None else all_q_functions(mdp, policy, chain)
    n = mdp.n
    lifted = []
    for j in range(n):
        qt = truncated_q(mdp, policy, j, kappa, weight_scheme, chain, qs[j])
        lifted.append(qt[chain.local_index(mdp.graph.kappa_neighborhood(j, kappa))])
    out = []
    for i in range(n):
        f = sum(lifted[j] for j in mdp.graph.kappa_neighborhood(i, kappa)) / n
        out.append(_score_expectation(chain, i, chain.pi * f))
    return out


def gradient_norm(grads: Sequence[np.ndarray]) -> float:
    return float(math.sqrt(sum(float(np.sum(g * g)) for g in grads)))


# -- interaction matrix -------------------------------------------------------------

@dataclass
class InteractionMatrix:
    C: np.ndarray
    row_sums: np.ndarray = field(init=False)
    rho_bound: float = field(init=False)

    def __post_init__(self):
        self.row_sums = self.C.sum(axis=1)
        self.rho_bound = float(self.row_sums.max())

    @property
    def contracting(self) -> bool:
        return self.rho_bound < 1.0


def _max_pairwise_tv(x: np.ndarray) -> float:
    """x has shape (m, ..., k): max over pairs along axis 0 of 0.5*||x[p]-x[q]||_1."""
    best = 0.0
    for p in range(x.shape[0]):
        for q in range(p + 1, x.shape[0]):
            d = 0.5 * np.abs(x[p] - x[q]).sum(axis=-1)
            best = max(best, float(d.max()))
    return best


def interaction_matrix(mdp: FactoredMdp, guard: int = 10**6) -> InteractionMatrix:
    n = mdp.n
    C = np.zeros((n, n))
    for i in range(n):
        nb = mdp.graph.neighbors[i]
        idx = mdp.kernel_index[i]
        if idx.size * mdp.spaces[i].state_count > guard:
            raise SizeGuardError(f"kernel of agent {i} has {idx.size} rows, above guard {guard}")
        # axes: (a_i, s_nb[-1], ..., s_nb[0], s_i') -> (s_nb[0], ..., s_nb[-1], a_i, s_i')
        K = mdp.kernels[i].table.reshape(tuple(reversed(idx.radices)) + (-1,))
        m = len(nb)
        K = np.transpose(K, tuple(range(m, -1, -1)) + (m + 1,))
        for k, j in enumerate(nb):
            if j != i:
                C[i, j] = _max_pairwise_tv(np.moveaxis(K, k, 0))
            else:
                # pair (s_i, a_i) varies jointly; other neighbour states fixed
                X = np.moveaxis(K, (k, m), (0, 1))
                X = X.reshape((X.shape[0] * X.shape[1],) + X.shape[2:])
                C[i, j] = _max_pairwise_tv(X)
    return InteractionMatrix(C)


# -- decay measurements ------------------------------------------------------------

@dataclass
class DecayProfile:
    """Perturbation magnitudes ``values[kappa][trial]``."""

    values: np.ndarray  # (kappa_max + 1, trials)

    @property
    def kappas(self) -> np.ndarray:
        return np.arange(self.values.shape[0])

    def percentiles(self, qs=(10, 50, 90)) -> np.ndarray:
        return np.percentile(self.values, qs, axis=1)

    @property
    def median(self) -> np.ndarray:
        return np.median(self.values, axis=1)

    def fitted_rate(self) -> float:
        return fit_exponential_rate(self.median)


def fit_exponential_rate(medians: Sequence[float]) -> float:
    """exp(slope) of a least-squares line through log(median) vs kappa (positive entries only)."""
    m = np.asarray(medians, dtype=float)
    k = np.flatnonzero(m > 0)
    if k.size < 2:
        return 0.0
    slope = np.polyfit(k, np.log(m[k]), 1)[0]
    return float(np.exp(slope))


def decay_profile(mdp: FactoredMdp, policy: SoftmaxPolicy, i: int, kappa_max: int, trials: int,
                  rng: np.random.Generator, chain: InducedChain | None = None,
                  Q: np.ndarray | None = None) -> DecayProfile:
    """Monte-Carlo sweep of Definition-style perturbations with an exact Q_i.

    Each trial draws two joint pairs uniformly; for every kappa the second pair
    is overwritten inside N_i^kappa with the first pair's coordinates.
    """
    chain = _chain(mdp, policy, chain)
    if Q is None:
        Q = local_q_function(mdp, policy, i, chain)
    radices = np.asarray(chain.zindex.radices)
    strides = np.asarray(chain.zindex.strides)
    out = np.zeros((kappa_max + 1, trials))
    for t in range(trials):
        z = rng.integers(0, radices)
        zp = rng.integers(0, radices)
        qz = Q[int(z @ strides)]
        for kappa in range(kappa_max + 1):
            nbrs = list(mdp.graph.kappa_neighborhood(i, kappa))
            w = zp.copy()
            w[nbrs] = z[nbrs]
            out[kappa, t] = abs(qz - Q[int(w @ strides)])
    return DecayProfile(out)


# -- mixing norm and critic fixed point ---------------------------------------------

def mixing_norm(chain) -> float:
    """||P - 1 pi^T||_D with D = diag(pi)."""
    if isinstance(chain, InducedChain):
        pi = chain.pi
        if chain.size <= DIRECT_SOLVE_LIMIT:
            P = chain.matrix()
        else:
            d, di = np.sqrt(pi), 1.0 / np.sqrt(pi)
            op = spla.LinearOperator(
                (chain.size, chain.size), dtype=float,
                matvec=lambda x: d * (chain.apply(di * x.ravel()) - pi @ (di * x.ravel())),
                rmatvec=lambda y: di * (chain.apply_transpose(d * y.ravel()) - pi * np.sum(d * y.ravel())))
            return float(spla.svds(op, k=1, return_singular_vectors=False, tol=1e-12)[0])
    else:
        P = np.asarray(chain, dtype=float)
        pi = stationary_distribution(P)
    d = np.sqrt(pi)
    B = d[:, None] * (P - np.outer(np.ones_like(pi), pi)) / d[None, :]
    lam = np.linalg.eigvalsh(B.T @ B)
    return float(math.sqrt(max(lam[-1], 0.0)))


@dataclass
class CriticFixedPoint:
    mu: float
    q_hat: np.ndarray  # full length |Z_{N_i^kappa}|, dummy entry = 0
    dummy: int
    neighborhood: tuple[int, ...]
    residual: float


def _incidence(chain: InducedChain, nbrs) -> tuple[sp.csr_matrix, np.ndarray, int]:
    loc = chain.local_index(nbrs)
    size = chain.mdp.pair_index(nbrs).size
    Phi = sp.csr_matrix((np.ones(chain.size), (np.arange(chain.size), loc)), shape=(chain.size, size))
    return Phi, loc, size


def critic_fixed_point(mdp: FactoredMdp, policy: SoftmaxPolicy, i: int, kappa: int,
                       dummy: int = 0, chain: InducedChain | None = None) -> CriticFixedPoint:
    """Solve the frozen-policy fixed point of the average-reward TD critic.

    Unknowns are (mu, Q_hat without the dummy coordinate); the system is
    ``[[1, 0], [Phi^T pi, Phi^T D (Phi - P Phi)]] x = [pi^T r, Phi^T D r]``.
    """
    chain = _chain(mdp, policy, chain)
    nbrs = mdp.graph.kappa_neighborhood(i, kappa)
    Phi, loc, size = _incidence(chain, nbrs)
    if not 0 <= dummy < size:
        raise ValueError(f"dummy pair {dummy} outside [0, {size})")
    if size > DIRECT_SOLVE_LIMIT * 4:
        raise SizeGuardError(f"critic table of size {size} too large for a direct solve")
    pi = chain.pi
    r = chain.reward(i)
    PPhi = chain.T @ (chain.Pi @ Phi).toarray()
    PhiTD = Phi.T.multiply(pi[None, :]).tocsr()
    A_full = np.diag(np.bincount(loc, weights=pi, minlength=size)) - PhiTD @ PPhi
    keep = np.arange(size) != dummy
    m = size - 1
    G = np.zeros((m + 1, m + 1))
    G[0, 0] = 1.0
    G[1:, 0] = np.asarray(PhiTD.sum(axis=1)).ravel()[keep]
    G[1:, 1:] = A_full[np.ix_(keep, keep)]
    h = np.concatenate([[pi @ r], (PhiTD @ r)[keep]])
    try:
        x = np.linalg.solve(G, h)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"critic fixed-point system is singular for agent {i}: {exc}") from exc
    resid = float(np.abs(G @ x - h).max())
    if resid > 1e-10:
        raise NumericalError(f"critic fixed-point residual {resid:.3e}")
    q = np.zeros(size)
    q[keep] = x[1:]
    return CriticFixedPoint(float(x[0]), q, dummy, nbrs, resid)


def critic_approximation_error(chain: InducedChain, Q: np.ndarray, fp: CriticFixedPoint):
    """Return ``(rms, c_i)``: pi-weighted RMS of Phi q_hat + c_i - Q_i with the minimising c_i."""
    lifted = fp.q_hat[chain.local_index(fp.neighborhood)]
    diff = Q - lifted
    c = float(chain.pi @ diff)
    rms = math.sqrt(float(chain.pi @ (lifted + c - Q) ** 2))
    return rms, c


def decay_constant(r_max: float, rho: float) -> float:
    return r_max / (1.0 - rho)


__all__ = [
    "GRAD_LOG_BOUND", "InducedChain", "induced_chain", "stationary_distribution", "average_reward",
    "local_q_function", "discounted_q", "truncated_q", "max_perturbation", "exact_policy_gradient",
    "approx_policy_gradient", "gradient_norm", "InteractionMatrix", "interaction_matrix",
    "DecayProfile", "decay_profile", "fit_exponential_rate", "mixing_norm", "CriticFixedPoint",
    "critic_fixed_point", "critic_approximation_error", "decay_constant",
]
