"""Numerical verification of the decay bounds on a single instance."""
from __future__ import annotations

import math

import numpy as np

from . import oracle as O
from .errors import SizeGuardError
from .policy import GRAD_LOG_BOUND

CHECKS = ("decay", "truncation_conditional", "truncation_uniform", "gradient_conditional",
          "gradient_uniform", "critic_rms", "discounted_decay")


def _bounds(r_max: float, rho: float, kappa: int, mu_d: float, gamma: float) -> dict:
    c = r_max / (1.0 - rho)
    tail = rho ** (kappa + 1)
    return {
        "decay": c * tail,
        "truncation_conditional": c * tail,
        "truncation_uniform": c * tail,
        "gradient_conditional": c * GRAD_LOG_BOUND * tail,
        "gradient_uniform": c * GRAD_LOG_BOUND * tail,
        "critic_rms": c * tail / (1.0 - mu_d),
        "discounted_decay": r_max / (1.0 - gamma * rho) * (gamma * rho) ** (kappa + 1),
    }


def verify_instance(mdp, policy, kappas=None, gamma: float = 0.9, slack: float = 1e-9,
                    critic: bool = True) -> dict:
    """Evaluate every bound for every agent and kappa; returns a JSON-ready report.

    Bounds only apply when the interaction row sums stay below one; otherwise
    the measured quantities are still reported and ``pass`` is ``None``.
    """
    chain = O.InducedChain(mdp, policy)
    C = O.interaction_matrix(mdp)
    rho = C.rho_bound
    applicable = C.contracting
    qs = O.all_q_functions(mdp, policy, chain)
    grad = O.exact_policy_gradient(mdp, policy, chain, qs)
    J, Ji = O.average_reward(mdp, policy, chain)
    mu_d = O.mixing_norm(chain)
    if kappas is None:
        kappas = range(mdp.graph.diameter() + 1)

    rows = []
    for kappa in kappas:
        measured = {name: [] for name in CHECKS}
        for scheme in ("conditional", "uniform"):
            h = O.approx_policy_gradient(mdp, policy, kappa, scheme, chain, qs)
            for i in range(mdp.n):
                qt = O.truncated_q(mdp, policy, i, kappa, scheme, chain, qs[i])
                lifted = qt[chain.local_index(mdp.graph.kappa_neighborhood(i, kappa))]
                measured[f"truncation_{scheme}"].append(float(np.abs(qs[i] - lifted).max()))
                measured[f"gradient_{scheme}"].append(float(np.linalg.norm(h[i] - grad[i])))
        mu_gap = 0.0
        for i in range(mdp.n):
            measured["decay"].append(O.max_perturbation(chain, qs[i], i, kappa))
            qd = O.discounted_q(mdp, policy, i, gamma, chain)
            measured["discounted_decay"].append(O.max_perturbation(chain, qd, i, kappa))
            if critic:
                try:
                    fp = O.critic_fixed_point(mdp, policy, i, kappa, 0, chain)
                except SizeGuardError:
                    measured["critic_rms"].append(float("nan"))
                    continue
                rms, _ = O.critic_approximation_error(chain, qs[i], fp)
                measured["critic_rms"].append(rms)
                mu_gap = max(mu_gap, abs(fp.mu - Ji[i]))
        bounds = _bounds(mdp.r_max, rho, kappa, mu_d, gamma) if applicable else {}
        entry = {"kappa": int(kappa), "critic_mu_gap": mu_gap, "checks": {}}
        for name in CHECKS:
            vals = [v for v in measured[name] if not math.isnan(v)]
            if not vals:
                continue
            worst = max(vals)
            bound = bounds.get(name)
            entry["checks"][name] = {
                "max_error": worst,
                "per_agent": measured[name],
                "bound": bound,
                "pass": None if bound is None else bool(worst <= bound + slack),
            }
        rows.append(entry)

    verdicts = [c["pass"] for r in rows for c in r["checks"].values() if c["pass"] is not None]
    return {
        "rho_bound": rho,
        "condition_met": applicable,
        "interaction_matrix": C.C.tolist(),
        "mu_D": mu_d,
        "min_pi": float(chain.pi.min()),
        "J": J,
        "J_agents": Ji.tolist(),
        "grad_norm": O.gradient_norm(grad),
        "per_kappa": rows,
        "all_pass": all(verdicts) if applicable else None,
        "status": ("pass" if all(verdicts) else "fail") if applicable else "condition not met",
    }
