import numpy as np

from netac.checks import verify_instance
from netac.generators import random_instance
from netac.graph import InteractionGraph
from netac.model import AgentSpace, FactoredMdp
from netac.policy import SoftmaxPolicy


def test_decoupled_instance_has_zero_errors():
    g = InteractionGraph.line(3)
    rng = np.random.default_rng(0)
    kernels = []
    for i in range(3):
        rows = 2 ** len(g.neighbors[i]) * 2
        kernels.append(np.tile(rng.dirichlet([1, 1]), (rows, 1)))
    mdp = FactoredMdp(g, [AgentSpace(2, 2)] * 3, kernels, [np.full((2, 2), 0.5)] * 3)
    rep = verify_instance(mdp, SoftmaxPolicy.uniform(mdp.state_counts, mdp.action_counts))
    assert rep["status"] == "pass"
    for entry in rep["per_kappa"]:
        for c in entry["checks"].values():
            assert c["max_error"] <= 1e-12


def test_contracting_instance_passes():
    seed = next(s for s in range(50)
                if verify_instance(*random_instance(3, "line", 2, 3, seed=s, coupling=0.5),
                                   critic=False)["condition_met"])
    rep = verify_instance(*random_instance(3, "line", 2, 3, seed=seed, coupling=0.5))
    assert rep["all_pass"] is True and rep["rho_bound"] < 1


def test_strong_coupling_marks_bounds_not_applicable():
    mdp, pol = random_instance(3, "line", 2, 3, seed=0)
    rep = verify_instance(mdp, pol)
    assert rep["rho_bound"] >= 1
    assert rep["status"] == "condition not met" and rep["all_pass"] is None
    decay = rep["per_kappa"][0]["checks"]["decay"]
    assert decay["pass"] is None and decay["bound"] is None and decay["max_error"] > 0
