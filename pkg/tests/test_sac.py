import numpy as np
import pytest

from netac import sac
from netac.errors import ConfigError
from netac.generators import random_instance
from netac.policy import SoftmaxPolicy
from netac.sac import (CriticState, StepSchedule, Trainer, TrainerConfig, TruncatedQTable,
                       actor_step, critic_step)


def test_schedule_values_and_validation():
    s = StepSchedule(alpha0=0.5, eta0=2.0, alpha_exp=0.6, eta_exp=0.9)
    assert s.alpha(0) == 0.5
    assert s.alpha(3) == pytest.approx(0.5 / 4 ** 0.6)
    assert s.eta(3) == pytest.approx(2.0 / 4 ** 0.9)
    assert s.ratio_exponent() == pytest.approx(1 / 0.3)
    with pytest.raises(ConfigError):
        StepSchedule(alpha0=1.5)
    with pytest.raises(ConfigError):
        StepSchedule(alpha_exp=0.9, eta_exp=0.8)
    with pytest.raises(ConfigError):
        StepSchedule(alpha_exp=0.5)
    StepSchedule(eta0=0.0, alpha_exp=0.9, eta_exp=0.8)  # frozen policy: no ordering needed


def test_critic_step_arithmetic():
    st = CriticState.zeros([4], kappa=0)
    st.tables[0][2] = 0.5
    st.mu[0] = 0.2
    critic_step(st, 0, 1, 1.0, 2, alpha=0.5)
    # mu <- 0.5*0.2 + 0.5*1; Q(1) <- 0.5*0 + 0.5*(1 - 0.2 + 0.5) using the old mu
    assert st.mu[0] == pytest.approx(0.6)
    assert st.tables[0][1] == pytest.approx(0.65)
    critic_step(st, 0, 0, 1.0, 1, alpha=0.5)
    assert st.tables[0][0] == 0.0  # dummy never moves
    assert st.mu[0] == pytest.approx(0.8)


def test_table_dummy_and_running_max():
    t = TruncatedQTable(0, 1, 5, dummy=3)
    t[3] = 9.0
    assert t[3] == 0.0 and t.max_abs() == 0.0
    t[1] = -2.0
    t[2] = 1.0
    assert t.max_abs() == 2.0
    t[1] = 0.5
    assert t.max_abs() == 1.0
    np.testing.assert_array_equal(t.to_array(), [0, 0.5, 1.0, 0, 0])
    with pytest.raises(ValueError):
        TruncatedQTable(0, 0, 3, dummy=3)


def test_sparse_table_behaves_like_dense(monkeypatch):
    monkeypatch.setattr(sac, "DENSE_TABLE_LIMIT", 2)
    t = TruncatedQTable(0, 1, 6)
    assert not t.dense
    t[4] = -3.0
    t[2] = 1.0
    assert t[5] == 0.0 and t.max_abs() == 3.0
    t[4] = 0.0
    assert t.max_abs() == 1.0
    np.testing.assert_array_equal(t.to_array(), [0, 0, 1.0, 0, 0, 0])


def test_actor_step_example():
    pol = SoftmaxPolicy.uniform([1, 1], [2, 2])
    critic = CriticState.zeros([4, 4], kappa=0)
    critic.tables[0][1] = 2.0
    critic.tables[1][3] = 4.0
    grads = actor_step(pol, critic, s=[0, 0], a=[1, 1], z_local=[1, 3],
                       neighborhoods=[(0,), (1,)], eta=0.1)
    # agent 0 weight = 2/2, grad log at uniform = (-0.5, 0.5)
    np.testing.assert_allclose(grads[0], [[-0.5, 0.5]])
    np.testing.assert_allclose(grads[1], [[-1.0, 1.0]])
    np.testing.assert_allclose(pol.theta[0], [[-0.05, 0.05]])
    pol2 = SoftmaxPolicy.uniform([1, 1], [2, 2])
    actor_step(pol2, critic, [0, 0], [1, 1], [1, 3], [(0,), (1,)], eta=0.1, rescale=True)
    # rescaling shrinks the step but keeps its direction
    np.testing.assert_allclose(pol2.theta[1], pol.theta[1] / 5.0)


def _env():
    mdp, _ = random_instance(3, "line", 2, 2, seed=1, coupling=0.5)
    return mdp


def test_single_step_matches_manual_update():
    mdp = _env()
    cfg = TrainerConfig(kappa=1, horizon=1, schedule=StepSchedule(eta0=10.0))
    trainer = Trainer(mdp, cfg)
    critic = trainer.critic
    for t in critic.tables:
        t[1] = 0.3  # nonzero start so the actor moves
    before = trainer.policy.copy()
    pre = critic.copy()
    rng = np.random.default_rng(5)
    policy, m = trainer.run(rng=rng)

    # replay the same draws by hand
    rng = np.random.default_rng(5)
    probs = [np.cumsum(t, axis=1) for t in before.tables()]

    def draw(state):
        u = rng.random(3)
        return [min(int(np.searchsorted(probs[i][state[i]], u[i] * probs[i][state[i]][-1],
                                        side="right")), 1) for i in range(3)]
    s = mdp.reset(rng)
    a = draw(s)
    rewards, s1 = mdp.step(s, a, rng)
    a1 = draw(s1)
    z0, z1 = trainer.local_indices(s, a), trainer.local_indices(s1, a1)
    expect = before.copy()
    actor_step(expect, pre, s, a, z0, trainer.neighborhoods, eta=10.0)
    for i in range(3):
        critic_step(pre, i, z0[i], rewards[i], z1[i], 1.0)
    for x, y in zip(policy.theta, expect.theta):
        np.testing.assert_allclose(x, y, atol=1e-14)
    for x, y in zip(critic.tables, pre.tables):
        np.testing.assert_array_equal(x.to_array(), y.to_array())
    assert m.steps == [1]


def test_frozen_policy_does_not_move():
    mdp = _env()
    cfg = TrainerConfig(kappa=1, horizon=500, schedule=StepSchedule(eta0=0.0))
    pol, _ = Trainer(mdp, cfg).run()
    for t in pol.theta:
        np.testing.assert_array_equal(t, 0.0)


def test_run_is_deterministic():
    mdp = _env()
    cfg = TrainerConfig(kappa=1, horizon=2000, seed=3)
    p1, m1 = Trainer(mdp, cfg).run()
    p2, m2 = Trainer(mdp, cfg).run()
    np.testing.assert_array_equal(p1.flat(), p2.flat())
    np.testing.assert_array_equal(m1.reward_trace, m2.reward_trace)
    assert m1.mean_mu_hat == m2.mean_mu_hat


def test_critic_kappa_mismatch_rejected():
    mdp = _env()
    with pytest.raises(ConfigError):
        Trainer(mdp, TrainerConfig(kappa=1), critic=CriticState.zeros([4, 4, 4], kappa=0))


def test_oracle_hook_recorded():
    mdp = _env()
    cfg = TrainerConfig(kappa=0, horizon=300, oracle_every=100, cadence=50)
    _, m = Trainer(mdp, cfg).run(sac.oracle_hook_for(mdp))
    assert [s for s, _ in m.extra["J_exact"]] == [0, 100, 200, 300]
    assert m.steps == [50, 100, 150, 200, 250, 300]
    assert m.terminal_reward(300) == pytest.approx(m.reward_trace.mean())


def test_critic_step_spec_examples():
    st = CriticState.zeros([4], kappa=0)
    critic_step(st, 0, 1, 1.0, 2, alpha=0.5)
    assert st.tables[0][1] == 0.5 and st.mu[0] == 0.5
    # next pair is the dummy: bootstrap reads 0
    st.tables[0][2] = 0.8
    critic_step(st, 0, 2, 1.0, 0, alpha=0.5)
    assert st.tables[0][2] == pytest.approx(0.5 * 0.8 + 0.5 * (1.0 - 0.5))
    # current pair is the dummy: tables unchanged
    before = st.tables[0].to_array()
    critic_step(st, 0, 0, 1.0, 3, alpha=0.5)
    np.testing.assert_array_equal(st.tables[0].to_array(), before)


def test_zero_critic_leaves_policy_unchanged():
    pol = SoftmaxPolicy.uniform([2, 2], [2, 2])
    critic = CriticState.zeros([4, 4], kappa=0)
    grads = actor_step(pol, critic, [1, 0], [0, 1], [2, 1], [(0,), (1,)], eta=1.0, rescale=True)
    assert sac.rescale_factor(critic) == 1.0
    for g, t in zip(grads, pol.theta):
        np.testing.assert_array_equal(g, 0.0)
        np.testing.assert_array_equal(t, 0.0)


def test_two_agent_hand_computed_actor():
    pol = SoftmaxPolicy.uniform([1, 1], [2, 2])
    critic = CriticState.zeros([2, 2], kappa=0)
    critic.tables[0][1] = 3.0
    critic.tables[1][1] = -1.0
    # kappa = 0 but both agents share the sum term when each lists the other
    nbrs = [(0, 1), (0, 1)]
    actor_step(pol, critic, [0, 0], [1, 1], [1, 1], nbrs, eta=0.2)
    # sum term (3 - 1)/2 = 1; update = eta * grad_log = 0.2 * (-0.5, 0.5)
    for t in pol.theta:
        np.testing.assert_allclose(t, [[-0.1, 0.1]])


def test_only_visited_entries_change():
    mdp, _ = random_instance(3, "line", 2, 2, seed=1, coupling=0.5)
    trainer = Trainer(mdp, TrainerConfig(kappa=1, horizon=1))
    before = [t.to_array() for t in trainer.critic.tables]
    trainer.run(rng=np.random.default_rng(0))
    for i, t in enumerate(trainer.critic.tables):
        changed = np.flatnonzero(t.to_array() != before[i])
        assert changed.size <= 1 and t[t.dummy] == 0.0


def _frozen(mdp, horizon, seed=0, kappa=1):
    cfg = TrainerConfig(kappa=kappa, horizon=horizon, schedule=StepSchedule(eta0=0.0), seed=seed)
    trainer = Trainer(mdp, cfg)
    _, m = trainer.run()
    return trainer, m


def test_mu_hat_within_three_standard_errors():
    from netac import oracle as O
    mdp, _ = random_instance(3, "line", 2, 2, seed=3, coupling=0.5)
    T = 100_000
    trainer, m = _frozen(mdp, T)
    _, Ji = O.average_reward(mdp, trainer.policy)
    # batch-means standard error of each agent's reward average
    rng = np.random.default_rng(0)
    s = mdp.reset(rng)
    rewards = np.empty((T, 3))
    for t in range(T):
        a = trainer.policy.sample(s, rng)
        r, s = mdp.step(s, a, rng)
        rewards[t] = r
    batches = rewards.reshape(100, -1, 3).mean(axis=1)
    se = batches.std(axis=0, ddof=1) / np.sqrt(100)
    for i in range(3):
        assert abs(trainer.critic.mu[i] - Ji[i]) <= 3 * se[i]


@pytest.mark.slow
def test_frozen_iterates_bounded_over_million_steps():
    from netac import oracle as O
    mdp, pol = random_instance(3, "line", 2, 2, seed=0, coupling=0.5)
    uniform = SoftmaxPolicy.uniform(mdp.state_counts, mdp.action_counts)
    mu_d = O.mixing_norm(O.InducedChain(mdp, uniform))
    _, m = _frozen(mdp, 1_000_000, kappa=0)
    assert m.max_abs_q <= 10 * mdp.r_max / (1 - mu_d)


def test_seeds_give_three_metric_files(tmp_path):
    from netac.cli import main
    code = main(["train", "--seeds", "0,1,2", "--horizon", "200", "--out", str(tmp_path)])
    assert code == 0
    assert len(list(tmp_path.glob("metrics_seed*.csv"))) == 3
    assert len(list(tmp_path.glob("train_summary.json"))) == 1
