import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import single_state, tiny, two_by_two
from fwal._rng import make_rng
from fwal.envs import build_gridworld
from fwal.mdp import DeterministicPolicy, feature_expectations_exact, transition_matrix
from fwal.oracle import (
    LinearOracle,
    OracleConfig,
    best_response_exact,
    best_response_q,
    brute_force_best_response,
    value_iteration,
)


def test_config_validation():
    with pytest.raises(ValueError):
        OracleConfig(vi_tolerance=0)
    with pytest.raises(ValueError):
        OracleConfig(epsilon_greedy=1.5)
    with pytest.raises(ValueError):
        OracleConfig(lr_schedule_coeff=-1)
    with pytest.raises(ValueError):
        OracleConfig(mode="policy_iteration")


def test_zero_reward_returns_action_zero():
    m = tiny(0)
    res = best_response_exact(m, np.zeros(2))
    assert res.policy == DeterministicPolicy((0, 0, 0))
    assert res.is_exact


def test_hand_built_two_by_two():
    # reward only in state 1: from state 0 switch, in state 1 stay
    m = two_by_two()
    res = best_response_exact(m, np.array([0.0, 1.0]))
    assert res.policy == DeterministicPolicy((1, 0))
    brute, _ = brute_force_best_response(m, np.array([0.0, 1.0]))
    assert brute == res.policy
    np.testing.assert_allclose(res.phi, feature_expectations_exact(m, res.policy))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 100_000), S=st.integers(1, 4), A=st.integers(1, 3))
def test_matches_enumeration(seed, S, A):
    m = tiny(seed, S, A)
    w = make_rng(seed, 7).normal(size=2)
    res = best_response_exact(m, w)
    _, best = brute_force_best_response(m, w)
    assert w @ res.phi >= best - 1e-8


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 100_000), c=st.floats(1e-3, 1e3))
def test_scale_invariance(seed, c):
    m = tiny(seed, 4, 3)
    w = make_rng(seed, 8).normal(size=2)
    assert best_response_exact(m, c * w).policy == best_response_exact(m, w).policy


def test_value_iteration_tolerance_certificate():
    m = tiny(5, 4, 3)
    r = m.features @ np.array([1.0, -0.5])
    V_star, _, _ = value_iteration(m, r, 1e-13)
    for tol in (1e-1, 1e-3, 1e-6):
        for greedy in (True, False):
            _, actions, _ = value_iteration(m, r, tol, evaluate_greedy=greedy)
            P = transition_matrix(m, DeterministicPolicy(tuple(actions)))
            V_pi = np.linalg.solve(np.eye(m.n_states) - m.gamma * P, r)
            assert np.all(V_pi >= V_star - tol - 1e-12)


def test_warm_start_does_not_change_answer():
    m = tiny(6, 4, 3)
    w = np.array([0.3, -1.0])
    cold = best_response_exact(m, w)
    warm = best_response_exact(m, w, warm_start=np.full(4, 5.0))
    assert cold.policy == warm.policy


def test_exact_is_deterministic():
    m = tiny(7, 4, 3)
    a = best_response_exact(m, np.array([1.0, 2.0]))
    b = best_response_exact(m, np.array([1.0, 2.0]))
    assert a.policy == b.policy and np.array_equal(a.phi, b.phi)


# --- Q-learning ---------------------------------------------------------------


def test_q_single_state_trivial():
    m = single_state(n_actions=2)
    res = best_response_q(m, np.array([1.0]), OracleConfig(mode="q_learning", n_rl_steps=5, horizon=10))
    assert res.phi[0] == pytest.approx(sum(0.9**t for t in range(10)))
    assert not res.is_exact


def test_q_zero_reward_phi_is_valid():
    env = build_gridworld()
    res = best_response_q(env.simulator, np.zeros(env.k), OracleConfig(mode="q_learning", seed=3))
    assert np.all(res.phi >= 0) and np.all(res.phi <= 1 / (1 - env.mdp.gamma))


def test_q_is_seed_deterministic():
    env = build_gridworld()
    w = np.linspace(-1, 1, env.k)
    cfg = OracleConfig(mode="q_learning", seed=11)
    a, b = best_response_q(env.simulator, w, cfg), best_response_q(env.simulator, w, cfg)
    assert a.policy == b.policy and np.array_equal(a.phi, b.phi)


def _reaches_goal(env, policy):
    cfg = env.meta["config"]
    n = cfg.size
    goal = cfg.goal[0] * n + cfg.goal[1]
    s, seen = cfg.start[0] * n + cfg.start[1], set()
    while s not in seen:
        if s == goal:
            return True
        seen.add(s)
        s = int(np.argmax(env.mdp.transitions[policy.actions[s], s]))
    return False


def _goal_hits(n_rl_steps):
    env = build_gridworld()
    assert _reaches_goal(env, best_response_exact(env.mdp, env.true_w).policy)
    hits = 0
    for seed in range(10):
        cfg = OracleConfig(mode="q_learning", n_rl_steps=n_rl_steps, seed=seed)
        hits += _reaches_goal(env, best_response_q(env.simulator, env.true_w, cfg, with_phi=False).policy)
    return hits


@pytest.mark.xfail(
    strict=True,
    reason="300 steps with a zero-initialized table and a single sparse goal reward do not propagate value "
    "back along the 8-step path to the start cell (0/10 seeds)",
)
def test_q_learning_goal_seeking_at_300_steps():
    assert _goal_hits(300) >= 8


def test_q_learning_goal_seeking_with_more_steps():
    assert _goal_hits(1000) >= 8


def test_linear_oracle_modes():
    env = build_gridworld()
    w = np.ones(env.k)
    exact = LinearOracle(env.mdp, OracleConfig())
    assert exact.is_exact
    mc = LinearOracle(env.simulator, OracleConfig(evaluation="monte_carlo", n_estimation=20, horizon=30))
    res = mc.best_response(w)
    assert not res.is_exact and res.phi.shape == (env.k,)
    q_exact = LinearOracle(env.simulator, OracleConfig(mode="q_learning", evaluation="exact"))
    res = q_exact.best_response(w)
    np.testing.assert_allclose(res.phi, feature_expectations_exact(env.mdp, res.policy))
