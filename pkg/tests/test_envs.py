import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fwal._rng import make_rng
from fwal.envs import (
    DOWN,
    FASTER,
    NOOP,
    RIGHT,
    SLOWER,
    UP,
    CarSimConfig,
    GridworldConfig,
    build_carsim,
    build_gridworld,
    random_environment,
)
from fwal.mdp import (
    DeterministicPolicy,
    MdpSpec,
    StochasticPolicy,
    feature_expectations_exact,
    truncated_feature_expectations,
)
from fwal.simulator import MatrixSimulator, rollout_feature_sums

ENVS = {
    "grid": lambda: build_gridworld(),
    "grid_slip": lambda: build_gridworld(GridworldConfig(slip=0.2)),
    "grid_compact": lambda: build_gridworld(GridworldConfig(features="compact", size=4, goal=(2, 3))),
    "car": lambda: build_carsim(),
}


def _chi2_pvalue(counts, probs):
    stats = pytest.importorskip("scipy.stats")
    support = probs > 0
    assert counts[~support].sum() == 0, "simulator reached a state with zero probability"
    if support.sum() == 1:
        return 1.0
    n = counts.sum()
    return stats.chisquare(counts[support], n * probs[support]).pvalue


@pytest.mark.parametrize("name", list(ENVS))
def test_simulator_matches_matrix(name):
    env = ENVS[name]()
    P = env.mdp.transitions
    S, A = env.mdp.n_states, env.mdp.n_actions
    rng = make_rng(0, 1)
    sim_rng = make_rng(0, 2)
    # every deterministic row exactly, and a sample of stochastic rows with 10^4 draws each
    stochastic = []
    for a in range(A):
        for s in range(S):
            if P[a, s].max() == 1.0:
                assert env.simulator.step_one(s, a, sim_rng) == int(np.argmax(P[a, s]))
            else:
                stochastic.append((s, a))
    picks = [stochastic[i] for i in rng.choice(len(stochastic), size=min(6, len(stochastic)), replace=False)]
    for s, a in picks:
        nxt = env.simulator.step(np.full(10_000, s), np.full(10_000, a), sim_rng)
        counts = np.bincount(nxt, minlength=S)
        assert _chi2_pvalue(counts, P[a, s]) > 0.01
    if name in ("grid_slip", "car"):
        assert picks


@pytest.mark.parametrize("name", list(ENVS))
def test_features_in_unit_box_and_json_export(name, tmp_path):
    env = ENVS[name]()
    assert env.mdp.features.min() >= 0 and env.mdp.features.max() <= 1
    env.mdp.save(tmp_path / "m.json")
    back = MdpSpec.load(tmp_path / "m.json")
    np.testing.assert_array_equal(back.transitions, env.mdp.transitions)


# --- gridworld -----------------------------------------------------------------


def test_gridworld_wall_convention():
    env = build_gridworld()
    sim, P = env.simulator, env.mdp.transitions
    n = 5
    s = 2 * n + (n - 1)  # row 2, rightmost column
    assert sim.step_one(s, RIGHT, None) == s
    assert P[RIGHT, s, s] == 1.0
    assert sim.step_one(0, UP, None) == 0
    assert sim.step_one(0, DOWN, None) == n


def test_gridworld_goal_restarts():
    env = build_gridworld(GridworldConfig(start=(1, 1)))
    goal, start = 24, 6
    for a in range(4):
        assert env.simulator.step_one(goal, a, None) == start
        assert env.mdp.transitions[a, goal, start] == 1.0


def test_gridworld_config_validation():
    with pytest.raises(ValueError):
        GridworldConfig(goal=(5, 0))
    with pytest.raises(ValueError):
        GridworldConfig(features="pixels")
    with pytest.raises(ValueError):
        build_gridworld(GridworldConfig(cell_rewards=(1.0, 2.0)))


def test_gridworld_expert_reaches_goal_value():
    env = build_gridworld()
    pol = env.expert_policy()
    # shortest path is 8 moves, then one step back to start and 8 more: the goal is hit every 9 steps
    phi = feature_expectations_exact(env.mdp, pol)
    gamma = env.mdp.gamma
    assert phi[24] == pytest.approx(gamma**8 / (1 - gamma**9), rel=1e-12)


def test_uniform_policy_one_hot_partition_of_unity():
    env = build_gridworld()
    uni = StochasticPolicy.uniform(25, 4)
    gamma = env.mdp.gamma
    assert feature_expectations_exact(env.mdp, uni).sum() == pytest.approx(1 / (1 - gamma), rel=1e-12)
    H = 40
    sums, _ = rollout_feature_sums(env.simulator, uni, 200, horizon=H, seed=1)
    np.testing.assert_allclose(sums.sum(axis=1), (1 - gamma**H) / (1 - gamma), rtol=1e-12)


def test_gridworld_mc_matches_exact():
    env = build_gridworld(GridworldConfig(slip=0.2))
    pol = DeterministicPolicy.random(25, 4, make_rng(3))
    H = 60
    sums, _ = rollout_feature_sums(env.simulator, pol, 2000, horizon=H, seed=4)
    se = sums.std(axis=0, ddof=1) / np.sqrt(len(sums))
    exact = truncated_feature_expectations(env.mdp, pol, H)
    assert np.all(np.abs(sums.mean(axis=0) - exact) <= 3 * se + 1e-12)


# --- car simulator ---------------------------------------------------------------


def test_car_state_count_and_k():
    env = build_carsim()
    assert env.mdp.n_states == 5 * 3 * 3 * 8 == 360
    assert env.k == 3
    np.testing.assert_allclose(np.linalg.norm(env.true_w), 1.0)


def test_car_parked_off_road():
    env = build_carsim(CarSimConfig(start_slot=0))
    pol = DeterministicPolicy.constant(env.mdp.n_states, NOOP)
    gamma = env.mdp.gamma
    phi = feature_expectations_exact(env.mdp, pol)
    assert phi[1] == 0.0
    assert phi[2] == pytest.approx(1 / (1 - gamma), rel=1e-12)
    H = 40
    sums, _ = rollout_feature_sums(env.simulator, pol, 50, horizon=H, seed=0)
    np.testing.assert_allclose(sums[:, 2], (1 - gamma**H) / (1 - gamma), rtol=1e-12)
    assert np.all(sums[:, 1] == 0)


def test_car_speed_dominance():
    env = build_carsim()
    S = env.mdp.n_states
    fast = feature_expectations_exact(env.mdp, DeterministicPolicy.constant(S, FASTER))
    slow = feature_expectations_exact(env.mdp, DeterministicPolicy.constant(S, SLOWER))
    assert fast[0] > slow[0]


def test_car_only_respawn_is_random():
    env = build_carsim()
    P = env.mdp.transitions
    _, _, _, row = env.simulator.decode(np.arange(env.mdp.n_states))
    last = row == env.simulator.cfg.n_rows - 1
    n_succ = (P > 0).sum(axis=2)
    assert np.all(n_succ[:, ~last] == 1)
    assert np.all(n_succ[:, last] == 3)


def test_car_collision_fires_in_shared_cell():
    env = build_carsim()
    sim = env.simulator
    agent_row = sim.cfg.n_rows - 2
    s = sim.encode(2, 0, 1, agent_row)  # slot 2 is lane 1
    assert env.mdp.features[s, 1] == 1.0
    assert env.mdp.features[sim.encode(2, 0, 0, agent_row), 1] == 0.0


def test_car_mc_within_three_standard_errors():
    env = build_carsim()
    pol = env.expert_policy()
    H = 40
    sums, _ = rollout_feature_sums(env.simulator, pol, 1000, horizon=H, seed=8)
    se = sums.std(axis=0, ddof=1) / np.sqrt(len(sums))
    exact = truncated_feature_expectations(env.mdp, pol, H)
    # features that are constant along every trajectory have zero spread
    assert np.all(np.abs(sums.mean(axis=0) - exact) <= 3 * se + 1e-9)


def test_car_config_validation():
    with pytest.raises(ValueError):
        CarSimConfig(n_rows=2)
    with pytest.raises(ValueError):
        CarSimConfig(start_slot=9)


# --- random tiny environments ------------------------------------------------------


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_random_environment_is_valid_and_seeded(seed):
    a, b = random_environment(seed), random_environment(seed)
    np.testing.assert_array_equal(a.mdp.transitions, b.mdp.transitions)
    np.testing.assert_array_equal(a.true_w, b.true_w)
    assert isinstance(a.simulator, MatrixSimulator)
    assert a.mdp.features.min() >= 0 and a.mdp.features.max() <= 1
