import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import single_state, tiny, two_by_two, two_state_chain
from fwal._rng import make_rng
from fwal.mdp import (
    DeterministicPolicy,
    InvalidMdpError,
    MdpSpec,
    MixedPolicy,
    StochasticPolicy,
    feature_expectations_exact,
    feature_expectations_mc,
    mixed_feature_expectations,
    mixed_to_stochastic,
    occupancy_measure,
    policy_value,
    state_visitation,
    truncated_feature_expectations,
)


# --- validation -------------------------------------------------------------


def test_rejects_non_stochastic_rows():
    P = np.array([[[0.5, 0.4], [0.0, 1.0]]])
    with pytest.raises(InvalidMdpError):
        MdpSpec(P, 0.9, np.array([1.0, 0.0]), np.zeros((2, 1)))


def test_rejects_gamma_one():
    with pytest.raises(InvalidMdpError):
        single_state(gamma=1.0)


def test_rejects_features_outside_unit_box():
    with pytest.raises(InvalidMdpError):
        single_state(phi=(1.5,))


def test_rejects_bad_initial_dist():
    P = np.ones((1, 1, 1))
    with pytest.raises(InvalidMdpError):
        MdpSpec(P, 0.5, np.array([0.7]), np.array([[1.0]]))


def test_arrays_are_read_only():
    m = two_state_chain()
    with pytest.raises(ValueError):
        m.transitions[0, 0, 0] = 0.3


def test_json_round_trip(tmp_path):
    m = tiny(3)
    path = tmp_path / "m.json"
    m.save(path)
    data = json.loads(path.read_text())
    assert set(data) == {"n_states", "n_actions", "gamma", "transitions", "initial_dist", "features"}
    back = MdpSpec.load(path)
    np.testing.assert_array_equal(back.transitions, m.transitions)
    np.testing.assert_array_equal(back.features, m.features)
    assert back.gamma == m.gamma


def test_json_load_validates(tmp_path):
    data = two_state_chain().to_dict()
    data["transitions"][0][0] = [0.2, 0.2]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    with pytest.raises(InvalidMdpError):
        MdpSpec.load(path)


# --- feature expectations ----------------------------------------------------


def test_single_state_geometric_series():
    np.testing.assert_allclose(feature_expectations_exact(single_state(), [0]), [10.0], rtol=1e-12)


def test_two_state_chain():
    np.testing.assert_allclose(feature_expectations_exact(two_state_chain(), [0, 0]), [1.0, 1.0], atol=1e-12)


def test_zero_features_give_zero():
    P = np.ones((2, 1, 1))
    m = MdpSpec(P, 0.8, np.array([1.0]), np.zeros((1, 3)))
    np.testing.assert_array_equal(feature_expectations_exact(m, [1]), np.zeros(3))


def test_mc_single_state_truncation_window():
    m = single_state()
    est = feature_expectations_mc(m, [0], n_rollouts=7, horizon=50, rng_seed=1)
    assert 9.94 <= est[0] <= 10.0
    np.testing.assert_allclose(est, truncated_feature_expectations(m, [0], 50), rtol=1e-14)


def test_mc_deterministic_single_rollout_is_exact():
    m = two_by_two()
    pol = DeterministicPolicy((1, 0))
    est = feature_expectations_mc(m, pol, n_rollouts=1, horizon=30, rng_seed=4)
    np.testing.assert_allclose(est, truncated_feature_expectations(m, pol, 30), atol=1e-13)


def test_mc_is_seed_deterministic():
    m = tiny(1)
    a = feature_expectations_mc(m, [0, 1, 0], 50, 20, rng_seed=9)
    b = feature_expectations_mc(m, [0, 1, 0], 50, 20, rng_seed=9)
    c = feature_expectations_mc(m, [0, 1, 0], 50, 20, rng_seed=10)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_mc_rmse_shrinks_with_more_rollouts():
    m = tiny(2, n_states=4)
    pol = StochasticPolicy.uniform(4, 2)
    target = truncated_feature_expectations(m, pol, 40)
    medians = []
    for n in (25, 50, 100, 200):
        errs = [np.linalg.norm(feature_expectations_mc(m, pol, n, 40, rng_seed=s) - target) for s in range(20)]
        medians.append(np.median(errs))
    assert all(b <= a for a, b in zip(medians, medians[1:]))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), S=st.integers(1, 5), A=st.integers(1, 3), gamma=st.floats(0.0, 0.99))
def test_bounds_and_occupancy_mass(seed, S, A, gamma):
    m = tiny(seed, S, A, 2, gamma)
    rng = make_rng(seed, 1)
    pol = StochasticPolicy(rng.dirichlet(np.ones(A), size=S))
    phi = feature_expectations_exact(m, pol)
    assert np.all(phi >= -1e-12) and np.all(phi <= 1.0 / (1.0 - gamma) + 1e-9)
    x = occupancy_measure(m, pol)
    assert np.all(x >= -1e-12)
    assert abs(x.sum() - 1.0 / (1.0 - gamma)) <= 1e-6
    np.testing.assert_allclose(x.sum(axis=1), state_visitation(m, pol), atol=1e-9)


# --- occupancy measure -------------------------------------------------------


def test_occupancy_single_action():
    np.testing.assert_allclose(occupancy_measure(single_state(0.5), [0]), [[2.0]])


def test_occupancy_uniform_two_actions():
    m = single_state(0.5, n_actions=2)
    np.testing.assert_allclose(occupancy_measure(m, StochasticPolicy.uniform(1, 2)), [[1.0, 1.0]])


def test_occupancy_chain():
    np.testing.assert_allclose(occupancy_measure(two_state_chain(), [0, 0]), [[1.0], [1.0]], atol=1e-12)


# --- mixtures ---------------------------------------------------------------


def test_mixed_policy_merges_duplicates():
    p = DeterministicPolicy((0, 1))
    psi = MixedPolicy.from_pairs([(p, 0.25), (DeterministicPolicy((1, 1)), 0.5), (p, 0.25)])
    assert len(psi) == 2
    assert dict(psi.atoms)[p] == 0.5


def test_mixed_policy_rejects_duplicates_and_bad_mass():
    p = DeterministicPolicy((0,))
    with pytest.raises(ValueError):
        MixedPolicy(((p, 0.5), (p, 0.5)))
    with pytest.raises(ValueError):
        MixedPolicy(((p, 0.7),))


def test_mixed_policy_dict_round_trip():
    psi = MixedPolicy.from_pairs([(DeterministicPolicy((0, 1)), 0.3), (DeterministicPolicy((1, 0)), 0.7)])
    back = MixedPolicy.from_dict(json.loads(json.dumps(psi.to_dict())))
    assert back.atoms == psi.atoms


def test_mixed_to_stochastic_single_atom():
    m = two_by_two()
    p = DeterministicPolicy((1, 0))
    pi = mixed_to_stochastic(m, MixedPolicy.pure(p))
    np.testing.assert_allclose(pi.probs, p.probs(2), atol=1e-12)


def test_mixed_to_stochastic_half_half():
    m = two_by_two()
    p1, p2 = DeterministicPolicy((0, 0)), DeterministicPolicy((1, 1))
    psi = MixedPolicy.from_pairs([(p1, 0.5), (p2, 0.5)])
    got = feature_expectations_exact(m, mixed_to_stochastic(m, psi))
    want = 0.5 * feature_expectations_exact(m, p1) + 0.5 * feature_expectations_exact(m, p2)
    assert np.max(np.abs(got - want)) <= 1e-8


def test_mixed_to_stochastic_flags_unreachable_state():
    # state 1 is never entered: initial mass on 0 and every action keeps it there
    P = np.array([[[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [1.0, 0.0]]])
    m = MdpSpec(P, 0.9, np.array([1.0, 0.0]), np.array([[1.0], [0.0]]))
    psi = MixedPolicy.pure(DeterministicPolicy((0, 0)))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        pi = mixed_to_stochastic(m, psi)
    assert pi.undefined_states == (1,)
    np.testing.assert_allclose(pi.probs[1], [0.5, 0.5])
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)
    np.testing.assert_allclose(feature_expectations_exact(m, pi), mixed_feature_expectations(m, psi), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), S=st.integers(1, 5), A=st.integers(1, 3), n=st.integers(1, 4))
def test_mixture_linearity_and_conversion(seed, S, A, n):
    m = tiny(seed, S, A)
    rng = make_rng(seed, 2)
    atoms = [DeterministicPolicy.random(S, A, rng) for _ in range(n)]
    psi = MixedPolicy.from_pairs(zip(atoms, rng.dirichlet(np.ones(n))))
    direct = sum(c * feature_expectations_exact(m, p) for p, c in psi.atoms)
    np.testing.assert_allclose(mixed_feature_expectations(m, psi), direct, atol=1e-12)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        pi = mixed_to_stochastic(m, psi)
    assert np.max(np.abs(feature_expectations_exact(m, pi) - direct)) <= 1e-8


# --- values -----------------------------------------------------------------


def test_policy_value_examples():
    assert policy_value(single_state(), [0], np.zeros(1)) == 0.0
    assert policy_value(single_state(), [0], np.array([2.0])) == pytest.approx(20.0, rel=1e-12)


def test_policy_value_rejects_non_finite():
    with pytest.raises(ValueError):
        policy_value(single_state(), [0], np.array([np.inf]))


def test_policy_value_matches_monte_carlo_on_gridworld():
    from fwal.envs import build_gridworld
    from fwal.simulator import rollout_feature_sums

    env = build_gridworld()
    rng = make_rng(5)
    w = rng.normal(size=env.k)
    pol = DeterministicPolicy.random(env.mdp.n_states, 4, rng)
    sums, _ = rollout_feature_sums(env.simulator, pol, 2000, horizon=200, seed=6)
    returns = sums @ w
    se = returns.std(ddof=1) / np.sqrt(len(returns))
    assert abs(returns.mean() - policy_value(env.mdp, pol, w)) <= 3 * se + 1e-8
