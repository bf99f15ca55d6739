"""Step-simulator view of an MDP and Monte Carlo rollouts.

A simulator exposes ``reset(rng, n)`` and ``step(states, actions, rng)`` over
integer state arrays, plus scalar ``reset_one`` / ``step_one`` used by
Q-learning. Features are observable per state through ``features``.
"""

from __future__ import annotations

import numpy as np

from fwal._rng import make_rng
from fwal.mdp import DeterministicPolicy, MdpSpec, StochasticPolicy

GEOMETRIC_MAX_STEPS = 100_000


class Simulator:
    """Base class. Subclasses set ``n_states``, ``n_actions``, ``gamma``,
    ``features`` and implement :meth:`reset` and :meth:`step`.

    ``mdp`` is the matching matrix view when one exists (used by exact-mode
    oracles and by consistency checks); it may be ``None``.
    """

    n_states: int
    n_actions: int
    gamma: float
    features: np.ndarray
    mdp: MdpSpec | None = None

    @property
    def k(self) -> int:
        return self.features.shape[1]

    def reset(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def step(self, states: np.ndarray, actions: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def reset_one(self, rng: np.random.Generator) -> int:
        return int(self.reset(rng, 1)[0])

    def step_one(self, state: int, action: int, rng: np.random.Generator) -> int:
        return int(self.step(np.array([state]), np.array([action]), rng)[0])


class MatrixSimulator(Simulator):
    """Samples transitions directly from an :class:`MdpSpec`."""

    def __init__(self, mdp: MdpSpec):
        self.mdp = mdp
        self.n_states = mdp.n_states
        self.n_actions = mdp.n_actions
        self.gamma = mdp.gamma
        self.features = mdp.features
        self._cum_P = np.cumsum(mdp.transitions, axis=2)
        self._cum_P[:, :, -1] = 1.0
        self._cum_D = np.cumsum(mdp.initial_dist)
        self._cum_D[-1] = 1.0

    def reset(self, rng, n):
        return np.searchsorted(self._cum_D, rng.random(n), side="right")

    def step(self, states, actions, rng):
        rows = self._cum_P[actions, states]
        u = rng.random(len(states))
        return (rows <= u[:, None]).sum(axis=1)

    def reset_one(self, rng):
        return int(np.searchsorted(self._cum_D, rng.random(), side="right"))

    def step_one(self, state, action, rng):
        return int(np.searchsorted(self._cum_P[action, state], rng.random(), side="right"))


def as_simulator(env) -> Simulator:
    if isinstance(env, Simulator):
        return env
    if isinstance(env, MdpSpec):
        return MatrixSimulator(env)
    sim = getattr(env, "simulator", None)
    if isinstance(sim, Simulator):
        return sim
    raise TypeError(f"expected MdpSpec, Simulator or environment, got {type(env).__name__}")


def _action_sampler(policy, n_states: int, n_actions: int):
    if isinstance(policy, DeterministicPolicy):
        table = policy.as_array()
        return lambda s, rng: table[s]
    probs = policy.probs if isinstance(policy, StochasticPolicy) else np.asarray(policy)
    if probs.ndim == 1:
        table = probs.astype(np.intp)
        return lambda s, rng: table[s]
    if np.all((probs == 0) | (probs == 1)):
        table = probs.argmax(axis=1)
        return lambda s, rng: table[s]
    cum = np.cumsum(probs, axis=1)
    cum[:, -1] = 1.0

    def sample(s, rng):
        u = rng.random(len(s))
        return (cum[s] <= u[:, None]).sum(axis=1)

    return sample


def rollout_feature_sums(
    sim: Simulator,
    policy,
    n_rollouts: int,
    horizon: int | None = None,
    seed=None,
    geometric: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Run ``n_rollouts`` independent trajectories from the initial distribution.

    Returns per-trajectory feature sums of shape ``(n_rollouts, k)`` and the
    trajectory lengths. With ``geometric=False`` each trajectory has exactly
    ``horizon`` steps and the sum is discounted. With ``geometric=True`` the
    trajectory stops after each visited state with probability ``1 - gamma``
    and the sum is undiscounted, which makes its mean an unbiased estimate of
    the infinite-horizon feature expectations.
    """
    if n_rollouts < 1:
        raise ValueError("n_rollouts must be >= 1")
    if not geometric and (horizon is None or horizon < 1):
        raise ValueError("horizon must be >= 1")
    rng = make_rng(seed)
    act = _action_sampler(policy, sim.n_states, sim.n_actions)
    phi = sim.features
    sums = np.zeros((n_rollouts, sim.k))
    lengths = np.zeros(n_rollouts, dtype=np.int64)
    states = np.asarray(sim.reset(rng, n_rollouts))

    if not geometric:
        disc = 1.0
        for t in range(horizon):
            sums += disc * phi[states]
            if t + 1 < horizon:
                states = np.asarray(sim.step(states, act(states, rng), rng))
            disc *= sim.gamma
        lengths[:] = horizon
        return sums, lengths

    active = np.arange(n_rollouts)
    cap = GEOMETRIC_MAX_STEPS if horizon is None else horizon
    for _ in range(cap):
        sums[active] += phi[states]
        lengths[active] += 1
        keep = rng.random(len(active)) < sim.gamma
        active, states = active[keep], states[keep]
        if not len(active):
            break
        states = np.asarray(sim.step(states, act(states, rng), rng))
    return sums, lengths


def estimate_feature_expectations(
    sim: Simulator, policy, n_rollouts: int, horizon: int, seed=None
) -> np.ndarray:
    sums, _ = rollout_feature_sums(sim, policy, n_rollouts, horizon=horizon, seed=seed)
    return sums.mean(axis=0)
