"""Tabular MDPs without reward, policies and feature expectations.

Feature expectations are state-based: ``Phi(pi) = E[sum_t gamma^t phi(s_t)]``.
Exact values come from the discounted state-visitation linear system
``d = D + gamma * P_pi^T d``; Monte Carlo values come from rollouts in
:mod:`fwal.simulator`.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

PROB_TOL = 1e-9
DENSE_SOLVE_MAX_STATES = 2000


class InvalidMdpError(ValueError):
    pass


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MdpSpec:
    """A tabular MDP without reward.

    ``transitions[a, s, s2]`` is the probability of moving from ``s`` to
    ``s2`` under action ``a``; ``features[s]`` is the state feature vector in
    ``[0, 1]^k``.
    """

    transitions: np.ndarray
    gamma: float
    initial_dist: np.ndarray
    features: np.ndarray

    def __post_init__(self):
        P = _readonly(self.transitions)
        D = _readonly(self.initial_dist)
        phi = _readonly(self.features)
        if P.ndim != 3 or P.shape[1] != P.shape[2]:
            raise InvalidMdpError(f"transitions must have shape (A, S, S), got {P.shape}")
        n_actions, n_states, _ = P.shape
        if n_actions < 1 or n_states < 1:
            raise InvalidMdpError("need at least one state and one action")
        if phi.ndim == 1:
            phi = _readonly(phi[:, None])
        if phi.shape[0] != n_states:
            raise InvalidMdpError(f"features has {phi.shape[0]} rows, expected {n_states}")
        if D.shape != (n_states,):
            raise InvalidMdpError(f"initial_dist must have shape ({n_states},)")
        if not 0.0 <= float(self.gamma) < 1.0:
            raise InvalidMdpError(f"discount must lie in [0, 1), got {self.gamma}")
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=2) - 1.0) > PROB_TOL):
            raise InvalidMdpError("every transition row must be a probability vector")
        if np.any(D < 0) or abs(D.sum() - 1.0) > PROB_TOL:
            raise InvalidMdpError("initial_dist must be a probability vector")
        if np.any(phi < 0) or np.any(phi > 1):
            raise InvalidMdpError("features must lie in [0, 1]")
        object.__setattr__(self, "transitions", P)
        object.__setattr__(self, "initial_dist", D)
        object.__setattr__(self, "features", phi)
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def n_states(self) -> int:
        return self.transitions.shape[1]

    @property
    def n_actions(self) -> int:
        return self.transitions.shape[0]

    @property
    def k(self) -> int:
        return self.features.shape[1]

    @property
    def n_deterministic_policies(self) -> int:
        return self.n_actions**self.n_states

    def to_dict(self) -> dict:
        return {
            "n_states": self.n_states,
            "n_actions": self.n_actions,
            "gamma": self.gamma,
            "transitions": self.transitions.tolist(),
            "initial_dist": self.initial_dist.tolist(),
            "features": self.features.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MdpSpec":
        missing = {"n_states", "n_actions", "gamma", "transitions", "initial_dist", "features"} - set(data)
        if missing:
            raise InvalidMdpError(f"missing MDP fields: {sorted(missing)}")
        mdp = cls(
            transitions=np.asarray(data["transitions"], dtype=float),
            gamma=data["gamma"],
            initial_dist=np.asarray(data["initial_dist"], dtype=float),
            features=np.asarray(data["features"], dtype=float),
        )
        if mdp.n_states != data["n_states"] or mdp.n_actions != data["n_actions"]:
            raise InvalidMdpError("n_states / n_actions disagree with the transition tensor")
        return mdp

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> "MdpSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class DeterministicPolicy:
    """One action index per state. Hashable, so usable as a mixture atom key."""

    actions: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(int(a) for a in self.actions))
        if any(a < 0 for a in self.actions):
            raise ValueError("action indices must be nonnegative")

    def __len__(self):
        return len(self.actions)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.actions, dtype=np.intp)

    def probs(self, n_actions: int) -> np.ndarray:
        if max(self.actions, default=0) >= n_actions:
            raise ValueError("action index out of range")
        out = np.zeros((len(self.actions), n_actions))
        out[np.arange(len(self.actions)), self.actions] = 1.0
        return out

    @classmethod
    def constant(cls, n_states: int, action: int = 0) -> "DeterministicPolicy":
        return cls((action,) * n_states)

    @classmethod
    def random(cls, n_states: int, n_actions: int, rng: np.random.Generator) -> "DeterministicPolicy":
        return cls(tuple(rng.integers(n_actions, size=n_states)))


@dataclass(frozen=True, eq=False)
class StochasticPolicy:
    """Row-stochastic matrix ``probs[s, a] = pi(a | s)``.

    ``undefined_states`` lists states where the policy was filled in by
    convention (uniform) because no information was available for them.
    """

    probs: np.ndarray
    undefined_states: tuple[int, ...] = ()

    def __post_init__(self):
        p = _readonly(self.probs)
        if p.ndim != 2:
            raise ValueError("probs must be a (S, A) matrix")
        if np.any(p < 0) or np.any(np.abs(p.sum(axis=1) - 1.0) > PROB_TOL):
            raise ValueError("policy rows must be probability vectors")
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, n_states: int, n_actions: int) -> "StochasticPolicy":
        return cls(np.full((n_states, n_actions), 1.0 / n_actions))


@dataclass(frozen=True, eq=False)
class MixedPolicy:
    """A finite distribution over deterministic policies.

    Build it with :meth:`from_pairs`, which merges repeated policies by adding
    their coefficients.
    """

    atoms: tuple[tuple[DeterministicPolicy, float], ...]

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("a mixed policy needs at least one atom")
        coefs = np.array([c for _, c in self.atoms], dtype=float)
        if np.any(coefs < 0) or abs(coefs.sum() - 1.0) > PROB_TOL:
            raise ValueError("mixture coefficients must form a distribution")
        policies = [p for p, _ in self.atoms]
        if len(set(policies)) != len(policies):
            raise ValueError("duplicate policies in mixture; use MixedPolicy.from_pairs")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[DeterministicPolicy, float]]) -> "MixedPolicy":
        merged: dict[DeterministicPolicy, float] = {}
        for pol, c in pairs:
            merged[pol] = merged.get(pol, 0.0) + float(c)
        return cls(tuple(merged.items()))

    @classmethod
    def pure(cls, policy: DeterministicPolicy) -> "MixedPolicy":
        return cls(((policy, 1.0),))

    @property
    def policies(self) -> list[DeterministicPolicy]:
        return [p for p, _ in self.atoms]

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for _, c in self.atoms])

    def __len__(self):
        return len(self.atoms)

    def to_dict(self) -> dict:
        return {"atoms": [{"actions": list(p.actions), "coefficient": c} for p, c in self.atoms]}

    @classmethod
    def from_dict(cls, data: dict) -> "MixedPolicy":
        return cls.from_pairs(
            (DeterministicPolicy(a["actions"]), a["coefficient"]) for a in data["atoms"]
        )


Policy = Union[DeterministicPolicy, StochasticPolicy, np.ndarray, Sequence[int]]


def policy_probs(mdp: MdpSpec, policy: Policy) -> np.ndarray:
    """Return ``pi(a|s)`` as an (S, A) matrix for any supported policy form."""
    if isinstance(policy, StochasticPolicy):
        probs = policy.probs
    elif isinstance(policy, DeterministicPolicy):
        probs = policy.probs(mdp.n_actions)
    else:
        arr = np.asarray(policy)
        if arr.ndim == 1:
            probs = DeterministicPolicy(tuple(arr)).probs(mdp.n_actions)
        else:
            probs = arr
    if probs.shape != (mdp.n_states, mdp.n_actions):
        raise ValueError(f"policy shape {probs.shape} does not match MDP ({mdp.n_states}, {mdp.n_actions})")
    return probs


def transition_matrix(mdp: MdpSpec, policy: Policy) -> np.ndarray:
    """State-to-state transition matrix ``P_pi[s, s2]`` under ``policy``."""
    probs = policy_probs(mdp, policy)
    return np.einsum("sa,ast->st", probs, mdp.transitions)


def state_visitation(mdp: MdpSpec, policy: Policy) -> np.ndarray:
    """Discounted visitation ``d`` with ``d = D + gamma * P_pi^T d``."""
    P_pi = transition_matrix(mdp, policy)
    D = mdp.initial_dist
    if mdp.n_states <= DENSE_SOLVE_MAX_STATES:
        return np.linalg.solve(np.eye(mdp.n_states) - mdp.gamma * P_pi.T, D)
    d = D.copy()
    while True:
        nxt = D + mdp.gamma * (P_pi.T @ d)
        if np.max(np.abs(nxt - d)) < 1e-10:
            return nxt
        d = nxt


def feature_expectations_exact(mdp: MdpSpec, policy: Policy) -> np.ndarray:
    return mdp.features.T @ state_visitation(mdp, policy)


def occupancy_measure(mdp: MdpSpec, policy: Policy) -> np.ndarray:
    """``x[s, a] = d(s) * pi(a|s)``; total mass is ``1 / (1 - gamma)``."""
    probs = policy_probs(mdp, policy)
    return state_visitation(mdp, probs)[:, None] * probs


def mixed_feature_expectations(mdp: MdpSpec, psi: MixedPolicy) -> np.ndarray:
    phis = np.array([feature_expectations_exact(mdp, p) for p in psi.policies])
    return psi.coefficients @ phis


def mixed_to_stochastic(mdp: MdpSpec, psi: MixedPolicy) -> StochasticPolicy:
    """Stationary stochastic policy with the same feature expectations as ``psi``.

    Aggregates the atoms' occupancy measures weighted by their mixture
    coefficients and normalizes per state. States no atom ever reaches have a
    0/0 ratio; they get the uniform distribution and are listed in
    ``undefined_states`` (their choice cannot affect the feature expectations).
    """
    agg = np.zeros((mdp.n_states, mdp.n_actions))
    for pol, c in psi.atoms:
        agg += c * occupancy_measure(mdp, pol)
    mass = agg.sum(axis=1)
    undefined = np.flatnonzero(mass <= 0.0)
    probs = np.empty_like(agg)
    ok = mass > 0.0
    probs[ok] = agg[ok] / mass[ok, None]
    probs[~ok] = 1.0 / mdp.n_actions
    if undefined.size:
        warnings.warn(
            f"{undefined.size} state(s) unreachable under every atom; using uniform actions there",
            RuntimeWarning,
            stacklevel=2,
        )
    return StochasticPolicy(probs, tuple(int(s) for s in undefined))


def policy_value(mdp: MdpSpec, policy: Union[Policy, MixedPolicy], w: np.ndarray) -> float:
    """Value ``w . Phi(policy)`` of a policy under the linear reward ``w . phi(s)``."""
    w = np.asarray(w, dtype=float)
    if not np.all(np.isfinite(w)):
        raise ValueError("reward weights must be finite")
    if isinstance(policy, MixedPolicy):
        return float(w @ mixed_feature_expectations(mdp, policy))
    return float(w @ feature_expectations_exact(mdp, policy))


def feature_expectations_mc(
    mdp: MdpSpec,
    policy: Policy,
    n_rollouts: int,
    horizon: int,
    rng_seed: int | None = None,
) -> np.ndarray:
    """Monte Carlo estimate of the ``horizon``-truncated feature expectations."""
    from fwal.simulator import MatrixSimulator, rollout_feature_sums

    sums, _ = rollout_feature_sums(
        MatrixSimulator(mdp), policy, n_rollouts, horizon=horizon, seed=rng_seed
    )
    return sums.mean(axis=0)


def truncated_feature_expectations(mdp: MdpSpec, policy: Policy, horizon: int) -> np.ndarray:
    """Exact value of ``E[sum_{t<horizon} gamma^t phi(s_t)]`` by forward propagation."""
    P_pi = transition_matrix(mdp, policy)
    dist = mdp.initial_dist.copy()
    total = np.zeros(mdp.k)
    disc = 1.0
    for _ in range(horizon):
        total += disc * (mdp.features.T @ dist)
        dist = P_pi.T @ dist
        disc *= mdp.gamma
    return total


def all_deterministic_policies(mdp: MdpSpec) -> Iterable[DeterministicPolicy]:
    import itertools

    for actions in itertools.product(range(mdp.n_actions), repeat=mdp.n_states):
        yield DeterministicPolicy(actions)


__all__ = [
    "MdpSpec",
    "InvalidMdpError",
    "DeterministicPolicy",
    "StochasticPolicy",
    "MixedPolicy",
    "policy_probs",
    "transition_matrix",
    "state_visitation",
    "feature_expectations_exact",
    "feature_expectations_mc",
    "truncated_feature_expectations",
    "occupancy_measure",
    "mixed_feature_expectations",
    "mixed_to_stochastic",
    "policy_value",
    "all_deterministic_policies",
]
