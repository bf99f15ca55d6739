"""Linear-minimization oracle over the feature-expectations polytope.

Minimizing ``g . y`` over the polytope is the same as finding the optimal
deterministic policy for the state reward ``w . phi(s)`` with ``w = -g``.
Two planners are provided: exact value iteration on the transition tensor
and tabular Q-learning against a simulator.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from fwal._rng import make_rng
from fwal.mdp import DENSE_SOLVE_MAX_STATES, DeterministicPolicy, MdpSpec, feature_expectations_exact
from fwal.simulator import MatrixSimulator, Simulator, as_simulator, estimate_feature_expectations


@dataclass(frozen=True)
class OracleConfig:
    """Planner settings.

    ``evaluation`` picks how policies are scored: ``exact`` (dynamic
    programming), ``monte_carlo`` (``n_estimation`` rollouts of length
    ``horizon``) or ``auto`` (exact for ``exact_vi``, Monte Carlo for
    ``q_learning``). The learning rate for a state-action pair visited ``n``
    times is ``lr_schedule_coeff / n ** lr_schedule_exponent``.
    """

    mode: Literal["exact_vi", "q_learning"] = "exact_vi"
    evaluation: Literal["auto", "exact", "monte_carlo"] = "auto"
    vi_tolerance: float = 1e-10
    n_rl_steps: int = 300
    epsilon_greedy: float = 0.05
    lr_schedule_coeff: float = 0.2
    lr_schedule_exponent: float = 0.75
    n_estimation: int = 300
    horizon: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exact_vi", "q_learning"):
            raise ValueError(f"unknown oracle mode {self.mode!r}")
        if self.evaluation not in ("auto", "exact", "monte_carlo"):
            raise ValueError(f"unknown evaluation route {self.evaluation!r}")
        if self.vi_tolerance <= 0:
            raise ValueError("vi_tolerance must be positive")
        if not 0.0 <= self.epsilon_greedy <= 1.0:
            raise ValueError("epsilon_greedy must lie in [0, 1]")
        if self.lr_schedule_coeff <= 0 or self.lr_schedule_exponent <= 0:
            raise ValueError("learning-rate coefficients must be positive")
        if self.n_rl_steps < 1 or self.n_estimation < 1 or self.horizon < 1:
            raise ValueError("n_rl_steps, n_estimation and horizon must be >= 1")

    def with_seed(self, seed: int) -> "OracleConfig":
        return replace(self, seed=seed)

    @property
    def exact_evaluation(self) -> bool:
        if self.evaluation == "auto":
            return self.mode == "exact_vi"
        return self.evaluation == "exact"


@dataclass(frozen=True, eq=False)
class OracleResult:
    policy: DeterministicPolicy
    phi: np.ndarray
    planner_steps: int
    is_exact: bool
    values: np.ndarray | None = None


def value_iteration(
    mdp: MdpSpec,
    reward: np.ndarray,
    tol: float,
    V0: np.ndarray | None = None,
    evaluate_greedy: bool | None = None,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Value iteration for a state reward.

    Stops once the sup-norm Bellman residual is below ``tol*(1-gamma)/(2*gamma)``
    so the greedy policy is ``tol``-optimal whatever the starting point ``V0``.
    With ``evaluate_greedy`` (default for up to 2000 states) each sweep
    replaces ``V`` by the exact value of the current greedy policy, which
    turns the loop into policy iteration without changing the stopping
    certificate. Returns ``(V, greedy actions, sweeps)``; ties go to the
    lowest action index.
    """
    gamma = mdp.gamma
    P = mdp.transitions
    S = mdp.n_states
    if evaluate_greedy is None:
        evaluate_greedy = S <= DENSE_SOLVE_MAX_STATES
    V = np.zeros(S) if V0 is None else np.array(V0, dtype=float)
    if gamma == 0.0:
        return reward.copy(), np.zeros(S, dtype=np.intp), 1
    threshold = tol * (1.0 - gamma) / (2.0 * gamma)
    eye = np.eye(S) if evaluate_greedy else None
    n_iter = 0
    while True:
        n_iter += 1
        Q = reward[None, :] + gamma * (P @ V)
        TV = Q.max(axis=0)
        if np.max(np.abs(TV - V)) < threshold:
            break
        if evaluate_greedy:
            actions = Q.argmax(axis=0)
            P_pi = P[actions, np.arange(S)]
            V = np.linalg.solve(eye - gamma * P_pi, reward)
        else:
            V = TV
    return V, Q.argmax(axis=0), n_iter


def best_response_exact(
    mdp: MdpSpec, w: np.ndarray, cfg: OracleConfig | None = None, warm_start: np.ndarray | None = None
) -> OracleResult:
    """Optimal deterministic policy for reward ``w . phi(s)`` and its exact ``Phi``.

    Planning runs on ``w / max|w|``: the argmax is scale invariant and the
    tolerance is tightened by ``max|w|`` when ``max|w| > 1`` so the value
    guarantee holds in the original units. ``warm_start`` is an initial value
    function for the normalized reward; the result's ``values`` can be fed
    back in on the next call.
    """
    cfg = cfg or OracleConfig()
    w = np.asarray(w, dtype=float)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if scale == 0.0:
        policy = DeterministicPolicy.constant(mdp.n_states, 0)
        return OracleResult(policy, feature_expectations_exact(mdp, policy), 0, True)
    tol = cfg.vi_tolerance / max(1.0, scale)
    V, actions, n_iter = value_iteration(mdp, mdp.features @ (w / scale), tol, V0=warm_start)
    policy = DeterministicPolicy(tuple(actions))
    return OracleResult(policy, feature_expectations_exact(mdp, policy), n_iter, True, values=V)


def q_learning(
    sim: Simulator,
    reward: np.ndarray,
    n_steps: int,
    rng: np.random.Generator,
    epsilon: float = 0.05,
    lr_coeff: float = 0.2,
    lr_exponent: float = 0.75,
    horizon: int | None = None,
) -> np.ndarray:
    """Tabular epsilon-greedy Q-learning with a zero-initialized table.

    The reward is collected in the current state. Episodes restart from the
    initial distribution every ``horizon`` steps (environment-driven resets
    are part of the dynamics). The behaviour policy breaks ties between
    greedy actions at random, otherwise an all-zero table would keep
    replaying action 0. Returns the learned Q table of shape (S, A).
    """
    n_actions = sim.n_actions
    gamma = sim.gamma
    Q = np.zeros((sim.n_states, n_actions))
    visits = np.zeros((sim.n_states, n_actions), dtype=np.int64)
    r = reward.tolist()
    # draws are batched up front; the per-step loop is scalar Python
    explore = (rng.random(n_steps) < epsilon).tolist()
    random_actions = rng.integers(n_actions, size=n_steps).tolist()
    tie_draws = rng.random(n_steps).tolist()
    s = sim.reset_one(rng)
    t_in_episode = 0
    for i in range(n_steps):
        row = Q[s]
        if explore[i]:
            a = random_actions[i]
        else:
            best = np.flatnonzero(row == row.max())
            a = int(best[int(tie_draws[i] * len(best))])
        s2 = sim.step_one(s, a, rng)
        visits[s, a] += 1
        lr = lr_coeff / visits[s, a] ** lr_exponent
        row[a] += lr * (r[s] + gamma * Q[s2].max() - row[a])
        t_in_episode += 1
        if horizon is not None and t_in_episode >= horizon:
            s = sim.reset_one(rng)
            t_in_episode = 0
        else:
            s = s2
    return Q


def best_response_q(
    sim: Simulator, w: np.ndarray, cfg: OracleConfig, call_index: int = 0, with_phi: bool = True
) -> OracleResult:
    """Greedy policy of a Q table learned for ``w . phi(s)``, with an MC ``Phi``.

    Random streams are keyed on ``(cfg.seed, call_index)``, so repeated calls
    inside one solver run are independent but the whole run is reproducible.
    """
    sim = as_simulator(sim)
    rng = make_rng(cfg.seed, 1, call_index)
    reward = sim.features @ np.asarray(w, dtype=float)
    Q = q_learning(
        sim,
        reward,
        cfg.n_rl_steps,
        rng,
        epsilon=cfg.epsilon_greedy,
        lr_coeff=cfg.lr_schedule_coeff,
        lr_exponent=cfg.lr_schedule_exponent,
        horizon=cfg.horizon,
    )
    policy = DeterministicPolicy(tuple(Q.argmax(axis=1)))
    if not with_phi:
        return OracleResult(policy, None, cfg.n_rl_steps, False)
    phi = estimate_feature_expectations(
        sim, policy, cfg.n_estimation, cfg.horizon, seed=make_rng(cfg.seed, 2, call_index)
    )
    return OracleResult(policy, phi, cfg.n_rl_steps, False)


class LinearOracle:
    """Stateful wrapper used by the solvers.

    ``best_response(w)`` maximizes ``w . Phi`` over deterministic policies and
    ``evaluate(policy)`` returns the feature expectations the solver should
    use for a policy. The call counter feeds seed derivation so runs are
    reproducible. In ``exact_vi`` mode value iteration is warm-started from the
    previous call's value function.
    """

    def __init__(self, env, cfg: OracleConfig):
        self.cfg = cfg
        self.calls = 0
        self._V = None
        if isinstance(env, MdpSpec):
            self.mdp, self.sim = env, None
        else:
            self.sim = as_simulator(env)
            self.mdp = self.sim.mdp
        if (cfg.mode == "exact_vi" or cfg.exact_evaluation) and self.mdp is None:
            raise ValueError("exact planning or evaluation needs an explicit transition tensor")
        if not cfg.exact_evaluation or cfg.mode == "q_learning":
            self.sim = self.sim or MatrixSimulator(self.mdp)
        base = self.mdp if self.mdp is not None else self.sim
        self.n_states, self.n_actions, self.gamma = base.n_states, base.n_actions, base.gamma

    @property
    def is_exact(self) -> bool:
        return self.cfg.mode == "exact_vi" and self.cfg.exact_evaluation

    def best_response(self, w: np.ndarray, with_phi: bool = True) -> OracleResult:
        self.calls += 1
        if self.cfg.mode == "exact_vi":
            res = best_response_exact(self.mdp, w, self.cfg, warm_start=self._V)
            if res.values is not None:
                self._V = res.values
            if with_phi and not self.cfg.exact_evaluation:
                res = OracleResult(res.policy, self._estimate(res.policy), res.planner_steps, False)
            return res
        if with_phi and self.cfg.exact_evaluation:
            res = best_response_q(self.sim, w, self.cfg, call_index=self.calls, with_phi=False)
            return OracleResult(res.policy, feature_expectations_exact(self.mdp, res.policy), res.planner_steps, False)
        return best_response_q(self.sim, w, self.cfg, call_index=self.calls, with_phi=with_phi)

    def evaluate(self, policy: DeterministicPolicy) -> np.ndarray:
        self.calls += 1
        if self.cfg.exact_evaluation:
            return feature_expectations_exact(self.mdp, policy)
        return self._estimate(policy)

    def _estimate(self, policy, n_rollouts: int | None = None) -> np.ndarray:
        return estimate_feature_expectations(
            self.sim,
            policy,
            n_rollouts or self.cfg.n_estimation,
            self.cfg.horizon,
            seed=make_rng(self.cfg.seed, 3, self.calls),
        )


def brute_force_best_response(mdp: MdpSpec, w: np.ndarray) -> tuple[DeterministicPolicy, float]:
    """Best deterministic policy by exhaustive enumeration (tiny MDPs only)."""
    w = np.asarray(w, dtype=float)
    best, best_val = None, -np.inf
    for actions in itertools.product(range(mdp.n_actions), repeat=mdp.n_states):
        pol = DeterministicPolicy(actions)
        val = float(w @ feature_expectations_exact(mdp, pol))
        if val > best_val:
            best, best_val = pol, val
    return best, best_val


__all__ = [
    "OracleConfig",
    "OracleResult",
    "LinearOracle",
    "value_iteration",
    "best_response_exact",
    "best_response_q",
    "q_learning",
    "brute_force_best_response",
]
