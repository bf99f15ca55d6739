"""Multiplicative-weights baseline.

A reward player runs Hedge over the simplex of reward weights against a
policy player that best-responds each round; the output is the uniform
mixture of the best responses.
"""

from __future__ import annotations

import math
import time

import numpy as np

from fwal.mdp import MixedPolicy
from fwal.oracle import LinearOracle, OracleConfig
from fwal.solvers._common import setup_oracle
from fwal.solvers.objective import Objective, as_objective
from fwal.solvers.trace import SolverTrace, TraceRow


def hedge_learning_rate(k: int, T: int) -> float:
    return math.sqrt(8.0 * math.log(k) / T)


def solve_mwal(
    env,
    objective: Objective | np.ndarray,
    oracle_cfg: OracleConfig | None = None,
    T: int = 100,
    *,
    eta: float | None = None,
    oracle: LinearOracle | None = None,
) -> tuple[MixedPolicy, SolverTrace]:
    """Run ``T`` rounds of the game and return the uniform mixture.

    Losses for the reward player are ``(Phi(pi_t) - phi_e) * (1 - gamma) / 2``,
    which lie in ``[-1/2, 1/2]``; ``eta`` defaults to ``sqrt(8 ln k / T)``.
    Each trace row records the round's game value ``w_t . (Phi(pi_t) - phi_e)``
    and the running mixture's feature expectations as the iterate.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    obj = as_objective(objective)
    oracle = setup_oracle(env, oracle_cfg, oracle)
    k = obj.phi_e.shape[0]
    eta = hedge_learning_rate(k, T) if eta is None else eta
    scale = (1.0 - oracle.gamma) / 2.0
    w = np.full(k, 1.0 / k)
    x = np.zeros(k)
    policies = []
    trace = None
    for t in range(1, T + 1):
        start = time.perf_counter()
        res = oracle.best_response(w)
        diff = res.phi - obj.phi_e
        game_value = float(w @ diff)
        x = x + (res.phi - x) / t
        if trace is None:
            trace = SolverTrace("mwal", x0=res.phi.copy(), h0=obj(res.phi))
        policies.append(res.policy)
        w_used = w
        w = w * np.exp(-eta * scale * diff)
        w /= w.sum()
        trace.append(
            TraceRow(
                t=t,
                h=obj(x),
                dist=obj.distance(x),
                step_kind="fw",
                gamma=1.0 / t,
                active_set_size=len(set(policies)),
                oracle_steps=res.planner_steps,
                wall_ms=(time.perf_counter() - start) * 1e3,
                x=x.copy(),
                w=w_used,
                game_value=game_value,
            )
        )
    psi = MixedPolicy.from_pairs((p, 1.0 / T) for p in policies)
    return psi, trace
