"""Stochastic Frank-Wolfe: the gradient uses fresh rollouts of the new policy.

At iteration ``t`` the planner's policy is rolled out ``m_t`` times and the
mean discounted feature sum replaces its exact feature expectations. Steps
follow the open-loop rule ``2 / (t + 1)``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from fwal._rng import make_rng
from fwal.mdp import DeterministicPolicy, MixedPolicy
from fwal.oracle import LinearOracle, OracleConfig
from fwal.simulator import as_simulator, estimate_feature_expectations
from fwal.solvers._common import initial_policy as _initial_policy
from fwal.solvers._common import setup_oracle
from fwal.solvers.cg import _mix, _mixture
from fwal.solvers.objective import Objective, as_objective
from fwal.solvers.trace import SolverTrace, TraceRow


@dataclass(frozen=True)
class SfwSchedule:
    """Batch sizes ``m_t = (G (t + 1) / (beta D^2))^2``, rounded up to at least one."""

    lipschitz: float
    diameter: float
    beta: float = 1.0
    max_batch: int | None = None

    def __post_init__(self):
        if self.lipschitz <= 0 or self.diameter <= 0 or self.beta <= 0:
            raise ValueError("schedule constants must be positive")

    @classmethod
    def default(cls, k: int, gamma: float, **kw) -> "SfwSchedule":
        """``D = sqrt(k) / (1 - gamma)`` and ``G = D``."""
        d = math.sqrt(k) / (1.0 - gamma)
        return cls(lipschitz=kw.pop("lipschitz", d), diameter=kw.pop("diameter", d), **kw)

    def raw_batch(self, t: int) -> float:
        return (self.lipschitz * (t + 1) / (self.beta * self.diameter**2)) ** 2

    def batch_size(self, t: int) -> int:
        m = max(1, math.ceil(self.raw_batch(t)))
        return m if self.max_batch is None else min(m, self.max_batch)


def solve_sfw(
    simulator,
    objective: Objective | np.ndarray,
    oracle_cfg: OracleConfig | None = None,
    schedule: SfwSchedule | None = None,
    T: int = 100,
    *,
    initial_policy: DeterministicPolicy | None = None,
    oracle: LinearOracle | None = None,
) -> tuple[MixedPolicy, SolverTrace]:
    if T < 1:
        raise ValueError("T must be >= 1")
    obj = as_objective(objective)
    sim = as_simulator(simulator)
    oracle = setup_oracle(simulator, oracle_cfg, oracle)
    cfg = oracle.cfg
    schedule = schedule or SfwSchedule.default(sim.k, sim.gamma)

    def estimate(policy, m, t):
        return estimate_feature_expectations(sim, policy, m, cfg.horizon, seed=make_rng(cfg.seed, 4, t))

    pi0 = _initial_policy(oracle, initial_policy)
    x = estimate(pi0, schedule.batch_size(1), 0)
    coefs = {pi0: 1.0}
    trace = SolverTrace("sfw", x0=x.copy(), h0=obj(x))
    for t in range(1, T + 1):
        start = time.perf_counter()
        g = obj.gradient(x)
        res = oracle.best_response(-g, with_phi=False)
        m_t = schedule.batch_size(t)
        phi_hat = estimate(res.policy, m_t, t)
        alpha = 2.0 / (t + 1)
        x = x + alpha * (phi_hat - x)
        _mix(coefs, res.policy, alpha)
        trace.append(
            TraceRow(
                t=t,
                h=obj(x),
                dist=obj.distance(x),
                step_kind="fw",
                gamma=alpha,
                active_set_size=len(coefs),
                oracle_steps=res.planner_steps,
                wall_ms=(time.perf_counter() - start) * 1e3,
                x=x.copy(),
                w=-g,
                batch_size=m_t,
            )
        )
    return _mixture(coefs), trace
