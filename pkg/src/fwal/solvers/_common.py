from __future__ import annotations

from fwal._rng import make_rng
from fwal.mdp import DeterministicPolicy
from fwal.oracle import LinearOracle, OracleConfig


def setup_oracle(env, oracle_cfg: OracleConfig | None, oracle: LinearOracle | None) -> LinearOracle:
    if oracle is not None:
        return oracle
    return LinearOracle(env, oracle_cfg or OracleConfig())


def initial_policy(oracle: LinearOracle, policy: DeterministicPolicy | None) -> DeterministicPolicy:
    """The starting policy: given explicitly, or drawn uniformly from the run seed."""
    if policy is not None:
        return policy
    return DeterministicPolicy.random(oracle.n_states, oracle.n_actions, make_rng(oracle.cfg.seed, 0))
