"""Apprenticeship learning as projection onto the feature-expectations polytope.

Solvers (conditional gradient, away steps, stochastic Frank-Wolfe and a
multiplicative-weights baseline) live in :mod:`fwal.solvers`; tabular MDPs and
feature expectations in :mod:`fwal.mdp`; planners in :mod:`fwal.oracle`.
"""

from fwal.mdp import (
    DeterministicPolicy,
    InvalidMdpError,
    MdpSpec,
    MixedPolicy,
    StochasticPolicy,
    feature_expectations_exact,
    mixed_feature_expectations,
    mixed_to_stochastic,
)
from fwal.oracle import LinearOracle, OracleConfig
from fwal.solvers import Objective, solve_ascg, solve_cg, solve_mwal, solve_sfw

__version__ = "0.1.0"

__all__ = [
    "DeterministicPolicy",
    "InvalidMdpError",
    "LinearOracle",
    "MdpSpec",
    "MixedPolicy",
    "Objective",
    "OracleConfig",
    "StochasticPolicy",
    "feature_expectations_exact",
    "mixed_feature_expectations",
    "mixed_to_stochastic",
    "solve_ascg",
    "solve_cg",
    "solve_mwal",
    "solve_sfw",
]
