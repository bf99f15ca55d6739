from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fwal.mdp import MdpSpec, MixedPolicy, mixed_feature_expectations


@dataclass(frozen=True, eq=False)
class Objective:
    """``h(x) = 0.5 * ||x - phi_e||^2``: 1-smooth and 1-strongly convex."""

    phi_e: np.ndarray
    beta: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "phi_e", np.asarray(self.phi_e, dtype=float))

    def __call__(self, x: np.ndarray) -> float:
        r = np.asarray(x) - self.phi_e
        return 0.5 * float(r @ r)

    value = __call__

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) - self.phi_e

    def distance(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(np.asarray(x) - self.phi_e))


def as_objective(target) -> Objective:
    return target if isinstance(target, Objective) else Objective(target)


def line_search_quadratic(x: np.ndarray, d: np.ndarray, phi_e: np.ndarray, gamma_max: float = 1.0) -> float:
    """Exact minimizer of ``h(x + g d)`` over ``g in [0, gamma_max]``."""
    d = np.asarray(d, dtype=float)
    dd = float(d @ d)
    if dd == 0.0:
        raise ValueError("line search along a zero direction")
    if not gamma_max > 0:
        raise ValueError("gamma_max must be positive")
    g = float(d @ (np.asarray(phi_e) - np.asarray(x))) / dd
    return min(max(g, 0.0), gamma_max)


def al_margin(mdp: MdpSpec, psi: MixedPolicy, phi_e: np.ndarray) -> float:
    """Worst-case value gap ``-||Phi(psi) - phi_e||`` over unit-norm reward weights."""
    return -float(np.linalg.norm(mixed_feature_expectations(mdp, psi) - np.asarray(phi_e)))
