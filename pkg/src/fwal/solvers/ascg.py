"""Frank-Wolfe with away steps.

The iterate is kept as an explicit convex combination of atoms (deterministic
policies and their feature expectations). Each iteration compares the usual
Frank-Wolfe direction with the direction pointing away from the worst atom in
the active set, and takes whichever is steeper.
"""

from __future__ import annotations

import time

import numpy as np

from fwal.mdp import DeterministicPolicy, MixedPolicy
from fwal.oracle import LinearOracle, OracleConfig
from fwal.solvers._common import initial_policy as _initial_policy
from fwal.solvers._common import setup_oracle
from fwal.solvers.objective import Objective, as_objective, line_search_quadratic
from fwal.solvers.trace import RepresentationError, SolverTrace, TraceRow

PRUNE_TOL = 1e-12
MERGE_TOL = 1e-12
DRIFT_TOL = 1e-6


class ActiveSet:
    """Atoms ``(policy, phi)`` with convex coefficients."""

    def __init__(self, policy: DeterministicPolicy, phi: np.ndarray):
        self.policies = [policy]
        self.phis = [np.asarray(phi, dtype=float)]
        self.alpha = np.array([1.0])

    def __len__(self):
        return len(self.policies)

    def index(self, policy: DeterministicPolicy) -> int | None:
        try:
            return self.policies.index(policy)
        except ValueError:
            return None

    def index_of_point(self, phi: np.ndarray, tol: float = MERGE_TOL) -> int | None:
        dist = np.max(np.abs(self.points - phi), axis=1)
        j = int(np.argmin(dist))
        return j if dist[j] <= tol else None

    @property
    def points(self) -> np.ndarray:
        return np.array(self.phis)

    def combination(self) -> np.ndarray:
        return self.alpha @ self.points

    def reset_to(self, policy, phi) -> None:
        self.policies, self.phis, self.alpha = [policy], [phi], np.array([1.0])

    def fw_update(self, policy, phi, gamma: float, idx: int | None = None) -> None:
        self.alpha = (1.0 - gamma) * self.alpha
        if idx is None:
            self.policies.append(policy)
            self.phis.append(phi)
            self.alpha = np.append(self.alpha, gamma)
        else:
            self.alpha[idx] += gamma

    def away_update(self, idx: int, gamma: float, drop: bool) -> None:
        a_z = self.alpha[idx]
        self.alpha = (1.0 + gamma) * self.alpha
        if drop:
            self.remove(idx)
            self.alpha /= self.alpha.sum()
        else:
            self.alpha[idx] = (1.0 + gamma) * a_z - gamma

    def remove(self, idx: int) -> None:
        del self.policies[idx]
        del self.phis[idx]
        self.alpha = np.delete(self.alpha, idx)

    def mixture(self) -> MixedPolicy:
        return MixedPolicy.from_pairs(zip(self.policies, self.alpha / self.alpha.sum()))


def solve_ascg(
    env,
    objective: Objective | np.ndarray,
    oracle_cfg: OracleConfig | None = None,
    T: int = 100,
    *,
    initial_policy: DeterministicPolicy | None = None,
    tol: float | None = None,
    oracle: LinearOracle | None = None,
) -> tuple[MixedPolicy, SolverTrace]:
    """Away-step conditional gradient; same interface as :func:`solve_cg`.

    An oracle policy that is already in the active set, or whose feature
    expectations coincide with an atom's, reuses the stored atom
    (coefficients merge). Away steps whose line search hits the cap, or
    leave a coefficient below ``1e-12``, remove the atom (drop steps).
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    obj = as_objective(objective)
    oracle = setup_oracle(env, oracle_cfg, oracle)
    pi0 = _initial_policy(oracle, initial_policy)
    x = oracle.evaluate(pi0)
    S = ActiveSet(pi0, x.copy())
    trace = SolverTrace("ascg", x0=x.copy(), h0=obj(x))

    for t in range(1, T + 1):
        start = time.perf_counter()
        g = obj.gradient(x)
        res = oracle.best_response(-g, with_phi=False)
        idx = S.index(res.policy)
        if idx is None:
            y = oracle.evaluate(res.policy)
            # distinct policies can share feature expectations (e.g. differ only off-path)
            idx = S.index_of_point(y)
        if idx is not None:
            y = S.phis[idx]
        d_fw = y - x
        if tol is not None and -(g @ d_fw) <= tol:
            break

        scores = S.points @ g
        z = int(np.argmax(scores))
        d_as = x - S.phis[z]
        a_z = S.alpha[z]
        # with all mass on z the away direction is zero up to rounding
        if a_z >= 1.0 or g @ d_fw < g @ d_as:
            kind, d, gamma_max = "fw", d_fw, 1.0
        else:
            kind, d = "away", d_as
            gamma_max = a_z / (1.0 - a_z)

        gamma = line_search_quadratic(x, d, obj.phi_e, gamma_max) if np.any(d) else 0.0
        x = x + gamma * d

        if kind == "fw":
            if gamma == 1.0:
                S.reset_to(res.policy, y)
            elif gamma > 0.0:
                S.fw_update(res.policy, y, gamma, idx)
        elif gamma > 0.0:
            drop = gamma == gamma_max or (1.0 + gamma) * S.alpha[z] - gamma < PRUNE_TOL
            if drop:
                kind = "drop"
            S.away_update(z, gamma, drop)

        drift = float(np.max(np.abs(S.combination() - x)))
        if drift > DRIFT_TOL:
            raise RepresentationError(f"active-set combination drifted by {drift:.3g} at iteration {t}")

        trace.append(
            TraceRow(
                t=t,
                h=obj(x),
                dist=obj.distance(x),
                step_kind=kind,
                gamma=gamma,
                active_set_size=len(S),
                oracle_steps=res.planner_steps,
                wall_ms=(time.perf_counter() - start) * 1e3,
                x=x.copy(),
                w=-g,
            )
        )
    return S.mixture(), trace
