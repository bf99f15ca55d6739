"""Conditional gradient (Frank-Wolfe) for apprenticeship learning.

With ``h(x) = 0.5||x - phi_e||^2`` the linear subproblem over the polytope is
a planning problem with reward ``w = phi_e - x``, and the exact line search
reproduces the classic projection method step.
"""

from __future__ import annotations

import time
from typing import Literal

import numpy as np

from fwal.mdp import DeterministicPolicy, MixedPolicy
from fwal.oracle import LinearOracle, OracleConfig
from fwal.solvers._common import initial_policy as _initial_policy
from fwal.solvers._common import setup_oracle
from fwal.solvers.objective import Objective, as_objective, line_search_quadratic
from fwal.solvers.trace import SolverTrace, TraceRow


def _mix(coefs: dict, policy: DeterministicPolicy, alpha: float) -> None:
    """In place: ``psi <- psi + alpha (e_policy - psi)``; drops atoms that hit zero."""
    for p in coefs:
        coefs[p] *= 1.0 - alpha
    coefs[policy] = coefs.get(policy, 0.0) + alpha
    for p in [p for p, c in coefs.items() if c == 0.0]:
        del coefs[p]


def _mixture(coefs: dict) -> MixedPolicy:
    total = sum(coefs.values())
    return MixedPolicy.from_pairs((p, c / total) for p, c in coefs.items())


def solve_cg(
    env,
    objective: Objective | np.ndarray,
    oracle_cfg: OracleConfig | None = None,
    T: int = 100,
    *,
    step_rule: Literal["line_search", "open_loop"] = "line_search",
    initial_policy: DeterministicPolicy | None = None,
    tol: float | None = None,
    oracle: LinearOracle | None = None,
) -> tuple[MixedPolicy, SolverTrace]:
    """Frank-Wolfe over the feature-expectations polytope.

    Parameters
    ----------
    env : MdpSpec or Simulator
    objective : Objective or array
        The target feature expectations (exact or estimated).
    T : int
        Maximum number of iterations.
    step_rule : {"line_search", "open_loop"}
        Exact line search clamped to ``[0, 1]``, or ``2 / (t + 1)``.
    tol : float, optional
        Stop as soon as the Frank-Wolfe gap ``-grad . (y - x)`` is ``<= tol``.

    Returns
    -------
    (MixedPolicy, SolverTrace)
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    obj = as_objective(objective)
    oracle = setup_oracle(env, oracle_cfg, oracle)
    pi0 = _initial_policy(oracle, initial_policy)
    x = oracle.evaluate(pi0)
    coefs = {pi0: 1.0}
    trace = SolverTrace("cg", x0=x.copy(), h0=obj(x))

    for t in range(1, T + 1):
        start = time.perf_counter()
        g = obj.gradient(x)
        res = oracle.best_response(-g)
        d = res.phi - x
        if tol is not None and -(g @ d) <= tol:
            break
        if step_rule == "open_loop":
            alpha = 2.0 / (t + 1)
        elif np.any(d):
            alpha = line_search_quadratic(x, d, obj.phi_e, 1.0)
        else:
            alpha = 0.0
        x = x + alpha * d
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
            )
        )
    return _mixture(coefs), trace


def solve_projection_method(
    env,
    phi_e: np.ndarray,
    oracle_cfg: OracleConfig | None = None,
    T: int = 100,
    *,
    initial_policy: DeterministicPolicy | None = None,
    oracle: LinearOracle | None = None,
) -> tuple[MixedPolicy, SolverTrace]:
    """The projection method written out step by step, without line-search clamping.

    Kept as an independent transcription so that its iterates can be compared
    against :func:`solve_cg`.
    """
    phi_e = np.asarray(phi_e, dtype=float)
    obj = Objective(phi_e)
    oracle = setup_oracle(env, oracle_cfg, oracle)
    pi0 = _initial_policy(oracle, initial_policy)
    psi = {pi0: 1.0}
    phi_bar = oracle.evaluate(pi0)
    trace = SolverTrace("projection", x0=phi_bar.copy(), h0=obj(phi_bar))
    for t in range(1, T + 1):
        start = time.perf_counter()
        w = phi_e - phi_bar
        res = oracle.best_response(w)
        phi_t = res.phi
        alpha = ((phi_t - phi_bar) @ (phi_e - phi_bar)) / ((phi_t - phi_bar) @ (phi_t - phi_bar))
        phi_bar = phi_bar + alpha * (phi_t - phi_bar)
        for p in psi:
            psi[p] = psi[p] + alpha * (0.0 - psi[p])
        psi[res.policy] = psi.get(res.policy, 0.0) + alpha
        trace.append(
            TraceRow(t, obj(phi_bar), obj.distance(phi_bar), "fw", float(alpha), len(psi),
                     res.planner_steps, (time.perf_counter() - start) * 1e3, phi_bar.copy(), w)
        )
    return _mixture({p: c for p, c in psi.items() if c > 0}), trace
