"""Brute-force verification battery on tiny random MDPs.

Each check runs on a family of random instances and compares solver output
with quantities computed by full policy enumeration. The report is plain
JSON; every failing instance carries its MDP so it can be replayed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fwal._rng import make_rng
from fwal.envs import random_tiny_mdp
from fwal.mdp import (
    DeterministicPolicy,
    MdpSpec,
    MixedPolicy,
    feature_expectations_exact,
    mixed_feature_expectations,
    mixed_to_stochastic,
)
from fwal.oracle import OracleConfig
from fwal.polytope import enumerate_polytope, facial_distance_2d, hull_membership, linear_rate, project_onto_hull
from fwal.solvers import Objective, line_search_quadratic, solve_ascg, solve_cg

CHECKS = ("hull_membership", "cg_rate", "ascg_rate", "mixed_to_stochastic", "line_search")
DEFAULT_BATTERY = {
    "n_instances": 20,
    "seed": 0,
    "max_states": 4,
    "max_actions": 3,
    "k": 2,
    "gamma": 0.9,
    "T": 200,
    "checks": list(CHECKS),
}
BOUND_SLACK = 1e-9
MEMBERSHIP_TOL = 1e-7
MIXTURE_TOL = 1e-8
LINE_SEARCH_TOL = 1e-14


class EmptyBatteryError(ValueError):
    pass


@dataclass
class Instance:
    index: int
    mdp: MdpSpec
    phi_e: np.ndarray

    def to_dict(self) -> dict:
        return {"index": self.index, "mdp": self.mdp.to_dict(), "phi_e": [float(v) for v in self.phi_e]}


def make_instance(battery: dict, index: int) -> Instance:
    """A random tiny MDP and a target drawn uniformly-ish from its polytope."""
    rng = make_rng(battery["seed"], 10, index)
    S = int(rng.integers(2, battery["max_states"] + 1))
    A = int(rng.integers(2, battery["max_actions"] + 1))
    mdp = random_tiny_mdp(rng, S, A, battery["k"], battery["gamma"])
    model = enumerate_polytope(mdp)
    lam = rng.dirichlet(np.ones(len(model)))
    return Instance(index, mdp, lam @ model.vertices)


def check_hull_membership(inst: Instance, battery: dict) -> tuple[bool, str]:
    model = enumerate_polytope(inst.mdp)
    T = battery["T"]
    for solve in (solve_cg, solve_ascg):
        _, tr = solve(inst.mdp, inst.phi_e, OracleConfig(seed=inst.index), T)
        for t, x in enumerate(np.vstack([tr.x0, tr.iterates]) if len(tr) else [tr.x0]):
            ok, dist = hull_membership(model, x, MEMBERSHIP_TOL)
            if not ok:
                return False, f"{tr.solver} iterate {t} is {dist:.3g} outside the hull"
    return True, ""


def check_cg_rate(inst: Instance, battery: dict) -> tuple[bool, str]:
    model = enumerate_polytope(inst.mdp)
    obj = Objective(inst.phi_e)
    h_star = obj(project_onto_hull(model, inst.phi_e)[0])
    _, tr = solve_cg(inst.mdp, inst.phi_e, OracleConfig(seed=inst.index), battery["T"])
    D2 = model.diameter**2
    for t, h in enumerate(tr.h_with_start):
        if t >= 2 and h - h_star > 2.0 * D2 / (t + 1) + BOUND_SLACK:
            return False, f"t={t}: h-h*={h - h_star:.6g} exceeds {2.0 * D2 / (t + 1):.6g}"
    return True, ""


def ascg_rate_constant(mdp: MdpSpec) -> float | None:
    """``rho = C(K)^2 (1-gamma)^2 / (8k)``; None for a single-vertex polytope."""
    model = enumerate_polytope(mdp)
    if len(model) < 2:
        return None
    c = facial_distance_2d(model)
    return linear_rate(c, math.sqrt(mdp.k) / (1.0 - mdp.gamma))


def check_ascg_rate(inst: Instance, battery: dict) -> tuple[bool, str]:
    rho = ascg_rate_constant(inst.mdp)
    _, tr = solve_ascg(inst.mdp, inst.phi_e, OracleConfig(seed=inst.index), battery["T"])
    h = tr.h_with_start
    if rho is None:
        return (bool(np.all(h <= BOUND_SLACK)), "single vertex but h > 0")
    for t in range(1, len(h)):
        bound = h[0] * math.exp(-rho * t)
        if h[t] > bound:
            return False, f"t={t}: h={h[t]:.6g} exceeds {bound:.6g} (rho={rho:.4g})"
    return True, ""


def check_mixed_to_stochastic(inst: Instance, battery: dict) -> tuple[bool, str]:
    rng = make_rng(battery["seed"], 11, inst.index)
    mdp = inst.mdp
    n_atoms = int(rng.integers(1, 5))
    atoms = [DeterministicPolicy.random(mdp.n_states, mdp.n_actions, rng) for _ in range(n_atoms)]
    psi = MixedPolicy.from_pairs(zip(atoms, rng.dirichlet(np.ones(n_atoms))))
    gap = float(np.max(np.abs(feature_expectations_exact(mdp, mixed_to_stochastic(mdp, psi)) - mixed_feature_expectations(mdp, psi))))
    return gap <= MIXTURE_TOL, f"|Phi(pi_hat) - Phi(psi)|_inf = {gap:.3g}"


def check_line_search(inst: Instance, battery: dict) -> tuple[bool, str]:
    rng = make_rng(battery["seed"], 12, inst.index)
    k = inst.mdp.k
    for _ in range(100):
        x, d, phi_e = rng.normal(size=(3, k))
        ratio = d @ (phi_e - x) / (d @ d)
        if 0.0 <= ratio <= 1.0:
            got = line_search_quadratic(x, d, phi_e, 1.0)
            if abs(got - ratio) > LINE_SEARCH_TOL:
                return False, f"step {got!r} differs from ratio {ratio!r}"
    return True, ""


_CHECK_FUNCS = {
    "hull_membership": check_hull_membership,
    "cg_rate": check_cg_rate,
    "ascg_rate": check_ascg_rate,
    "mixed_to_stochastic": check_mixed_to_stochastic,
    "line_search": check_line_search,
}


def verify_suite(battery: dict | None = None) -> dict:
    """Run the battery and return a JSON-ready report.

    ``battery`` overrides keys of :data:`DEFAULT_BATTERY`. A battery with no
    checks or no instances is rejected.
    """
    cfg = dict(DEFAULT_BATTERY)
    if battery is not None:
        unknown = set(battery) - set(DEFAULT_BATTERY)
        if unknown:
            raise ValueError(f"unknown battery keys: {', '.join(sorted(unknown))}")
        cfg.update(battery)
    checks = list(cfg["checks"])
    if not checks or cfg["n_instances"] < 1:
        raise EmptyBatteryError("the verification battery is empty")
    for name in checks:
        if name not in _CHECK_FUNCS:
            raise ValueError(f"unknown check {name!r} (choose from {', '.join(CHECKS)})")

    report = {"passed": True, "battery": cfg, "checks": {}, "failures": []}
    instances = [make_instance(cfg, i) for i in range(cfg["n_instances"])]
    for name in checks:
        n_fail = 0
        for inst in instances:
            ok, detail = _CHECK_FUNCS[name](inst, cfg)
            if not ok:
                n_fail += 1
                report["failures"].append({"check": name, "detail": detail, "instance": inst.to_dict()})
        report["checks"][name] = {"passed": n_fail == 0, "instances": len(instances), "failures": n_fail}
        report["passed"] &= n_fail == 0
    return report
