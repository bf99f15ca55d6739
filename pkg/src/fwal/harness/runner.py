"""Run solver suites across seeds and write traces, a summary and a plot.

Layout of a run directory::

    config.json              resolved configuration
    traces/<solver>/seed_<n>.csv
    summary.csv              solver, t, mean_dist, std_dist, n_seeds
    results.json             per-seed final errors and targets
    convergence.svg          mean distance with a one-std band, log y-axis

Every file is written to a temporary name and renamed into place.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from fwal.envs import ENVIRONMENTS, Environment
from fwal.expert import TruncationPlan, estimate_phi_e, sample_budget
from fwal.harness.config import ExperimentConfig, SolverSpec, _tuplify
from fwal.mdp import mixed_feature_expectations
from fwal.oracle import best_response_exact
from fwal.solvers import SfwSchedule, SolverTrace, solve_ascg, solve_cg, solve_mwal, solve_sfw

SUMMARY_HEADER = ("solver", "t", "mean_dist", "std_dist", "n_seeds")


@dataclass
class RunRecord:
    solver: str
    seed: int
    trace: SolverTrace
    phi_e: np.ndarray
    final_dist: float
    exact_final_dist: float | None


@dataclass
class RunResult:
    out_dir: Path
    records: list[RunRecord]
    summary: list[dict]


def build_environment(cfg: ExperimentConfig) -> Environment:
    cfg_cls, builder = ENVIRONMENTS[cfg.env]
    env = builder(cfg_cls(**_tuplify(cfg.env_params)))
    if cfg.expert.true_w is not None:
        w = np.asarray(cfg.expert.true_w, dtype=float)
        if w.shape != (env.k,):
            raise ValueError(f"expert.true_w needs {env.k} entries, got {w.shape[0]}")
        env = dataclasses.replace(env, true_w=w)
    return env


def expert_target(env: Environment, cfg: ExperimentConfig, seed: int) -> np.ndarray:
    spec = cfg.expert
    if spec.mode == "exact":
        return env.expert_phi(mix_uniform=spec.mix_uniform)
    m = spec.m if spec.m is not None else sample_budget(spec.epsilon_m, spec.delta, env.k).m
    plan = TruncationPlan(env.mdp.gamma, spec.epsilon_h, spec.sampling, spec.horizon)
    policy = best_response_exact(env.mdp, env.true_w).policy
    return estimate_phi_e(env, policy, m, plan, seed=(seed, 5))


def run_solver(env: Environment, spec: SolverSpec, phi_e: np.ndarray, cfg: ExperimentConfig, seed: int):
    ocfg = cfg.oracle.with_seed(seed)
    p = spec.params
    if spec.name == "cg":
        return solve_cg(env.simulator, phi_e, ocfg, cfg.T, step_rule=p.get("step_rule", "line_search"), tol=p.get("tol"))
    if spec.name == "ascg":
        return solve_ascg(env.simulator, phi_e, ocfg, cfg.T, tol=p.get("tol"))
    if spec.name == "sfw":
        schedule = SfwSchedule.default(env.k, env.mdp.gamma, **p)
        return solve_sfw(env.simulator, phi_e, ocfg, schedule, cfg.T)
    if spec.name == "mwal":
        return solve_mwal(env.simulator, phi_e, ocfg, cfg.T, eta=p.get("eta"))
    raise ValueError(f"unknown solver {spec.name!r}")


def _run_seed(cfg: ExperimentConfig, seed: int) -> list[RunRecord]:
    env = build_environment(cfg)
    phi_e = expert_target(env, cfg, seed)
    out = []
    for spec in cfg.solvers:
        psi, trace = run_solver(env, spec, phi_e, cfg, seed)
        exact = float(np.linalg.norm(mixed_feature_expectations(env.mdp, psi) - phi_e))
        final = trace.rows[-1].dist if trace.rows else math.sqrt(2.0 * trace.h0)
        out.append(RunRecord(spec.name, seed, trace, phi_e, final, exact))
    return out


def summarize(records: list[RunRecord], solvers: list[str]) -> list[dict]:
    """Mean and population std of the distance per solver and iteration, t = 0 included."""
    rows = []
    for name in solvers:
        curves = [np.concatenate([[math.sqrt(2.0 * r.trace.h0)], r.trace.dist]) for r in records if r.solver == name]
        if not curves:
            continue
        length = min(len(c) for c in curves)
        stack = np.array([c[:length] for c in curves])
        mean, std = stack.mean(axis=0), stack.std(axis=0)
        for t in range(length):
            rows.append({"solver": name, "t": t, "mean_dist": float(mean[t]), "std_dist": float(std[t]), "n_seeds": len(curves)})
    return rows


def summary_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    for r in rows:
        writer.writerow([r["solver"], r["t"], repr(r["mean_dist"]), repr(r["std_dist"]), r["n_seeds"]])
    return buf.getvalue()


def read_summary(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            {"solver": r["solver"], "t": int(r["t"]), "mean_dist": float(r["mean_dist"]),
             "std_dist": float(r["std_dist"]), "n_seeds": int(r["n_seeds"])}
            for r in reader
        ]


def atomic_write(path: Path, data: str | bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data.encode() if isinstance(data, str) else data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None, plot: bool = True) -> RunResult:
    """Run every configured solver for every seed and write the run directory."""
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    seeds = cfg.seeds
    if cfg.jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(seeds))) as pool:
            per_seed = list(pool.map(_run_seed, [cfg] * len(seeds), seeds))
    else:
        per_seed = [_run_seed(cfg, s) for s in seeds]
    records = [r for batch in per_seed for r in batch]

    atomic_write(out / "config.json", json.dumps(cfg.to_dict(), indent=2) + "\n")
    for r in records:
        atomic_write(out / "traces" / r.solver / f"seed_{r.seed:03d}.csv", r.trace.to_csv(include_timing=cfg.record_timing))
    names = [s.name for s in cfg.solvers]
    summary = summarize(records, names)
    atomic_write(out / "summary.csv", summary_csv(summary))
    results = {
        "name": cfg.name,
        "env": cfg.env,
        "runs": [
            {
                "solver": r.solver,
                "seed": r.seed,
                "iterations": len(r.trace),
                "final_dist": r.final_dist,
                "exact_final_dist": r.exact_final_dist,
                "phi_e": [float(v) for v in r.phi_e],
            }
            for r in records
        ],
        "mean_final_dist": {
            n: float(np.mean([r.final_dist for r in records if r.solver == n])) for n in names
        },
    }
    atomic_write(out / "results.json", json.dumps(results, indent=2) + "\n")
    if plot:
        from fwal.harness.plotting import plot_summary

        plot_summary(read_summary(out / "summary.csv"), out / "convergence.svg", title=cfg.name)
    return RunResult(out, records, summary)
