"""Experiment configuration: one JSON document per experiment.

Example::

    {
      "name": "gridworld",
      "env": {"name": "gridworld", "params": {"size": 5, "gamma": 0.9}},
      "oracle": {"mode": "q_learning", "n_rl_steps": 300, "n_estimation": 300, "horizon": 50},
      "solvers": ["cg", {"name": "ascg", "params": {}}],
      "T": 100,
      "n_seeds": 10,
      "base_seed": 0,
      "expert": {"mode": "exact", "mix_uniform": 0.0}
    }

Validation errors name the offending key and, when the config came from a
file, the line it sits on.
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fwal.envs import ENVIRONMENTS
from fwal.expert import MODES as EXPERT_SAMPLING_MODES
from fwal.oracle import OracleConfig

SOLVER_NAMES = ("cg", "ascg", "sfw", "mwal")
SOLVER_PARAMS = {
    "cg": {"step_rule", "tol"},
    "ascg": {"tol"},
    "sfw": {"lipschitz", "diameter", "beta", "max_batch"},
    "mwal": {"eta"},
}
EXPERT_KEYS = {"mode", "mix_uniform", "true_w", "m", "epsilon_m", "delta", "sampling", "epsilon_h", "horizon"}
TOP_KEYS = {"name", "env", "oracle", "solvers", "T", "n_seeds", "base_seed", "expert", "output_dir", "jobs", "record_timing"}


class ConfigError(ValueError):
    """Invalid experiment configuration; the message carries the key path and line."""


@dataclass(frozen=True)
class SolverSpec:
    name: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExpertSpec:
    """Where the target feature expectations come from.

    ``mode="exact"`` uses dynamic programming on the expert policy, optionally
    mixed with the uniform policy. ``mode="sampled"`` averages ``m`` expert
    trajectories; ``m`` may instead be derived from ``epsilon_m``/``delta``.
    """

    mode: str = "exact"
    mix_uniform: float = 0.0
    true_w: tuple | None = None
    m: int | None = None
    epsilon_m: float | None = None
    delta: float | None = None
    sampling: str = "fixed_horizon"
    epsilon_h: float = 0.01
    horizon: int | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    env: str
    env_params: dict = field(default_factory=dict)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    solvers: tuple[SolverSpec, ...] = (SolverSpec("cg"), SolverSpec("ascg"))
    T: int = 100
    n_seeds: int = 10
    base_seed: int = 0
    expert: ExpertSpec = field(default_factory=ExpertSpec)
    output_dir: str = "runs"
    name: str = "experiment"
    jobs: int = 1
    record_timing: bool = False

    @property
    def seeds(self) -> list[int]:
        return [self.base_seed + i for i in range(self.n_seeds)]

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **{k: v for k, v in kw.items() if v is not None})

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "env": {"name": self.env, "params": dict(self.env_params)},
            "oracle": dataclasses.asdict(self.oracle),
            "solvers": [{"name": s.name, "params": dict(s.params)} for s in self.solvers],
            "T": self.T,
            "n_seeds": self.n_seeds,
            "base_seed": self.base_seed,
            "expert": {k: (list(v) if isinstance(v, tuple) else v) for k, v in dataclasses.asdict(self.expert).items()},
            "output_dir": self.output_dir,
            "jobs": self.jobs,
            "record_timing": self.record_timing,
        }


def _locate(text: str | None, path: tuple) -> int | None:
    """Line (1-based) of the last key in ``path``, searching after its parents."""
    if not text:
        return None
    lines = text.splitlines()
    start = 0
    found = None
    for key in path:
        if not isinstance(key, str):
            continue
        pat = re.compile(r'"' + re.escape(key) + r'"\s*:')
        for i in range(start, len(lines)):
            if pat.search(lines[i]):
                found, start = i + 1, i
                break
        else:
            return found
    return found


class _Checker:
    def __init__(self, text: str | None, source: str):
        self.text = text
        self.source = source

    def fail(self, path: tuple, msg: str):
        where = ".".join(str(p) for p in path) or "<root>"
        line = _locate(self.text, path)
        loc = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{loc}: {where}: {msg}")

    def typed(self, obj: dict, key: str, types, path: tuple, default=None):
        # an explicit null means "not set", so written configs load back
        if obj.get(key) is None:
            return default
        val = obj[key]
        if isinstance(val, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
            self.fail(path + (key,), f"expected {_type_name(types)}, got a boolean")
        if not isinstance(val, types):
            self.fail(path + (key,), f"expected {_type_name(types)}, got {type(val).__name__}")
        return val

    def unknown(self, obj: dict, allowed: set, path: tuple):
        for key in obj:
            if key not in allowed:
                self.fail(path + (key,), f"unknown key (allowed: {', '.join(sorted(allowed))})")


def _type_name(types) -> str:
    types = types if isinstance(types, tuple) else (types,)
    return " or ".join(t.__name__ for t in types)


def parse_config(data: Any, text: str | None = None, source: str = "<config>") -> ExperimentConfig:
    c = _Checker(text, source)
    if not isinstance(data, dict):
        c.fail((), "top level must be a JSON object")
    c.unknown(data, TOP_KEYS, ())

    env = data.get("env")
    if env is None:
        c.fail(("env",), "missing required key")
    if isinstance(env, str):
        env = {"name": env}
    if not isinstance(env, dict):
        c.fail(("env",), "expected an object or an environment name")
    c.unknown(env, {"name", "params"}, ("env",))
    env_name = c.typed(env, "name", str, ("env",))
    if env_name not in ENVIRONMENTS:
        c.fail(("env", "name"), f"unknown environment {env_name!r} (choose from {', '.join(ENVIRONMENTS)})")
    env_params = c.typed(env, "params", dict, ("env",), {})
    cfg_cls = ENVIRONMENTS[env_name][0]
    fields = {f.name for f in dataclasses.fields(cfg_cls)}
    c.unknown(env_params, fields, ("env", "params"))
    try:
        cfg_cls(**_tuplify(env_params))
    except (TypeError, ValueError) as exc:
        c.fail(("env", "params"), str(exc))

    oracle_raw = c.typed(data, "oracle", dict, (), {})
    c.unknown(oracle_raw, {f.name for f in dataclasses.fields(OracleConfig)}, ("oracle",))
    try:
        oracle = OracleConfig(**oracle_raw)
    except (TypeError, ValueError) as exc:
        c.fail(("oracle",), str(exc))

    solvers_raw = c.typed(data, "solvers", list, (), ["cg", "ascg"])
    if not solvers_raw:
        c.fail(("solvers",), "at least one solver is required")
    solvers = []
    for i, s in enumerate(solvers_raw):
        path = ("solvers", i)
        if isinstance(s, str):
            s = {"name": s}
        if not isinstance(s, dict):
            c.fail(("solvers",), f"entry {i}: expected a name or an object")
        name = s.get("name")
        if name not in SOLVER_NAMES:
            c.fail(("solvers",), f"entry {i}: unknown solver {name!r} (choose from {', '.join(SOLVER_NAMES)})")
        params = s.get("params", {})
        if not isinstance(params, dict):
            c.fail(path + ("params",), "expected an object")
        c.unknown(params, SOLVER_PARAMS[name], ("solvers", "params"))
        solvers.append(SolverSpec(name, dict(params)))
    if len({s.name for s in solvers}) != len(solvers):
        c.fail(("solvers",), "each solver may appear once")

    T = c.typed(data, "T", int, (), 100)
    if T < 1:
        c.fail(("T",), "must be >= 1")
    n_seeds = c.typed(data, "n_seeds", int, (), 10)
    if n_seeds < 1:
        c.fail(("n_seeds",), "must be >= 1")
    base_seed = c.typed(data, "base_seed", int, (), 0)
    if base_seed < 0:
        c.fail(("base_seed",), "must be >= 0")
    jobs = c.typed(data, "jobs", int, (), 1)
    if jobs < 1:
        c.fail(("jobs",), "must be >= 1")

    expert_raw = c.typed(data, "expert", dict, (), {})
    c.unknown(expert_raw, EXPERT_KEYS, ("expert",))
    expert = _parse_expert(c, expert_raw)

    return ExperimentConfig(
        env=env_name,
        env_params=env_params,
        oracle=oracle,
        solvers=tuple(solvers),
        T=T,
        n_seeds=n_seeds,
        base_seed=base_seed,
        expert=expert,
        output_dir=c.typed(data, "output_dir", str, (), "runs"),
        name=c.typed(data, "name", str, (), env_name),
        jobs=jobs,
        record_timing=c.typed(data, "record_timing", bool, (), False),
    )


def _parse_expert(c: _Checker, raw: dict) -> ExpertSpec:
    p = ("expert",)
    mode = c.typed(raw, "mode", str, p, "exact")
    if mode not in ("exact", "sampled"):
        c.fail(p + ("mode",), "must be 'exact' or 'sampled'")
    mix = c.typed(raw, "mix_uniform", (int, float), p, 0.0)
    if not 0.0 <= mix <= 1.0:
        c.fail(p + ("mix_uniform",), "must lie in [0, 1]")
    true_w = c.typed(raw, "true_w", list, p)
    if true_w is not None and not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in true_w):
        c.fail(p + ("true_w",), "must be a list of numbers")
    m = c.typed(raw, "m", int, p)
    eps = c.typed(raw, "epsilon_m", (int, float), p)
    delta = c.typed(raw, "delta", (int, float), p)
    sampling = c.typed(raw, "sampling", str, p, "fixed_horizon")
    if sampling not in EXPERT_SAMPLING_MODES:
        c.fail(p + ("sampling",), f"must be one of {', '.join(EXPERT_SAMPLING_MODES)}")
    eps_h = c.typed(raw, "epsilon_h", (int, float), p, 0.01)
    if eps_h <= 0:
        c.fail(p + ("epsilon_h",), "must be positive")
    horizon = c.typed(raw, "horizon", int, p)
    if horizon is not None and horizon < 1:
        c.fail(p + ("horizon",), "must be >= 1")
    if mode == "sampled":
        if m is None and (eps is None or delta is None):
            c.fail(p + ("mode",), "sampled expert needs 'm' or both 'epsilon_m' and 'delta'")
        if m is not None and m < 1:
            c.fail(p + ("m",), "must be >= 1")
        if eps is not None and eps <= 0:
            c.fail(p + ("epsilon_m",), "must be positive")
        if delta is not None and not 0 < delta < 1:
            c.fail(p + ("delta",), "must lie in (0, 1)")
        if mix:
            c.fail(p + ("mix_uniform",), "only supported with the exact expert")
    return ExpertSpec(
        mode=mode,
        mix_uniform=float(mix),
        true_w=None if true_w is None else tuple(float(v) for v in true_w),
        m=m,
        epsilon_m=None if eps is None else float(eps),
        delta=None if delta is None else float(delta),
        sampling=sampling,
        epsilon_h=float(eps_h),
        horizon=horizon,
    )


def _tuplify(params: dict) -> dict:
    return {k: tuple(v) if isinstance(v, list) else v for k, v in params.items()}


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    return parse_config(data, text, str(path))
