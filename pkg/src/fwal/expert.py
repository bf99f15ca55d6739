"""Expert feature expectations from sampled trajectories.

Each trajectory contributes one length-k feature sum. Two sampling modes are
supported: a fixed horizon with discounting (biased by the truncated tail)
and geometric termination, where the trajectory stops after every state with
probability ``1 - gamma`` and the undiscounted sum is an unbiased sample of
the infinite-horizon feature expectations.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from fwal.simulator import as_simulator, rollout_feature_sums

MODES = ("fixed_horizon", "geometric_termination")


@dataclass(frozen=True)
class SampleBudget:
    """Trajectory count guaranteeing ``||phi_hat - phi_e||_2 <= epsilon_m`` w.p. ``1 - delta``."""

    epsilon_m: float
    delta: float
    k: int
    m: int

    @staticmethod
    def raw(epsilon_m: float, delta: float, k: int) -> float:
        return 2.0 * k * math.log(2.0 * k / delta) / epsilon_m**2


def sample_budget(epsilon_m: float, delta: float, k: int) -> SampleBudget:
    if epsilon_m <= 0:
        raise ValueError("epsilon_m must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if k < 1:
        raise ValueError("k must be >= 1")
    # guard against 2.0000000000000004 style round-up
    raw = SampleBudget.raw(epsilon_m, delta, k)
    m = max(1, math.ceil(raw - 1e-9))
    return SampleBudget(epsilon_m, delta, k, m)


def truncation_horizon(gamma: float, epsilon_h: float) -> int:
    """Smallest ``H >= (1/(1-gamma)) ln(1/(epsilon_h (1-gamma)))``, at least 1."""
    if not 0 <= gamma < 1:
        raise ValueError("gamma must lie in [0, 1)")
    if epsilon_h <= 0:
        raise ValueError("epsilon_h must be positive")
    h = math.log(1.0 / (epsilon_h * (1.0 - gamma))) / (1.0 - gamma)
    return max(1, math.ceil(h))


@dataclass(frozen=True)
class TruncationPlan:
    """How expert trajectories are cut.

    ``horizon`` is derived from ``epsilon_h`` unless given explicitly. In
    geometric mode it is unused except as an optional hard cap.
    """

    gamma: float
    epsilon_h: float = 0.01
    mode: str = "fixed_horizon"
    horizon: int | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.horizon is None:
            object.__setattr__(self, "horizon", truncation_horizon(self.gamma, self.epsilon_h))
        elif self.horizon < 1:
            raise ValueError("horizon must be >= 1")

    @property
    def geometric(self) -> bool:
        return self.mode == "geometric_termination"

    @property
    def truncation_bound(self) -> float:
        """Per-feature bias bound ``gamma^H / (1 - gamma)`` of the fixed-horizon mode."""
        if self.geometric:
            return 0.0
        return self.gamma**self.horizon / (1.0 - self.gamma)


@dataclass(frozen=True)
class ExpertDataset:
    """Per-trajectory feature sums and lengths; the estimate is their mean."""

    sums: np.ndarray
    lengths: np.ndarray

    def __post_init__(self):
        sums = np.atleast_2d(np.asarray(self.sums, dtype=float))
        lengths = np.asarray(self.lengths, dtype=np.int64).reshape(-1)
        if sums.shape[0] != lengths.shape[0]:
            raise ValueError("sums and lengths disagree on the number of trajectories")
        object.__setattr__(self, "sums", sums)
        object.__setattr__(self, "lengths", lengths)

    def __len__(self):
        return self.sums.shape[0]

    @property
    def k(self) -> int:
        return self.sums.shape[1]

    def estimate(self) -> np.ndarray:
        return self.sums.mean(axis=0)

    def standard_error(self) -> np.ndarray:
        if len(self) < 2:
            return np.full(self.k, np.inf)
        return self.sums.std(axis=0, ddof=1) / math.sqrt(len(self))

    def to_csv(self, path: str | Path) -> None:
        header = [f"phi_{i}" for i in range(self.k)] + ["length"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row, n in zip(self.sums, self.lengths):
                writer.writerow([repr(float(v)) for v in row] + [int(n)])

    @classmethod
    def read_csv(cls, path: str | Path) -> "ExpertDataset":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][-1] != "length":
            raise ValueError(f"{path}: not an expert dataset (missing header)")
        body = rows[1:]
        sums = np.array([[float(v) for v in r[:-1]] for r in body]).reshape(len(body), len(rows[0]) - 1)
        lengths = np.array([int(r[-1]) for r in body], dtype=np.int64)
        return cls(sums, lengths)


def sample_expert(env, expert_policy, m: int, plan: TruncationPlan, seed=None) -> ExpertDataset:
    if m < 1:
        raise ValueError("m must be >= 1")
    sim = as_simulator(env)
    cap = None if plan.geometric else plan.horizon
    sums, lengths = rollout_feature_sums(sim, expert_policy, m, horizon=cap, seed=seed, geometric=plan.geometric)
    return ExpertDataset(sums, lengths)


def estimate_phi_e(env, expert_policy, m: int, plan: TruncationPlan, seed=None) -> np.ndarray:
    """Mean of ``m`` per-trajectory feature sums of the expert."""
    return sample_expert(env, expert_policy, m, plan, seed).estimate()
