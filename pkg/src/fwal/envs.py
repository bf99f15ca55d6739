"""Benchmark environments: a gridworld, a three-lane driving domain, random tiny MDPs.

Each builder returns an :class:`Environment` holding both the transition
tensor and a native step simulator. The simulator implements the dynamics
directly (coordinate arithmetic) rather than sampling from the tensor, so the
two views can be cross-checked.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fwal.mdp import DeterministicPolicy, MdpSpec, StochasticPolicy, feature_expectations_exact
from fwal.oracle import OracleConfig, best_response_exact
from fwal.simulator import Simulator

UP, DOWN, LEFT, RIGHT = range(4)
_MOVES = np.array([[-1, 0], [1, 0], [0, -1], [0, 1]])


@dataclass(eq=False)
class Environment:
    name: str
    mdp: MdpSpec
    simulator: Simulator
    true_w: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.mdp.k

    def expert_policy(self, cfg: OracleConfig | None = None) -> DeterministicPolicy:
        """Optimal policy for the hidden reward, by exact value iteration."""
        return best_response_exact(self.mdp, self.true_w, cfg).policy

    def expert_phi(self, mix_uniform: float = 0.0) -> np.ndarray:
        """Exact expert feature expectations, optionally mixed with the uniform policy's."""
        phi = feature_expectations_exact(self.mdp, self.expert_policy())
        if mix_uniform:
            uni = feature_expectations_exact(self.mdp, StochasticPolicy.uniform(self.mdp.n_states, self.mdp.n_actions))
            phi = (1.0 - mix_uniform) * phi + mix_uniform * uni
        return phi


# --- gridworld ---------------------------------------------------------------


@dataclass(frozen=True)
class GridworldConfig:
    """Square grid with four moves; walls keep the agent in place.

    Entering ``goal`` means the next step restarts at ``start``.
    ``features`` is ``"onehot"`` (k = size^2 cell indicators) or
    ``"compact"`` (k = 2: goal indicator and closeness to the goal).
    With probability ``slip`` a uniformly random move replaces the chosen one.
    ``cell_rewards`` is the hidden reward per cell for the one-hot features;
    by default +1 at the goal and 0 elsewhere.
    """

    size: int = 5
    goal: tuple[int, int] | None = None
    start: tuple[int, int] = (0, 0)
    features: str = "onehot"
    gamma: float = 0.9
    slip: float = 0.0
    cell_rewards: tuple[float, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("grid size must be positive")
        goal = self.goal if self.goal is not None else (self.size - 1, self.size - 1)
        object.__setattr__(self, "goal", tuple(goal))
        for name, (r, c) in (("goal", goal), ("start", self.start)):
            if not (0 <= r < self.size and 0 <= c < self.size):
                raise ValueError(f"{name} {(r, c)} lies outside the {self.size}x{self.size} grid")
        if self.features not in ("onehot", "compact"):
            raise ValueError(f"unknown gridworld feature map {self.features!r}")
        if not 0.0 <= self.slip <= 1.0:
            raise ValueError("slip must lie in [0, 1]")


class GridworldSimulator(Simulator):
    def __init__(self, cfg: GridworldConfig, features: np.ndarray, mdp: MdpSpec):
        self.cfg = cfg
        self.n = cfg.size
        self.n_states = cfg.size**2
        self.n_actions = 4
        self.gamma = cfg.gamma
        self.features = features
        self.mdp = mdp
        self._goal = cfg.goal[0] * self.n + cfg.goal[1]
        self._start = cfg.start[0] * self.n + cfg.start[1]

    def reset(self, rng, n):
        return np.full(n, self._start, dtype=np.intp)

    def reset_one(self, rng):
        return self._start

    def _move(self, states, actions):
        r, c = np.divmod(states, self.n)
        r = np.clip(r + _MOVES[actions, 0], 0, self.n - 1)
        c = np.clip(c + _MOVES[actions, 1], 0, self.n - 1)
        return r * self.n + c

    def step(self, states, actions, rng):
        states = np.asarray(states)
        actions = np.asarray(actions)
        if self.cfg.slip > 0:
            u = rng.random(len(states))
            rand_a = rng.integers(4, size=len(states))
            actions = np.where(u < self.cfg.slip, rand_a, actions)
        nxt = self._move(states, actions)
        return np.where(states == self._goal, self._start, nxt)

    def step_one(self, state, action, rng):
        if state == self._goal:
            return self._start
        if self.cfg.slip > 0 and rng.random() < self.cfg.slip:
            action = int(rng.integers(4))
        r, c = divmod(state, self.n)
        dr, dc = _MOVES[action]
        r = min(max(r + dr, 0), self.n - 1)
        c = min(max(c + dc, 0), self.n - 1)
        return r * self.n + c


def _grid_features(cfg: GridworldConfig) -> np.ndarray:
    n = cfg.size
    if cfg.features == "onehot":
        return np.eye(n * n)
    gr, gc = cfg.goal
    rows, cols = np.divmod(np.arange(n * n), n)
    manhattan = np.abs(rows - gr) + np.abs(cols - gc)
    span = max(1, 2 * (n - 1))
    goal = (manhattan == 0).astype(float)
    return np.column_stack([goal, 1.0 - manhattan / span])


def build_gridworld(cfg: GridworldConfig | None = None) -> Environment:
    cfg = cfg or GridworldConfig()
    n = cfg.size
    S = n * n
    goal = cfg.goal[0] * n + cfg.goal[1]
    start = cfg.start[0] * n + cfg.start[1]
    P = np.zeros((4, S, S))
    for s in range(S):
        r, c = divmod(s, n)
        for a in range(4):
            if s == goal:
                P[a, s, start] = 1.0
                continue
            for b in range(4):
                p = (1.0 - cfg.slip) * (a == b) + cfg.slip / 4.0
                if p == 0.0:
                    continue
                rr = min(max(r + _MOVES[b, 0], 0), n - 1)
                cc = min(max(c + _MOVES[b, 1], 0), n - 1)
                P[a, s, rr * n + cc] += p
    D = np.zeros(S)
    D[start] = 1.0
    phi = _grid_features(cfg)
    mdp = MdpSpec(P, cfg.gamma, D, phi)
    if cfg.features == "onehot":
        if cfg.cell_rewards is not None:
            true_w = np.asarray(cfg.cell_rewards, dtype=float)
            if true_w.shape != (S,):
                raise ValueError(f"cell_rewards needs {S} entries")
        else:
            true_w = np.zeros(S)
            true_w[goal] = 1.0
    else:
        true_w = np.array([1.0, 0.0])
    sim = GridworldSimulator(cfg, mdp.features, mdp)
    return Environment("gridworld", mdp, sim, true_w, meta={"config": cfg})


# --- car simulator -----------------------------------------------------------

NOOP, STEER_LEFT, STEER_RIGHT, FASTER, SLOWER = range(5)


@dataclass(frozen=True)
class CarSimConfig:
    """Three-lane highway seen in the agent's frame.

    The agent occupies a fixed row (second from the bottom) and a lateral
    slot: 0 and ``n_lanes + 1`` are off-road, ``1..n_lanes`` are lanes. Car B
    moves down one row per step and, after leaving the bottom row, respawns
    at the top in a uniformly random lane; that respawn is the only source of
    randomness. Features are (normalized speed, collision, off-road).
    """

    n_lanes: int = 3
    n_rows: int = 8
    n_speeds: int = 3
    gamma: float = 0.9
    start_slot: int = 2
    start_speed: int = 1
    true_w: tuple[float, float, float] = (0.6, -1.0, -0.4)
    seed: int = 0

    def __post_init__(self):
        if self.n_lanes < 1 or self.n_rows < 3 or self.n_speeds < 2:
            raise ValueError("need n_lanes >= 1, n_rows >= 3, n_speeds >= 2")
        if not 0 <= self.start_slot <= self.n_lanes + 1:
            raise ValueError("start_slot out of range")
        if not 0 <= self.start_speed < self.n_speeds:
            raise ValueError("start_speed out of range")

    @property
    def n_slots(self) -> int:
        return self.n_lanes + 2

    @property
    def n_states(self) -> int:
        return self.n_slots * self.n_speeds * self.n_lanes * self.n_rows


class CarSimulator(Simulator):
    def __init__(self, cfg: CarSimConfig, features: np.ndarray, mdp: MdpSpec):
        self.cfg = cfg
        self.n_states = cfg.n_states
        self.n_actions = 5
        self.gamma = cfg.gamma
        self.features = features
        self.mdp = mdp
        self._dims = (cfg.n_slots, cfg.n_speeds, cfg.n_lanes, cfg.n_rows)

    def encode(self, slot, speed, lane, row):
        return np.ravel_multi_index((slot, speed, lane, row), self._dims)

    def decode(self, states):
        return np.unravel_index(states, self._dims)

    def reset(self, rng, n):
        lanes = rng.integers(self.cfg.n_lanes, size=n)
        return self.encode(
            np.full(n, self.cfg.start_slot), np.full(n, self.cfg.start_speed), lanes, np.zeros(n, dtype=np.intp)
        )

    def step(self, states, actions, rng):
        cfg = self.cfg
        slot, speed, lane, row = self.decode(np.asarray(states))
        actions = np.asarray(actions)
        slot = np.clip(slot - (actions == STEER_LEFT) + (actions == STEER_RIGHT), 0, cfg.n_slots - 1)
        speed = np.clip(speed + (actions == FASTER) - (actions == SLOWER), 0, cfg.n_speeds - 1)
        exits = row == cfg.n_rows - 1
        new_lane = rng.integers(cfg.n_lanes, size=len(row))
        lane = np.where(exits, new_lane, lane)
        row = np.where(exits, 0, row + 1)
        return self.encode(slot, speed, lane, row)

    def reset_one(self, rng):
        return int(self.reset(rng, 1)[0])

    def step_one(self, state, action, rng):
        return int(self.step(np.array([state]), np.array([action]), rng)[0])


def _car_features(cfg: CarSimConfig) -> np.ndarray:
    dims = (cfg.n_slots, cfg.n_speeds, cfg.n_lanes, cfg.n_rows)
    slot, speed, lane, row = np.unravel_index(np.arange(cfg.n_states), dims)
    agent_row = cfg.n_rows - 2
    on_road = (slot >= 1) & (slot <= cfg.n_lanes)
    collision = on_road & (slot - 1 == lane) & (row == agent_row)
    return np.column_stack([speed / (cfg.n_speeds - 1), collision.astype(float), (~on_road).astype(float)])


def build_carsim(cfg: CarSimConfig | None = None) -> Environment:
    cfg = cfg or CarSimConfig()
    dims = (cfg.n_slots, cfg.n_speeds, cfg.n_lanes, cfg.n_rows)
    S = cfg.n_states
    P = np.zeros((5, S, S))
    for s in range(S):
        slot, speed, lane, row = np.unravel_index(s, dims)
        for a in range(5):
            ns = min(max(slot - (a == STEER_LEFT) + (a == STEER_RIGHT), 0), cfg.n_slots - 1)
            nv = min(max(speed + (a == FASTER) - (a == SLOWER), 0), cfg.n_speeds - 1)
            if row == cfg.n_rows - 1:
                for nl in range(cfg.n_lanes):
                    P[a, s, np.ravel_multi_index((ns, nv, nl, 0), dims)] += 1.0 / cfg.n_lanes
            else:
                P[a, s, np.ravel_multi_index((ns, nv, lane, row + 1), dims)] = 1.0
    D = np.zeros(S)
    for nl in range(cfg.n_lanes):
        D[np.ravel_multi_index((cfg.start_slot, cfg.start_speed, nl, 0), dims)] = 1.0 / cfg.n_lanes
    mdp = MdpSpec(P, cfg.gamma, D, _car_features(cfg))
    w = np.asarray(cfg.true_w, dtype=float)
    sim = CarSimulator(cfg, mdp.features, mdp)
    return Environment("carsim", mdp, sim, w / np.linalg.norm(w), meta={"config": cfg})


# --- random tiny MDPs --------------------------------------------------------


def random_tiny_mdp(
    rng: np.random.Generator,
    n_states: int = 3,
    n_actions: int = 2,
    k: int = 2,
    gamma: float = 0.9,
) -> MdpSpec:
    """Dirichlet transitions and initial distribution, uniform features in [0, 1]."""
    P = rng.dirichlet(np.ones(n_states), size=(n_actions, n_states))
    D = rng.dirichlet(np.ones(n_states))
    phi = rng.random((n_states, k))
    return MdpSpec(P, gamma, D, phi)


def random_environment(seed: int, n_states: int = 3, n_actions: int = 2, k: int = 2, gamma: float = 0.9) -> Environment:
    from fwal._rng import make_rng
    from fwal.simulator import MatrixSimulator

    rng = make_rng(seed)
    mdp = random_tiny_mdp(rng, n_states, n_actions, k, gamma)
    return Environment("random", mdp, MatrixSimulator(mdp), rng.normal(size=k))


ENVIRONMENTS = {
    "gridworld": (GridworldConfig, build_gridworld),
    "carsim": (CarSimConfig, build_carsim),
}
