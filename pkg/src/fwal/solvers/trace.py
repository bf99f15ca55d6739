from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CSV_HEADER = ("t", "h", "dist", "step_kind", "gamma", "active_set_size", "oracle_steps", "wall_ms")
STEP_KINDS = ("fw", "away", "drop")


class RepresentationError(RuntimeError):
    """The active-set combination no longer reproduces the iterate."""


@dataclass(eq=False)
class TraceRow:
    t: int
    h: float
    dist: float
    step_kind: str
    gamma: float
    active_set_size: int
    oracle_steps: int
    wall_ms: float
    x: np.ndarray
    w: np.ndarray | None = None
    batch_size: int | None = None
    game_value: float | None = None


@dataclass(eq=False)
class SolverTrace:
    """Per-iteration record of a solver run.

    ``x0``/``h0`` describe the starting point; ``rows[i]`` is iteration
    ``i + 1``.
    """

    solver: str
    x0: np.ndarray
    h0: float
    rows: list[TraceRow] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def append(self, row: TraceRow) -> None:
        self.rows.append(row)

    @property
    def h(self) -> np.ndarray:
        return np.array([r.h for r in self.rows])

    @property
    def dist(self) -> np.ndarray:
        return np.array([r.dist for r in self.rows])

    @property
    def iterates(self) -> np.ndarray:
        return np.array([r.x for r in self.rows]).reshape(len(self.rows), -1)

    @property
    def step_kinds(self) -> list[str]:
        return [r.step_kind for r in self.rows]

    @property
    def h_with_start(self) -> np.ndarray:
        return np.concatenate([[self.h0], self.h])

    def final_x(self) -> np.ndarray:
        return self.rows[-1].x if self.rows else self.x0

    def to_csv(self, path: str | Path | None = None, include_timing: bool = True) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in self.rows:
            writer.writerow(
                [
                    r.t,
                    repr(float(r.h)),
                    repr(float(r.dist)),
                    r.step_kind,
                    repr(float(r.gamma)),
                    r.active_set_size,
                    r.oracle_steps,
                    f"{r.wall_ms:.3f}" if include_timing else "0",
                ]
            )
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @staticmethod
    def read_csv(path: str | Path) -> list[dict]:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != CSV_HEADER:
                raise ValueError(f"unexpected trace header {reader.fieldnames}")
            return list(reader)
