"""Brute-force geometry of the feature-expectations polytope for tiny MDPs.

Everything here enumerates all ``|A|^|S|`` deterministic policies, so it is a
verification oracle, not something the solvers depend on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from fwal.mdp import DeterministicPolicy, MdpSpec, all_deterministic_policies, feature_expectations_exact

DEDUP_TOL = 1e-9
MAX_POLICIES = 10**6
WOLFE_MAX_ITER = 10_000


class PolytopeSizeError(ValueError):
    pass


class UnsupportedDimensionError(ValueError):
    pass


@dataclass(eq=False)
class PolytopeModel:
    """Deduplicated feature expectations of all deterministic policies.

    ``vertices[i]`` is a point of the polytope (not necessarily extreme);
    ``policies[i]`` lists every deterministic policy that generates it.
    """

    vertices: np.ndarray
    policies: list[list[DeterministicPolicy]]
    gamma: float | None = None
    facial_distance: float | None = None
    diameter: float = field(init=False)

    def __post_init__(self):
        self.vertices = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        self.diameter = diameter(self.vertices)

    @property
    def k(self) -> int:
        return self.vertices.shape[1]

    def __len__(self):
        return len(self.vertices)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "n_vertices": len(self),
            "gamma": self.gamma,
            "diameter": self.diameter,
            "facial_distance": self.facial_distance,
            "vertices": [
                {"phi": v.tolist(), "policies": [list(p.actions) for p in pols]}
                for v, pols in zip(self.vertices, self.policies)
            ],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))


def diameter(points: np.ndarray) -> float:
    points = np.atleast_2d(points)
    if len(points) < 2:
        return 0.0
    diff = points[:, None, :] - points[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=-1)).max())


def dedup_points(points: np.ndarray, tol: float = DEDUP_TOL) -> tuple[np.ndarray, list[int]]:
    """Greedy clustering: returns unique points and, per input, its cluster index."""
    uniq: list[np.ndarray] = []
    owner: list[int] = []
    for p in points:
        for j, u in enumerate(uniq):
            if np.linalg.norm(p - u) <= tol:
                owner.append(j)
                break
        else:
            uniq.append(p)
            owner.append(len(uniq) - 1)
    return np.array(uniq), owner


def enumerate_polytope(mdp: MdpSpec) -> PolytopeModel:
    if mdp.n_deterministic_policies > MAX_POLICIES:
        raise PolytopeSizeError(
            f"{mdp.n_actions}^{mdp.n_states} policies exceeds the enumeration guard of {MAX_POLICIES}"
        )
    pols = list(all_deterministic_policies(mdp))
    phis = np.array([feature_expectations_exact(mdp, p) for p in pols])
    verts, owner = dedup_points(phis)
    groups: list[list[DeterministicPolicy]] = [[] for _ in range(len(verts))]
    for pol, j in zip(pols, owner):
        groups[j].append(pol)
    return PolytopeModel(verts, groups, gamma=mdp.gamma)


def min_norm_point(points: np.ndarray, tol: float = 1e-12, max_iter: int = WOLFE_MAX_ITER) -> tuple[np.ndarray, np.ndarray]:
    """Wolfe's algorithm: the point of ``conv(points)`` closest to the origin.

    Returns the point and a coefficient vector over ``points`` (a probability
    vector reproducing it).
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(P)
    scale = max(1.0, float(np.max(np.sum(P**2, axis=1))))
    lam = np.zeros(n)
    start = int(np.argmin(np.sum(P**2, axis=1)))
    S = [start]
    lam[start] = 1.0
    x = P[start].copy()
    for _ in range(max_iter):
        # major cycle: most promising vertex for the linear model
        j = int(np.argmin(P @ x))
        if x @ x - P[j] @ x <= tol * scale or j in S:
            break
        S.append(j)
        while True:
            # minor cycle: affine min-norm point of the current corral
            A = P[S]
            m = len(S)
            M = np.zeros((m + 1, m + 1))
            M[:m, :m] = A @ A.T
            M[:m, m] = 1.0
            M[m, :m] = 1.0
            rhs = np.zeros(m + 1)
            rhs[m] = 1.0
            mu = np.linalg.lstsq(M, rhs, rcond=None)[0][:m]
            cur = lam[S]
            if np.all(mu > tol):
                lam[:] = 0.0
                lam[S] = mu
                break
            neg = mu <= tol
            theta = np.min(cur[neg] / (cur[neg] - mu[neg]))
            new = theta * mu + (1.0 - theta) * cur
            new[new <= tol] = 0.0
            lam[:] = 0.0
            lam[S] = new
            S = [s for s in S if lam[s] > 0.0]
            if len(S) == 1:
                break
        lam /= lam.sum()
        x = lam @ P
    return x, lam


def project_onto_hull(model: PolytopeModel | np.ndarray, point: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean projection of ``point`` onto the convex hull of the model's vertices."""
    verts = model.vertices if isinstance(model, PolytopeModel) else np.atleast_2d(model)
    point = np.asarray(point, dtype=float)
    d, lam = min_norm_point(verts - point)
    proj = lam @ verts
    return proj, lam


def hull_membership(model: PolytopeModel | np.ndarray, point: np.ndarray, tol: float = 1e-7) -> tuple[bool, float]:
    proj, _ = project_onto_hull(model, point)
    dist = float(np.linalg.norm(proj - np.asarray(point, dtype=float)))
    return dist <= tol, dist


def convex_hull_2d(points: np.ndarray, tol: float = 1e-12) -> list[int]:
    """Indices of the extreme points in counter-clockwise order (monotone chain).

    Collinear boundary points are dropped; a segment hull returns its two
    endpoints and a single point returns one index.
    """
    pts = np.asarray(points, dtype=float)
    order = sorted(range(len(pts)), key=lambda i: (pts[i, 0], pts[i, 1]))

    def cross(o, a, b):
        return (pts[a, 0] - pts[o, 0]) * (pts[b, 1] - pts[o, 1]) - (pts[a, 1] - pts[o, 1]) * (pts[b, 0] - pts[o, 0])

    lower: list[int] = []
    for i in order:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], i) <= tol:
            lower.pop()
        lower.append(i)
    upper: list[int] = []
    for i in reversed(order):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], i) <= tol:
            upper.pop()
        upper.append(i)
    hull = lower[:-1] + upper[:-1]
    if not hull:
        hull = order[:1]
    # a segment hull comes back as [a, b]; a repeated point as [a]
    seen: list[int] = []
    for i in hull:
        if i not in seen:
            seen.append(i)
    return seen


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = ab @ ab
    t = 0.0 if denom == 0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def set_distance(A: np.ndarray, B: np.ndarray) -> float:
    """Distance between ``conv(A)`` and ``conv(B)`` via the min-norm point of ``A - B``."""
    diff = (np.atleast_2d(A)[:, None, :] - np.atleast_2d(B)[None, :, :]).reshape(-1, np.atleast_2d(A).shape[1])
    x, _ = min_norm_point(diff)
    return float(np.linalg.norm(x))


def proper_faces_2d(points: np.ndarray) -> list[np.ndarray]:
    """Proper faces of ``conv(points)`` in the plane, each as an array of its extreme points."""
    hull = convex_hull_2d(points)
    if len(hull) < 2:
        return []
    faces = [points[[i]] for i in hull]
    if len(hull) >= 3:
        faces += [points[[hull[j], hull[(j + 1) % len(hull)]]] for j in range(len(hull))]
    return faces


def facial_distance_2d(model: PolytopeModel | np.ndarray) -> float:
    """Minimum over proper faces F of ``dist(F, conv(A \\ F))`` for a planar point set A.

    A is the full (deduplicated) atom set, non-extreme points included; an
    atom belongs to F when it lies on F within the dedup tolerance.
    """
    A = model.vertices if isinstance(model, PolytopeModel) else np.atleast_2d(np.asarray(model, dtype=float))
    if A.shape[1] != 2:
        raise UnsupportedDimensionError(f"facial distance is only implemented for k=2, got k={A.shape[1]}")
    if len(A) < 2:
        raise ValueError("facial distance needs at least two distinct points")
    best = math.inf
    for F in proper_faces_2d(A):
        if len(F) == 1:
            on_face = np.linalg.norm(A - F[0], axis=1) <= DEDUP_TOL
        else:
            on_face = np.array([_point_segment_distance(p, F[0], F[1]) <= DEDUP_TOL for p in A])
        rest = A[~on_face]
        if len(rest) == 0:
            continue
        best = min(best, set_distance(F, rest))
    if not math.isfinite(best):
        raise ValueError("degenerate point set: no proper face with a nonempty complement")
    if isinstance(model, PolytopeModel):
        model.facial_distance = best
    return best


def linear_rate(facial_distance: float, diameter: float, sigma: float = 1.0, beta: float = 1.0) -> float:
    """Geometric rate ``sigma C^2 / (8 D^2 beta)`` of away-step Frank-Wolfe."""
    return sigma * facial_distance**2 / (8.0 * diameter**2 * beta)


__all__ = [
    "PolytopeModel",
    "PolytopeSizeError",
    "UnsupportedDimensionError",
    "enumerate_polytope",
    "diameter",
    "dedup_points",
    "min_norm_point",
    "project_onto_hull",
    "hull_membership",
    "convex_hull_2d",
    "set_distance",
    "proper_faces_2d",
    "facial_distance_2d",
    "linear_rate",
]
