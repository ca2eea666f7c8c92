"""Exact p-median clustering of a scene's utterances.

Once the set of centers is fixed, sending every utterance to its nearest
center is an optimal assignment, so the integer program reduces to a search
over the C(n, p) center sets. Scenes are small enough for that search to be
exhaustive.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import EmptyCluster, InvalidP, OrderMismatch, SizeGuardExceeded
from .features import DistanceMatrix, FeatureMatrix, distance_matrix
from .model import Partition

MAX_N_P2 = 64
MAX_N_GENERAL = 24
_CHUNK = 1 << 16


@dataclass(frozen=True)
class PMedianSolution:
    centers: tuple[int, ...]  # row indices, ascending
    assignment: tuple[int, ...]  # center row index for every row
    objective: float

    def groups(self) -> list[list[int]]:
        return [[i for i, c in enumerate(self.assignment) if c == center] for center in self.centers]


def _as_array(d: Union[DistanceMatrix, np.ndarray]) -> np.ndarray:
    arr = d.values if isinstance(d, DistanceMatrix) else np.asarray(d, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"distance matrix must be square, got {arr.shape}")
    return arr


def assign(d: np.ndarray, centers: Sequence[int]) -> tuple[int, ...]:
    """Nearest-center assignment; centers keep themselves, ties go to the lower index."""
    centers = sorted(centers)
    nearest = np.argmin(d[:, centers], axis=1)
    out = [centers[k] for k in nearest]
    for c in centers:
        out[c] = c
    return tuple(out)


def _objective(d: np.ndarray, assignment: Sequence[int]) -> float:
    return math.fsum(d[i, c] for i, c in enumerate(assignment))


def _center_sets(n: int, p: int) -> Iterable[np.ndarray]:
    combos = itertools.combinations(range(n), p)
    while True:
        chunk = np.array(list(itertools.islice(combos, _CHUNK)), dtype=np.intp).reshape(-1, p)
        if not len(chunk):
            return
        yield chunk


def pmedian_solve(d: Union[DistanceMatrix, np.ndarray], p: int) -> PMedianSolution:
    """Globally optimal p-median solution.

    Among optimal center sets the lexicographically smallest one is returned.
    """
    arr = _as_array(d)
    n = arr.shape[0]
    if not 1 <= p <= n:
        raise InvalidP(f"p={p} outside [1, {n}]")
    limit = MAX_N_P2 if p <= 2 else MAX_N_GENERAL
    if n > limit:
        raise SizeGuardExceeded(f"n={n} exceeds the exhaustive-search limit {limit} for p={p}")

    tol = lambda x: 1e-9 * max(1.0, abs(x))
    best_cost = math.inf
    near: list[tuple[float, tuple[int, ...]]] = []
    for chunk in _center_sets(n, p):
        costs = arr[:, chunk].min(axis=2).sum(axis=0)
        low = float(costs.min())
        if low > best_cost + tol(best_cost):
            continue
        best_cost = min(best_cost, low)
        keep = costs <= best_cost + tol(best_cost)
        near += [(float(c), tuple(map(int, combo))) for c, combo in zip(costs[keep], chunk[keep])]
    near = [(c, combo) for c, combo in near if c <= best_cost + tol(best_cost)]

    # exact re-ranking of the float near-ties
    scored = []
    for _, centers in near:
        a = assign(arr, centers)
        scored.append((_objective(arr, a), centers, a))
    objective, centers, assignment = min(scored, key=lambda t: (t[0], t[1]))
    return PMedianSolution(centers, assignment, objective)


def _partition(sol: PMedianSolution, ids: Sequence[int], scene_id: int, modality: str) -> Partition:
    clusters = tuple(frozenset(ids[i] for i in group) for group in sol.groups())
    return Partition(scene_id, modality, clusters, tuple(ids[c] for c in sol.centers))


def cluster_distances(dm: DistanceMatrix, p: int = 2, *, scene_id: int = 0, modality: str = "audio") -> Partition:
    n = len(dm.ids)
    if n == 0:
        return Partition(scene_id, modality, (), ())
    return _partition(pmedian_solve(dm, min(p, n)), dm.ids, scene_id, modality)


def cluster_scene(f: FeatureMatrix, p: int = 2) -> Partition:
    """Cluster a scene's utterances into ``p`` groups (fewer if the scene is smaller)."""
    return cluster_distances(distance_matrix(f), p, scene_id=f.scene_id, modality=f.modality)


def _max_normalized(values: np.ndarray) -> np.ndarray:
    top = float(values.max()) if values.size else 0.0
    return values / top if top > 0 else np.zeros_like(values)


def ws_distances(da: DistanceMatrix, dv: DistanceMatrix, alpha: float = 0.5) -> DistanceMatrix:
    if da.ids != dv.ids:
        raise OrderMismatch("audio and video matrices list utterances in different orders")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha={alpha} outside [0, 1]")
    mixed = alpha * _max_normalized(da.values) + (1 - alpha) * _max_normalized(dv.values)
    return DistanceMatrix(da.ids, mixed)


def cluster_scene_ws(fa: FeatureMatrix, fv: FeatureMatrix, alpha: float = 0.5, p: int = 2) -> Partition:
    """Weighted-sum baseline: one p-median over a blend of both max-normalized distances."""
    if fa.ids != fv.ids:
        raise OrderMismatch("audio and video features list utterances in different orders")
    dm = ws_distances(distance_matrix(fa), distance_matrix(fv), alpha)
    return cluster_distances(dm, p, scene_id=fa.scene_id, modality="ws")


def medoid(cluster: Iterable[int], d: DistanceMatrix) -> int:
    """Member with the smallest total distance to the others (lowest id on ties)."""
    members = sorted(cluster)
    if not members:
        raise EmptyCluster("medoid of an empty cluster")
    sub = d.sub(members)
    sums = [math.fsum(row) for row in sub]
    best = min(range(len(members)), key=lambda k: (sums[k], members[k]))
    return members[best]
