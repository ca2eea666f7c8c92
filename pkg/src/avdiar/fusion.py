"""Late fusion of the audio and video partitions of a scene.

The clusters of both partitions are paired by a maximum-weight matching on
shared speech duration, matched clusters are intersected, and utterances on
which the modalities disagree are handed to the nearest audio medoid of the
intersections.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .clustering import medoid
from .errors import FusionDegenerate, SizeGuardExceeded, UniverseMismatch
from .features import DistanceMatrix
from .model import Partition

log = logging.getLogger(__name__)

MAX_MATCHING_SIZE = 20


def match_weights(qa: Partition, qv: Partition, durations: Mapping[int, int]) -> np.ndarray:
    """Shared duration (ms) of every (audio cluster, video cluster) pair."""
    if qa.members != qv.members:
        raise UniverseMismatch("audio and video partitions cover different utterances")
    missing = qa.members - durations.keys()
    if missing:
        raise UniverseMismatch(f"no duration for utterances {sorted(missing)}")
    w = np.zeros((len(qa.clusters), len(qv.clusters)), dtype=np.int64)
    for i, a in enumerate(qa.clusters):
        for j, v in enumerate(qv.clusters):
            w[i, j] = sum(durations[u] for u in a & v)
    return w


def max_weight_assignment(w: np.ndarray) -> tuple[int, ...]:
    """Column for each row of a square matrix maximizing the total weight.

    Dynamic programming over subsets of used columns; ties resolve to the
    lexicographically smallest column sequence.
    """
    w = np.asarray(w)
    p = w.shape[0]
    if w.shape != (p, p):
        raise ValueError(f"square weight matrix required, got {w.shape}")
    if p > MAX_MATCHING_SIZE:
        raise SizeGuardExceeded(f"matching size {p} exceeds {MAX_MATCHING_SIZE}")
    if p == 0:
        return ()
    weights = w.tolist()
    full = (1 << p) - 1
    # best[mask]: best total for the rows still free once the columns in mask are used
    best = [0] * (1 << p)
    for mask in range(full - 1, -1, -1):
        row = bin(mask).count("1")
        best[mask] = max(weights[row][j] + best[mask | 1 << j] for j in range(p) if not mask >> j & 1)
    cols = []
    mask = 0
    for row in range(p):
        for j in range(p):
            if not mask >> j & 1 and weights[row][j] + best[mask | 1 << j] == best[mask]:
                cols.append(j)
                mask |= 1 << j
                break
    return tuple(cols)


def optimal_matching(w: np.ndarray) -> tuple[tuple[int, int], ...]:
    """Maximum-weight set of non-adjacent (audio, video) cluster edges.

    Weights are non-negative, so a perfect matching of the zero-padded square
    matrix attains the optimum; edges touching padding are dropped.
    """
    w = np.asarray(w)
    rows, cols = w.shape
    size = max(rows, cols)
    padded = np.zeros((size, size), dtype=w.dtype)
    padded[:rows, :cols] = w
    perm = max_weight_assignment(padded)
    return tuple((i, j) for i, j in enumerate(perm) if i < rows and j < cols)


def matching_total(w: np.ndarray, matching: Sequence[tuple[int, int]]):
    return sum(w[i, j] for i, j in matching)


def intersect_and_discard(
    qa: Partition, qv: Partition, matching: Sequence[tuple[int, int]]
) -> tuple[tuple[frozenset[int], ...], frozenset[int]]:
    kept = tuple(qa.clusters[i] & qv.clusters[j] for i, j in matching)
    discarded = qa.members - frozenset().union(*kept)
    return kept, discarded


def reallocate(
    kept: Sequence[frozenset[int]],
    discarded: frozenset[int],
    audio: DistanceMatrix,
    scene_id: int = 0,
) -> tuple[Partition, dict[int, int]]:
    """Attach each discarded utterance to the nearest audio medoid of the kept clusters.

    Medoids are computed once, before any utterance is added. Returns the
    fused partition and the cluster index chosen for each discarded utterance.
    """
    if not kept or any(not k for k in kept):
        raise FusionDegenerate("an agreement cluster is empty")
    centers = [medoid(k, audio) for k in kept]
    grown = [set(k) for k in kept]
    moves: dict[int, int] = {}
    for u in sorted(discarded):
        target = min(range(len(centers)), key=lambda k: (audio.between(u, centers[k]), centers[k]))
        grown[target].add(u)
        moves[u] = target
    fused = Partition(scene_id, "fused", tuple(frozenset(g) for g in grown), tuple(centers))
    return fused, moves


@dataclass(frozen=True)
class FusionResult:
    weights: np.ndarray
    matching: tuple[tuple[int, int], ...]
    kept: tuple[frozenset[int], ...]
    discarded: frozenset[int]
    final: Partition
    reallocations: dict[int, int] = field(default_factory=dict)
    degenerate: bool = False

    @property
    def kept_members(self) -> frozenset[int]:
        return frozenset().union(*self.kept)


def fuse(
    qa: Partition,
    qv: Partition,
    durations: Mapping[int, int],
    audio: DistanceMatrix,
) -> FusionResult:
    """Full fusion of one scene.

    When an intersection comes out empty the scene falls back to the audio
    partition and the result is flagged as degenerate.
    """
    w = match_weights(qa, qv, durations)
    matching = optimal_matching(w)
    kept, discarded = intersect_and_discard(qa, qv, matching)
    try:
        final, moves = reallocate(kept, discarded, audio, qa.scene_id)
        degenerate = False
    except FusionDegenerate:
        log.warning("scene %d: empty agreement cluster, keeping the audio partition", qa.scene_id)
        final = Partition(qa.scene_id, "fused", qa.clusters, qa.centers)
        moves, degenerate = {}, True
    return FusionResult(w, matching, kept, discarded, final, moves, degenerate)


def format_trace(result: FusionResult, scene_id: Optional[int] = None) -> str:
    """Human-readable record of one fusion."""
    sid = result.final.scene_id if scene_id is None else scene_id
    fmt_set = lambda s: "{" + ", ".join(str(u) for u in sorted(s)) + "}"
    lines = [f"scene {sid}"]
    lines.append("weights_ms:")
    lines += ["  " + " ".join(str(int(x)) for x in row) for row in result.weights]
    lines.append("matching: " + " ".join(f"a{i}-v{j}" for i, j in result.matching))
    lines.append(f"matching_total_ms: {int(matching_total(result.weights, result.matching))}")
    lines.append("kept: " + " ".join(fmt_set(k) for k in result.kept))
    lines.append("discarded: " + fmt_set(result.discarded))
    lines.append(
        "reallocated: " + (" ".join(f"{u}->{k}" for u, k in sorted(result.reallocations.items())) or "-")
    )
    lines.append("final: " + " ".join(fmt_set(c) for c in result.final.clusters))
    if result.final.centers:
        lines.append("medoids: " + " ".join(str(c) for c in result.final.centers))
    lines.append(f"degenerate: {'yes' if result.degenerate else 'no'}")
    return "\n".join(lines) + "\n"
