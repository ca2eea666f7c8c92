"""Per-scene utterance vectors for both modalities and their distances."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Literal, Mapping, Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .ingest import EmbeddingTable
from .model import Scene, Shot, Utterance, overlap_ms

Metric = Literal["euclidean", "normalized_euclidean"]


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    scene_id: int
    modality: str
    ids: tuple[int, ...]
    vectors: np.ndarray
    metric: Metric

    def __post_init__(self) -> None:
        if self.vectors.shape[0] != len(self.ids):
            raise ValueError("one feature row per utterance required")


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    ids: tuple[int, ...]
    values: np.ndarray

    def index(self, uid: int) -> int:
        return self.ids.index(uid)

    def between(self, a: int, b: int) -> float:
        return float(self.values[self.index(a), self.index(b)])

    def sub(self, ids: Sequence[int]) -> np.ndarray:
        pos = [self.index(u) for u in ids]
        return self.values[np.ix_(pos, pos)]


def video_vectors(
    scene: Scene,
    shots: Sequence[Shot],
    utterances: Mapping[int, Utterance],
    n_labels: Optional[int] = None,
) -> FeatureMatrix:
    """Seconds of overlap between each utterance and every shot label of the episode."""
    if n_labels is None:
        n_labels = max(s.label for s in shots) + 1 if shots else 0
    starts = [s.span.start for s in shots]
    vectors = np.zeros((len(scene.utterances), n_labels))
    for row, uid in enumerate(scene.utterances):
        span = utterances[uid].span
        k = max(bisect.bisect_right(starts, span.start) - 1, 0)
        while k < len(shots) and shots[k].span.start < span.end:
            ms = overlap_ms(span, shots[k].span)
            if ms:
                vectors[row, shots[k].label] += ms
            k += 1
    return FeatureMatrix(scene.id, "video", tuple(scene.utterances), vectors / 1000, "euclidean")


def audio_vectors(scene: Scene, table: EmbeddingTable) -> FeatureMatrix:
    ids = tuple(scene.utterances)
    return FeatureMatrix(scene.id, "audio", ids, table.rows(ids), "normalized_euclidean")


def distance_matrix(f: FeatureMatrix) -> DistanceMatrix:
    """Pairwise distances under the matrix's metric.

    ``normalized_euclidean`` divides each dimension by its population
    standard deviation over the scene; constant dimensions are skipped.
    """
    x = np.asarray(f.vectors, dtype=float)
    n = x.shape[0]
    if n < 2:
        return DistanceMatrix(f.ids, np.zeros((n, n)))
    if f.metric == "normalized_euclidean":
        sd = x.std(axis=0)
        keep = sd > 0
        x = x[:, keep] / sd[keep]
    elif f.metric != "euclidean":
        raise ValueError(f"unknown metric {f.metric!r}")
    if x.shape[1] == 0:
        return DistanceMatrix(f.ids, np.zeros((n, n)))
    return DistanceMatrix(f.ids, squareform(pdist(x, "euclidean")))
