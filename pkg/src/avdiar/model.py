"""Domain types shared across the pipeline.

All times are integer milliseconds so that duration sums (and therefore
DER weights) are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Optional, Sequence

Modality = Literal["audio", "video", "fused", "ws"]


@dataclass(frozen=True, order=True)
class TimeSpan:
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.end < self.start:
            raise ValueError(f"span end {self.end} precedes start {self.start}")

    @classmethod
    def from_seconds(cls, start: float, end: float) -> "TimeSpan":
        return cls(round(start * 1000), round(end * 1000))

    @property
    def duration(self) -> int:
        return self.end - self.start

    @property
    def seconds(self) -> tuple[float, float]:
        return self.start / 1000, self.end / 1000


def overlap_ms(a: TimeSpan, b: TimeSpan) -> int:
    return max(0, min(a.end, b.end) - max(a.start, b.start))


def overlap(a: TimeSpan, b: TimeSpan) -> float:
    """Overlapping time of two spans, in seconds."""
    return overlap_ms(a, b) / 1000


def merge_spans(spans: Iterable[TimeSpan]) -> list[TimeSpan]:
    """Sort spans and fuse the ones that touch or overlap."""
    out: list[TimeSpan] = []
    for s in sorted(spans):
        if out and s.start <= out[-1].end:
            if s.end > out[-1].end:
                out[-1] = TimeSpan(out[-1].start, s.end)
        else:
            out.append(s)
    return out


@dataclass(frozen=True)
class Utterance:
    id: int
    span: TimeSpan
    ref_speaker: Optional[str] = None

    def __post_init__(self) -> None:
        if self.span.duration <= 0:
            raise ValueError(f"utterance {self.id} has empty span")

    @property
    def duration(self) -> int:
        return self.span.duration


@dataclass(frozen=True)
class Shot:
    index: int
    span: TimeSpan
    frame_range: Optional[tuple[int, int]] = None
    label: Optional[int] = None


@dataclass(frozen=True)
class Scene:
    id: int
    pattern: tuple[int, int]
    intervals: tuple[TimeSpan, ...]
    utterances: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.pattern[0] == self.pattern[1]:
            raise ValueError("scene pattern needs two distinct labels")
        for a, b in zip(self.intervals, self.intervals[1:]):
            if b.start < a.end:
                raise ValueError("scene intervals must be sorted and disjoint")


@dataclass(frozen=True)
class Partition:
    scene_id: int
    modality: Modality
    clusters: tuple[frozenset[int], ...]
    centers: Optional[tuple[int, ...]] = None

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for c in self.clusters:
            if seen & c:
                raise ValueError("partition clusters overlap")
            seen |= c
        if self.centers is not None:
            if len(self.centers) != len(self.clusters):
                raise ValueError("one center per cluster required")
            for k, (center, cluster) in enumerate(zip(self.centers, self.clusters)):
                if center not in cluster:
                    raise ValueError(f"center {center} outside cluster {k}")

    @property
    def members(self) -> frozenset[int]:
        return frozenset().union(*self.clusters)

    def label_of(self) -> dict[int, int]:
        return {u: k for k, c in enumerate(self.clusters) for u in c}


def durations_of(utterances: Sequence[Utterance]) -> dict[int, int]:
    return {u.id: u.duration for u in utterances}

