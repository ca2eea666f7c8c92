"""Two-shot alternation patterns and the dialogue scenes they delimit."""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from .errors import PairNotInPatternSet
from .model import Scene, Shot, TimeSpan, Utterance, merge_spans, overlap_ms

Pair = tuple[int, int]
Run = tuple[int, int]


@dataclass(frozen=True)
class PatternMatch:
    pair: Pair
    match_runs: tuple[Run, ...]
    isolated_runs: tuple[Run, ...]

    @property
    def runs(self) -> tuple[Run, ...]:
        return tuple(sorted(self.match_runs + self.isolated_runs))


def extract_patterns(s: Sequence[int]) -> set[Pair]:
    """Every ordered pair (l1, l2), l1 != l2, such that l1 l2 l1 occurs in ``s``.

    Any occurrence of l1 (l2 l1)+ contains l1 l2 l1 and vice versa, so one
    window scan suffices.
    """
    found: set[Pair] = set()
    for a, b, c in zip(s, s[1:], s[2:]):
        if a == c and a != b:
            found.add((a, b))
    return found


def _alternating_segments(s: Sequence[int], pair: Pair) -> list[Run]:
    """Maximal stretches over {l1, l2} whose neighbours always differ."""
    allowed = set(pair)
    segs: list[Run] = []
    start = None
    for i, x in enumerate(s):
        if x not in allowed:
            if start is not None:
                segs.append((start, i - 1))
            start = None
        elif start is None or x == s[i - 1]:
            if start is not None:
                segs.append((start, i - 1))
            start = i
    if start is not None:
        segs.append((start, len(s) - 1))
    return segs


def pattern_runs(s: Sequence[int], pair: Pair) -> PatternMatch:
    """Full alternations l1 (l2 l1)+ and isolated l1/l2 alternations of ``pair``.

    Inside each alternating stretch, the span from its first to last l1 is a
    match run when it holds at least three shots. Stretches without a match
    run count as isolated runs when they hold at least two shots. Shots left
    over at the ends of a stretch containing a match are dropped.
    """
    if pair not in extract_patterns(s):
        raise PairNotInPatternSet(pair)
    l1 = pair[0]
    match: list[Run] = []
    isolated: list[Run] = []
    for lo, hi in _alternating_segments(s, pair):
        first = lo if s[lo] == l1 else lo + 1
        last = hi if s[hi] == l1 else hi - 1
        if last - first >= 2:
            match.append((first, last))
        elif hi - lo >= 1:
            isolated.append((lo, hi))
    return PatternMatch(pair, tuple(match), tuple(isolated))


def _run_span(shots: Sequence[Shot], run: Run) -> TimeSpan:
    return TimeSpan(shots[run[0]].span.start, shots[run[1]].span.end)


def build_scenes(
    shots: Sequence[Shot],
    patterns: set[Pair],
    utterances: Sequence[Utterance],
    min_cover: float = 0.5,
) -> list[Scene]:
    """One scene per unordered label pair found in ``patterns``.

    (l1, l2) and (l2, l1) describe the same dialogue, so their runs are
    pooled. A scene is keyed by the orientation whose first match run comes
    first. Utterances go to the scene covering them most, provided the cover
    reaches ``min_cover`` of their duration; ties favour the older scene.
    """
    labels = [s.label for s in shots]
    if any(label is None for label in labels):
        raise ValueError("build_scenes needs labeled shots")

    groups: dict[frozenset[int], list[PatternMatch]] = {}
    for pair in sorted(patterns):
        groups.setdefault(frozenset(pair), []).append(pattern_runs(labels, pair))

    drafts = []
    for matches in groups.values():
        first_match = min((m.match_runs[0][0], m.pair) for m in matches)
        runs = [r for m in matches for r in m.runs]
        intervals = merge_spans(_run_span(shots, r) for r in runs)
        drafts.append((first_match, intervals))
    drafts.sort(key=lambda d: d[0])

    owner: dict[int, tuple[int, int]] = {}
    for seniority, (_, intervals) in enumerate(drafts):
        for u in utterances:
            cover = sum(overlap_ms(u.span, iv) for iv in intervals)
            if cover == 0 or cover < min_cover * u.duration:
                continue
            best = owner.get(u.id)
            if best is None or cover > best[0]:
                owner[u.id] = (cover, seniority)

    members: dict[int, list[int]] = {k: [] for k in range(len(drafts))}
    for u in utterances:
        if u.id in owner:
            members[owner[u.id][1]].append(u.id)

    return [
        Scene(k, pair_key[1], tuple(intervals), tuple(members[k]))
        for k, (pair_key, intervals) in enumerate(drafts)
    ]


def scenes_from_shots(shots: Sequence[Shot], utterances: Sequence[Utterance], min_cover: float = 0.5) -> list[Scene]:
    labels = [s.label for s in shots]
    return build_scenes(shots, extract_patterns(labels), utterances, min_cover)


@dataclass(frozen=True)
class SceneStats:
    n_scenes: int
    mean_speech_s: float
    coverage_pct: float
    mean_speakers: Optional[float]
    std_speakers: Optional[float]


def scene_stats(
    scenes: Sequence[Scene],
    utterances: Sequence[Utterance],
    reference: Optional[Mapping[int, str]] = None,
) -> SceneStats:
    """Speech per scene, share of all speech inside scenes, speakers per scene.

    Speaker counts use ``reference`` when given, else the utterances' own
    reference speakers; they are ``None`` when neither is available.
    """
    dur = {u.id: u.duration for u in utterances}
    if reference is None and any(u.ref_speaker is not None for u in utterances):
        reference = {u.id: u.ref_speaker for u in utterances if u.ref_speaker is not None}
    total = sum(dur.values())
    per_scene = [sum(dur[i] for i in sc.utterances) for sc in scenes]
    if not scenes:
        return SceneStats(0, 0.0, 0.0, 0.0 if reference is not None else None, 0.0 if reference is not None else None)
    mean_speech = sum(per_scene) / len(scenes) / 1000
    coverage = 100.0 * sum(per_scene) / total if total else 0.0
    if reference is None:
        return SceneStats(len(scenes), mean_speech, coverage, None, None)
    counts = [len({reference[i] for i in sc.utterances if i in reference}) for sc in scenes]
    return SceneStats(len(scenes), mean_speech, coverage, statistics.fmean(counts), statistics.pstdev(counts))


def write_scenes(path: Union[str, Path], scenes: Sequence[Scene]) -> None:
    """Tab-separated dump: scene, l1, l2, intervals (start-end ms), utterance ids."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["scene", "l1", "l2", "intervals_ms", "utterances"])
        for sc in scenes:
            w.writerow(
                [
                    sc.id,
                    sc.pattern[0],
                    sc.pattern[1],
                    ";".join(f"{iv.start}-{iv.end}" for iv in sc.intervals),
                    ";".join(str(u) for u in sc.utterances),
                ]
            )


def read_scenes(path: Union[str, Path]) -> list[Scene]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        next(reader, None)
        for row in reader:
            if not row:
                continue
            intervals = tuple(
                TimeSpan(*map(int, part.split("-"))) for part in row[3].split(";") if part
            )
            utts = tuple(int(x) for x in row[4].split(";") if x)
            out.append(Scene(int(row[0]), (int(row[1]), int(row[2])), intervals, utts))
    return out
