"""Readers and writers for every on-disk input.

Formats:

* SRT subtitles (``HH:MM:SS,mmm --> HH:MM:SS,mmm`` cues)
* ``shots.csv``: ``index,start_ms,end_ms[,label][,first_frame,last_frame]``
* ``ivectors.csv``: ``utt_id,v1,...,vD``
* ``speakers.csv``: ``utt_id,speaker``

Tables are comma or tab delimited and carry a one-line header.
"""

from __future__ import annotations

import csv
import io
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateId,
    GapOrOverlapBetweenShots,
    IngestError,
    MalformedCue,
    MalformedTimestamp,
    MissingUtterance,
    NonMonotonicIndex,
    UnknownUtteranceId,
)
from .model import Shot, TimeSpan, Utterance

log = logging.getLogger(__name__)

PathLike = Union[str, Path]

_TS = r"(\d+):([0-5]\d):([0-5]\d)[,.](\d{1,3})"
_CUE_TIMING = re.compile(rf"^\s*{_TS}\s*-->\s*{_TS}(?:\s.*)?$")
_DASHES = ("-", "–")


@dataclass(frozen=True)
class SubtitleEntry:
    index: int
    span: TimeSpan
    lines: tuple[str, ...]

    @property
    def speaker_turns(self) -> tuple[bool, ...]:
        """Per line, whether it opens with a speaker-turn dash."""
        return tuple(line.lstrip().startswith(_DASHES) for line in self.lines)

    @property
    def is_dual(self) -> bool:
        turns = self.speaker_turns
        return len(turns) >= 2 and all(turns)


def _to_ms(h: str, m: str, s: str, frac: str) -> int:
    return ((int(h) * 60 + int(m)) * 60 + int(s)) * 1000 + int(frac.ljust(3, "0"))


def format_timestamp(ms: int) -> str:
    h, rem = divmod(ms, 3_600_000)
    m, rem = divmod(rem, 60_000)
    s, frac = divmod(rem, 1000)
    return f"{h:02d}:{m:02d}:{s:02d},{frac:03d}"


def parse_srt(data: Union[bytes, str], *, source=None) -> list[SubtitleEntry]:
    """Parse an SRT document.

    Errors carry the 1-based line number of the offending cue line.
    """
    text = data.decode("utf-8-sig") if isinstance(data, bytes) else data.lstrip("﻿")
    lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")

    entries: list[SubtitleEntry] = []
    i = 0
    n = len(lines)
    while i < n:
        if not lines[i].strip():
            i += 1
            continue
        idx_line = i + 1
        try:
            index = int(lines[i].strip())
        except ValueError:
            raise MalformedCue(f"expected cue index, got {lines[i]!r}", path=source, line=idx_line)
        if entries and index <= entries[-1].index:
            raise NonMonotonicIndex(
                f"cue index {index} after {entries[-1].index}", path=source, line=idx_line
            )
        i += 1
        if i >= n:
            raise MalformedTimestamp("cue has no timing line", path=source, line=idx_line)
        m = _CUE_TIMING.match(lines[i])
        if not m:
            raise MalformedTimestamp(f"bad timing line {lines[i]!r}", path=source, line=i + 1)
        g = m.groups()
        start, end = _to_ms(*g[:4]), _to_ms(*g[4:])
        if end < start:
            raise MalformedTimestamp("cue ends before it starts", path=source, line=i + 1)
        if entries and start < entries[-1].span.start:
            raise MalformedTimestamp("cue starts before the previous cue", path=source, line=i + 1)
        i += 1
        body = []
        while i < n and lines[i].strip():
            body.append(lines[i].rstrip())
            i += 1
        entries.append(SubtitleEntry(index, TimeSpan(start, end), tuple(body)))
    return entries


def serialize_srt(entries: Iterable[SubtitleEntry]) -> str:
    blocks = []
    for e in entries:
        head = f"{e.index}\n{format_timestamp(e.span.start)} --> {format_timestamp(e.span.end)}"
        blocks.append("\n".join([head, *e.lines]))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def read_srt(path: PathLike) -> list[SubtitleEntry]:
    return parse_srt(Path(path).read_bytes(), source=path)


def _strip_turn(line: str) -> str:
    line = line.strip()
    if line.startswith(_DASHES):
        line = line[1:]
    return line.strip()


def subtitles_to_utterances(entries: Sequence[SubtitleEntry], first_id: int = 0) -> list[Utterance]:
    """One utterance per cue; dual-speaker cues are split line by line.

    A cue is split when every line opens with a dash. The cue span is shared
    out in proportion to each line's character count (dash and surrounding
    blanks excluded), the last piece absorbing rounding so the total is
    preserved. Zero-length pieces are dropped.
    """
    out: list[Utterance] = []
    next_id = first_id
    for e in entries:
        if e.is_dual:
            sizes = [len(_strip_turn(line)) for line in e.lines]
            total = sum(sizes)
            if total == 0:
                sizes, total = [1] * len(sizes), len(sizes)
            bounds = [e.span.start]
            acc = 0
            for size in sizes[:-1]:
                acc += size
                bounds.append(e.span.start + round(e.span.duration * acc / total))
            bounds.append(e.span.end)
            spans = [TimeSpan(a, b) for a, b in zip(bounds, bounds[1:])]
        else:
            spans = [e.span]
        for span in spans:
            if span.duration <= 0:
                log.debug("dropping zero-length piece of cue %d", e.index)
                continue
            out.append(Utterance(next_id, span))
            next_id += 1
    return out


def _read_table(path: PathLike) -> tuple[list[str], list[tuple[int, list[str]]]]:
    text = Path(path).read_text(encoding="utf-8-sig")
    first = text.split("\n", 1)[0]
    delimiter = "\t" if "\t" in first else ","
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    rows = []
    header: list[str] = []
    for lineno, row in enumerate(reader, start=1):
        if lineno == 1:
            header = [h.strip() for h in row]
            continue
        if not row or all(not c.strip() for c in row):
            continue
        rows.append((lineno, [c.strip() for c in row]))
    return header, rows


def _as_int(value: str, path, line: int, what: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise IngestError(f"{what} must be an integer, got {value!r}", path=path, line=line)


class EmbeddingTable:
    """Utterance id to fixed-dimension vector."""

    def __init__(self, vectors: Mapping[int, np.ndarray], dim: Optional[int] = None):
        self.vectors = {int(k): np.asarray(v, dtype=float) for k, v in vectors.items()}
        if dim is None:
            dim = len(next(iter(self.vectors.values()))) if self.vectors else 20
        self.dim = dim
        for k, v in self.vectors.items():
            if v.shape != (dim,):
                raise DimensionMismatch(f"utterance {k}: expected {dim} components, got {v.shape}")

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, uid: int) -> bool:
        return uid in self.vectors

    def __getitem__(self, uid: int) -> np.ndarray:
        try:
            return self.vectors[uid]
        except KeyError:
            raise MissingUtterance(f"no embedding for utterance {uid}") from None

    def rows(self, ids: Sequence[int]) -> np.ndarray:
        missing = [u for u in ids if u not in self.vectors]
        if missing:
            raise MissingUtterance(f"no embedding for utterances {missing}")
        if not ids:
            return np.zeros((0, self.dim))
        return np.stack([self.vectors[u] for u in ids])

    def require(self, ids: Iterable[int]) -> None:
        self.rows(list(ids))


def load_embeddings(path: PathLike) -> EmbeddingTable:
    _, rows = _read_table(path)
    vectors: dict[int, np.ndarray] = {}
    dim = None
    for lineno, row in rows:
        uid = _as_int(row[0], path, lineno, "utt_id")
        if uid in vectors:
            raise DuplicateId(f"utterance {uid} listed twice", path=path, line=lineno)
        try:
            vec = np.array([float(x) for x in row[1:]])
        except ValueError as exc:
            raise IngestError(str(exc), path=path, line=lineno)
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise DimensionMismatch(f"{len(vec)} components, expected {dim}", path=path, line=lineno)
        vectors[uid] = vec
    return EmbeddingTable(vectors, dim)


def write_embeddings(path: PathLike, table: EmbeddingTable) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["utt_id", *[f"v{k + 1}" for k in range(table.dim)]])
        for uid in sorted(table.vectors):
            w.writerow([uid, *[repr(float(x)) for x in table.vectors[uid]]])


def validate_shots(shots: Sequence[Shot], *, path=None) -> None:
    for k, shot in enumerate(shots):
        if shot.index != k:
            raise NonMonotonicIndex(f"shot index {shot.index} at position {k}", path=path)
        if k and shot.span.start != shots[k - 1].span.end:
            raise GapOrOverlapBetweenShots(
                f"shot {k} starts at {shot.span.start} ms, previous ends at {shots[k - 1].span.end} ms",
                path=path,
            )


def load_shot_table(path: PathLike) -> list[Shot]:
    header, rows = _read_table(path)
    cols = {name: i for i, name in enumerate(header)}
    for need in ("index", "start_ms", "end_ms"):
        if need not in cols:
            raise IngestError(f"missing column {need!r}", path=path, line=1)
    shots = []
    for lineno, row in rows:
        get = lambda name: row[cols[name]] if name in cols and cols[name] < len(row) else ""
        index = _as_int(get("index"), path, lineno, "index")
        start = _as_int(get("start_ms"), path, lineno, "start_ms")
        end = _as_int(get("end_ms"), path, lineno, "end_ms")
        if end < start:
            raise MalformedTimestamp("shot ends before it starts", path=path, line=lineno)
        label = get("label")
        first, last = get("first_frame"), get("last_frame")
        frames = None
        if first and last:
            frames = (_as_int(first, path, lineno, "first_frame"), _as_int(last, path, lineno, "last_frame"))
        if shots and index != shots[-1].index + 1:
            raise NonMonotonicIndex(f"shot index {index} after {shots[-1].index}", path=path, line=lineno)
        if shots and start != shots[-1].span.end:
            raise GapOrOverlapBetweenShots(
                f"shot {index} starts at {start} ms, previous ends at {shots[-1].span.end} ms",
                path=path,
                line=lineno,
            )
        shots.append(
            Shot(index, TimeSpan(start, end), frames, _as_int(label, path, lineno, "label") if label else None)
        )
    if shots and shots[0].index != 0:
        raise NonMonotonicIndex("shot indices must start at 0", path=path, line=rows[0][0])
    return shots


def write_shot_table(path: PathLike, shots: Sequence[Shot]) -> None:
    with_frames = all(s.frame_range is not None for s in shots) and bool(shots)
    header = ["index", "start_ms", "end_ms", "label"]
    if with_frames:
        header += ["first_frame", "last_frame"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for s in shots:
            row = [s.index, s.span.start, s.span.end, "" if s.label is None else s.label]
            if with_frames:
                row += list(s.frame_range)
            w.writerow(row)


def load_reference(path: PathLike, known_ids: Optional[Iterable[int]] = None) -> dict[int, str]:
    _, rows = _read_table(path)
    known = None if known_ids is None else set(known_ids)
    ref: dict[int, str] = {}
    for lineno, row in rows:
        uid = _as_int(row[0], path, lineno, "utt_id")
        if len(row) < 2 or not row[1]:
            raise IngestError("missing speaker", path=path, line=lineno)
        if known is not None and uid not in known:
            raise UnknownUtteranceId(f"unknown utterance {uid}", path=path, line=lineno)
        if uid in ref:
            raise DuplicateId(f"utterance {uid} listed twice", path=path, line=lineno)
        ref[uid] = row[1]
    return ref


def write_reference(path: PathLike, reference: Mapping[int, str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["utt_id", "speaker"])
        for uid in sorted(reference):
            w.writerow([uid, reference[uid]])


def attach_reference(utterances: Sequence[Utterance], reference: Mapping[int, str]) -> list[Utterance]:
    known = {u.id for u in utterances}
    unknown = sorted(set(reference) - known)
    if unknown:
        raise UnknownUtteranceId(f"reference names unknown utterances {unknown}")
    return [Utterance(u.id, u.span, reference.get(u.id)) for u in utterances]
