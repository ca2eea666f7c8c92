"""Seeded synthetic episodes with full ground truth.

An episode is a run of filler shots (each with its own look) separating
dialogue scenes. A scene alternates the shots of its two characters, one
utterance per shot. Two independent error sources are planted:

* asynchrony: with probability ``p_async`` the utterance is spoken by the
  character who is *not* on screen;
* atypical audio: with probability ``p_outlier`` the utterance's embedding
  is drawn far away from both speakers.
"""

from __future__ import annotations

import colorsys
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Union

import numpy as np

from ..ingest import EmbeddingTable, SubtitleEntry, serialize_srt, write_embeddings, write_reference, write_shot_table
from ..model import Partition, Shot, TimeSpan, Utterance
from ..shots import BINS, GRID, write_ppm


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    n_scenes: int = 10
    utterances_per_scene: tuple[int, int] = (6, 14)
    separation: float = 4.0
    p_async: float = 0.0
    p_outlier: float = 0.0
    p_single_speaker: float = 0.0
    outlier_scale: float = 3.0
    filler_shots: tuple[int, int] = (4, 14)
    p_filler_speech: float = 1.0
    utterance_ms: tuple[int, int] = (1200, 2800)
    dim: int = 20
    fps: float = 25.0
    frame_size: tuple[int, int] = (48, 40)  # width, height

    def __post_init__(self) -> None:
        for name in ("p_async", "p_outlier", "p_single_speaker", "p_filler_speech"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.separation <= 0:
            raise ValueError("separation must be positive")
        lo, hi = self.utterances_per_scene
        if not 3 <= lo <= hi:
            raise ValueError("scenes need at least 3 utterances to show an alternation")
        if self.filler_shots[0] < 1 or self.filler_shots[1] < self.filler_shots[0]:
            raise ValueError("at least one filler shot must separate scenes")


# Operating point where both mono-modal systems err on 20-30 % of the
# speech and their errors are independent.
OPERATING_POINT = dict(separation=3.5, p_async=0.25, p_outlier=0.02)


@dataclass
class Episode:
    config: GenConfig
    shots: list[Shot]
    utterances: list[Utterance]
    embeddings: EmbeddingTable
    reference: dict[int, str]
    scenes: list[list[int]]  # planted scene utterance ids
    async_ids: set[int] = field(default_factory=set)
    outlier_ids: set[int] = field(default_factory=set)
    looks: dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def labels(self) -> list[int]:
        return [s.label for s in self.shots]

    @property
    def n_frames(self) -> int:
        return self.shots[-1].frame_range[1] + 1 if self.shots else 0

    @property
    def cuts(self) -> list[int]:
        """First frame of every shot after the first."""
        return [s.frame_range[0] for s in self.shots[1:]]

    def reference_partition(self, scene: int) -> Partition:
        ids = self.scenes[scene]
        speakers = sorted({self.reference[u] for u in ids})
        clusters = tuple(frozenset(u for u in ids if self.reference[u] == s) for s in speakers)
        return Partition(scene, "fused", clusters)

    def frames(self) -> Iterator[np.ndarray]:
        """RGB rasters of the whole episode, generated lazily."""
        width, height = self.config.frame_size
        for shot in self.shots:
            raster = render_look(self.looks[shot.label], width, height)
            for _ in range(shot.frame_range[0], shot.frame_range[1] + 1):
                yield raster


def render_look(grid_colors: np.ndarray, width: int, height: int) -> np.ndarray:
    """Blow a (rows, cols, 3) color grid up to a raster whose blocks match the histogram grid."""
    rows, cols = grid_colors.shape[:2]
    ys = np.minimum(np.arange(height) // (height // rows), rows - 1)
    xs = np.minimum(np.arange(width) // (width // cols), cols - 1)
    return grid_colors[ys][:, xs]


def _random_look(rng: np.random.Generator) -> np.ndarray:
    """One color per block, each at the center of a random HSV histogram bin."""
    cols, rows = GRID
    nh, ns, nv = BINS
    out = np.empty((rows, cols, 3), dtype=np.uint8)
    for r in range(rows):
        for c in range(cols):
            h, s, v = (rng.integers(nh) + 0.5) / nh, (rng.integers(ns) + 0.5) / ns, (rng.integers(nv) + 0.5) / nv
            out[r, c] = [round(255 * x) for x in colorsys.hsv_to_rgb(h, s, v)]
    return out


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


class _Builder:
    def __init__(self, cfg: GenConfig):
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.frame_ms = 1000 / cfg.fps
        self.frame = 0
        self.shots: list[Shot] = []
        self.utterances: list[Utterance] = []
        self.vectors: dict[int, np.ndarray] = {}
        self.reference: dict[int, str] = {}
        self.looks: dict[int, np.ndarray] = {}

    def ms(self, frame: int) -> int:
        return round(frame * self.frame_ms)

    def new_label(self) -> int:
        label = len(self.looks)
        self.looks[label] = _random_look(self.rng)
        return label

    def add_shot(self, label: int, speech_ms: Optional[int]) -> Optional[TimeSpan]:
        """Append a shot; when ``speech_ms`` is given an utterance span inside it is returned."""
        lead, tail = (int(x) for x in self.rng.integers(100, 600, size=2))
        body = speech_ms if speech_ms is not None else int(self.rng.integers(*self.cfg.utterance_ms))
        n_frames = max(1, math.ceil((lead + body + tail) / self.frame_ms))
        first, last = self.frame, self.frame + n_frames - 1
        span = TimeSpan(self.ms(first), self.ms(last + 1))
        self.shots.append(Shot(len(self.shots), span, (first, last), label))
        self.frame = last + 1
        if speech_ms is None:
            return None
        return TimeSpan(span.start + lead, span.start + lead + speech_ms)

    def add_utterance(self, span: TimeSpan, speaker: str, vector: np.ndarray) -> int:
        uid = len(self.utterances)
        self.utterances.append(Utterance(uid, span, speaker))
        self.vectors[uid] = vector
        self.reference[uid] = speaker
        return uid

    def filler(self, k: int) -> None:
        cfg = self.cfg
        for _ in range(int(self.rng.integers(cfg.filler_shots[0], cfg.filler_shots[1] + 1))):
            label = self.new_label()
            if self.rng.random() < cfg.p_filler_speech:
                span = self.add_shot(label, int(self.rng.integers(*cfg.utterance_ms)))
                self.add_utterance(span, f"x{k:03d}", self.rng.normal(size=cfg.dim) * 3)
            else:
                self.add_shot(label, None)


def generate_episode(cfg: GenConfig) -> Episode:
    """Deterministic synthetic episode for ``cfg``."""
    b = _Builder(cfg)
    rng = b.rng
    scenes: list[list[int]] = []
    async_ids: set[int] = set()
    outlier_ids: set[int] = set()

    for k in range(cfg.n_scenes):
        b.filler(k)
        labels = (b.new_label(), b.new_label())
        names = (f"s{k:03d}a", f"s{k:03d}b")
        center_a = rng.normal(size=cfg.dim) * 2
        centers = (center_a, center_a + cfg.separation * _unit(rng, cfg.dim))
        midpoint = (centers[0] + centers[1]) / 2
        single = rng.random() < cfg.p_single_speaker
        n = int(rng.integers(cfg.utterances_per_scene[0], cfg.utterances_per_scene[1] + 1))
        members = []
        for t in range(n):
            on_screen = t % 2
            speaker = 0 if single else on_screen
            flip = not single and rng.random() < cfg.p_async
            if flip:
                speaker = 1 - speaker
            outlier = rng.random() < cfg.p_outlier
            if outlier:
                vec = midpoint + cfg.outlier_scale * cfg.separation * _unit(rng, cfg.dim) + rng.normal(size=cfg.dim)
            else:
                vec = centers[speaker] + rng.normal(size=cfg.dim)
            span = b.add_shot(labels[on_screen], int(rng.integers(*cfg.utterance_ms)))
            uid = b.add_utterance(span, names[speaker], vec)
            members.append(uid)
            if flip:
                async_ids.add(uid)
            if outlier:
                outlier_ids.add(uid)
        scenes.append(members)
    b.filler(cfg.n_scenes)

    return Episode(
        cfg,
        b.shots,
        b.utterances,
        EmbeddingTable(b.vectors, cfg.dim),
        b.reference,
        scenes,
        async_ids,
        outlier_ids,
        b.looks,
    )


def plant_errors(truth: Partition, rate: float, durations: dict[int, int], rng: np.random.Generator) -> Partition:
    """Move utterances of about ``rate`` of the speech time to another cluster.

    Utterances are visited in random order and moved while that brings the
    moved duration closer to the target.
    """
    if not 0 <= rate < 0.5:
        raise ValueError("rate must lie in [0, 0.5) for the planted error to be recoverable")
    clusters = [set(c) for c in truth.clusters]
    if len(clusters) < 2:
        return truth
    target = rate * sum(durations[u] for u in truth.members)
    where = {u: k for k, c in enumerate(clusters) for u in c}
    moved = 0
    for u in rng.permutation(sorted(where)):
        u = int(u)
        if abs(moved + durations[u] - target) >= abs(moved - target):
            continue
        k = where[u]
        clusters[k].discard(u)
        clusters[(k + 1) % len(clusters)].add(u)
        moved += durations[u]
    return Partition(truth.scene_id, truth.modality, tuple(frozenset(c) for c in clusters))


def write_corpus(episode: Episode, out_dir: Union[str, Path], frames: bool = False) -> Path:
    """Write the episode in the package's input formats.

    Files: ``subtitles.srt``, ``shots.csv``, ``ivectors.csv``,
    ``speakers.csv`` and, with ``frames``, ``frames/NNNNNN.ppm``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = [SubtitleEntry(u.id + 1, u.span, (f"utterance {u.id}",)) for u in episode.utterances]
    (out / "subtitles.srt").write_text(serialize_srt(entries), encoding="utf-8")
    write_shot_table(out / "shots.csv", episode.shots)
    write_embeddings(out / "ivectors.csv", episode.embeddings)
    write_reference(out / "speakers.csv", episode.reference)
    if frames:
        frame_dir = out / "frames"
        frame_dir.mkdir(exist_ok=True)
        for k, raster in enumerate(episode.frames()):
            write_ppm(frame_dir / f"{k:06d}.ppm", raster)
    return out
