"""End-to-end diarization of an episode's dialogue scenes."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from .clustering import cluster_distances, ws_distances
from .errors import EmptyScoredSet, MissingReference
from .evaluation import (
    SYSTEMS,
    EpisodeReport,
    SceneRow,
    SceneScore,
    der_oracle,
    der_scene,
    format_report_kv,
    format_report_text,
)
from .features import audio_vectors, distance_matrix, video_vectors
from .fusion import FusionResult, format_trace, fuse
from .ingest import EmbeddingTable
from .model import Partition, Scene, Shot, Utterance
from .patterns import scenes_from_shots, write_scenes

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    theta_cut: float = 0.5
    theta_sim: float = 0.7
    fps: float = 25.0
    p: int = 2
    min_cover: float = 0.5
    alpha: float = 0.5
    jobs: int = 1
    systems: tuple[str, ...] = SYSTEMS
    seed: int = 0

    def __post_init__(self) -> None:
        if self.p < 1:
            raise ValueError("p must be at least 1")
        if not 0.0 < self.min_cover <= 1.0:
            raise ValueError("min_cover must lie in (0, 1]")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        unknown = set(self.systems) - set(SYSTEMS)
        if unknown:
            raise ValueError(f"unknown systems {sorted(unknown)}")


@dataclass
class SceneResult:
    scene: Scene
    audio: Partition
    video: Partition
    fusion: FusionResult
    ws: Optional[Partition]
    row: SceneRow


@dataclass
class EpisodeResult:
    scenes: list[Scene]
    results: list[SceneResult]
    report: EpisodeReport = field(repr=False)


def _try_score(fn, *args, **kwargs) -> Optional[SceneScore]:
    try:
        return fn(*args, **kwargs)
    except EmptyScoredSet:
        return None


def diarize_scene(
    scene: Scene,
    shots: Sequence[Shot],
    utterances: Mapping[int, Utterance],
    table: EmbeddingTable,
    reference: Optional[Mapping[int, str]],
    cfg: PipelineConfig,
    n_labels: int,
) -> SceneResult:
    dur = {u: utterances[u].duration for u in scene.utterances}
    fa = audio_vectors(scene, table)
    fv = video_vectors(scene, shots, utterances, n_labels)
    da, dv = distance_matrix(fa), distance_matrix(fv)
    qa = cluster_distances(da, cfg.p, scene_id=scene.id, modality="audio")
    qv = cluster_distances(dv, cfg.p, scene_id=scene.id, modality="video")
    fusion = fuse(qa, qv, dur, da)
    ws = None
    if "ws" in cfg.systems:
        ws = cluster_distances(ws_distances(da, dv, cfg.alpha), cfg.p, scene_id=scene.id, modality="ws")

    speech = sum(dur.values())
    kept_ms = sum(dur[u] for u in fusion.kept_members)
    row = SceneRow(scene.id, scene.pattern, len(scene.utterances), speech, kept_ms)
    if fusion.degenerate:
        row.flags.append("degenerate")

    if reference is not None:
        if all(u in reference for u in scene.utterances):
            kept = Partition(scene.id, "fused", tuple(k for k in fusion.kept if k))
            candidates = {
                "audio": lambda: der_scene(qa, reference, dur),
                "video": lambda: der_scene(qv, reference, dur),
                "oracle": lambda: der_oracle(qa, qv, reference, dur),
                "om-ra": lambda: der_scene(kept, reference, dur, fusion.kept_members, speech),
                "om+ra": lambda: der_scene(fusion.final, reference, dur),
                "ws": lambda: der_scene(ws, reference, dur),
            }
            for system in cfg.systems:
                row.scores[system] = _try_score(candidates[system])
            if "om-ra" in row.scores and row.scores["om-ra"] is None:
                row.flags.append("om-ra-empty")
        else:
            row.flags.append("no-reference")
    return SceneResult(scene, qa, qv, fusion, ws, row)


def run_episode(
    shots: Sequence[Shot],
    utterances: Sequence[Utterance],
    table: EmbeddingTable,
    reference: Optional[Mapping[int, str]] = None,
    cfg: PipelineConfig = PipelineConfig(),
    scenes: Optional[Sequence[Scene]] = None,
) -> EpisodeResult:
    """Scenes, both mono-modal clusterings, fusion, the ws baseline and scores.

    Scenes run on ``cfg.jobs`` threads; results keep scene order so output
    does not depend on the thread count.
    """
    if any(s.label is None for s in shots):
        raise ValueError("shots must carry similarity labels")
    if reference is not None:
        unknown = set(reference) - {u.id for u in utterances}
        if unknown:
            raise MissingReference(f"reference lists unknown utterances {sorted(unknown)}")
    if scenes is None:
        scenes = scenes_from_shots(shots, utterances, cfg.min_cover)
    by_id = {u.id: u for u in utterances}
    n_labels = max(s.label for s in shots) + 1 if shots else 0
    active = [sc for sc in scenes if sc.utterances]
    for sc in active:
        table.require(sc.utterances)

    def work(sc: Scene) -> SceneResult:
        return diarize_scene(sc, shots, by_id, table, reference, cfg, n_labels)

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(work, active))
    else:
        results = [work(sc) for sc in active]
    report = EpisodeReport([r.row for r in results], reference is not None)
    return EpisodeResult(list(scenes), results, report)


def write_partitions(path: Union[str, Path], results: Sequence[SceneResult]) -> None:
    """Tab-separated: scene, system, cluster, utterance ids."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["scene", "system", "cluster", "utterances"])
        for r in results:
            kept = Partition(r.scene.id, "fused", r.fusion.kept)
            parts = [("audio", r.audio), ("video", r.video), ("om-ra", kept), ("om+ra", r.fusion.final)]
            if r.ws is not None:
                parts.append(("ws", r.ws))
            for name, part in parts:
                for k, cluster in enumerate(part.clusters):
                    w.writerow([r.scene.id, name, k, ";".join(map(str, sorted(cluster)))])


def write_outputs(result: EpisodeResult, out_dir: Union[str, Path]) -> Path:
    out = Path(out_dir)
    traces = out / "traces"
    traces.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(format_report_text(result.report), encoding="utf-8")
    (out / "report.kv").write_text(format_report_kv(result.report), encoding="utf-8")
    write_scenes(out / "scenes.tsv", result.scenes)
    write_partitions(out / "partitions.tsv", result.results)
    for r in result.results:
        (traces / f"scene_{r.scene.id:04d}.txt").write_text(format_trace(r.fusion), encoding="utf-8")
    return out
