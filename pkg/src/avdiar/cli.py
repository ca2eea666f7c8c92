"""Command line entry point.

Subcommands::

    avdiar shots        frames or packed histograms -> shots.csv, similar.csv
    avdiar patterns     shots.csv + subtitles -> scenes.tsv
    avdiar diarize      shots.csv + subtitles + i-vectors [+ speakers] -> report
    avdiar score-shots  hypothesis vs reference shot tables -> F1 report
    avdiar synth        seeded synthetic corpus

A ``--config`` file holds ``key = value`` lines (``#`` comments allowed);
command line flags override it.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import sys
from dataclasses import fields, replace
from pathlib import Path
from typing import Optional, Sequence

from .errors import AvdiarError
from .evaluation import pairs_from_labels, score_shot_cuts, score_shot_similarity
from .ingest import (
    attach_reference,
    load_embeddings,
    load_reference,
    load_shot_table,
    read_srt,
    subtitles_to_utterances,
    write_shot_table,
)
from .patterns import scene_stats, scenes_from_shots, write_scenes
from .pipeline import PipelineConfig, run_episode, write_outputs
from .shots import Thresholds, analyze, histograms_from_dir, read_histogram_file, write_histogram_file
from .synth import GenConfig, generate_episode, write_corpus

log = logging.getLogger("avdiar")

_CONFIG_KEYS = {f.name for f in fields(PipelineConfig)}


def read_config(path: Path) -> dict[str, str]:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.read_string("[avdiar]\n" + path.read_text(encoding="utf-8"))
    out = {}
    for key, value in parser["avdiar"].items():
        key = key.replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise AvdiarError(f"{path}: unknown config key {key!r}")
        out[key] = value
    return out


def build_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig()
    values: dict[str, object] = {}
    if getattr(args, "config", None):
        values.update(read_config(Path(args.config)))
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    typed = {}
    for f in fields(PipelineConfig):
        if f.name not in values:
            continue
        v = values[f.name]
        if f.name == "systems":
            typed[f.name] = tuple(s.strip() for s in v.split(",")) if isinstance(v, str) else tuple(v)
        else:
            typed[f.name] = type(getattr(cfg, f.name))(v)
    return replace(cfg, **typed)


def _write_pairs(path: Path, pairs) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["past_shot", "shot"])
        w.writerows(pairs)


def _read_pairs(path: Path) -> list[tuple[int, int]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return [(int(a), int(b)) for a, b in rows[1:] if a]


def cmd_shots(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    if bool(args.frames) == bool(args.histograms):
        raise AvdiarError("give exactly one of --frames or --histograms")
    frames = histograms_from_dir(args.frames) if args.frames else read_histogram_file(args.histograms)
    if not frames:
        raise AvdiarError("no frames to analyze")
    shots, pairs = analyze(frames, Thresholds(cfg.theta_cut, cfg.theta_sim), cfg.fps)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_shot_table(out / "shots.csv", shots)
    _write_pairs(out / "similar.csv", pairs)
    if args.save_histograms:
        write_histogram_file(args.save_histograms, frames)
    print(f"{len(frames)} frames, {len(shots)} shots, {len({s.label for s in shots})} labels")
    return 0


def _utterances(args: argparse.Namespace):
    utterances = subtitles_to_utterances(read_srt(args.subtitles))
    reference = None
    if getattr(args, "reference", None):
        reference = load_reference(args.reference, [u.id for u in utterances])
        utterances = attach_reference(utterances, reference)
    return utterances, reference


def cmd_patterns(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    shots = load_shot_table(args.shots)
    utterances, reference = _utterances(args)
    scenes = scenes_from_shots(shots, utterances, cfg.min_cover)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_scenes(out / "scenes.tsv", scenes)
    st = scene_stats(scenes, utterances, reference)
    print(f"scenes: {st.n_scenes}")
    print(f"mean speech per scene: {st.mean_speech_s:.2f} s")
    print(f"speech coverage: {st.coverage_pct:.2f} %")
    if st.mean_speakers is not None:
        print(f"speakers per scene: {st.mean_speakers:.2f} (std {st.std_speakers:.2f})")
    return 0


def cmd_diarize(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    shots = load_shot_table(args.shots)
    utterances, reference = _utterances(args)
    table = load_embeddings(args.ivectors)
    result = run_episode(shots, utterances, table, reference, cfg)
    out = write_outputs(result, args.out)
    sys.stdout.write((out / "report.txt").read_text(encoding="utf-8"))
    return 0


def cmd_score_shots(args: argparse.Namespace) -> int:
    hyp, ref = load_shot_table(args.hyp), load_shot_table(args.ref)

    def cuts(shots):
        if any(s.frame_range is None for s in shots):
            raise AvdiarError("shot tables need first_frame/last_frame columns to score cuts")
        return [s.frame_range[0] for s in shots[1:]]

    def pairs(shots, path):
        if path:
            return _read_pairs(Path(path))
        return pairs_from_labels([s.label for s in shots])

    cut = score_shot_cuts(cuts(hyp), cuts(ref), args.tol_frames)
    sim = score_shot_similarity(pairs(hyp, args.hyp_pairs), pairs(ref, args.ref_pairs))
    if len(hyp) != len(ref):
        log.warning("shot counts differ (%d vs %d); similarity is scored by shot index", len(hyp), len(ref))
    text = (
        f"{'':>8} {'shot cut':>9} | {'shot similarity':^29}\n"
        f"{'':>8} {'F1':>9} | {'precision':>9} {'recall':>9} {'F1':>9}\n"
        f"{'episode':>8} {cut.f1:>9.2f} | {sim.precision:>9.2f} {sim.recall:>9.2f} {sim.f1:>9.2f}\n"
    )
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "shot_scores.txt").write_text(text, encoding="utf-8")
        (out / "shot_scores.kv").write_text(
            f"cut.precision={cut.precision:.6f}\ncut.recall={cut.recall:.6f}\ncut.f1={cut.f1:.6f}\n"
            f"similarity.precision={sim.precision:.6f}\nsimilarity.recall={sim.recall:.6f}\n"
            f"similarity.f1={sim.f1:.6f}\n",
            encoding="utf-8",
        )
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    gen = GenConfig(
        seed=args.seed if args.seed is not None else 0,
        n_scenes=args.scenes,
        separation=args.separation,
        p_async=args.p_async,
        p_outlier=args.p_outlier,
        p_single_speaker=args.p_single,
        fps=args.fps if args.fps is not None else 25.0,
    )
    episode = generate_episode(gen)
    out = write_corpus(episode, args.out, frames=args.frames)
    print(
        f"wrote {len(episode.utterances)} utterances, {len(episode.shots)} shots, "
        f"{len(episode.scenes)} scenes to {out}"
    )
    return 0


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--jobs", type=int, help="worker threads for scene processing")
    p.add_argument("--theta-cut", dest="theta_cut", type=float, help="cut threshold on frame similarity")
    p.add_argument("--theta-sim", dest="theta_sim", type=float, help="shot similarity threshold")
    p.add_argument("--fps", type=float, help="frame rate of the video")
    p.add_argument("--alpha", type=float, help="audio weight of the ws baseline")
    p.add_argument("--min-cover", dest="min_cover", type=float, help="share of an utterance a scene must cover")
    p.add_argument("--p", type=int, help="clusters per scene")
    p.add_argument("--systems", help="comma-separated systems to score")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--out", default="out", help="output directory")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="avdiar", description="Audiovisual diarization of dialogue scenes")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shots", help="detect shot cuts and similar shots")
    _common(p)
    p.add_argument("--frames", help="directory of PPM frames named by index")
    p.add_argument("--histograms", help="packed BH30 histogram file")
    p.add_argument("--save-histograms", dest="save_histograms", help="also write the frames' histograms here")
    p.set_defaults(func=cmd_shots)

    p = sub.add_parser("patterns", help="detect dialogue scenes")
    _common(p)
    p.add_argument("--shots", required=True)
    p.add_argument("--subtitles", required=True)
    p.add_argument("--reference", help="speakers.csv, for speaker statistics")
    p.set_defaults(func=cmd_patterns)

    p = sub.add_parser("diarize", help="diarize every dialogue scene")
    _common(p)
    p.add_argument("--shots", required=True)
    p.add_argument("--subtitles", required=True)
    p.add_argument("--ivectors", required=True)
    p.add_argument("--reference", help="speakers.csv; enables scoring")
    p.set_defaults(func=cmd_diarize)

    p = sub.add_parser("score-shots", help="score shot detection against a reference")
    p.add_argument("--hyp", required=True, help="hypothesis shots.csv")
    p.add_argument("--ref", required=True, help="reference shots.csv")
    p.add_argument("--hyp-pairs", dest="hyp_pairs", help="hypothesis similar.csv (default: from labels)")
    p.add_argument("--ref-pairs", dest="ref_pairs", help="reference similar.csv (default: from labels)")
    p.add_argument("--tol-frames", dest="tol_frames", type=int, default=1)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_score_shots)

    p = sub.add_parser("synth", help="write a synthetic corpus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scenes", type=int, default=10)
    p.add_argument("--separation", type=float, default=GenConfig.separation)
    p.add_argument("--p-async", dest="p_async", type=float, default=0.0)
    p.add_argument("--p-outlier", dest="p_outlier", type=float, default=0.0)
    p.add_argument("--p-single", dest="p_single", type=float, default=0.0)
    p.add_argument("--fps", type=float)
    p.add_argument("--frames", action="store_true", help="also render PPM frames")
    p.add_argument("--out", default="corpus")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (AvdiarError, OSError, ValueError) as exc:
        print(f"avdiar: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
