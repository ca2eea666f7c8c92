"""Acceptance suite: one test per criterion, numbered in order."""

from __future__ import annotations

import functools
import time
from pathlib import Path

import numpy as np

from avdiar.cli import main
from avdiar.clustering import pmedian_solve
from avdiar.evaluation import der_scene, pairs_from_labels, score_shot_cuts, score_shot_similarity, single_show
from avdiar.features import DistanceMatrix, video_vectors
from avdiar.fusion import fuse, matching_total, optimal_matching
from avdiar.model import Partition, Scene, Shot, TimeSpan, Utterance
from avdiar.patterns import extract_patterns
from avdiar.pipeline import run_episode
from avdiar.shots import Thresholds, analyze, iter_histograms
from avdiar.synth import (
    OPERATING_POINT,
    GenConfig,
    generate_episode,
    oracle_mapping,
    oracle_matching,
    oracle_patterns,
    oracle_pmedian,
    plant_errors,
    write_corpus,
)


def test_01_fusion_worked_example():
    ms = 1000
    durations = {1: ms, 2: ms, 3: ms, 4: ms}
    qa = Partition(0, "audio", (frozenset({1, 2, 3}), frozenset({4})))
    qv = Partition(0, "video", (frozenset({1, 2}), frozenset({3, 4})))
    audio = DistanceMatrix((1, 2, 3, 4), np.array([[0, 1, 2, 5], [1, 0, 1, 4], [2, 1, 0, 3], [5, 4, 3, 0]], float))
    result = fuse(qa, qv, durations, audio)

    assert result.weights.tolist() == [[2 * ms, 1 * ms], [0, 1 * ms]]
    assert matching_total(result.weights, result.matching) == 3 * ms
    assert result.kept == (frozenset({1, 2}), frozenset({4}))
    assert result.discarded == frozenset({3})
    kept_ms = sum(durations[u] for u in result.kept_members)
    assert 100 * kept_ms / sum(durations.values()) == 75.0


def test_02_video_vector_worked_example():
    shots = [
        Shot(0, TimeSpan(0, 10_000), label=126),
        Shot(1, TimeSpan(10_000, 20_000), label=127),
        Shot(2, TimeSpan(20_000, 30_000), label=3),
    ]
    u = Utterance(205, TimeSpan(10_000 - 1560, 10_000 + 1160))
    scene = Scene(0, (126, 127), (TimeSpan(0, 20_000),), (205,))
    f = video_vectors(scene, shots, {205: u}, n_labels=200)

    expected = np.zeros(200)
    expected[126], expected[127] = 1.56, 1.16
    assert f.vectors.shape == (1, 200)
    np.testing.assert_array_equal(f.vectors[0], expected)


def test_03_pmedian_matches_exhaustive_oracle():
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    for _ in range(200):
        n = int(rng.integers(3, 11))
        p = int(rng.integers(1, 4))
        raw = rng.integers(0, 100, size=(n, n))
        d = np.triu(raw, 1) + np.triu(raw, 1).T
        assert pmedian_solve(d, p).objective == oracle_pmedian(d, p)
    assert time.perf_counter() - start < 10


def test_04_matching_matches_permutation_oracle():
    rng = np.random.default_rng(4)
    for _ in range(200):
        rows, cols = (int(x) for x in rng.integers(1, 6, size=2))
        w = rng.integers(0, 5000, size=(rows, cols))
        m = optimal_matching(w)
        assert len({i for i, _ in m}) == len(m) == len({j for _, j in m})
        assert matching_total(w, m) == oracle_matching(w)


def test_05_pattern_extractor_matches_oracle():
    rng = np.random.default_rng(5)
    for _ in range(500):
        k = int(rng.integers(1, 7))
        s = rng.integers(0, k, size=int(rng.integers(0, 51))).tolist()
        assert extract_patterns(s) == oracle_patterns(s)


def _random_partition(rng, ids, k):
    labels = rng.integers(0, k, size=len(ids))
    clusters = tuple(frozenset(u for u, lab in zip(ids, labels) if lab == c) for c in range(k))
    return Partition(0, "audio", tuple(c for c in clusters if c))


def test_06_der_invariance_and_planted_recovery():
    rng = np.random.default_rng(6)
    for _ in range(100):
        ids = list(range(int(rng.integers(2, 16))))
        durations = {u: int(rng.integers(200, 4000)) for u in ids}
        reference = {u: f"spk{rng.integers(0, 3)}" for u in ids}
        hyp = _random_partition(rng, ids, int(rng.integers(1, 4)))
        base = der_scene(hyp, reference, durations)

        shuffled = Partition(0, "audio", tuple(hyp.clusters[i] for i in rng.permutation(len(hyp.clusters))))
        names = sorted(set(reference.values()))
        rename = dict(zip(names, rng.permutation([f"x{i}" for i in range(len(names))])))
        renamed = {u: rename[s] for u, s in reference.items()}
        again = der_scene(shuffled, renamed, durations)
        assert again.error_ms == base.error_ms and again.der == base.der
        assert base.scored_ms - base.error_ms == oracle_mapping(hyp, reference, durations)

    episode = generate_episode(GenConfig(seed=60, n_scenes=50))
    durations = {u.id: u.duration for u in episode.utterances}
    for rate in (0.1, 0.2, 0.3, 0.4):
        scores = []
        for k in range(50):
            truth = episode.reference_partition(k)
            planted = plant_errors(truth, rate, durations, rng)
            moved = sum(durations[u] for a, b in zip(truth.clusters, planted.clusters) for u in a - b)
            score = der_scene(planted, episode.reference, durations)
            assert abs(score.der - moved / score.scored_ms) <= 0.02
            scores.append(score)
        assert abs(single_show(scores) - rate) <= 0.02


@functools.lru_cache(maxsize=None)
def _operating_point_runs():
    start = time.perf_counter()
    runs = []
    for seed in range(100):
        ep = generate_episode(GenConfig(seed=seed, **OPERATING_POINT))
        runs.append(run_episode(ep.shots, ep.utterances, ep.embeddings, ep.reference))
    return runs, time.perf_counter() - start


def test_07_oracle_dominates_both_modalities():
    runs, _ = _operating_point_runs()
    checked = 0
    for res in runs:
        for row in res.report.rows:
            a, v, o = row.scores["audio"], row.scores["video"], row.scores["oracle"]
            assert o.error_ms <= min(a.error_ms, v.error_ms)
            assert o.der <= min(a.der, v.der)
            checked += 1
    assert checked > 500


def test_08_fusion_beats_audio_at_operating_point():
    runs, elapsed = _operating_point_runs()
    mean = lambda s: float(np.mean([r.report.system_der(s) for r in runs]))
    audio, video, om_ra, om_pa = mean("audio"), mean("video"), mean("om-ra"), mean("om+ra")
    cover = float(np.mean([r.report.coverage_pct for r in runs]))
    assert 0.20 <= audio <= 0.30 and 0.20 <= video <= 0.30
    assert om_pa < audio
    assert om_ra < om_pa
    assert 60 <= cover <= 80
    assert elapsed < 60


def test_09_shot_pipeline_on_clean_frames():
    start = time.perf_counter()
    ep = generate_episode(GenConfig(seed=9, n_scenes=2, filler_shots=(2, 4)))
    frames = list(iter_histograms(ep.frames()))
    shots, pairs = analyze(frames, Thresholds(), ep.config.fps)
    cut = score_shot_cuts([s.frame_range[0] for s in shots[1:]], ep.cuts)
    sim = score_shot_similarity(pairs, pairs_from_labels(ep.labels))
    assert cut.f1 == 1.0
    assert sim.f1 == 1.0
    assert time.perf_counter() - start < 10


def test_10_diarize_is_deterministic(tmp_path: Path):
    corpus = write_corpus(generate_episode(GenConfig(seed=10, **OPERATING_POINT)), tmp_path / "corpus")
    args = [
        "diarize",
        "--shots", str(corpus / "shots.csv"),
        "--subtitles", str(corpus / "subtitles.srt"),
        "--ivectors", str(corpus / "ivectors.csv"),
        "--reference", str(corpus / "speakers.csv"),
    ]
    outs = []
    for name, jobs in (("a", "1"), ("b", "1"), ("c", "8")):
        out = tmp_path / name
        assert main(args + ["--jobs", jobs, "--out", str(out)]) == 0
        outs.append({p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()})
    assert outs[0] == outs[1] == outs[2]
    assert Path("report.txt") in outs[0]
