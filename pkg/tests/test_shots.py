from pathlib import Path

import numpy as np
import pytest

from avdiar.errors import GeometryMismatch, IngestError
from avdiar.shots import (
    BINS,
    GRID,
    N_BLOCKS,
    N_BINS,
    Thresholds,
    analyze,
    assign_labels,
    block_correlations,
    compare_frames,
    frame_histogram,
    histograms_from_dir,
    read_histogram_file,
    write_histogram_file,
    write_ppm,
)
from avdiar.synth import GenConfig, generate_episode
from avdiar.synth.generator import _random_look, render_look

from conftest import shots_from_labels


def solid(rgb, w=48, h=40):
    return np.tile(np.array(rgb, dtype=np.uint8), (h, w, 1))


def test_histogram_shape_and_normalization(rng):
    raster = rng.integers(0, 256, size=(41, 53, 3), dtype=np.uint8)
    f = frame_histogram(raster)
    assert f.hist.shape == (GRID[0] * GRID[1], BINS[0] * BINS[1] * BINS[2])
    np.testing.assert_allclose(f.hist.sum(axis=1), 1.0)


def test_identical_frames_compare_to_one(rng):
    raster = rng.integers(0, 256, size=(40, 48, 3), dtype=np.uint8)
    a, b = frame_histogram(raster), frame_histogram(raster.copy())
    assert compare_frames(a, b) == pytest.approx(1.0)


def test_black_to_white_is_a_cut():
    a, b = frame_histogram(solid((0, 0, 0))), frame_histogram(solid((255, 255, 255)))
    assert compare_frames(a, b) < Thresholds().theta_cut


def test_trimmed_mean_ignores_a_few_changed_blocks(rng):
    base = render_look(_random_look(rng), 48, 40)
    noisy = base.copy()
    noisy[:8, :8 * 5] = rng.integers(0, 256, size=(8, 40, 3))  # the five top-left blocks
    assert compare_frames(frame_histogram(base), frame_histogram(noisy)) == pytest.approx(1.0)


def test_correlation_of_flat_rows():
    flat = np.full((1, 4), 0.25)
    assert block_correlations(flat, flat)[0] == 1.0
    assert block_correlations(flat, np.array([[1.0, 0, 0, 0]]))[0] == 0.0


def test_geometry_mismatch():
    a = frame_histogram(solid((10, 20, 30)))
    b = frame_histogram(solid((10, 20, 30)), grid=(3, 2))
    with pytest.raises(GeometryMismatch):
        compare_frames(a, b)


def test_labels_follow_first_occurrence():
    shots = shots_from_labels([None] * 6)
    labeled = assign_labels(shots, [(1, 4), (0, 2), (2, 5)])
    assert [s.label for s in labeled] == [0, 1, 0, 2, 1, 0]


def test_clean_stream_recovers_shots():
    ep = generate_episode(GenConfig(seed=2, n_scenes=1, filler_shots=(1, 2), utterances_per_scene=(4, 5)))
    frames = [frame_histogram(r, k) for k, r in enumerate(ep.frames())]
    shots, _ = analyze(frames, Thresholds(), ep.config.fps)
    assert [s.frame_range for s in shots] == [s.frame_range for s in ep.shots]
    assert [s.label for s in shots] == ep.labels
    assert [s.span for s in shots] == [s.span for s in ep.shots]


def test_ppm_directory_and_packed_file(tmp_path: Path, rng):
    rasters = [render_look(_random_look(rng), 48, 40) for _ in range(3)]
    for k, r in enumerate(rasters):
        write_ppm(tmp_path / f"{k:06d}.ppm", r)
    frames = histograms_from_dir(tmp_path)
    assert len(frames) == 3
    write_histogram_file(tmp_path / "h.bh30", frames)
    back = read_histogram_file(tmp_path / "h.bh30")
    assert len(back) == 3 and back[0].hist.shape == (N_BLOCKS, N_BINS)
    np.testing.assert_allclose(back[2].hist, frames[2].hist, atol=1e-7)


def test_packed_file_validation(tmp_path: Path):
    p = tmp_path / "bad.bh30"
    p.write_bytes(b"XXXX" + bytes(8))
    with pytest.raises(IngestError):
        read_histogram_file(p)


def test_threshold_range():
    with pytest.raises(ValueError):
        Thresholds(theta_cut=1.5)
