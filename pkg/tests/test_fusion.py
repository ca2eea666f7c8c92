import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from avdiar.errors import FusionDegenerate, UniverseMismatch
from avdiar.features import DistanceMatrix
from avdiar.fusion import (
    format_trace,
    fuse,
    match_weights,
    matching_total,
    max_weight_assignment,
    optimal_matching,
    reallocate,
)
from avdiar.model import Partition
from avdiar.synth import oracle_matching


def part(modality, *clusters):
    return Partition(0, modality, tuple(frozenset(c) for c in clusters))


def test_weights_need_the_same_universe():
    with pytest.raises(UniverseMismatch):
        match_weights(part("audio", {1, 2}), part("video", {1}, {3}), {1: 1, 2: 1, 3: 1})


@given(arrays(np.int64, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=st.integers(0, 50)))
def test_matching_is_optimal(w):
    m = optimal_matching(w)
    assert matching_total(w, m) == oracle_matching(w)
    assert len(m) == min(w.shape)


def test_ties_pick_smallest_permutation():
    assert max_weight_assignment(np.ones((3, 3), dtype=int)) == (0, 1, 2)


def test_reallocation_uses_audio_medoids():
    x = np.array([0.0, 1.0, 2.0, 9.0, 10.0, 6.0])
    ids = (0, 1, 2, 3, 4, 5)
    audio = DistanceMatrix(ids, np.abs(x[:, None] - x[None]))
    fused, moves = reallocate((frozenset({0, 1, 2}), frozenset({3, 4})), frozenset({5}), audio)
    assert fused.centers == (1, 3)
    assert moves == {5: 1}
    assert fused.clusters[1] == {3, 4, 5}


def test_degenerate_scene_falls_back_to_audio(caplog):
    qa = part("audio", {1, 4}, {0, 2, 3, 5})
    qv = part("video", {3}, {0, 1, 2, 4, 5})
    durations = {0: 3, 1: 1, 2: 2, 3: 2, 4: 3, 5: 2}
    audio = DistanceMatrix(tuple(range(6)), np.ones((6, 6)) - np.eye(6))
    res = fuse(qa, qv, durations, audio)
    assert res.weights.tolist() == [[0, 4], [2, 7]]
    assert res.matching == ((0, 0), (1, 1))
    assert res.kept[0] == frozenset()
    assert res.degenerate
    assert res.final.clusters == qa.clusters
    assert "empty agreement cluster" in caplog.text
    with pytest.raises(FusionDegenerate):
        reallocate(res.kept, res.discarded, audio)


def test_fusion_result_and_trace():
    qa = part("audio", {1, 2, 3}, {4})
    qv = part("video", {1, 2}, {3, 4})
    durations = dict.fromkeys([1, 2, 3, 4], 1000)
    audio = DistanceMatrix((1, 2, 3, 4), np.array([[0, 1, 2, 5], [1, 0, 1, 4], [2, 1, 0, 3], [5, 4, 3, 0]], float))
    res = fuse(qa, qv, durations, audio)
    assert res.final.members == {1, 2, 3, 4}
    assert res.final.clusters == (frozenset({1, 2, 3}), frozenset({4}))
    assert res.final.centers == (1, 4)
    text = format_trace(res)
    assert "discarded: {3}" in text and "degenerate: no" in text
