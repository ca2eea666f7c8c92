import pytest
from hypothesis import given, strategies as st

from avdiar.model import Partition, Scene, TimeSpan, Utterance, merge_spans, overlap, overlap_ms

spans = st.tuples(st.integers(0, 10_000), st.integers(0, 10_000)).map(lambda t: TimeSpan(min(t), max(t)))


def test_overlap_in_seconds():
    assert overlap(TimeSpan(1000, 3000), TimeSpan(2500, 9000)) == 0.5
    assert overlap(TimeSpan(0, 1000), TimeSpan(1000, 2000)) == 0.0


@given(spans, spans)
def test_overlap_is_symmetric_and_bounded(a, b):
    assert overlap_ms(a, b) == overlap_ms(b, a)
    assert 0 <= overlap_ms(a, b) <= min(a.duration, b.duration)


@given(st.lists(spans, max_size=12))
def test_merge_spans_preserves_coverage(items):
    merged = merge_spans(items)
    for a, b in zip(merged, merged[1:]):
        assert a.end < b.start
    for s in items:
        assert sum(overlap_ms(s, m) for m in merged) == s.duration


def test_span_rejects_reversed_bounds():
    with pytest.raises(ValueError):
        TimeSpan(5, 4)
    assert TimeSpan.from_seconds(1.56, 2.0) == TimeSpan(1560, 2000)


def test_utterance_needs_positive_duration():
    with pytest.raises(ValueError):
        Utterance(0, TimeSpan(10, 10))


def test_scene_invariants():
    with pytest.raises(ValueError):
        Scene(0, (3, 3), ())
    with pytest.raises(ValueError):
        Scene(0, (1, 2), (TimeSpan(0, 10), TimeSpan(5, 20)))


def test_partition_checks_disjointness_and_centers():
    with pytest.raises(ValueError):
        Partition(0, "audio", (frozenset({1, 2}), frozenset({2, 3})))
    with pytest.raises(ValueError):
        Partition(0, "audio", (frozenset({1}), frozenset({2})), (1, 3))
    p = Partition(0, "audio", (frozenset({1, 2}), frozenset({3})), (2, 3))
    assert p.members == {1, 2, 3}
    assert p.label_of() == {1: 0, 2: 0, 3: 1}
