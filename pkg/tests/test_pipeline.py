import pytest

from avdiar.errors import MissingReference
from avdiar.pipeline import PipelineConfig, run_episode
from avdiar.synth import GenConfig, generate_episode


def test_noiseless_episode_is_diarized_perfectly():
    ep = generate_episode(GenConfig(seed=2, n_scenes=4, separation=40.0))
    res = run_episode(ep.shots, ep.utterances, ep.embeddings, ep.reference)
    assert len(res.results) == 4
    for system in ("audio", "video", "oracle", "om-ra", "om+ra"):
        assert res.report.system_der(system) == 0.0
    assert res.report.coverage_pct == 100.0


def test_async_utterances_are_what_video_gets_wrong():
    ep = generate_episode(GenConfig(seed=8, n_scenes=5, separation=40.0, p_async=0.2))
    res = run_episode(ep.shots, ep.utterances, ep.embeddings, ep.reference)
    assert res.report.system_der("audio") == 0.0
    assert res.report.system_der("om+ra") == 0.0
    for r in res.results:
        disagree = frozenset(u for u in r.scene.utterances) - r.fusion.kept_members
        assert disagree <= ep.async_ids


def test_without_reference_nothing_is_scored():
    ep = generate_episode(GenConfig(seed=1, n_scenes=2))
    res = run_episode(ep.shots, ep.utterances, ep.embeddings)
    assert not res.report.scored
    assert res.report.system_der("audio") is None


def test_config_validation_and_unknown_reference():
    with pytest.raises(ValueError):
        PipelineConfig(systems=("audio", "magic"))
    with pytest.raises(ValueError):
        PipelineConfig(min_cover=0)
    ep = generate_episode(GenConfig(seed=1, n_scenes=1))
    with pytest.raises(MissingReference):
        run_episode(ep.shots, ep.utterances, ep.embeddings, {**ep.reference, 10_000: "ghost"})
