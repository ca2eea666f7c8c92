from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from avdiar.model import Shot, TimeSpan, Utterance

settings.register_profile("repo", deadline=None, max_examples=60)
settings.load_profile("repo")


def shots_from_labels(labels, length_ms=2000):
    """Back-to-back shots of equal length carrying ``labels``."""
    return [
        Shot(k, TimeSpan(k * length_ms, (k + 1) * length_ms), (k * 50, (k + 1) * 50 - 1), lab)
        for k, lab in enumerate(labels)
    ]


def utterance_per_shot(shots, margin=200):
    return [Utterance(s.index, TimeSpan(s.span.start + margin, s.span.end - margin)) for s in shots]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
