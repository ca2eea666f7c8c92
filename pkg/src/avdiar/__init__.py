"""Audiovisual speaker diarization of two-character dialogue scenes."""

from .model import Partition, Scene, Shot, TimeSpan, Utterance, overlap

__version__ = "0.1.0"

__all__ = ["Partition", "Scene", "Shot", "TimeSpan", "Utterance", "overlap"]
