from .generator import OPERATING_POINT, Episode, GenConfig, generate_episode, plant_errors, write_corpus
from .oracles import oracle_mapping, oracle_matching, oracle_patterns, oracle_pmedian

__all__ = [
    "OPERATING_POINT",
    "Episode",
    "GenConfig",
    "generate_episode",
    "oracle_mapping",
    "oracle_matching",
    "oracle_patterns",
    "oracle_pmedian",
    "plant_errors",
    "write_corpus",
]
