"""Diarization and shot-detection scoring.

Hypothesis and reference share the subtitle segmentation, so the
diarization error rate reduces to speaker confusion time under the best
one-to-one mapping of clusters to speakers. No collar is applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import EmptyScoredSet, MissingReference
from .fusion import optimal_matching
from .model import Partition

SYSTEMS = ("audio", "video", "oracle", "om-ra", "om+ra", "ws")


def map_clusters(
    hyp: Partition,
    reference: Mapping[int, str],
    durations: Mapping[int, int],
    scored: Optional[Iterable[int]] = None,
) -> dict[int, Optional[str]]:
    """Cluster index to reference speaker, maximizing matched duration.

    Clusters left without a speaker (or paired with one they share no
    speech with) map to ``None``.
    """
    scored = hyp.members if scored is None else frozenset(scored)
    missing = sorted(u for u in scored if u not in reference)
    if missing:
        raise MissingReference(f"no reference speaker for utterances {missing}")
    speakers = sorted({reference[u] for u in scored})
    col = {s: j for j, s in enumerate(speakers)}
    w = np.zeros((len(hyp.clusters), len(speakers)), dtype=np.int64)
    for k, cluster in enumerate(hyp.clusters):
        for u in cluster & scored:
            w[k, col[reference[u]]] += durations[u]
    mapping: dict[int, Optional[str]] = {k: None for k in range(len(hyp.clusters))}
    for k, j in optimal_matching(w):
        if w[k, j] > 0:
            mapping[k] = speakers[j]
    return mapping


def hypothesis_labels(
    hyp: Partition, reference: Mapping[int, str], durations: Mapping[int, int], scored=None
) -> dict[int, Optional[str]]:
    """Reference speaker attributed to each clustered utterance under the optimal map."""
    mapping = map_clusters(hyp, reference, durations, scored)
    return {u: mapping[k] for k, cluster in enumerate(hyp.clusters) for u in cluster}


@dataclass(frozen=True)
class SceneScore:
    scene_id: int
    der: float
    error_ms: int
    scored_ms: int
    total_ms: int

    @property
    def covered_pct(self) -> float:
        return 100.0 * self.scored_ms / self.total_ms if self.total_ms else 0.0


def _score(scene_id: int, wrong: Iterable[int], scored: frozenset[int], durations, total_ms) -> SceneScore:
    scored_ms = sum(durations[u] for u in scored)
    if scored_ms == 0:
        raise EmptyScoredSet(f"scene {scene_id}: nothing to score")
    error_ms = sum(durations[u] for u in wrong)
    return SceneScore(scene_id, error_ms / scored_ms, error_ms, scored_ms, scored_ms if total_ms is None else total_ms)


def der_scene(
    hyp: Partition,
    reference: Mapping[int, str],
    durations: Mapping[int, int],
    scored: Optional[Iterable[int]] = None,
    total_ms: Optional[int] = None,
) -> SceneScore:
    """Misattributed share of the scored speech.

    ``scored`` defaults to the partition's members; scored utterances the
    partition leaves out count as errors. ``total_ms`` is the scene's full
    speech time, used only to report coverage.
    """
    scored = hyp.members if scored is None else frozenset(scored)
    if not scored:
        raise EmptyScoredSet(f"scene {hyp.scene_id}: nothing to score")
    labels = hypothesis_labels(hyp, reference, durations, scored)
    wrong = [u for u in scored if labels.get(u) != reference[u]]
    return _score(hyp.scene_id, wrong, scored, durations, total_ms)


def der_oracle(
    qa: Partition, qv: Partition, reference: Mapping[int, str], durations: Mapping[int, int]
) -> SceneScore:
    """Error left when an utterance counts as right if either modality gets it right."""
    scored = qa.members | qv.members
    if not scored:
        raise EmptyScoredSet(f"scene {qa.scene_id}: nothing to score")
    la = hypothesis_labels(qa, reference, durations)
    lv = hypothesis_labels(qv, reference, durations)
    wrong = [u for u in scored if la.get(u) != reference[u] and lv.get(u) != reference[u]]
    return _score(qa.scene_id, wrong, scored, durations, None)


def coverage(kept: Iterable[int], scene_utterances: Iterable[int], durations: Mapping[int, int]) -> float:
    """Percentage of the scene's speech time held by ``kept``."""
    scene = frozenset(scene_utterances)
    kept = frozenset(kept)
    if not kept <= scene:
        raise ValueError("kept utterances must belong to the scene")
    total = sum(durations[u] for u in scene)
    return 100.0 * sum(durations[u] for u in kept) / total if total else 100.0


def single_show(scores: Iterable[Optional[SceneScore]]) -> Optional[float]:
    """Duration-weighted mean of per-scene DER (weights: scored speech)."""
    scores = [s for s in scores if s is not None]
    scored = sum(s.scored_ms for s in scores)
    if not scored:
        return None
    return sum(s.error_ms for s in scores) / scored


# shot detection metrics


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    hits: int = 0


def _prf(hits: int, n_hyp: int, n_ref: int) -> PRF:
    if n_hyp == 0 and n_ref == 0:
        return PRF(1.0, 1.0, 1.0, 0)
    precision = hits / n_hyp if n_hyp else 0.0
    recall = hits / n_ref if n_ref else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return PRF(precision, recall, f1, hits)


def score_shot_cuts(hyp: Sequence[int], ref: Sequence[int], tol_frames: int = 1) -> PRF:
    """Cut detection F1; a hypothesis cut hits a reference cut within ``tol_frames``.

    Pairs are matched one-to-one, closest first.
    """
    candidates = sorted(
        (abs(h - r), r, h) for h in set(hyp) for r in set(ref) if abs(h - r) <= tol_frames
    )
    used_h: set[int] = set()
    used_r: set[int] = set()
    for _, r, h in candidates:
        if h not in used_h and r not in used_r:
            used_h.add(h)
            used_r.add(r)
    return _prf(len(used_h), len(set(hyp)), len(set(ref)))


def similarity_lists(pairs: Iterable[tuple[int, int]]) -> dict[int, set[int]]:
    lists: dict[int, set[int]] = {}
    for a, b in pairs:
        if a == b:
            continue
        lists.setdefault(a, set()).add(b)
        lists.setdefault(b, set()).add(a)
    return lists


def pairs_from_labels(labels: Sequence[int]) -> list[tuple[int, int]]:
    """All (q, c), q < c, of shots sharing a label."""
    return [(q, c) for c in range(len(labels)) for q in range(c) if labels[q] == labels[c]]


def score_shot_similarity(hyp_pairs: Iterable[tuple[int, int]], ref_pairs: Iterable[tuple[int, int]]) -> PRF:
    """Per-shot similarity scoring.

    A shot is correctly paired when its hypothesized and reference lists of
    similar shots intersect. Precision counts over shots with a non-empty
    hypothesis list, recall over shots with a non-empty reference list.
    """
    hyp = similarity_lists(hyp_pairs)
    ref = similarity_lists(ref_pairs)
    hits = sum(1 for s, lst in hyp.items() if lst & ref.get(s, set()))
    return _prf(hits, len(hyp), len(ref))


# episode report


@dataclass
class SceneRow:
    scene_id: int
    pattern: tuple[int, int]
    n_utterances: int
    speech_ms: int
    kept_ms: int
    scores: dict[str, Optional[SceneScore]] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)

    @property
    def coverage_pct(self) -> float:
        return 100.0 * self.kept_ms / self.speech_ms if self.speech_ms else 100.0


@dataclass
class EpisodeReport:
    rows: list[SceneRow]
    scored: bool

    def system_der(self, system: str) -> Optional[float]:
        return single_show(row.scores.get(system) for row in self.rows)

    @property
    def coverage_pct(self) -> float:
        total = sum(r.speech_ms for r in self.rows)
        kept = sum(r.kept_ms for r in self.rows)
        return 100.0 * kept / total if total else 0.0

    def totals(self) -> dict[str, Optional[float]]:
        return {s: self.system_der(s) for s in SYSTEMS}


def _pct(x: Optional[float]) -> str:
    return "-" if x is None else f"{100 * x:.1f}"


def format_report_text(report: EpisodeReport) -> str:
    """Fixed-width table: one row per scene, then the single-show row."""
    head = f"{'scene':>5} {'pattern':>11} {'utts':>4} {'speech_s':>8} " + " ".join(
        f"{s:>14}" if s == "om-ra" else f"{s:>6}" for s in SYSTEMS
    )
    lines = [head, "-" * len(head)]

    def cells(get, cov) -> str:
        out = []
        for s in SYSTEMS:
            v = _pct(get(s))
            if s == "om-ra":
                v = f"{v} ({cov:.1f})" if cov is not None else v
                out.append(f"{v:>14}")
            else:
                out.append(f"{v:>6}")
        return " ".join(out)

    for r in report.rows:
        pattern = f"c{r.pattern[0]}/c{r.pattern[1]}"
        get = lambda s: r.scores[s].der if r.scores.get(s) is not None else None
        line = f"{r.scene_id:>5} {pattern:>11} {r.n_utterances:>4} {r.speech_ms / 1000:>8.2f} "
        line += cells(get, r.coverage_pct)
        if r.flags:
            line += "  [" + ",".join(r.flags) + "]"
        lines.append(line)
    lines.append("-" * len(head))
    total_speech = sum(r.speech_ms for r in report.rows)
    n_utts = sum(r.n_utterances for r in report.rows)
    totals = report.totals()
    lines.append(
        f"{'all':>5} {'single-show':>11} {n_utts:>4} {total_speech / 1000:>8.2f} "
        + cells(lambda s: totals[s], report.coverage_pct)
    )
    if not report.scored:
        lines.append("no reference given: DER columns left blank")
    return "\n".join(lines) + "\n"


def format_report_kv(report: EpisodeReport) -> str:
    """Flat ``key=value`` lines; DER values are fractions with six decimals."""

    def num(x: Optional[float]) -> str:
        return "nan" if x is None else f"{x:.6f}"

    out = [f"scenes={len(report.rows)}", f"scored={'yes' if report.scored else 'no'}"]
    for s, v in report.totals().items():
        out.append(f"der.{s}={num(v)}")
    out.append(f"coverage.om-ra={report.coverage_pct:.4f}")
    for r in report.rows:
        key = f"scene.{r.scene_id}"
        out.append(f"{key}.pattern={r.pattern[0]},{r.pattern[1]}")
        out.append(f"{key}.utterances={r.n_utterances}")
        out.append(f"{key}.speech_ms={r.speech_ms}")
        for s in SYSTEMS:
            sc = r.scores.get(s)
            out.append(f"{key}.der.{s}={num(sc.der if sc else None)}")
        out.append(f"{key}.coverage.om-ra={r.coverage_pct:.4f}")
        out.append(f"{key}.flags={','.join(r.flags) or '-'}")
    return "\n".join(out) + "\n"
