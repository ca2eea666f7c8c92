"""Naive exhaustive solvers, kept deliberately simple, for cross-checking.

Each one enumerates its whole feasible space and shares no code with the
production solvers.
"""

from __future__ import annotations

import itertools
import re
from math import comb
from typing import Mapping, Optional, Sequence

import numpy as np

from ..errors import SizeGuardExceeded
from ..model import Partition

MAX_PMEDIAN_N = 10
MAX_PMEDIAN_P = 3
MAX_MATCHING_P = 8
MAX_PATTERN_LEN = 50


def oracle_pmedian(d: np.ndarray, p: int) -> float:
    """Minimum of sum d_ij y_ij over every binary (x, y) satisfying the constraints.

    The center choice x ranges over all p-subsets; for each, every way of
    assigning every utterance to one of the chosen centers is tried.
    """
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    if n > MAX_PMEDIAN_N or p > MAX_PMEDIAN_P:
        raise SizeGuardExceeded(f"oracle limited to n <= {MAX_PMEDIAN_N}, p <= {MAX_PMEDIAN_P}")
    if not 1 <= p <= n:
        raise ValueError(f"p={p} outside [1, {n}]")
    centers = np.array(list(itertools.combinations(range(n), p)))  # (k, p)
    assert len(centers) == comb(n, p)
    cost = d[:, centers]  # (n, k, p): utterance i sent to the c-th chosen center
    # axis i + 1 of totals is the center picked for utterance i: p**n objectives per x
    totals = cost[0]
    for i in range(1, n):
        totals = totals[..., None] + cost[i].reshape(len(centers), *([1] * i), p)
    return float(totals.min())


def oracle_matching(w: np.ndarray) -> float:
    """Best total over every permutation of columns (zero-padded to square)."""
    w = np.asarray(w)
    size = max(w.shape)
    if size > MAX_MATCHING_P:
        raise SizeGuardExceeded(f"oracle limited to {MAX_MATCHING_P} clusters")
    padded = np.zeros((size, size), dtype=w.dtype)
    padded[: w.shape[0], : w.shape[1]] = w
    best = None
    for perm in itertools.permutations(range(size)):
        total = sum(padded[i, perm[i]] for i in range(size))
        if best is None or total > best:
            best = total
    return 0 if best is None else best


def oracle_patterns(s: Sequence[int]) -> set[tuple[int, int]]:
    """Pairs (l1, l2) such that the sequence matches .* l1 (l2 l1)+ .*.

    Pairs with l1 == l2 are left out: a dialogue needs two distinct shots.
    """
    if len(s) > MAX_PATTERN_LEN:
        raise SizeGuardExceeded(f"oracle limited to sequences of {MAX_PATTERN_LEN}")
    alphabet = sorted(set(s))
    code = {label: chr(0x4E00 + k) for k, label in enumerate(alphabet)}
    text = "".join(code[x] for x in s)
    found = set()
    for l1, l2 in itertools.product(alphabet, repeat=2):
        if l1 == l2:
            continue
        a, b = re.escape(code[l1]), re.escape(code[l2])
        if re.fullmatch(f".*{a}(?:{b}{a})+.*", text, flags=re.DOTALL):
            found.add((l1, l2))
    return found


def oracle_mapping(
    hyp: Partition,
    reference: Mapping[int, str],
    durations: Mapping[int, int],
    scored: Optional[set[int]] = None,
) -> int:
    """Largest matched duration over every injective cluster-to-speaker map.

    Each cluster maps to a distinct speaker or to nobody.
    """
    scored = hyp.members if scored is None else scored
    speakers = sorted({reference[u] for u in scored})
    k = len(hyp.clusters)
    if k + len(speakers) > 2 * MAX_MATCHING_P:
        raise SizeGuardExceeded("too many clusters or speakers for the mapping oracle")
    options = speakers + [None] * k
    best = 0
    for choice in set(itertools.permutations(options, k)):
        total = 0
        for cluster, spk in zip(hyp.clusters, choice):
            if spk is not None:
                total += sum(durations[u] for u in cluster & scored if reference[u] == spk)
        best = max(best, total)
    return best
