"""From-scratch ROUGE-1/2/L scorers (precision, recall, F1).

Conventions fixed here and relied on everywhere else in the toolkit:
an empty candidate or reference scores all zeros, no stemming or stopword
removal is applied, and ROUGE-L runs on flat token sequences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .textproc import ngrams


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


_ZERO = RougeScore(0.0, 0.0, 0.0)


def _score(overlap: int, candidate_total: int, reference_total: int) -> RougeScore:
    if candidate_total == 0 or reference_total == 0:
        return _ZERO
    p = overlap / candidate_total
    r = overlap / reference_total
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return RougeScore(p, r, f1)


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> RougeScore:
    """Multiset n-gram overlap between two token sequences."""
    cand = ngrams(list(candidate), n)
    ref = ngrams(list(reference), n)
    overlap = sum((cand & ref).values())
    return _score(overlap, sum(cand.values()), sum(ref.values()))


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    """Longest-common-subsequence overlap between two token sequences."""
    return _score(lcs_length(candidate, reference), len(candidate), len(reference))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """LCS length via O(len(a)*len(b)) DP with memory linear in the shorter side."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]
