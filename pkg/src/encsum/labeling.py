"""Oracle extractive summaries and pseudo sentence-pair labels.

Both operations run the same greedy per-reference-sentence argmax over the
full source pool, without removing picked sentences (one source sentence may
serve several reference sentences; duplicates are handled downstream by the
post-processing dedup). Oracle selection scores pairs by ROUGE-L F1; pseudo
pairs for extractor training score by ROUGE-L recall.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .rouge import rouge_l
from .textproc import Sentence


@dataclass(frozen=True)
class OraclePick:
    reference_index: int
    source_key: tuple[int, int]
    score: float


@dataclass(frozen=True)
class OracleExtraction:
    picks: tuple[OraclePick, ...]
    summary_text: str


@dataclass(frozen=True)
class PseudoPair:
    source_key: tuple[int, int]
    reference_index: int
    score: float


@dataclass(frozen=True)
class PseudoPairSet:
    pairs: tuple[PseudoPair, ...]
    positives: tuple[tuple[int, int], ...]

    def to_record(self, encounter_id: str, section: str) -> dict:
        return {
            "encounter_id": encounter_id,
            "section": section,
            "positives": [list(key) for key in self.positives],
            "pairs": [
                {"src": list(p.source_key), "ref": p.reference_index, "score": p.score}
                for p in self.pairs
            ],
        }


def _argmax_per_reference(
    reference_sents: Sequence[Sentence],
    source_sents: Sequence[Sentence],
    score_fn: Callable[[list[str], list[str]], float],
) -> list[tuple[int, Sentence, float]]:
    if not reference_sents:
        raise ValueError("reference sentence list is empty")
    if not source_sents:
        raise ValueError("source sentence pool is empty, nothing to extract")
    picks = []
    for ref_index, ref in enumerate(reference_sents):
        ref_surfaces = ref.surfaces
        best_sent = None
        best_score = -1.0
        for src in source_sents:
            score = score_fn(src.surfaces, ref_surfaces)
            if score > best_score or (score == best_score and src.key < best_sent.key):
                best_sent = src
                best_score = score
        picks.append((ref_index, best_sent, best_score))
    return picks


def oracle_extract(
    reference_sents: Sequence[Sentence], source_sents: Sequence[Sentence]
) -> OracleExtraction:
    """For each reference sentence pick the source sentence maximizing ROUGE-L F1.

    Ties break toward the lowest (doc_index, sent_index). Picks keep reference
    order and the oracle summary joins the picked sentences in that order.
    """
    picks = _argmax_per_reference(
        reference_sents, source_sents, lambda c, r: rouge_l(c, r).f1
    )
    return OracleExtraction(
        picks=tuple(OraclePick(i, s.key, score) for i, s, score in picks),
        summary_text="\n".join(s.raw_text for _, s, _ in picks),
    )


def build_pseudo_pairs(
    reference_sents: Sequence[Sentence], source_sents: Sequence[Sentence]
) -> PseudoPairSet:
    """Greedy one-best source sentence per reference sentence by ROUGE-L recall.

    Duplicate source picks collapse into a single positive label.
    """
    picks = _argmax_per_reference(
        reference_sents, source_sents, lambda c, r: rouge_l(c, r).recall
    )
    return PseudoPairSet(
        pairs=tuple(PseudoPair(s.key, i, score) for i, s, score in picks),
        positives=tuple(sorted({s.key for _, s, _ in picks})),
    )
