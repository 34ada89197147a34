"""Corpus data model: note ingestion, encounter assembly, and subject-level splits.

An encounter is one hospital admission: the prior clinical notes in chart-date
order plus the discharge summary written at the end. Splits are assigned per
subject so that no patient leaks across train/validation/test.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from statistics import fmean
from typing import Mapping, Sequence

from .jsonl import iter_jsonl
from .textproc import Sentence, split_sentences, tokenize

logger = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "validation", "test")

NOTE_FIELDS = ("note_id", "subject_id", "encounter_id", "chart_date", "category", "text")

DEFAULT_ADMISSION_CATEGORIES = ("admission", "admission note")
DEFAULT_DISCHARGE_CATEGORIES = ("discharge summary",)


@dataclass(frozen=True)
class ClinicalNote:
    note_id: str
    subject_id: str
    encounter_id: str
    chart_date: str
    category: str
    text: str

    def to_record(self) -> dict:
        return {name: getattr(self, name) for name in NOTE_FIELDS}


@dataclass(frozen=True)
class Encounter:
    subject_id: str
    encounter_id: str
    prior_notes: tuple[ClinicalNote, ...]
    discharge_summary: ClinicalNote

    def to_record(self) -> dict:
        return {
            "subject_id": self.subject_id,
            "encounter_id": self.encounter_id,
            "prior_notes": [n.to_record() for n in self.prior_notes],
            "discharge_summary": self.discharge_summary.to_record(),
        }

    @staticmethod
    def from_record(record: Mapping) -> "Encounter":
        return Encounter(
            subject_id=record["subject_id"],
            encounter_id=record["encounter_id"],
            prior_notes=tuple(ClinicalNote(**n) for n in record["prior_notes"]),
            discharge_summary=ClinicalNote(**record["discharge_summary"]),
        )


@dataclass(frozen=True)
class SplitAssignment:
    by_subject: Mapping[str, str]
    ratios: tuple[float, float, float]

    def split_of(self, subject_id: str) -> str:
        return self.by_subject[subject_id]

    def subjects(self, split: str) -> list[str]:
        return sorted(s for s, sp in self.by_subject.items() if sp == split)

    def to_records(self) -> list[dict]:
        return [
            {"subject_id": s, "split": sp}
            for s, sp in sorted(self.by_subject.items())
        ]


@dataclass
class IngestResult:
    notes: list[ClinicalNote]
    skipped_lines: list[int]

    @property
    def skipped(self) -> int:
        return len(self.skipped_lines)


@dataclass
class AssemblyDiagnostics:
    no_discharge: int = 0
    multiple_discharge: int = 0
    missing_admission: int = 0
    notes_after_discharge: int = 0

    def to_record(self) -> dict:
        return {
            "no_discharge": self.no_discharge,
            "multiple_discharge": self.multiple_discharge,
            "missing_admission": self.missing_admission,
            "notes_after_discharge": self.notes_after_discharge,
        }


def ingest_notes(path: str | Path) -> IngestResult:
    """Read a JSONL notes file; malformed lines are skipped and logged."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"notes file not found: {path}")
    notes: list[ClinicalNote] = []
    skipped: list[int] = []
    seen_ids: set[str] = set()
    for lineno, obj in iter_jsonl(path):
        note = _parse_note(obj, seen_ids)
        if note is None:
            skipped.append(lineno)
            logger.warning("%s:%d: skipping malformed note line", path, lineno)
        else:
            notes.append(note)
            seen_ids.add(note.note_id)
    return IngestResult(notes, skipped)


def _parse_note(obj, seen_ids: set[str]) -> ClinicalNote | None:
    if not isinstance(obj, dict):
        return None
    if not all(isinstance(obj.get(k), str) for k in NOTE_FIELDS):
        return None
    if obj["note_id"] in seen_ids:
        return None
    try:
        datetime.fromisoformat(obj["chart_date"])
    except ValueError:
        return None
    return ClinicalNote(**{k: obj[k] for k in NOTE_FIELDS})


def assemble_encounters(
    notes: Sequence[ClinicalNote],
    require_admission_note: bool = False,
    admission_categories: Sequence[str] = DEFAULT_ADMISSION_CATEGORIES,
    discharge_categories: Sequence[str] = DEFAULT_DISCHARGE_CATEGORIES,
) -> tuple[list[Encounter], AssemblyDiagnostics]:
    """Group notes into encounters, one per encounter_id with a single discharge summary.

    Prior notes are sorted by (chart_date, note_id); notes charted after the
    discharge summary are not "prior" and are dropped. Encounters with zero or
    multiple discharge summaries are dropped and tallied, as are encounters
    without an admission note when ``require_admission_note`` is set.
    """
    if not notes:
        raise ValueError("assemble_encounters requires a nonempty note list")
    admission = {c.strip().lower() for c in admission_categories}
    discharge = {c.strip().lower() for c in discharge_categories}
    by_encounter: dict[str, list[ClinicalNote]] = {}
    for note in notes:
        by_encounter.setdefault(note.encounter_id, []).append(note)

    diagnostics = AssemblyDiagnostics()
    encounters: list[Encounter] = []
    for encounter_id in sorted(by_encounter):
        group = by_encounter[encounter_id]
        summaries = [n for n in group if n.category.strip().lower() in discharge]
        if len(summaries) == 0:
            diagnostics.no_discharge += 1
            continue
        if len(summaries) > 1:
            diagnostics.multiple_discharge += 1
            continue
        summary = summaries[0]
        priors = sorted(
            (n for n in group if n is not summary),
            key=lambda n: (n.chart_date, n.note_id),
        )
        kept = [n for n in priors if n.chart_date <= summary.chart_date]
        diagnostics.notes_after_discharge += len(priors) - len(kept)
        if require_admission_note and not any(
            n.category.strip().lower() in admission for n in kept
        ):
            diagnostics.missing_admission += 1
            continue
        encounters.append(
            Encounter(summary.subject_id, encounter_id, tuple(kept), summary)
        )
    return encounters, diagnostics


def split_by_subject(
    encounters: Sequence[Encounter],
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> SplitAssignment:
    """Assign every subject to exactly one of train/validation/test.

    Subjects are shuffled with a seeded PRNG, then partitioned at cumulative
    ratio boundaries (rounded down), so a fixed seed always reproduces the
    same assignment and all encounters of one subject share a split.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios must sum to 1, got {ratios}")
    subjects = sorted({e.subject_id for e in encounters})
    if len(subjects) < len(SPLIT_NAMES):
        raise ValueError(
            f"need at least {len(SPLIT_NAMES)} subjects to split, got {len(subjects)}"
        )
    rng = random.Random(seed)
    rng.shuffle(subjects)
    n = len(subjects)
    first = int(n * ratios[0])
    second = int(n * (ratios[0] + ratios[1]))
    by_subject = {}
    for i, subject in enumerate(subjects):
        if i < first:
            by_subject[subject] = "train"
        elif i < second:
            by_subject[subject] = "validation"
        else:
            by_subject[subject] = "test"
    return SplitAssignment(by_subject, tuple(ratios))


def source_sentences(encounter: Encounter, mask_deid: bool = False) -> list[Sentence]:
    """All prior-note sentences of an encounter, keyed by (doc_index, sent_index)."""
    out: list[Sentence] = []
    for doc_index, note in enumerate(encounter.prior_notes):
        out.extend(split_sentences(note.text, doc_index=doc_index, mask_deid=mask_deid))
    return out


@dataclass(frozen=True)
class SectionStats:
    counts: Mapping[str, int]
    mean_words: float | None
    mean_sentences: float | None

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def undefined(self) -> bool:
        return self.total == 0


@dataclass(frozen=True)
class CorpusStats:
    per_section: Mapping[str, SectionStats]
    mean_documents: float | None
    mean_source_words: float | None

    def to_record(self) -> dict:
        return {
            "per_section": {
                name: {
                    "counts": dict(stats.counts),
                    "mean_words": stats.mean_words,
                    "mean_sentences": stats.mean_sentences,
                }
                for name, stats in self.per_section.items()
            },
            "mean_documents": self.mean_documents,
            "mean_source_words": self.mean_source_words,
        }


def corpus_stats(
    section_texts: Mapping[str, Sequence[tuple[str, str]]],
    encounters: Sequence[Encounter] = (),
    mask_deid: bool = False,
) -> CorpusStats:
    """Per-section output-length statistics plus per-encounter source statistics.

    ``section_texts`` maps a section name to (split, reference_text) pairs.
    Empty groups produce a count of zero with undefined (None) means.
    """
    per_section: dict[str, SectionStats] = {}
    for name, items in section_texts.items():
        counts = {split: 0 for split in SPLIT_NAMES}
        words: list[int] = []
        sents: list[int] = []
        for split, text in items:
            counts[split] = counts.get(split, 0) + 1
            words.append(len(tokenize(text, mask_deid=mask_deid)))
            sents.append(len(split_sentences(text, mask_deid=mask_deid)))
        per_section[name] = SectionStats(
            counts=counts,
            mean_words=fmean(words) if words else None,
            mean_sentences=fmean(sents) if sents else None,
        )
    mean_docs = mean_words = None
    if encounters:
        mean_docs = fmean(len(e.prior_notes) for e in encounters)
        mean_words = fmean(
            sum(len(tokenize(n.text, mask_deid=mask_deid)) for n in e.prior_notes)
            for e in encounters
        )
    return CorpusStats(per_section, mean_docs, mean_words)
