"""Rule-based extraction of target medical sections from clinical notes.

Headers are matched as case-insensitive literal prefixes anchored at line
start (at most three leading spaces/tabs) and ending in a colon; a section's
body runs from the end of its header to the character before the next header
of any kind. The same matcher doubles as the rule-based baseline when applied
to prior notes instead of the discharge summary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import Encounter

_MAX_HEADER_INDENT = 3

DEFAULT_MAX_BODY_CHARS = 6000


class SectionName(str, Enum):
    """The seven target medical sections, shortest to longest typical output."""

    CHIEF_COMPLAINT = "chief_complaint"
    FAMILY_HISTORY = "family_history"
    SOCIAL_HISTORY = "social_history"
    MEDICATIONS_ON_ADMISSION = "medications_on_admission"
    PAST_MEDICAL_HISTORY = "past_medical_history"
    HISTORY_OF_PRESENT_ILLNESS = "history_of_present_illness"
    BRIEF_HOSPITAL_COURSE = "brief_hospital_course"

    @property
    def display(self) -> str:
        return self.value.replace("_", " ")


SECTION_ORDER = tuple(SectionName)


@dataclass(frozen=True)
class HeaderRuleSet:
    """Per-section header variants plus terminator headers that end any section."""

    variants: Mapping[SectionName, tuple[str, ...]]
    terminators: tuple[str, ...]

    def __post_init__(self):
        for section in SectionName:
            patterns = self.variants.get(section, ())
            if not patterns:
                raise ValueError(f"no header variants for section {section.value}")
            if any(not p.strip() for p in patterns):
                raise ValueError(f"empty header variant for section {section.value}")

    def all_patterns(self) -> list[tuple[str, SectionName | None]]:
        out: list[tuple[str, SectionName | None]] = []
        for section in SectionName:
            out.extend((p.lower(), section) for p in self.variants[section])
        out.extend((p.lower(), None) for p in self.terminators)
        return out


@dataclass(frozen=True)
class SectionInstance:
    encounter_id: str
    section: SectionName
    reference_text: str
    char_span: tuple[int, int]

    def to_record(self) -> dict:
        return {
            "encounter_id": self.encounter_id,
            "section": self.section.value,
            "text": self.reference_text,
            "start": self.char_span[0],
            "end": self.char_span[1],
        }


@dataclass(frozen=True)
class HeaderMatch:
    start: int
    end: int
    section: SectionName | None  # None for terminator patterns


def load_rules(path: str | Path | None = None) -> HeaderRuleSet:
    """Load a header rules JSON file; with no path, the packaged defaults."""
    if path is None:
        data = json.loads(
            resources.files("encsum").joinpath("data/section_headers.json").read_text("utf-8")
        )
    else:
        data = json.loads(Path(path).read_text("utf-8"))
    variants = {
        section: tuple(data.get(section.value, ())) for section in SectionName
    }
    terminators = tuple(data.get("terminators", ()))
    return HeaderRuleSet(variants, terminators)


def find_headers(document_text: str, rules: HeaderRuleSet) -> list[HeaderMatch]:
    """All anchored header matches in the document, in position order.

    When several patterns match at the same position the longest wins.
    """
    patterns = rules.all_patterns()
    matches: list[HeaderMatch] = []
    offset = 0
    for line in document_text.splitlines(keepends=True):
        stripped = line.lstrip(" \t")
        indent = len(line) - len(stripped)
        if indent <= _MAX_HEADER_INDENT:
            lowered = stripped.lower()
            best: tuple[int, SectionName | None] | None = None
            for pattern, section in patterns:
                if lowered.startswith(pattern):
                    if best is None or len(pattern) > best[0]:
                        best = (len(pattern), section)
            if best is not None:
                start = offset + indent
                matches.append(HeaderMatch(start, start + best[0], best[1]))
        offset += len(line)
    return matches


def extract_section(
    document_text: str, section: SectionName, rules: HeaderRuleSet, encounter_id: str = ""
) -> SectionInstance | None:
    """Extract the first occurrence of ``section``; None when no header matches."""
    matches = find_headers(document_text, rules)
    header = next((m for m in matches if m.section is section), None)
    if header is None:
        return None
    following = [m.start for m in matches if m.start > header.start]
    body_end = min(following) if following else len(document_text)
    start, end = _trim_span(document_text, header.end, body_end)
    return SectionInstance(encounter_id, section, document_text[start:end], (start, end))


def _trim_span(text: str, start: int, end: int) -> tuple[int, int]:
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    return start, end


def rule_based_extract_from_priors(
    encounter: Encounter, section: SectionName, rules: HeaderRuleSet
) -> str | None:
    """Apply the section rule to every prior note in chart order; None if no hits.

    Hits are joined with a blank line; a header with an empty body still
    counts as a hit and contributes an empty string.
    """
    hits = []
    for note in encounter.prior_notes:
        instance = extract_section(note.text, section, rules, encounter.encounter_id)
        if instance is not None:
            hits.append(instance.reference_text)
    if not hits:
        return None
    return "\n\n".join(hits)


@dataclass(frozen=True)
class RuleFlag:
    sample_index: int
    section: SectionName
    reason: str


@dataclass
class RuleValidationReport:
    sample_size: int
    hits: Mapping[SectionName, int]
    flags: list[RuleFlag] = field(default_factory=list)

    def hit_rate(self, section: SectionName) -> float | None:
        if self.sample_size == 0:
            return None
        return self.hits.get(section, 0) / self.sample_size


def validate_rules(
    rules: HeaderRuleSet,
    sample: Sequence[str],
    max_body_chars: int = DEFAULT_MAX_BODY_CHARS,
) -> RuleValidationReport:
    """Per-section hit rates plus flags for extractions that merit manual review.

    A body is flagged when it exceeds ``max_body_chars`` or when it contains
    another section's header variant anywhere in its text (a sign that the
    anchored matcher missed a boundary).
    """
    hits: dict[SectionName, int] = {s: 0 for s in SectionName}
    flags: list[RuleFlag] = []
    for idx, text in enumerate(sample):
        for section in SectionName:
            instance = extract_section(text, section, rules)
            if instance is None:
                continue
            hits[section] += 1
            body = instance.reference_text
            if len(body) > max_body_chars:
                flags.append(RuleFlag(idx, section, f"body exceeds {max_body_chars} chars"))
            lowered = body.lower()
            for other in SectionName:
                if other is section:
                    continue
                for variant in rules.variants[other]:
                    if variant.lower() in lowered:
                        flags.append(
                            RuleFlag(idx, section, f"body contains header {variant!r}")
                        )
    return RuleValidationReport(len(sample), hits, flags)
