"""Skill and temporal-relation vocabularies plus keyword-based instruction analysis.

Six skills are recognized; five of them are routable to agents. Temporal Order
Planning is a planning capability, not a routed agent. Detection is multi-label
keyword matching on word boundaries, driven by an editable lexicon file.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import IO, Iterable, Mapping

from .errors import ConfigError


class Skill(Enum):
    DIRECTION_ADJUSTMENT = "Direction Adjustment"
    VERTICAL_MOVEMENT = "Vertical Movement"
    STOP_AND_PAUSE = "Stop and Pause"
    LANDMARK_DETECTION = "Landmark Detection"
    AREA_REGION_IDENTIFICATION = "Area and Region Identification"
    TEMPORAL_ORDER_PLANNING = "Temporal Order Planning"

    @property
    def display_name(self) -> str:
        return self.value

    @classmethod
    def from_name(cls, name: str) -> "Skill":
        needle = name.strip().casefold()
        for skill in cls:
            if skill.value.casefold() == needle:
                return skill
        raise ConfigError(f"unknown skill name {name!r}")


# Canonical routed order; also the tie-break order for keyword voting.
ROUTED_SKILLS: tuple[Skill, ...] = (
    Skill.DIRECTION_ADJUSTMENT,
    Skill.VERTICAL_MOVEMENT,
    Skill.STOP_AND_PAUSE,
    Skill.LANDMARK_DETECTION,
    Skill.AREA_REGION_IDENTIFICATION,
)

ATOMIC_SKILLS = ROUTED_SKILLS  # the five with dedicated agent datasets


class TemporalRelation(Enum):
    CONDITIONAL_IMMEDIACY = "conditional_immediacy"
    BOUNDED_DURATION = "bounded_duration"
    FORWARD_SEQUENTIAL = "forward_sequential"
    BACKWARD_SEQUENTIAL = "backward_sequential"


def _compile(keywords: Iterable[str]) -> re.Pattern[str]:
    parts = sorted(keywords, key=len, reverse=True)
    return re.compile(r"\b(?:" + "|".join(re.escape(k) for k in parts) + r")\b")


@dataclass(frozen=True)
class KeywordLexicon:
    """Skill keywords and temporal cue phrases, all lowercase."""

    skills: Mapping[Skill, frozenset[str]]
    temporal: Mapping[TemporalRelation, frozenset[str]]

    def __post_init__(self):
        for skill, words in self.skills.items():
            if not words:
                raise ConfigError(f"empty keyword set for {skill.value}")
            bad = [w for w in words if w != w.lower()]
            if bad:
                raise ConfigError(f"keywords must be lowercase; offending: {bad}")
        for rel, words in self.temporal.items():
            if not words:
                raise ConfigError(f"empty cue set for {rel.value}")
            bad = [w for w in words if w != w.lower()]
            if bad:
                raise ConfigError(f"cues must be lowercase; offending: {bad}")

    def skill_pattern(self, skill: Skill) -> re.Pattern[str]:
        return _compile(self.skills[skill])

    def to_dict(self) -> dict:
        doc: dict[str, list[str]] = {}
        for skill, words in self.skills.items():
            doc[skill.value] = sorted(words)
        for rel, words in self.temporal.items():
            doc[rel.value] = sorted(words)
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping[str, Iterable[str]]) -> "KeywordLexicon":
        skills: dict[Skill, frozenset[str]] = {}
        temporal: dict[TemporalRelation, frozenset[str]] = {}
        by_skill_name = {s.value: s for s in Skill}
        by_rel_name = {r.value: r for r in TemporalRelation}
        for key, words in doc.items():
            if key in by_skill_name:
                skills[by_skill_name[key]] = frozenset(w.lower() for w in words)
            elif key in by_rel_name:
                temporal[by_rel_name[key]] = frozenset(w.lower() for w in words)
            else:
                raise ConfigError(f"unknown lexicon key {key!r}")
        missing = [s.value for s in Skill if s not in skills]
        missing += [r.value for r in TemporalRelation if r not in temporal]
        if missing:
            raise ConfigError(f"lexicon missing entries for: {missing}")
        return cls(skills=skills, temporal=temporal)

    @classmethod
    def from_file(cls, source: str | Path | IO[str]) -> "KeywordLexicon":
        if isinstance(source, (str, Path)):
            with open(source, "r", encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        return cls.from_dict(json.load(source))


_DEFAULT: KeywordLexicon | None = None


def default_lexicon() -> KeywordLexicon:
    """The packaged lexicon (data/lexicon.json); loaded once and cached."""
    global _DEFAULT
    if _DEFAULT is None:
        text = resources.files("navskills.data").joinpath("lexicon.json").read_text("utf-8")
        _DEFAULT = KeywordLexicon.from_dict(json.loads(text))
    return _DEFAULT


def detect_skills(instruction: str, lexicon: KeywordLexicon | None = None) -> set[Skill]:
    """Multi-label skill detection: a skill matches if any keyword appears."""
    lexicon = lexicon or default_lexicon()
    text = instruction.lower()
    found: set[Skill] = set()
    for skill in Skill:
        if lexicon.skill_pattern(skill).search(text):
            found.add(skill)
    return found


def _clause_initial(text: str, start: int) -> bool:
    i = start - 1
    while i >= 0 and text[i].isspace():
        i -= 1
    return i < 0 or text[i] in ".!?;:"


def classify_temporal(
    instruction: str, lexicon: KeywordLexicon | None = None
) -> set[TemporalRelation]:
    """Temporal-relation labels for an instruction.

    ``before``/``after`` appear in both sequential cue lists; occurrences are
    resolved by clause position so that a label is backward exactly when
    mention order differs from execution order (clause-initial "before ...,"
    and mid-sentence "... after ..." defer the clause they introduce).
    Ambiguous hits default to forward.
    """
    lexicon = lexicon or default_lexicon()
    text = instruction.lower()
    found: set[TemporalRelation] = set()

    for rel in (TemporalRelation.CONDITIONAL_IMMEDIACY, TemporalRelation.BOUNDED_DURATION):
        if _compile(lexicon.temporal[rel]).search(text):
            found.add(rel)

    forward_cues = set(lexicon.temporal[TemporalRelation.FORWARD_SEQUENTIAL])
    backward_cues = set(lexicon.temporal[TemporalRelation.BACKWARD_SEQUENTIAL])
    positional = forward_cues & backward_cues
    plain_forward = forward_cues - positional

    if plain_forward and _compile(plain_forward).search(text):
        found.add(TemporalRelation.FORWARD_SEQUENTIAL)
    for cue in sorted(positional):
        for m in re.finditer(r"\b" + re.escape(cue) + r"\b", text):
            initial = _clause_initial(text, m.start())
            if cue == "before":
                backward = initial
            elif cue == "after":
                backward = not initial
            else:
                backward = False
            if backward:
                found.add(TemporalRelation.BACKWARD_SEQUENTIAL)
            else:
                found.add(TemporalRelation.FORWARD_SEQUENTIAL)
    return found


def skill_histogram(
    corpus: Iterable[str], lexicon: KeywordLexicon | None = None
) -> dict[Skill, int]:
    """Per-skill instruction counts; one instruction may count for several skills."""
    lexicon = lexicon or default_lexicon()
    counts = {skill: 0 for skill in Skill}
    patterns = {skill: lexicon.skill_pattern(skill) for skill in Skill}
    for instruction in corpus:
        text = instruction.lower()
        for skill, pattern in patterns.items():
            if pattern.search(text):
                counts[skill] += 1
    return counts


def histogram_csv(counts: Mapping[Skill, int]) -> str:
    """Bar-chart-ready CSV (skill, count) in canonical skill order."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["skill", "count"])
    for skill in Skill:
        writer.writerow([skill.value, counts.get(skill, 0)])
    return buf.getvalue()
