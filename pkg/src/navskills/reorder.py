"""Instruction decomposition into execution-ordered subgoal plans.

Two paths produce a plan: a deterministic clause-rewriting engine, and an
external text model driven by the reordering prompt (with transcript replay).
The engine guarantees ordering semantics and connective elimination; it does
not attempt lexical paraphrase.

Ordering rules (cue words resolved to execution order):
- "A then B", "once/after/as soon as/when A, B" and "B once/after A":
  the trigger clause A is emitted first.
- "B before A": emit "Move toward A." first, then B (B happens at a point
  prior to the A reference, which itself may never be executed).
- "A until B": emit "Continue <A>." then "Reach <B>.".
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ContractError, NavError, TranscriptError
from .modelclient import ModelClient, ReplayClient
from .prompts import reorder_prompt

BANNED_CONNECTIVES = ("then", "before", "until", "once")

RULES = "rules"
EXTERNAL = "external"
EXTERNAL_REPLAYED = "external_replayed"

_BANNED_RE = re.compile(r"\b(?:" + "|".join(BANNED_CONNECTIVES) + r")\b", re.IGNORECASE)

IMPERATIVE_VERBS = {
    "go", "walk", "turn", "head", "move", "stop", "wait", "stand", "pause",
    "enter", "exit", "leave", "take", "climb", "descend", "continue", "keep",
    "make", "step", "pass", "cross", "follow", "face", "reach", "proceed",
    "stay", "come", "get", "start", "veer", "halt", "remain", "approach",
    "look", "find", "be",
}

_SKIP_ADVERBS = {"finally", "next", "afterwards", "afterward", "lastly", "also",
                 "now", "just", "slowly", "carefully", "quickly", "immediately"}

_SUBJECT_PRONOUNS = {"you", "you're", "you've", "you'll"}

# gerund <-> base forms used by the continue/imperative rewrites
_GERUND_TO_BASE = {
    "walking": "walk", "going": "go", "moving": "move", "turning": "turn",
    "entering": "enter", "heading": "head", "climbing": "climb",
    "descending": "descend", "continuing": "continue", "standing": "stand",
    "waiting": "wait", "passing": "pass", "reaching": "reach",
    "getting": "get", "stopping": "stop", "facing": "face", "exiting": "exit",
    "leaving": "leave", "crossing": "cross", "following": "follow",
    "stepping": "step", "proceeding": "proceed", "approaching": "approach",
    "making": "make", "taking": "take", "starting": "start",
}
_BASE_TO_GERUND = {base: ger for ger, base in _GERUND_TO_BASE.items()}

_ARRIVAL_PHRASES = ("reach", "get to", "arrive at", "arrive in", "come to",
                    "see", "spot", "notice", "find", "enter", "are at",
                    "are in", "get down")

_PREPOSITIONS = ("in", "at", "near", "inside", "by", "on", "under")


@dataclass(frozen=True)
class SubgoalPlan:
    """Ordered subgoals p_1..p_m for one instruction."""

    subgoals: tuple[str, ...]
    source: str
    original: str
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.subgoals:
            raise ContractError("a plan needs at least one subgoal")
        bad = [s for s in self.subgoals if _BANNED_RE.search(s)]
        if bad:
            raise ContractError(f"subgoals contain banned connectives: {bad}")

    def __len__(self) -> int:
        return len(self.subgoals)

    def joined(self) -> str:
        return " ".join(self.subgoals)


def contains_banned_connective(text: str) -> bool:
    return bool(_BANNED_RE.search(text))


# ---------------------------------------------------------------------------
# clause rewriting helpers
# ---------------------------------------------------------------------------

def _words(text: str) -> list[str]:
    return text.split()

def _clean(fragment: str) -> str:
    return fragment.strip().strip(",;").strip()


def _strip_leading_adverbs(text: str) -> str:
    words = _words(text)
    while words and words[0].strip(",").lower() in _SKIP_ADVERBS:
        words.pop(0)
    return " ".join(words)


def _finish(clause: str) -> str:
    clause = _clean(clause)
    if not clause:
        return clause
    clause = clause[0].upper() + clause[1:]
    if clause[-1] not in ".!?":
        clause += "."
    return clause


def _imperativize(clause: str) -> str:
    """Best-effort rewrite into a minimal imperative; unknown shapes pass through."""
    text = _strip_leading_adverbs(_clean(clause))
    if not text:
        return text
    lower = text.lower()
    if lower.startswith("you're ") or lower.startswith("you are "):
        rest = text.split(" ", 2)[2] if lower.startswith("you are ") else text.split(" ", 1)[1]
        rest_words = _words(rest)
        if rest_words and rest_words[0].lower() in _PREPOSITIONS:
            rest = " ".join(rest_words[1:])
        return _finish("reach " + rest) if rest else _finish(text)
    if lower.startswith("you will "):
        return _finish(text.split(" ", 2)[2])
    if lower.startswith("you "):
        return _finish(text.split(" ", 1)[1])
    words = _words(text)
    first = words[0].lower()
    if first in _GERUND_TO_BASE:
        words[0] = _GERUND_TO_BASE[first]
        return _finish(" ".join(words))
    return _finish(text)


def _move_toward(clause: str) -> str:
    """Rewrite a reference clause ("entering the kitchen") into an approach step."""
    text = _strip_leading_adverbs(_clean(clause))
    lower = text.lower()
    if lower.startswith("you "):
        text = text.split(" ", 1)[1]
        lower = text.lower()
    words = _words(text)
    if words:
        first = words[0].lower()
        if first in _GERUND_TO_BASE or first in IMPERATIVE_VERBS:
            remainder = " ".join(words[1:])
            if remainder:
                text = remainder
            else:
                # pure action reference ("turning"): no destination to approach
                return _imperativize(clause)
    return _finish("move toward " + text)


def _continue_form(clause: str) -> str:
    text = _strip_leading_adverbs(_clean(clause))
    words = _words(text)
    if words and words[0].lower() == "keep":
        words = words[1:]
        text = " ".join(words)
    if not words:
        return _finish("continue")
    first = words[0].lower()
    if first in _BASE_TO_GERUND:
        words[0] = _BASE_TO_GERUND[first]
        return _finish("continue " + " ".join(words))
    if first in _GERUND_TO_BASE:  # already a gerund ("keep going ...")
        return _finish("continue " + " ".join(words))
    return _finish("continue " + text)


def _reach_form(clause: str) -> str:
    text = _strip_leading_adverbs(_clean(clause))
    lower = text.lower()
    if lower.startswith("you "):
        text = text.split(" ", 1)[1]
        lower = text.lower()
    for phrase in sorted(_ARRIVAL_PHRASES, key=len, reverse=True):
        if lower == phrase or lower.startswith(phrase + " "):
            rest = text[len(phrase):].strip()
            return _finish("reach " + rest) if rest else _finish("reach it")
    return _finish("reach " + text)


# ---------------------------------------------------------------------------
# connective scanning
# ---------------------------------------------------------------------------

_THEN_RE = re.compile(r"(?:,\s*)?\b(?:and\s+then|then)\b", re.IGNORECASE)
_UNTIL_RE = re.compile(r"\buntil\b", re.IGNORECASE)
_BEFORE_RE = re.compile(r"\bbefore\b", re.IGNORECASE)
_TRIGGER_RES = {
    "once": re.compile(r"\bonce\b", re.IGNORECASE),
    "after": re.compile(r"\bafter\b", re.IGNORECASE),
    "as_soon_as": re.compile(r"\bas\s+soon\s+as\b", re.IGNORECASE),
    "upon": re.compile(r"\bupon\b", re.IGNORECASE),
    "when": re.compile(r"\bwhen\b", re.IGNORECASE),
}
_COORD_RE = re.compile(r"(?:,\s*)?\b(?:and|but)\b", re.IGNORECASE)


def _verb_follows(text: str, pos: int) -> bool:
    words = _words(text[pos:])
    for word in words:
        token = word.strip(",;").lower()
        if token in _SKIP_ADVERBS:
            continue
        return token in IMPERATIVE_VERBS
    return False


def _find_coord(text: str, start: int = 0) -> re.Match | None:
    for m in _COORD_RE.finditer(text, start):
        if _verb_follows(text, m.end()):
            return m
    return None


def _find_split(text: str):
    """Leftmost connective occurrence; returns (kind, match) or None."""
    candidates: list[tuple[int, int, str, re.Match]] = []
    for m in _THEN_RE.finditer(text):
        candidates.append((m.start(), 0, "then", m))
        break
    for m in _UNTIL_RE.finditer(text):
        candidates.append((m.start(), 1, "until", m))
        break
    for m in _BEFORE_RE.finditer(text):
        candidates.append((m.start(), 2, "before", m))
        break
    for kind, rx in _TRIGGER_RES.items():
        for m in rx.finditer(text):
            candidates.append((m.start(), 3, kind, m))
            break
    coord = _find_coord(text)
    if coord is not None:
        candidates.append((coord.start(), 4, "coord", coord))
    if not candidates:
        return None
    candidates.sort(key=lambda c: (c[0], c[1]))
    _, _, kind, m = candidates[0]
    return kind, m


def _dependent_scope(remainder: str) -> tuple[str, str | None]:
    """Split a trailing dependent clause from a coordinated continuation."""
    coord = _find_coord(remainder)
    if coord is None:
        return _clean(remainder), None
    dep = _clean(remainder[: coord.start()])
    cont = _clean(remainder[coord.end():])
    return dep, cont or None


def _leading_scope(remainder: str) -> tuple[str, str]:
    """Split "<dependent clause>, <main...>" after a clause-initial trigger."""
    comma = remainder.find(",")
    if comma != -1:
        return _clean(remainder[:comma]), _clean(remainder[comma + 1:])
    words = _words(remainder)
    skip_next = False
    for i, word in enumerate(words):
        token = word.strip(",;").lower()
        if skip_next:
            skip_next = False
            continue
        if token in _SUBJECT_PRONOUNS:
            skip_next = True  # the pronoun's own verb is part of the dependent clause
            continue
        if i > 0 and token in IMPERATIVE_VERBS:
            return _clean(" ".join(words[:i])), _clean(" ".join(words[i:]))
    return _clean(remainder), ""


def _process(fragment: str) -> list[str]:
    fragment = _clean(fragment)
    if not fragment:
        return []
    found = _find_split(fragment)
    if found is None:
        clause = _imperativize(fragment)
        return [clause] if clause else []
    kind, m = found
    left = _clean(fragment[: m.start()])
    right = _clean(fragment[m.end():])

    if kind == "then" or kind == "coord":
        return _process(left) + _process(right)

    if kind == "until":
        dep, cont = _dependent_scope(right)
        out = [_continue_form(left)] if left else []
        out.append(_reach_form(dep))
        if cont:
            out += _process(cont)
        return out

    if kind == "before":
        if not left:  # clause-initial: "Before A, B" -> do B, then A
            dep, main = _leading_scope(right)
            return _process(main) + [_imperativize(dep)]
        dep, cont = _dependent_scope(right)
        out = [_move_toward(dep)] + _process(left)
        if cont:
            out += _process(cont)
        return out

    # trigger-first family: once / after / as soon as / upon / when
    if not left:
        dep, main = _leading_scope(right)
        return _process(dep) + _process(main)
    dep, cont = _dependent_scope(right)
    out = _process(dep) + _process(left)
    if cont:
        out += _process(cont)
    return out


def _scrub(clause: str) -> str:
    """Last-resort removal of banned connectives a rewrite left behind."""
    cleaned = _BANNED_RE.sub("", clause)
    cleaned = re.sub(r"\s{2,}", " ", cleaned)
    cleaned = re.sub(r"\s+([.,;!?])", r"\1", cleaned)
    return _finish(cleaned)


_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")


def split_sentences(text: str) -> list[str]:
    return [s for s in (_clean(p) for p in _SENTENCE_RE.split(text.strip())) if s]


def reorder_rules(instruction: str) -> SubgoalPlan:
    """Deterministic subgoal plan from the clause-rewriting rules."""
    if not instruction.strip():
        raise ContractError("instruction must be non-empty")
    subgoals: list[str] = []
    for sentence in split_sentences(instruction):
        subgoals.extend(_process(sentence.rstrip(".!?")))
    subgoals = [_scrub(s) for s in subgoals]
    subgoals = [s for s in subgoals if s.strip(".!? ")]
    if not subgoals:
        subgoals = [_scrub(_finish(instruction.strip().rstrip(".!?")))]
    return SubgoalPlan(subgoals=tuple(subgoals), source=RULES, original=instruction)


def _split_response(text: str) -> list[str]:
    pieces = [p for p in (_clean(x) for x in _SENTENCE_RE.split(text.strip())) if p]
    out = []
    for piece in pieces:
        if piece[-1] not in ".!?":
            piece += "."
        out.append(piece)
    return out


def reorder_external(instruction: str, client: ModelClient) -> SubgoalPlan:
    """Subgoal plan from the external reordering model, with rules fallback.

    A response violating the connective ban gets one repair retry; transport
    failures likewise retry once. Any remaining failure falls back to the rule
    engine with a note in the plan provenance.
    """
    if not instruction.strip():
        raise ContractError("instruction must be non-empty")
    prompt = reorder_prompt(instruction)
    source = EXTERNAL_REPLAYED if isinstance(client, ReplayClient) else EXTERNAL
    notes: list[str] = []
    for attempt in range(2):
        try:
            text = client.complete(prompt)
        except (TranscriptError, NavError, OSError, IOError) as exc:
            notes.append(f"attempt {attempt + 1}: transport failure: {exc}")
            continue
        except Exception as exc:  # requests errors and friends
            notes.append(f"attempt {attempt + 1}: transport failure: {exc}")
            continue
        subgoals = _split_response(text)
        if not subgoals:
            notes.append(f"attempt {attempt + 1}: empty response")
            continue
        bad = [s for s in subgoals if _BANNED_RE.search(s)]
        if bad:
            notes.append(f"attempt {attempt + 1}: banned connectives in {bad}")
            continue
        return SubgoalPlan(
            subgoals=tuple(subgoals), source=source, original=instruction, notes=tuple(notes)
        )
    fallback = reorder_rules(instruction)
    notes.append("fell back to rule engine")
    return SubgoalPlan(
        subgoals=fallback.subgoals, source=RULES, original=instruction, notes=tuple(notes)
    )
