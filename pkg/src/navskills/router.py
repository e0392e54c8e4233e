"""Two-phase per-step routing: subgoal localization, ledger upkeep, skill choice.

Phase 1 picks the next subgoal from the plan (with a reasoning trace) and the
executed-subgoal ledger advances monotonically: subgoals may be skipped, never
revisited. Phase 2 selects exactly one of the five routed skills. External
backends are fully guarded: any unparseable response resolves through a
deterministic fallback chain and is noted in the result provenance.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from typing import Sequence

from .errors import ContractError
from .modelclient import ModelClient
from .prompts import localizer_prompt, skill_router_prompt
from .reorder import SubgoalPlan
from .taxonomy import ROUTED_SKILLS, KeywordLexicon, Skill, default_lexicon

SUBGOAL_KEY = "Sub-instruction to be executed"
REASONING_KEY = "Reasoning"

DEFAULT_FALLBACK_SKILL = Skill.LANDMARK_DETECTION

FALLBACK_NONE = "none"
FALLBACK_KEYWORD = "keyword"
FALLBACK_DEFAULT = "default"


@dataclass
class ScriptedBackend:
    """Deterministic offline backend: sequential localization, keyword routing."""

    lexicon: KeywordLexicon | None = None

    def get_lexicon(self) -> KeywordLexicon:
        return self.lexicon or default_lexicon()


@dataclass
class ExternalBackend:
    """Model-driven backend (live, recording or replayed)."""

    client: ModelClient
    lexicon: KeywordLexicon | None = None  # for the keyword fallback

    def get_lexicon(self) -> KeywordLexicon:
        return self.lexicon or default_lexicon()


@dataclass
class RouterState:
    plan: SubgoalPlan
    ledger: list[tuple[int, str]] = field(default_factory=list)  # (plan index, subgoal)
    traces: list[str] = field(default_factory=list)
    backend: str = "scripted"

    def last_index(self) -> int:
        return self.ledger[-1][0] if self.ledger else -1

    def executed_subgoals(self) -> list[str]:
        return [subgoal for _, subgoal in self.ledger]


@dataclass(frozen=True)
class LocalizeResult:
    subgoal: str
    plan_index: int | None
    reasoning: str
    exhausted: bool = False
    provenance: str = "scripted"


@dataclass(frozen=True)
class RouteResult:
    skill: Skill
    fallback_used: str = FALLBACK_NONE
    provenance: str = "scripted"

    def __post_init__(self):
        if self.skill not in ROUTED_SKILLS:
            raise ContractError(f"{self.skill.value} is not a routable skill")


PLAN_EXHAUSTED = "plan exhausted"


def _normalize(text: str) -> str:
    return re.sub(r"\s+", " ", text.strip().rstrip(".").casefold()).strip()


def _tokens(text: str) -> set[str]:
    return set(re.findall(r"[a-z0-9']+", text.casefold()))


def _match_plan_entry(plan: SubgoalPlan, response_text: str, min_index: int) -> int | None:
    """Map a model-reported subgoal to a plan index greater than min_index.

    Exact normalized matches win; otherwise the later plan entry with the
    highest token overlap is chosen. Returns None when no later entry remains.
    """
    if min_index + 1 >= len(plan.subgoals):
        return None
    needle = _normalize(response_text)
    for i in range(min_index + 1, len(plan.subgoals)):
        if _normalize(plan.subgoals[i]) == needle:
            return i
    response_tokens = _tokens(response_text)
    best_i, best_score = min_index + 1, -1.0
    for i in range(min_index + 1, len(plan.subgoals)):
        entry_tokens = _tokens(plan.subgoals[i])
        union = response_tokens | entry_tokens
        score = len(response_tokens & entry_tokens) / len(union) if union else 0.0
        if score > best_score:
            best_i, best_score = i, score
    return best_i


def _loads_or_none(text: str) -> object | None:
    try:
        return json.loads(text)
    except Exception:  # malformed, oversized or pathologically nested input
        return None


def _parse_localize_json(text: str) -> tuple[str, str] | None:
    """Extract the two expected keys from a model response, or None."""
    candidate = text.strip()
    if candidate.startswith("```"):
        candidate = re.sub(r"^```[a-zA-Z]*\s*|\s*```$", "", candidate).strip()
    doc = _loads_or_none(candidate)
    if not isinstance(doc, dict):
        m = re.search(r"\{.*\}", candidate, flags=re.DOTALL)
        doc = _loads_or_none(m.group(0)) if m else None
    if not isinstance(doc, dict) or set(doc.keys()) != {SUBGOAL_KEY, REASONING_KEY}:
        return None
    subgoal = doc[SUBGOAL_KEY]
    reasoning = doc[REASONING_KEY]
    if not isinstance(subgoal, str) or not isinstance(reasoning, str) or not subgoal.strip():
        return None
    return subgoal, reasoning


def _sequential_result(state: RouterState, provenance: str) -> LocalizeResult:
    nxt = state.last_index() + 1
    if nxt >= len(state.plan.subgoals):
        return LocalizeResult(
            subgoal="", plan_index=None, reasoning=PLAN_EXHAUSTED,
            exhausted=True, provenance=provenance,
        )
    return LocalizeResult(
        subgoal=state.plan.subgoals[nxt], plan_index=nxt,
        reasoning="sequential", provenance=provenance,
    )


def localize_subgoal(
    state: RouterState,
    history: Sequence[tuple[str, str]],
    backend: ScriptedBackend | ExternalBackend,
) -> LocalizeResult:
    """Phase 1: pick the next subgoal to execute, with a reasoning trace.

    The scripted backend walks the plan in order. The external backend asks the
    model with the localizer prompt and maps the answer back onto the plan,
    never earlier than the ledger. A plan-exhausted result signals stop intent.
    """
    if isinstance(backend, ScriptedBackend):
        return _sequential_result(state, "scripted")

    if state.last_index() + 1 >= len(state.plan.subgoals):
        return LocalizeResult(
            subgoal="", plan_index=None, reasoning=PLAN_EXHAUSTED,
            exhausted=True, provenance="external",
        )

    summaries = "\n".join(f"{i + 1}. {digest}" for i, (_, digest) in enumerate(history))
    prompt = localizer_prompt(
        instruction=state.plan.joined(),
        previous_sub_instructions=json.dumps(state.executed_subgoals(), ensure_ascii=False),
        viewpoint_summaries=summaries,
    )
    for attempt in range(2):
        try:
            text = backend.client.complete(prompt)
        except Exception:
            continue
        parsed = _parse_localize_json(text)
        if parsed is None:
            continue
        subgoal_text, reasoning = parsed
        index = _match_plan_entry(state.plan, subgoal_text, state.last_index())
        if index is None:
            return LocalizeResult(
                subgoal="", plan_index=None, reasoning=reasoning or PLAN_EXHAUSTED,
                exhausted=True, provenance="external",
            )
        provenance = "external" if attempt == 0 else "external_retry"
        if _normalize(state.plan.subgoals[index]) != _normalize(subgoal_text):
            provenance += "_fuzzy"
        return LocalizeResult(
            subgoal=state.plan.subgoals[index], plan_index=index,
            reasoning=reasoning, provenance=provenance,
        )
    return _sequential_result(state, "fallback_sequential")


def update_ledger(state: RouterState, result: LocalizeResult) -> RouterState:
    """Append one executed subgoal; plan indices must strictly increase."""
    if result.exhausted or result.plan_index is None:
        raise ContractError("cannot ledger a plan-exhausted localization")
    if result.plan_index <= state.last_index():
        raise ContractError(
            f"ledger index regression: {result.plan_index} after {state.last_index()}"
        )
    state.ledger.append((result.plan_index, result.subgoal))
    state.traces.append(result.reasoning)
    return state


_STAR_RE = re.compile(r"\*{5}([^*]+?)\*{5}", re.DOTALL)


def _parse_skill_response(text: str) -> Skill | None:
    names = _STAR_RE.findall(text)
    if len(names) != 1:
        return None
    needle = names[0].strip().casefold()
    for skill in ROUTED_SKILLS:
        if skill.value.casefold() == needle:
            return skill
    return None


def keyword_vote(subgoal: str, lexicon: KeywordLexicon) -> Skill | None:
    """Most-matched routed skill for a subgoal; canonical order breaks ties."""
    text = subgoal.lower()
    best: Skill | None = None
    best_votes = 0
    for skill in ROUTED_SKILLS:
        votes = len(lexicon.skill_pattern(skill).findall(text))
        if votes > best_votes:
            best, best_votes = skill, votes
    return best


def route_skill(
    instruction: str,
    subgoal: str,
    reasoning: str,
    backend: ScriptedBackend | ExternalBackend,
) -> RouteResult:
    """Phase 2: select exactly one routed skill for the subgoal.

    External parse failures resolve through: one retry, then a keyword vote
    over the subgoal, then the fixed default skill. Never raises for any
    backend response.
    """
    if not subgoal.strip():
        raise ContractError("subgoal must be non-empty")

    if isinstance(backend, ExternalBackend):
        prompt = skill_router_prompt(
            full_instruction=instruction, sub_instruction=subgoal, reasoning=reasoning
        )
        for attempt in range(2):
            try:
                text = backend.client.complete(prompt)
            except Exception:
                continue
            skill = _parse_skill_response(text)
            if skill is not None:
                return RouteResult(
                    skill=skill, fallback_used=FALLBACK_NONE,
                    provenance="external" if attempt == 0 else "external_retry",
                )
        voted = keyword_vote(subgoal, backend.get_lexicon())
        if voted is not None:
            return RouteResult(skill=voted, fallback_used=FALLBACK_KEYWORD, provenance="fallback")
        return RouteResult(
            skill=DEFAULT_FALLBACK_SKILL, fallback_used=FALLBACK_DEFAULT, provenance="fallback"
        )

    voted = keyword_vote(subgoal, backend.get_lexicon())
    if voted is not None:
        return RouteResult(skill=voted, fallback_used=FALLBACK_NONE, provenance="scripted")
    return RouteResult(
        skill=DEFAULT_FALLBACK_SKILL, fallback_used=FALLBACK_DEFAULT, provenance="scripted"
    )


def random_route(seed: int, t: int) -> RouteResult:
    """Uniform skill pick, deterministic in (seed, step index)."""
    rng = random.Random((seed << 20) ^ (t + 1))
    skill = ROUTED_SKILLS[rng.randrange(len(ROUTED_SKILLS))]
    return RouteResult(skill=skill, fallback_used=FALLBACK_NONE, provenance="random")
