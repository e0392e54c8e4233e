"""Skill agents behind one decision contract: builtins, an oracle, and a wire protocol.

Every agent maps an AgentRequest (instruction, subgoal, panorama, candidates,
topo summary) to an AgentResponse (chosen action plus per-candidate scores).
Builtins are deterministic keyword-and-geometry policies good enough to
exercise the whole harness offline; the remote kind forwards the request over
HTTP (with record/replay) to any external policy server and validates the
reply, falling back to a builtin when the remote misbehaves.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .episode import ActionDecision, move, stop
from .errors import ConfigError, ContractError
from .graph import NavGraph, Panorama, View, signed_turn_deg
from .taxonomy import ROUTED_SKILLS, Skill
from .transcripts import TranscriptStore

PROTOCOL_VERSION = "v1"

BUILTIN = "builtin"
REMOTE = "remote"

ORACLE = "oracle"
GREEDY_DIRECTION = "greedy-direction"
GREEDY_VERTICAL = "greedy-vertical"
GREEDY_LANDMARK = "greedy-landmark"
GREEDY_REGION = "greedy-region"
STOP_SPECIALIST = "stop-specialist"

_BUILTIN_NAMES = {
    ORACLE, GREEDY_DIRECTION, GREEDY_VERTICAL, GREEDY_LANDMARK,
    GREEDY_REGION, STOP_SPECIALIST,
}

TERMINAL_STOP_VERBS = {"stop", "wait", "stand", "pause", "halt", "remain", "stay"}

_UP_WORDS = {"up", "upstairs", "climb", "ascend"}
_DOWN_WORDS = {"down", "downstairs", "descend"}


@dataclass(frozen=True)
class AgentDescriptor:
    skill: Skill
    kind: str  # "builtin" | "remote"
    name: str = GREEDY_LANDMARK  # builtin policy name
    endpoint: str | None = None

    def __post_init__(self):
        if self.kind not in (BUILTIN, REMOTE):
            raise ConfigError(f"unknown agent kind {self.kind!r}")
        if self.kind == BUILTIN and self.name not in _BUILTIN_NAMES:
            raise ConfigError(f"unknown builtin policy {self.name!r}")
        if self.kind == REMOTE and not self.endpoint:
            raise ConfigError("remote agents require an endpoint")


@dataclass(frozen=True)
class AgentRequest:
    instruction: str
    subgoal: str
    panorama: Panorama
    candidates: tuple[ActionDecision, ...]
    topo: Mapping[str, Any]  # visited / frontier / prev / incoming_bearing_deg
    goal_hint: str | None = None

    def __post_init__(self):
        if not self.candidates:
            raise ContractError("candidates must be non-empty (stop is always legal)")

    def move_targets(self) -> list[str]:
        return [c.target for c in self.candidates if c.kind == "move" and c.target]


@dataclass(frozen=True)
class AgentResponse:
    chosen: ActionDecision
    scores: Mapping[str, float]  # candidate label ("stop" or target id) -> [0, 1]
    provenance: str = "builtin"


class AgentRegistry:
    """Binding of each routed skill to exactly one agent descriptor."""

    def __init__(self):
        self._bindings: dict[Skill, AgentDescriptor] = {}

    def register(self, descriptor: AgentDescriptor, *, replace: bool = False) -> None:
        if descriptor.skill not in ROUTED_SKILLS:
            raise ConfigError(f"{descriptor.skill.value} is not a routable skill")
        if descriptor.skill in self._bindings and not replace:
            raise ConfigError(f"{descriptor.skill.value} is already bound; pass replace=True")
        self._bindings[descriptor.skill] = descriptor

    def resolve(self, skill: Skill) -> AgentDescriptor:
        if skill not in ROUTED_SKILLS:
            raise ConfigError(f"{skill.value} is not a routable skill")
        try:
            return self._bindings[skill]
        except KeyError:
            raise ConfigError(f"no agent bound for {skill.value}") from None

    def bound_skills(self) -> list[Skill]:
        return [s for s in ROUTED_SKILLS if s in self._bindings]


_DEFAULT_POLICIES = {
    Skill.DIRECTION_ADJUSTMENT: GREEDY_DIRECTION,
    Skill.VERTICAL_MOVEMENT: GREEDY_VERTICAL,
    Skill.STOP_AND_PAUSE: STOP_SPECIALIST,
    Skill.LANDMARK_DETECTION: GREEDY_LANDMARK,
    Skill.AREA_REGION_IDENTIFICATION: GREEDY_REGION,
}


def default_registry() -> AgentRegistry:
    """Each routed skill bound to its matching builtin specialist."""
    registry = AgentRegistry()
    for skill, policy in _DEFAULT_POLICIES.items():
        registry.register(AgentDescriptor(skill=skill, kind=BUILTIN, name=policy))
    return registry


def oracle_registry() -> AgentRegistry:
    """All five routed skills bound to the goal-seeking oracle (testing only)."""
    registry = AgentRegistry()
    for skill in ROUTED_SKILLS:
        registry.register(AgentDescriptor(skill=skill, kind=BUILTIN, name=ORACLE))
    return registry


# ---------------------------------------------------------------------------
# keyword grounding shared by the greedy policies
# ---------------------------------------------------------------------------

def mentioned_tags(text: str, inventory: Sequence[str] | frozenset[str]) -> set[str]:
    """Inventory tags (landmarks or regions) that appear in the text."""
    lowered = text.lower()
    found = set()
    for tag in inventory:
        if re.search(r"\b" + re.escape(tag.lower()) + r"\b", lowered):
            found.add(tag)
    return found


def _local_landmark_inventory(pano: Panorama) -> set[str]:
    tags = set(pano.landmarks)
    for view in pano.views:
        tags.update(view.visible_landmarks)
    return tags


def _local_region_inventory(pano: Panorama) -> set[str]:
    regions = {pano.region}
    for view in pano.views:
        regions.add(view.visible_region)
    return regions


def _candidate_views(request: AgentRequest) -> list[tuple[str, View | None]]:
    return [(t, request.panorama.view_toward(t)) for t in request.move_targets()]


def _relative_turn(view: View | None, incoming: float | None) -> float | None:
    if view is None:
        return None
    if incoming is None:
        return signed_turn_deg(0.0, view.heading_deg)
    return signed_turn_deg(incoming, view.heading_deg)


def _forward_most(request: AgentRequest) -> str | None:
    """Candidate closest to straight ahead (smallest turn off the incoming bearing)."""
    incoming = request.topo.get("incoming_bearing_deg")
    best: tuple[float, float, str] | None = None
    for target, view in _candidate_views(request):
        if view is None:
            continue
        turn = _relative_turn(view, incoming)
        key = (abs(turn), view.heading_deg, target)
        if best is None or key < best:
            best = key
    if best is not None:
        return best[2]
    targets = request.move_targets()
    return targets[0] if targets else None


def _scored_response(request: AgentRequest, chosen: ActionDecision,
                     provenance: str = "builtin") -> AgentResponse:
    scores = {}
    for cand in request.candidates:
        label = "stop" if cand.kind == "stop" else cand.target
        scores[label] = 0.0
    if chosen.kind == "stop":
        scores["stop"] = chosen.stop_score
    else:
        scores[chosen.target] = 1.0
        scores["stop"] = chosen.stop_score
    return AgentResponse(chosen=chosen, scores=scores, provenance=provenance)


# ---------------------------------------------------------------------------
# builtin policies
# ---------------------------------------------------------------------------

def _decide_oracle(request: AgentRequest, graph: NavGraph) -> AgentResponse:
    goal = request.goal_hint
    if goal is None:
        raise ContractError("oracle agent requires a goal hint")
    here = request.panorama.at
    if here == goal:
        return _scored_response(request, stop(1.0), ORACLE)
    _, path = graph.geodesic(here, goal)
    targets = set(request.move_targets())
    for node in path[1:]:
        if node in targets:
            return _scored_response(request, move(node, 0.0), ORACLE)
    return _scored_response(request, stop(0.0), ORACLE)


def _best_by_overlap(request: AgentRequest, mentioned: set[str]) -> tuple[str | None, int]:
    best_target: str | None = None
    best_key: tuple[float, float] | None = None
    best_overlap = 0
    for target, view in _candidate_views(request):
        if view is None:
            continue
        overlap = len(view.visible_landmarks & mentioned)
        key = (-float(overlap), view.heading_deg)
        if best_key is None or key < best_key:
            best_key = key
            best_target = target
            best_overlap = overlap
    return best_target, best_overlap


def _decide_landmark(request: AgentRequest, graph: NavGraph | None) -> AgentResponse:
    inventory = graph.landmark_inventory() if graph else _local_landmark_inventory(request.panorama)
    mentioned = mentioned_tags(request.subgoal, inventory)
    target, overlap = _best_by_overlap(request, mentioned)
    if target is None or (not mentioned or overlap == 0):
        fallback = _forward_most(request)
        if fallback is None:
            return _scored_response(request, stop(0.0), GREEDY_LANDMARK)
        return _scored_response(request, move(fallback, 0.0), GREEDY_LANDMARK)
    return _scored_response(request, move(target, 0.0), GREEDY_LANDMARK)


def _decide_vertical(request: AgentRequest, graph: NavGraph | None) -> AgentResponse:
    text = set(re.findall(r"[a-z']+", request.subgoal.lower()))
    wants_up = bool(text & _UP_WORDS)
    wants_down = bool(text & _DOWN_WORDS)
    best: tuple[float, float, str] | None = None
    for target, view in _candidate_views(request):
        if view is None:
            continue
        if wants_down and not wants_up:
            gain = -view.elevation_delta
        elif wants_up and not wants_down:
            gain = view.elevation_delta
        else:
            gain = abs(view.elevation_delta)
        key = (-gain, view.heading_deg, target)
        if best is None or key < best:
            best = key
    if best is None:
        return _scored_response(request, stop(0.0), GREEDY_VERTICAL)
    return _scored_response(request, move(best[2], 0.0), GREEDY_VERTICAL)


_TURN_TOLERANCE_DEG = 45.0


def _decide_direction(request: AgentRequest, graph: NavGraph | None) -> AgentResponse:
    text = set(re.findall(r"[a-z'-]+", request.subgoal.lower()))
    if "left" in text:
        command = -90.0
    elif "right" in text:
        command = 90.0
    elif text & {"around", "back", "u-turn", "reverse"}:
        command = 180.0
    else:
        command = 0.0
    incoming = request.topo.get("incoming_bearing_deg")
    scored: list[tuple[float, float, str]] = []
    for target, view in _candidate_views(request):
        if view is None:
            continue
        turn = _relative_turn(view, incoming)
        if command == 180.0:
            diff = abs(abs(turn) - 180.0)
        else:
            diff = abs(signed_turn_deg(command, turn))  # circular distance
        scored.append((diff, view.heading_deg, target))
    if not scored:
        return _scored_response(request, stop(0.0), GREEDY_DIRECTION)
    in_band = [s for s in scored if s[0] <= _TURN_TOLERANCE_DEG]
    pick = min(in_band) if in_band else min(scored)
    return _scored_response(request, move(pick[2], 0.0), GREEDY_DIRECTION)


def _decide_region(request: AgentRequest, graph: NavGraph | None) -> AgentResponse:
    inventory = graph.region_inventory() if graph else _local_region_inventory(request.panorama)
    mentioned = mentioned_tags(request.subgoal, inventory)
    best: tuple[float, str] | None = None
    for target, view in _candidate_views(request):
        if view is None:
            continue
        if view.visible_region in mentioned:
            key = (view.heading_deg, target)
            if best is None or key < best:
                best = key
    if best is None:
        fallback = _forward_most(request)
        if fallback is None:
            return _scored_response(request, stop(0.0), GREEDY_REGION)
        return _scored_response(request, move(fallback, 0.0), GREEDY_REGION)
    return _scored_response(request, move(best[1], 0.0), GREEDY_REGION)


def _first_verb(subgoal: str) -> str:
    for token in re.findall(r"[a-z']+", subgoal.lower()):
        if token in {"finally", "now", "just", "please", "and"}:
            continue
        return token
    return ""


def _decide_stop(request: AgentRequest, graph: NavGraph | None) -> AgentResponse:
    pano = request.panorama
    landmark_inv = graph.landmark_inventory() if graph else _local_landmark_inventory(pano)
    region_inv = graph.region_inventory() if graph else _local_region_inventory(pano)
    mentioned_lm = mentioned_tags(request.subgoal, landmark_inv)
    mentioned = mentioned_lm | mentioned_tags(request.subgoal, region_inv)
    here_visible = set(pano.landmarks) | {pano.region}
    here_overlap = len(mentioned & here_visible)
    score = here_overlap / len(mentioned) if mentioned else 0.0

    target, best_lm_overlap = _best_by_overlap(request, mentioned_lm)
    verb = _first_verb(request.subgoal)
    terminal = verb in TERMINAL_STOP_VERBS or request.subgoal.lower().startswith("come to a stop")
    if terminal:
        named_visible = here_overlap > 0
        no_improvement = best_lm_overlap <= len(mentioned_lm & pano.landmarks)
        if named_visible or no_improvement:
            return _scored_response(request, stop(score), STOP_SPECIALIST)
    # not ready to stop: approach whatever the subgoal names
    if target is not None and best_lm_overlap > 0:
        return _scored_response(request, move(target, score), STOP_SPECIALIST)
    fallback = _forward_most(request)
    if fallback is None:
        return _scored_response(request, stop(score), STOP_SPECIALIST)
    return _scored_response(request, move(fallback, score), STOP_SPECIALIST)


_POLICY_FNS = {
    GREEDY_DIRECTION: _decide_direction,
    GREEDY_VERTICAL: _decide_vertical,
    GREEDY_LANDMARK: _decide_landmark,
    GREEDY_REGION: _decide_region,
    STOP_SPECIALIST: _decide_stop,
}


# ---------------------------------------------------------------------------
# wire protocol
# ---------------------------------------------------------------------------

def panorama_to_dict(pano: Panorama) -> dict:
    return {
        "at": pano.at,
        "region": pano.region,
        "landmarks": sorted(pano.landmarks),
        "views": [
            {
                "heading_deg": v.heading_deg,
                "elevation_delta": v.elevation_delta,
                "visible_landmarks": sorted(v.visible_landmarks),
                "visible_region": v.visible_region,
                "leads_to": v.leads_to,
            }
            for v in pano.views
        ],
    }


def request_to_dict(request: AgentRequest) -> dict:
    return {
        "protocol": PROTOCOL_VERSION,
        "instruction": request.instruction,
        "subgoal": request.subgoal,
        "panorama": panorama_to_dict(request.panorama),
        "candidates": [
            {"kind": c.kind, "target": c.target} for c in request.candidates
        ],
        "topo": {
            "visited": list(request.topo.get("visited", [])),
            "frontier": list(request.topo.get("frontier", [])),
            "prev": request.topo.get("prev"),
            "incoming_bearing_deg": request.topo.get("incoming_bearing_deg"),
        },
    }


def parse_remote_response(doc: Mapping[str, Any], request: AgentRequest) -> AgentResponse:
    """Validate a remote reply against the response invariants."""
    if not isinstance(doc, Mapping):
        raise ContractError("remote response must be an object")
    chosen_doc = doc.get("chosen")
    if not isinstance(chosen_doc, Mapping):
        raise ContractError("remote response missing 'chosen'")
    kind = chosen_doc.get("kind")
    target = chosen_doc.get("target")
    stop_score = float(chosen_doc.get("stop_score", 0.0))
    chosen = ActionDecision(kind=kind, target=target, stop_score=stop_score)
    legal = {c.key() for c in request.candidates}
    if chosen.key() not in legal:
        raise ContractError(f"remote chose an illegal action {chosen.label()}")
    scores_doc = doc.get("scores")
    if not isinstance(scores_doc, Mapping):
        raise ContractError("remote response missing 'scores'")
    labels = {("stop" if c.kind == "stop" else c.target) for c in request.candidates}
    scores: dict[str, float] = {}
    for label in labels:
        if label not in scores_doc:
            raise ContractError(f"remote scores missing candidate {label!r}")
        value = float(scores_doc[label])
        if not (0.0 <= value <= 1.0):
            raise ContractError(f"remote score for {label!r} out of range: {value}")
        scores[label] = value
    return AgentResponse(chosen=chosen, scores=scores, provenance="remote")


class HttpAgentTransport:
    def __init__(self, endpoint: str, timeout: float = 60.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def post(self, payload: dict) -> dict:
        import requests

        resp = requests.post(self.endpoint, json=payload, timeout=self.timeout)
        resp.raise_for_status()
        return resp.json()


class ReplayAgentTransport:
    def __init__(self, store: TranscriptStore | str | Path):
        self.store = store if isinstance(store, TranscriptStore) else TranscriptStore(store)

    def post(self, payload: dict) -> dict:
        return self.store.lookup(payload)


class RecordingAgentTransport:
    def __init__(self, inner, store: TranscriptStore):
        self.inner = inner
        self.store = store

    def post(self, payload: dict) -> dict:
        response = self.inner.post(payload)
        self.store.record(payload, response)
        return response


def decide(
    descriptor: AgentDescriptor,
    request: AgentRequest,
    *,
    graph: NavGraph | None = None,
    transport=None,
) -> AgentResponse:
    """Run one agent on one request; total for every valid request.

    Builtins are pure given (request, graph). Remote agents get one retry, then
    the greedy landmark builtin answers with fallback provenance.
    """
    if descriptor.kind == BUILTIN:
        if descriptor.name == ORACLE:
            if graph is None:
                raise ContractError("oracle agent requires graph context")
            return _decide_oracle(request, graph)
        return _POLICY_FNS[descriptor.name](request, graph)

    if transport is None:
        transport = HttpAgentTransport(descriptor.endpoint)
    payload = request_to_dict(request)
    for _ in range(2):
        try:
            doc = transport.post(payload)
            return parse_remote_response(doc, request)
        except Exception:
            continue
    response = _decide_landmark(request, graph)
    return AgentResponse(
        chosen=response.chosen, scores=response.scores, provenance="fallback_builtin"
    )
