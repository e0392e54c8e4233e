"""Single-episode execution: position, history, topological map, stop mechanics.

An episode applies move/stop decisions against a graph. Two stop mechanisms are
supported: an explicit stop action, and a retrospective pick at the step limit
of the visited node with the highest recorded stop score (optionally extending
the evaluated path to reach it).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

from .errors import ContractError, StateError
from .graph import NavGraph, Panorama

LOCAL = "local"
GLOBAL = "global"

EXPLICIT_STOP = "explicit_stop"
RETROSPECTIVE = "retrospective"
STEP_LIMIT = "step_limit"

DEFAULT_MAX_STEPS = 15


@dataclass(frozen=True)
class EpisodeSpec:
    graph: NavGraph
    start: str
    goal: str
    instruction: str
    max_steps: int = DEFAULT_MAX_STEPS
    action_space_mode: str = LOCAL
    seed: int = 0

    def __post_init__(self):
        self.graph.node(self.start)
        self.graph.node(self.goal)
        if self.max_steps < 1:
            raise ContractError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.action_space_mode not in (LOCAL, GLOBAL):
            raise ContractError(f"unknown action_space_mode {self.action_space_mode!r}")

    def digest(self) -> dict[str, Any]:
        return {
            "start": self.start,
            "goal": self.goal,
            "instruction": self.instruction,
            "max_steps": self.max_steps,
            "action_space_mode": self.action_space_mode,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class ActionDecision:
    """Either move(target) or stop, with the acting agent's stop score for here."""

    kind: str  # "move" | "stop"
    target: str | None = None
    stop_score: float = 0.0

    def __post_init__(self):
        if self.kind not in ("move", "stop"):
            raise ContractError(f"unknown action kind {self.kind!r}")
        if self.kind == "move" and not self.target:
            raise ContractError("move decision requires a target")
        if self.kind == "stop" and self.target is not None:
            raise ContractError("stop decision must not carry a target")
        if not (0.0 <= self.stop_score <= 1.0):
            raise ContractError(f"stop_score must be in [0, 1], got {self.stop_score}")

    def key(self) -> tuple[str, str | None]:
        return (self.kind, self.target)

    def label(self) -> str:
        return "stop" if self.kind == "stop" else f"move:{self.target}"


def move(target: str, stop_score: float = 0.0) -> ActionDecision:
    return ActionDecision("move", target, stop_score)


def stop(stop_score: float = 0.0) -> ActionDecision:
    return ActionDecision("stop", None, stop_score)


@dataclass
class TopoMap:
    """Online map: visited nodes in order plus the observed-unvisited frontier."""

    visited: list[str] = field(default_factory=list)
    frontier: set[str] = field(default_factory=set)
    first_seen: dict[str, int] = field(default_factory=dict)

    def visit(self, node: str, t: int, neighbors: set[str]) -> None:
        if node not in self.first_seen:
            self.first_seen[node] = t
        if node not in self.visited:
            self.visited.append(node)
        self.frontier.discard(node)
        visited_set = set(self.visited)
        for nbr in neighbors:
            if nbr not in visited_set:
                self.frontier.add(nbr)
                self.first_seen.setdefault(nbr, t)

    def summary(self) -> dict[str, Any]:
        return {"visited": list(self.visited), "frontier": sorted(self.frontier)}


@dataclass
class EpisodeState:
    spec: EpisodeSpec
    t: int
    current: str
    path: list[str]
    topo: TopoMap
    history: list[tuple[str, str]]  # (node id, panorama summary)
    stop_scores: dict[str, float]
    done: bool = False
    termination: str | None = None
    decisions: list[dict[str, Any]] = field(default_factory=list)
    _trace: "EpisodeTrace | None" = None

    def panorama(self) -> Panorama:
        return self.spec.graph.observe(self.current)


@dataclass
class EpisodeTrace:
    """Finalized episode record; serializes losslessly to one JSONL object."""

    spec: dict[str, Any]
    path: list[str]
    final: str
    termination: str
    steps: list[dict[str, Any]]
    config_hash: str | None = None

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "spec": self.spec,
            "path": list(self.path),
            "final": self.final,
            "termination": self.termination,
            "steps": [dict(s) for s in self.steps],
        }
        if self.config_hash is not None:
            doc["config_hash"] = self.config_hash
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "EpisodeTrace":
        return cls(
            spec=dict(doc["spec"]),
            path=list(doc["path"]),
            final=doc["final"],
            termination=doc["termination"],
            steps=[dict(s) for s in doc["steps"]],
            config_hash=doc.get("config_hash"),
        )

    @classmethod
    def from_json(cls, line: str) -> "EpisodeTrace":
        return cls.from_dict(json.loads(line))


def start_episode(spec: EpisodeSpec) -> EpisodeState:
    topo = TopoMap()
    topo.visit(spec.start, 0, spec.graph.neighbors(spec.start))
    pano = spec.graph.observe(spec.start)
    return EpisodeState(
        spec=spec,
        t=0,
        current=spec.start,
        path=[spec.start],
        topo=topo,
        history=[(spec.start, pano.summary())],
        stop_scores={},
    )


def candidate_actions(state: EpisodeState) -> list[ActionDecision]:
    """Legal decisions right now: moves (neighbors or frontier) plus stop, last."""
    if state.done:
        raise StateError("candidate_actions called on a finished episode")
    graph = state.spec.graph
    if state.spec.action_space_mode == LOCAL:
        pano = graph.observe(state.current)
        targets = [v.leads_to for v in pano.views if v.leads_to is not None]
    else:
        targets = sorted(state.topo.frontier, key=lambda n: (state.topo.first_seen.get(n, 0), n))
    return [move(t) for t in targets] + [stop()]


def step(
    state: EpisodeState,
    decision: ActionDecision,
    meta: Mapping[str, Any] | None = None,
) -> EpisodeState:
    """Apply one decision in place and return the state.

    In global mode a move to a frontier node materializes every node of the
    geodesic from the current position, so traveled distance is honest.
    ``meta`` (e.g. subgoal/skill labels from the router) is merged into the
    per-step trace record.
    """
    if state.done:
        raise StateError("step called on a finished episode")
    legal = {c.key() for c in candidate_actions(state)}
    if decision.key() not in legal:
        labels = sorted(f"{k}:{t}" if t else k for k, t in legal)
        raise ContractError(f"illegal decision {decision.label()}; legal: {labels}")

    graph = state.spec.graph
    prev_score = state.stop_scores.get(state.current, 0.0)
    state.stop_scores[state.current] = max(prev_score, decision.stop_score)

    record: dict[str, Any] = {
        "t": state.t,
        "action": decision.label(),
        "stop_score": decision.stop_score,
        "subgoal": None,
        "skill": None,
    }
    if meta:
        record.update(meta)
    state.decisions.append(record)

    if decision.kind == "stop":
        state.done = True
        state.termination = EXPLICIT_STOP
        return state

    target = decision.target
    assert target is not None
    if state.spec.action_space_mode == LOCAL or graph.has_edge(state.current, target):
        hops = [target]
    else:
        _, geo_path = graph.geodesic(state.current, target)
        hops = geo_path[1:]
    for node in hops:
        state.path.append(node)
        state.t = len(state.path) - 1
        state.current = node
        state.topo.visit(node, state.t, graph.neighbors(node))
        state.history.append((node, graph.observe(node).summary()))
    if state.t >= state.spec.max_steps:
        state.done = True
        state.termination = STEP_LIMIT
    return state


def retrospective_final(state: EpisodeState) -> str:
    """Visited node with the highest recorded stop score; earliest visit wins ties."""
    best = state.path[0]
    best_score = state.stop_scores.get(best, 0.0)
    for node in state.topo.visited:
        score = state.stop_scores.get(node, 0.0)
        if score > best_score:
            best, best_score = node, score
    return best


def finalize(state: EpisodeState, *, retrospective_append: bool = True) -> EpisodeTrace:
    """Build the evaluated trace; idempotent per state.

    Explicit stops end at the current node. At the step limit the endpoint is
    chosen retrospectively from stop scores; when that moves the endpoint, the
    geodesic to it is appended to the evaluated path (unless disabled) and the
    trace is marked ``retrospective``.
    """
    if not state.done:
        raise StateError("finalize called before the episode is done")
    if state._trace is not None:
        return state._trace

    eval_path = list(state.path)
    if state.termination == EXPLICIT_STOP:
        final = state.current
        termination = EXPLICIT_STOP
    else:
        final = retrospective_final(state)
        if final != state.current:
            termination = RETROSPECTIVE
            if retrospective_append:
                _, tail = state.spec.graph.geodesic(state.current, final)
                eval_path.extend(tail[1:])
        else:
            termination = STEP_LIMIT

    trace = EpisodeTrace(
        spec=state.spec.digest(),
        path=eval_path,
        final=final,
        termination=termination,
        steps=list(state.decisions),
    )
    state._trace = trace
    return trace
