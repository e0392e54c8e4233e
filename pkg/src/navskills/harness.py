"""Episode orchestration: configuration, the per-step pipeline, batch runs.

One step of the default pipeline: localize the current subgoal, extend the
executed ledger, route to a skill, resolve the bound agent, let it decide, and
apply the decision to the episode. Plan exhaustion forces a stop. Runs are
reproducible in scripted/replay modes; every trace carries the hash of the
configuration that produced it.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Any, Iterable, Sequence

from .agents import (
    BUILTIN,
    ORACLE,
    REMOTE,
    AgentDescriptor,
    AgentRegistry,
    AgentRequest,
    HttpAgentTransport,
    RecordingAgentTransport,
    ReplayAgentTransport,
    decide,
    default_registry,
)
from .episode import (
    EpisodeSpec,
    EpisodeState,
    EpisodeTrace,
    candidate_actions,
    finalize,
    start_episode,
    step,
    stop,
)
from .errors import ConfigError
from .graph import NavGraph, load_graph
from .modelclient import LIVE, RECORD, REPLAY, ModelClient, make_client
from .reorder import SubgoalPlan, reorder_external, reorder_rules
from .router import (
    ExternalBackend,
    RouterState,
    ScriptedBackend,
    localize_subgoal,
    random_route,
    route_skill,
    update_ledger,
)
from .taxonomy import KeywordLexicon, Skill
from .transcripts import TranscriptStore

RULES = "rules"
EXTERNAL = "external"
SCRIPTED = "scripted"
RANDOM = "random"

_ENV_ENDPOINTS = {
    "reorder_endpoint": "NAVSKILLS_REORDER_ENDPOINT",
    "router_endpoint": "NAVSKILLS_ROUTER_ENDPOINT",
    "agent_endpoint": "NAVSKILLS_AGENT_ENDPOINT",
}


@dataclass
class RunConfig:
    """Everything a run needs; JSON-serializable, one CLI flag per field."""

    graph_path: str = ""
    tasks_path: str | None = None
    reorder_backend: str = RULES  # rules | external
    router_backend: str = SCRIPTED  # scripted | external | random
    agents: dict[str, dict] = field(default_factory=dict)  # skill name -> descriptor
    seed: int = 0
    max_steps: int = 15
    action_space_mode: str = "local"
    success_threshold_m: float = 3.0
    retrospective_append: bool = True
    transcript_mode: str = REPLAY  # live | record | replay
    reorder_transcripts: str | None = None
    router_transcripts: str | None = None
    agent_transcripts: str | None = None
    reorder_endpoint: str | None = None
    router_endpoint: str | None = None
    agent_endpoint: str | None = None
    output_dir: str = "out"
    workers: int = 1

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        config = cls(**doc)
        config.apply_env_overrides()
        return config

    def apply_env_overrides(self) -> None:
        for attr, env in _ENV_ENDPOINTS.items():
            value = os.environ.get(env)
            if value:
                setattr(self, attr, value)

    def validate(self) -> None:
        if self.reorder_backend not in (RULES, EXTERNAL):
            raise ConfigError(f"unknown reorder backend {self.reorder_backend!r}")
        if self.router_backend not in (SCRIPTED, EXTERNAL, RANDOM):
            raise ConfigError(f"unknown router backend {self.router_backend!r}")
        if self.transcript_mode not in (LIVE, RECORD, REPLAY):
            raise ConfigError(f"unknown transcript mode {self.transcript_mode!r}")
        if self.graph_path and not Path(self.graph_path).exists():
            raise ConfigError(f"graph file not found: {self.graph_path}")
        if self.tasks_path and not Path(self.tasks_path).exists():
            raise ConfigError(f"tasks file not found: {self.tasks_path}")
        if self.transcript_mode == REPLAY:
            needs = []
            if self.reorder_backend == EXTERNAL:
                needs.append(("reorder_transcripts", self.reorder_transcripts))
            if self.router_backend == EXTERNAL:
                needs.append(("router_transcripts", self.router_transcripts))
            if any(d.get("kind") == REMOTE for d in self.agents.values()):
                needs.append(("agent_transcripts", self.agent_transcripts))
            for name, value in needs:
                if not value or not Path(value).exists():
                    raise ConfigError(f"replay mode requires transcript file for {name}")


def build_registry(config: RunConfig) -> AgentRegistry:
    if not config.agents:
        return default_registry()
    registry = AgentRegistry()
    for skill_name, doc in config.agents.items():
        descriptor = AgentDescriptor(
            skill=Skill.from_name(skill_name),
            kind=doc.get("kind", BUILTIN),
            name=doc.get("name", "greedy-landmark"),
            endpoint=doc.get("endpoint"),
        )
        registry.register(descriptor)
    return registry


def _maybe_client(
    config: RunConfig, endpoint: str | None, transcripts: str | None
) -> ModelClient | None:
    if config.transcript_mode == REPLAY:
        if transcripts is None:
            return None
        return make_client(REPLAY, transcript_path=transcripts)
    if endpoint is None:
        return None
    return make_client(config.transcript_mode, endpoint=endpoint, transcript_path=transcripts)


class Harness:
    """Bound pipeline: graph, plan backend, router backend, agent registry."""

    def __init__(
        self,
        graph: NavGraph,
        registry: AgentRegistry | None = None,
        *,
        reorder_backend: str = RULES,
        router_backend: str = SCRIPTED,
        reorder_client: ModelClient | None = None,
        router_client: ModelClient | None = None,
        agent_transport=None,
        lexicon: KeywordLexicon | None = None,
        retrospective_append: bool = True,
        seed: int = 0,
        config_hash: str | None = None,
    ):
        self.graph = graph
        self.registry = registry or default_registry()
        self.reorder_backend = reorder_backend
        self.router_backend = router_backend
        self.reorder_client = reorder_client
        self.router_client = router_client
        self.agent_transport = agent_transport
        self.lexicon = lexicon
        self.retrospective_append = retrospective_append
        self.seed = seed
        self.config_hash = config_hash
        self.decisions_made = 0
        if reorder_backend == EXTERNAL and reorder_client is None:
            raise ConfigError("external reordering requires a model client")
        if router_backend == EXTERNAL and router_client is None:
            raise ConfigError("external routing requires a model client")

    @classmethod
    def from_config(cls, config: RunConfig) -> "Harness":
        config.validate()
        if not config.graph_path:
            raise ConfigError("config needs a graph_path")
        graph = load_graph(config.graph_path)
        agent_transport = None
        if any(d.get("kind") == REMOTE for d in config.agents.values()):
            if config.transcript_mode == REPLAY:
                agent_transport = ReplayAgentTransport(TranscriptStore(config.agent_transcripts))
            else:
                transport = HttpAgentTransport(config.agent_endpoint or "")
                if config.transcript_mode == RECORD:
                    agent_transport = RecordingAgentTransport(
                        transport, TranscriptStore(config.agent_transcripts)
                    )
                else:
                    agent_transport = transport
        return cls(
            graph=graph,
            registry=build_registry(config),
            reorder_backend=config.reorder_backend,
            router_backend=config.router_backend,
            reorder_client=_maybe_client(config, config.reorder_endpoint, config.reorder_transcripts),
            router_client=_maybe_client(config, config.router_endpoint, config.router_transcripts),
            agent_transport=agent_transport,
            retrospective_append=config.retrospective_append,
            seed=config.seed,
            config_hash=config.config_hash(),
        )

    # -- pipeline pieces ----------------------------------------------------

    def plan_for(self, instruction: str) -> SubgoalPlan:
        if self.reorder_backend == EXTERNAL:
            return reorder_external(instruction, self.reorder_client)
        return reorder_rules(instruction)

    def _route_backend(self):
        if self.router_backend == EXTERNAL:
            return ExternalBackend(client=self.router_client, lexicon=self.lexicon)
        return ScriptedBackend(lexicon=self.lexicon)

    def _topo_summary(self, state: EpisodeState) -> dict[str, Any]:
        summary = state.topo.summary()
        prev = state.path[-2] if len(state.path) > 1 else None
        summary["prev"] = prev
        summary["incoming_bearing_deg"] = (
            self.graph.bearing(prev, state.current) if prev is not None else None
        )
        return summary

    def _agent_decision(self, state: EpisodeState, subgoal: str, skill: Skill):
        descriptor = self.registry.resolve(skill)
        goal_hint = None
        if descriptor.kind == BUILTIN and descriptor.name == ORACLE:
            goal_hint = state.spec.goal
        request = AgentRequest(
            instruction=state.spec.instruction,
            subgoal=subgoal,
            panorama=state.panorama(),
            candidates=tuple(candidate_actions(state)),
            topo=self._topo_summary(state),
            goal_hint=goal_hint,
        )
        self.decisions_made += 1
        return decide(descriptor, request, graph=self.graph, transport=self.agent_transport)

    def run_episode(self, spec: EpisodeSpec) -> EpisodeTrace:
        """Run the full two-phase pipeline for one episode and finalize it."""
        backend = self._route_backend()
        state = start_episode(spec)

        if self.router_backend == RANDOM:
            while not state.done:
                route = random_route(self.seed * 100003 + spec.seed, state.t)
                response = self._agent_decision(state, spec.instruction, route.skill)
                step(state, response.chosen, meta={"subgoal": None, "skill": route.skill.value})
            return self._finish(state)

        plan = self.plan_for(spec.instruction)
        rstate = RouterState(plan=plan, backend=self.router_backend)
        while not state.done:
            loc = localize_subgoal(rstate, state.history, backend)
            if loc.exhausted:
                step(state, stop(0.0), meta={"subgoal": None, "skill": None})
                continue
            update_ledger(rstate, loc)
            route = route_skill(plan.joined(), loc.subgoal, loc.reasoning, backend)
            response = self._agent_decision(state, loc.subgoal, route.skill)
            step(
                state,
                response.chosen,
                meta={"subgoal": loc.subgoal, "skill": route.skill.value},
            )
        return self._finish(state)

    def _finish(self, state: EpisodeState) -> EpisodeTrace:
        trace = finalize(state, retrospective_append=self.retrospective_append)
        trace.config_hash = self.config_hash
        return trace

    def run_batch(self, specs: Sequence[EpisodeSpec], workers: int = 1) -> list[EpisodeTrace]:
        """Run episodes on a worker pool; results keep submission order."""
        if workers <= 1:
            return [self.run_episode(spec) for spec in specs]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(self.run_episode, specs))


def load_tasks(path: str | Path, graph: NavGraph, config: RunConfig) -> list[EpisodeSpec]:
    """Tasks file: one JSON object per line with start/goal/instruction."""
    specs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            specs.append(
                EpisodeSpec(
                    graph=graph,
                    start=doc["start"],
                    goal=doc["goal"],
                    instruction=doc["instruction"],
                    max_steps=doc.get("max_steps", config.max_steps),
                    action_space_mode=doc.get("action_space_mode", config.action_space_mode),
                    seed=doc.get("seed", config.seed),
                )
            )
    return specs


def write_traces(traces: Iterable[EpisodeTrace], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for trace in traces:
            fh.write(trace.to_json() + "\n")


def read_traces(path: str | Path) -> list[EpisodeTrace]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(EpisodeTrace.from_json(line))
    return out


def run_from_config(config: RunConfig) -> dict[str, Any]:
    """Execute a configured run; writes traces and a timing report, returns paths."""
    harness = Harness.from_config(config)
    if not config.tasks_path:
        raise ConfigError("config needs a tasks_path")
    specs = load_tasks(config.tasks_path, harness.graph, config)
    started = time.perf_counter()
    traces = harness.run_batch(specs, workers=config.workers)
    elapsed = time.perf_counter() - started

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    traces_path = out_dir / "traces.jsonl"
    write_traces(traces, traces_path)
    timing = {
        "runtime_s": elapsed,
        "episodes": len(traces),
        "decisions": harness.decisions_made,
        "decisions_per_s": (harness.decisions_made / elapsed) if elapsed > 0 else 0.0,
        "config_hash": config.config_hash(),
    }
    with (out_dir / "timing.json").open("w", encoding="utf-8") as fh:
        json.dump(timing, fh, indent=2, sort_keys=True)
    return {"traces": str(traces_path), "timing": str(out_dir / "timing.json"),
            "episodes": len(traces)}
