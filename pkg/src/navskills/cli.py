"""Command-line entry points: synth, reorder, route, run, eval, analyze."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import NavError
from .graph import load_graph
from .harness import (
    EXTERNAL,
    RANDOM,
    RULES,
    SCRIPTED,
    RunConfig,
    read_traces,
    run_from_config,
)
from .metrics import aggregate, evaluate, report_table
from .modelclient import REPLAY, make_client
from .reorder import reorder_external, reorder_rules
from .router import ExternalBackend, ScriptedBackend, random_route, route_skill
from .synthesis import (
    build_dataset,
    dataset_stats,
    write_dataset,
)
from .taxonomy import (
    KeywordLexicon,
    Skill,
    TemporalRelation,
    classify_temporal,
    histogram_csv,
    skill_histogram,
)
from .worlds import demo_house

_SKILL_ALIASES = {
    "direction": Skill.DIRECTION_ADJUSTMENT,
    "vertical": Skill.VERTICAL_MOVEMENT,
    "stop": Skill.STOP_AND_PAUSE,
    "landmark": Skill.LANDMARK_DETECTION,
    "region": Skill.AREA_REGION_IDENTIFICATION,
    "temporal": Skill.TEMPORAL_ORDER_PLANNING,
}


def _skill_from_arg(token: str) -> Skill:
    if token in _SKILL_ALIASES:
        return _SKILL_ALIASES[token]
    return Skill.from_name(token)


def _load_world(args) -> "NavGraph":
    if args.graph:
        return load_graph(args.graph)
    return demo_house(seed=getattr(args, "world_seed", 0))


def _read_instructions(path: str) -> list[str]:
    """Instruction corpus: plain text (one per line) or JSONL with 'instruction'."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("{"):
                out.append(json.loads(line)["instruction"])
            else:
                out.append(line)
    return out


def _cmd_synth(args) -> int:
    graph = _load_world(args)
    skill = _skill_from_arg(args.skill)
    client = None
    if args.generator == "external":
        client = make_client(
            args.transcript_mode, endpoint=args.endpoint, transcript_path=args.transcripts
        )
    entries = build_dataset(
        graph, skill, args.n, args.seed, generator=args.generator, client=client
    )
    write_dataset(entries, args.out)
    attempts = entries[-1].provenance.get("attempt", len(entries))
    stats = dataset_stats(e.instruction for e in entries)
    summary = {
        "skill": skill.value,
        "entries": len(entries),
        "acceptance_rate": len(entries) / attempts,
        **stats.to_dict(),
    }
    print(json.dumps(summary, sort_keys=True))
    return 0


def _cmd_reorder(args) -> int:
    instructions = _read_instructions(args.infile)
    client = None
    if args.backend == EXTERNAL:
        client = make_client(
            args.transcript_mode, endpoint=args.endpoint, transcript_path=args.transcripts
        )
    records = []
    for instruction in instructions:
        if args.backend == EXTERNAL:
            plan = reorder_external(instruction, client)
        else:
            plan = reorder_rules(instruction)
        records.append(
            {"instruction": instruction, "subgoals": list(plan.subgoals), "source": plan.source}
        )
    with open(args.out, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
    print(f"wrote {len(records)} plans to {args.out}")
    return 0


def _cmd_route(args) -> int:
    lexicon = KeywordLexicon.from_file(args.lexicon) if args.lexicon else None
    backend = None
    if args.backend == EXTERNAL:
        client = make_client(
            args.transcript_mode, endpoint=args.endpoint, transcript_path=args.transcripts
        )
        backend = ExternalBackend(client=client, lexicon=lexicon)
    elif args.backend == SCRIPTED:
        backend = ScriptedBackend(lexicon=lexicon)

    records = []
    with open(args.plans, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            subgoals = doc["subgoals"]
            joined = " ".join(subgoals)
            skills = []
            for t, subgoal in enumerate(subgoals):
                if args.backend == RANDOM:
                    result = random_route(args.seed, t)
                else:
                    result = route_skill(joined, subgoal, "offline routing", backend)
                skills.append(result.skill.value)
            records.append({"instruction": doc.get("instruction", joined), "skills": skills})
    with open(args.out, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
    print(f"wrote {len(records)} routed plans to {args.out}")
    return 0


_CONFIG_OVERRIDES = [
    ("graph", "graph_path"),
    ("tasks", "tasks_path"),
    ("reorder_backend", "reorder_backend"),
    ("router_backend", "router_backend"),
    ("seed", "seed"),
    ("max_steps", "max_steps"),
    ("action_space_mode", "action_space_mode"),
    ("transcript_mode", "transcript_mode"),
    ("output_dir", "output_dir"),
    ("workers", "workers"),
]


def _cmd_run(args) -> int:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    for flag, attr in _CONFIG_OVERRIDES:
        value = getattr(args, flag, None)
        if value is not None:
            setattr(config, attr, value)
    result = run_from_config(config)
    print(json.dumps(result, sort_keys=True))
    return 0


def _cmd_eval(args) -> int:
    graph = load_graph(args.graph)
    traces = read_traces(args.traces)
    results = [evaluate(trace, graph, threshold=args.threshold) for trace in traces]
    report = aggregate(results)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
    print(report_table(report, label=Path(args.traces).stem))
    print(report.to_json())
    return 0


def _cmd_analyze(args) -> int:
    instructions = _read_instructions(args.infile)
    lexicon = KeywordLexicon.from_file(args.lexicon) if args.lexicon else None
    counts = skill_histogram(instructions, lexicon)
    temporal = [
        {
            "instruction": text,
            "relations": sorted(r.value for r in classify_temporal(text, lexicon)),
        }
        for text in instructions
    ]
    doc = {
        "skills": {skill.value: counts[skill] for skill in Skill},
        "temporal": temporal,
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True, ensure_ascii=False)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(histogram_csv(counts))
    print(json.dumps(doc, sort_keys=True, ensure_ascii=False))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="navskills",
        description="Skill-routed instruction navigation on discrete graph worlds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="build a skill-specific synthetic dataset")
    p.add_argument("--graph", help="graph JSON file (default: built-in demo house)")
    p.add_argument("--world-seed", type=int, default=0, help="seed for the built-in world")
    p.add_argument("--skill", required=True,
                   help="direction|vertical|stop|landmark|region|temporal or a full name")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--generator", choices=["template", "external"], default="template")
    p.add_argument("--endpoint")
    p.add_argument("--transcripts")
    p.add_argument("--transcript-mode", default=REPLAY, choices=["live", "record", "replay"])
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("reorder", help="turn instructions into subgoal plans")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--backend", choices=[RULES, EXTERNAL], default=RULES)
    p.add_argument("--endpoint")
    p.add_argument("--transcripts")
    p.add_argument("--transcript-mode", default=REPLAY, choices=["live", "record", "replay"])
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_reorder)

    p = sub.add_parser("route", help="route a plan file offline (no environment)")
    p.add_argument("--plans", required=True, help="JSONL of {'instruction','subgoals'}")
    p.add_argument("--backend", choices=[SCRIPTED, EXTERNAL, RANDOM], default=SCRIPTED)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lexicon")
    p.add_argument("--endpoint")
    p.add_argument("--transcripts")
    p.add_argument("--transcript-mode", default=REPLAY, choices=["live", "record", "replay"])
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_route)

    p = sub.add_parser("run", help="run episodes from a config file")
    p.add_argument("--config", help="run config JSON")
    p.add_argument("--graph")
    p.add_argument("--tasks")
    p.add_argument("--reorder-backend", dest="reorder_backend", choices=[RULES, EXTERNAL])
    p.add_argument("--router-backend", dest="router_backend",
                   choices=[SCRIPTED, EXTERNAL, RANDOM])
    p.add_argument("--seed", type=int)
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.add_argument("--action-space-mode", dest="action_space_mode", choices=["local", "global"])
    p.add_argument("--transcript-mode", dest="transcript_mode",
                   choices=["live", "record", "replay"])
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--workers", type=int)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("eval", help="score a trace file")
    p.add_argument("--traces", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--threshold", type=float, default=3.0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("analyze", help="skill histogram + temporal labels for instructions")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(fn=_cmd_analyze)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (NavError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
