"""Offline harness for skill-routed instruction navigation on discrete graph worlds.

The pieces, bottom to top: a graph world with symbolic panoramas (``graph``),
an episode engine with two stop mechanisms (``episode``), navigation metrics
(``metrics``), keyword skill/temporal analysis (``taxonomy``), skill-specific
trajectory synthesis (``synthesis``), instruction reordering into subgoal plans
(``reorder``), a two-phase action router (``router``), pluggable skill agents
(``agents``), and the orchestration harness plus CLI (``harness``, ``cli``).
"""

from .agents import (
    AgentDescriptor,
    AgentRegistry,
    AgentRequest,
    AgentResponse,
    decide,
    default_registry,
    oracle_registry,
)
from .episode import (
    ActionDecision,
    EpisodeSpec,
    EpisodeState,
    EpisodeTrace,
    candidate_actions,
    finalize,
    start_episode,
    step,
)
from .graph import NavGraph, Panorama, View, Viewpoint, load_graph, loads_graph
from .harness import Harness, RunConfig, run_from_config
from .metrics import AggregateReport, EvalResult, aggregate, evaluate, report_table
from .reorder import SubgoalPlan, reorder_external, reorder_rules
from .router import (
    LocalizeResult,
    RouteResult,
    RouterState,
    localize_subgoal,
    random_route,
    route_skill,
    update_ledger,
)
from .synthesis import (
    DatasetStats,
    FilterConfig,
    SynthDatasetEntry,
    TrajectorySample,
    build_dataset,
    dataset_stats,
    generate_instruction,
    passes_filter,
    sample_paths,
)
from .taxonomy import (
    ROUTED_SKILLS,
    KeywordLexicon,
    Skill,
    TemporalRelation,
    classify_temporal,
    default_lexicon,
    detect_skills,
    skill_histogram,
)

__version__ = "0.1.0"
