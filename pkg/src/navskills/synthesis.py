"""Skill-specific synthetic data: seeded walks, per-skill filters, instructions.

Candidate trajectories are self-avoiding walks of 4-7 steps sampled from random
start nodes (nodes labeled with the sentinel region "Error" are never entered).
Each skill has a rejection filter selecting walks where that skill is the
primary factor; accepted walks get an instruction from either a deterministic
template grammar or an external text model (with template fallback), plus
corpus statistics over the result.

The qualitative factors behind each filter are fixed; the numbers are not, so
every numeric threshold lives in FilterConfig with its rationale in
FILTER_RATIONALE.
"""

from __future__ import annotations

import json
import random
import re
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, NamedTuple, Sequence

from .errors import ContractError, GenerationError
from .graph import NavGraph
from .modelclient import ModelClient, ReplayClient
from .prompts import atomic_instruction_prompt, temporal_instruction_prompt
from .taxonomy import Skill

ERROR_REGION = "Error"

TEMPLATE = "template"
EXTERNAL = "external"

MIN_WALK_STEPS = 4
MAX_WALK_STEPS = 7

# Probability mass per walk length; 4-step walks are deliberately the rarest.
DEFAULT_LENGTH_WEIGHTS = {4: 0.1, 5: 0.3, 6: 0.3, 7: 0.3}

GRAMMAR_VERSION = "1"


@dataclass(frozen=True)
class FilterConfig:
    """Numeric knobs for the per-skill trajectory filters."""

    turn_min_deg: float = 30.0
    turn_max_deg: float = 150.0
    min_significant_turns: int = 2
    elevation_threshold_m: float = 2.0
    vertical_tags: frozenset[str] = frozenset(
        {"stairs", "staircase", "stairway", "stairwell", "elevator", "escalator", "ramp"}
    )
    stop_similarity_min: float = 0.8
    pause_tags: frozenset[str] = frozenset(
        {"painting", "picture", "bench", "doorway", "sign", "fireplace", "statue", "stairs"}
    )
    landmark_persistence_steps: int = 3


FILTER_RATIONALE = {
    "turn_min_deg": "a turn must be large enough to read as a deliberate direction change",
    "turn_max_deg": "turns at or past this angle read as reversals / double turns, which are excluded",
    "min_significant_turns": "direction walks need repeated orientation changes, not a single corner",
    "elevation_threshold_m": "elevation steps beyond +/-2 m separate real floor changes from inclines",
    "vertical_tags": "a qualifying elevation step must happen at a vertically-relevant viewpoint",
    "stop_similarity_min": "a natural pause point looks nearly identical to the viewpoint before it",
    "pause_tags": "tags whose presence marks a semantically sensible place to halt",
    "landmark_persistence_steps": "a referenced landmark must stay visible across consecutive views",
}


@dataclass(frozen=True)
class StepEvent:
    """Per-step record of what changed while traversing one edge."""

    heading_change_deg: float  # absolute turn entering this step (0 for the first)
    heading_delta_deg: float  # signed turn, clockwise positive
    elevation_delta_m: float
    region_from: str
    region_to: str
    landmarks_at: frozenset[str]  # destination node's own tags
    landmarks_visible: frozenset[str]  # everything visible from the destination


@dataclass(frozen=True)
class TrajectorySample:
    nodes: tuple[str, ...]
    events: tuple[StepEvent, ...]
    seed: int

    @property
    def steps(self) -> int:
        return len(self.nodes) - 1


@dataclass(frozen=True)
class SynthDatasetEntry:
    trajectory: TrajectorySample
    instruction: str
    skill: Skill
    generator: str  # "template" | "external"
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.instruction.strip():
            raise ContractError("instruction must be non-empty")


@dataclass(frozen=True)
class DatasetStats:
    instr_count: int
    vocab_size: int
    mean_instr_len: float

    def to_dict(self) -> dict:
        return {
            "instr_count": self.instr_count,
            "vocab_size": self.vocab_size,
            "mean_instr_len": self.mean_instr_len,
        }


class FilterVerdict(NamedTuple):
    accepted: bool
    reason: str


# ---------------------------------------------------------------------------
# walk sampling
# ---------------------------------------------------------------------------

def _visible_from(graph: NavGraph, node: str) -> frozenset[str]:
    pano = graph.observe(node)
    tags = set(pano.landmarks)
    for view in pano.views:
        tags.update(view.visible_landmarks)
    return frozenset(tags)


def _build_sample(graph: NavGraph, nodes: Sequence[str], seed: int) -> TrajectorySample:
    events = []
    for i in range(len(nodes) - 1):
        src = graph.node(nodes[i])
        dst = graph.node(nodes[i + 1])
        if i == 0:
            delta = 0.0
        else:
            delta = graph.signed_heading_change(nodes[i - 1], nodes[i], nodes[i + 1])
        events.append(
            StepEvent(
                heading_change_deg=abs(delta),
                heading_delta_deg=delta,
                elevation_delta_m=dst.position[2] - src.position[2],
                region_from=src.region,
                region_to=dst.region,
                landmarks_at=dst.landmarks,
                landmarks_visible=_visible_from(graph, dst.id),
            )
        )
    return TrajectorySample(nodes=tuple(nodes), events=tuple(events), seed=seed)


def _try_walk(graph: NavGraph, rng: random.Random, starts: list[str], length: int) -> list[str] | None:
    start = rng.choice(starts)
    walk = [start]
    visited = {start}
    for _ in range(length):
        options = sorted(
            n for n in graph.neighbors(walk[-1])
            if n not in visited and graph.node(n).region != ERROR_REGION
        )
        if not options:
            return None
        nxt = rng.choice(options)
        walk.append(nxt)
        visited.add(nxt)
    return walk


def _length_choices(length_range: tuple[int, int], weights: dict[int, float] | None):
    lo, hi = length_range
    if lo > hi or lo < 1:
        raise ContractError(f"invalid length range {length_range}")
    weights = weights or DEFAULT_LENGTH_WEIGHTS
    lengths = list(range(lo, hi + 1))
    mass = [weights.get(L, 0.0) for L in lengths]
    if sum(mass) <= 0:
        mass = [1.0] * len(lengths)
    return lengths, mass


def sample_paths(
    graph: NavGraph,
    seed: int,
    count: int,
    length_range: tuple[int, int] = (MIN_WALK_STEPS, MAX_WALK_STEPS),
    *,
    length_weights: dict[int, float] | None = None,
) -> list[TrajectorySample]:
    """Seeded self-avoiding walks with per-step events; fully reproducible."""
    rng = random.Random(seed)
    lengths, mass = _length_choices(length_range, length_weights)
    starts = sorted(n for n, vp in graph.nodes.items() if vp.region != ERROR_REGION)
    if not starts:
        raise GenerationError("graph has no usable start nodes")
    samples: list[TrajectorySample] = []
    failures = 0
    budget = 1000 * (count + 1)
    while len(samples) < count:
        length = rng.choices(lengths, weights=mass)[0]
        walk = _try_walk(graph, rng, starts, length)
        if walk is None:
            failures += 1
            if failures > budget:
                raise GenerationError(
                    f"graph cannot host self-avoiding walks of {length_range} steps"
                )
            continue
        samples.append(_build_sample(graph, walk, seed))
    return samples


# ---------------------------------------------------------------------------
# per-skill filters
# ---------------------------------------------------------------------------

def _jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def passes_filter(
    sample: TrajectorySample, skill: Skill, cfg: FilterConfig | None = None
) -> FilterVerdict:
    """Does this walk make ``skill`` the primary factor of its navigation?"""
    cfg = cfg or FilterConfig()
    events = sample.events

    if any(e.region_from == ERROR_REGION or e.region_to == ERROR_REGION for e in events):
        return FilterVerdict(False, "walk crosses an unusable region")

    if skill is Skill.DIRECTION_ADJUSTMENT:
        turns = [e.heading_change_deg for e in events[1:]]
        significant = [t for t in turns if cfg.turn_min_deg <= t < cfg.turn_max_deg]
        if any(t >= cfg.turn_max_deg for t in turns):
            return FilterVerdict(False, "contains a reversal-grade turn")
        if len(significant) < cfg.min_significant_turns:
            return FilterVerdict(
                False,
                f"only {len(significant)} significant turns "
                f"(< {cfg.min_significant_turns})",
            )
        return FilterVerdict(True, "ok")

    if skill is Skill.VERTICAL_MOVEMENT:
        vertical = [e for e in events if abs(e.elevation_delta_m) > cfg.elevation_threshold_m]
        if not vertical:
            return FilterVerdict(False, "no significant elevation")
        tagged = [e for e in vertical if e.landmarks_visible & cfg.vertical_tags]
        if not tagged:
            return FilterVerdict(False, "elevation change not at a vertically-tagged viewpoint")
        signs = {e.elevation_delta_m > 0 for e in vertical}
        if len(signs) > 1:
            return FilterVerdict(False, "mixed up/down elevation changes")
        return FilterVerdict(True, "ok")

    if skill is Skill.STOP_AND_PAUSE:
        final = events[-1]
        penultimate = events[-2]
        similarity = _jaccard(final.landmarks_at, penultimate.landmarks_at)
        if similarity >= cfg.stop_similarity_min:
            return FilterVerdict(True, "ok")
        if final.landmarks_at & cfg.pause_tags:
            return FilterVerdict(True, "ok")
        return FilterVerdict(
            False,
            f"endpoint similarity {similarity:.2f} < {cfg.stop_similarity_min} "
            "and no pause-context tag",
        )

    if skill is Skill.LANDMARK_DETECTION:
        k = cfg.landmark_persistence_steps
        for i in range(len(events) - k + 1):
            window = events[i : i + k]
            common = frozenset.intersection(*(e.landmarks_visible for e in window))
            if common:
                return FilterVerdict(True, "ok")
        return FilterVerdict(False, f"no landmark visible across {k} consecutive steps")

    if skill is Skill.AREA_REGION_IDENTIFICATION:
        if not any(e.region_from != e.region_to for e in events):
            return FilterVerdict(False, "no region change")
        return FilterVerdict(True, "ok")

    if skill is Skill.TEMPORAL_ORDER_PLANNING:
        half = sample.steps // 2
        if any(e.region_from != e.region_to for e in events[:half]):
            return FilterVerdict(False, "region change in the first half")
        if not any(e.region_from != e.region_to for e in events[half:]):
            return FilterVerdict(False, "no region change after the first half")
        return FilterVerdict(True, "ok")

    raise ContractError(f"unknown skill {skill!r}")


# ---------------------------------------------------------------------------
# instruction generation
# ---------------------------------------------------------------------------

def _pick(tags: frozenset[str]) -> str | None:
    return sorted(tags)[0] if tags else None


def _turn_word(delta: float) -> str:
    return "right" if delta > 0 else "left"


def _step_phrase(event: StepEvent, skill: Skill, cfg: FilterConfig) -> str:
    landmark = _pick(event.landmarks_at) or _pick(event.landmarks_visible)
    if abs(event.elevation_delta_m) > cfg.elevation_threshold_m:
        verb = "climb" if event.elevation_delta_m > 0 else "head down"
        stairs = _pick(event.landmarks_visible & cfg.vertical_tags) or "stairs"
        return f"{verb} the {stairs} to the {event.region_to}"
    if event.heading_change_deg >= cfg.turn_min_deg:
        word = _turn_word(event.heading_delta_deg)
        if event.region_from != event.region_to:
            return f"turn {word} into the {event.region_to}"
        if skill is Skill.LANDMARK_DETECTION and landmark:
            return f"turn {word} at the {landmark}"
        return f"turn {word}"
    if event.region_from != event.region_to:
        return f"enter the {event.region_to}"
    if landmark and skill in (Skill.LANDMARK_DETECTION, Skill.STOP_AND_PAUSE):
        return f"pass the {landmark}"
    if landmark and skill is Skill.TEMPORAL_ORDER_PLANNING:
        return f"continue past the {landmark}"
    return "walk straight ahead"


def _terminal_phrase(sample: TrajectorySample, skill: Skill, cfg: FilterConfig) -> str:
    final = sample.events[-1]
    landmark = _pick(final.landmarks_at & cfg.pause_tags) or _pick(final.landmarks_at)
    if landmark:
        return f"stop in front of the {landmark}"
    return f"stop in the {final.region_to}"


def build_template_instruction(
    sample: TrajectorySample, skill: Skill, cfg: FilterConfig | None = None
) -> str:
    """Deterministic one-sentence instruction stitched from the step events."""
    cfg = cfg or FilterConfig()
    phrases = [_step_phrase(e, skill, cfg) for e in sample.events[:-1]]
    if skill is Skill.STOP_AND_PAUSE and len(phrases) >= 2:
        mid = len(phrases) // 2
        pause_at = _pick(sample.events[mid].landmarks_at)
        if pause_at:
            phrases[mid] = f"pause by the {pause_at}"
    phrases.append(_terminal_phrase(sample, skill, cfg))
    start_region = sample.events[0].region_from
    body = ", ".join(phrases[:-1])
    if body:
        text = f"From the {start_region}, {body}, and {phrases[-1]}."
    else:
        text = f"From the {start_region}, {phrases[-1]}."
    return text[0].upper() + text[1:]


def observation_script(sample: TrajectorySample) -> str:
    """Numbered per-step observation summaries standing in for trajectory images."""
    lines = []
    for i, event in enumerate(sample.events, start=1):
        tags = ", ".join(sorted(event.landmarks_visible)) or "nothing notable"
        turn = ""
        if event.heading_change_deg >= 1.0:
            turn = f"; turned {event.heading_change_deg:.0f} deg {_turn_word(event.heading_delta_deg)}"
        lift = ""
        if abs(event.elevation_delta_m) >= 0.5:
            direction = "up" if event.elevation_delta_m > 0 else "down"
            lift = f"; moved {abs(event.elevation_delta_m):.1f} m {direction}"
        lines.append(
            f"Frame {i}: from the {event.region_from} into the {event.region_to}"
            f"{turn}{lift}; visible: {tags}."
        )
    return "\n".join(lines)


_SENTENCE_END_RE = re.compile(r"[.!?]")


def _validate_external_instruction(text: str, skill: Skill) -> str | None:
    cleaned = text.strip()
    if not cleaned:
        return "empty response"
    if "\n\n" in cleaned:
        return "multi-paragraph response"
    if skill is not Skill.TEMPORAL_ORDER_PLANNING:
        terminators = _SENTENCE_END_RE.findall(cleaned)
        if len(terminators) > 1 or (terminators and not cleaned.endswith(tuple(".!?"))):
            return "more than one sentence"
        words = len(cleaned.split())
        if not (20 <= words <= 30):
            return f"length {words} words outside 20-30"
    return None


def generate_instruction(
    sample: TrajectorySample,
    skill: Skill,
    generator: str = TEMPLATE,
    *,
    client: ModelClient | None = None,
    cfg: FilterConfig | None = None,
) -> tuple[str, dict]:
    """Instruction text plus provenance for an accepted trajectory.

    External mode assembles the instruction-writing prompt over the observation
    sequence, validates the response (single sentence, 20-30 words for atomic
    skills), retries once, then falls back to the template grammar.
    """
    if generator == TEMPLATE:
        text = build_template_instruction(sample, skill, cfg)
        return text, {"generator": TEMPLATE, "grammar_version": GRAMMAR_VERSION}
    if generator != EXTERNAL:
        raise ContractError(f"unknown generator {generator!r}")
    if client is None:
        raise ContractError("external generation requires a model client")

    script = observation_script(sample)
    if skill is Skill.TEMPORAL_ORDER_PLANNING:
        prompt = temporal_instruction_prompt(script)
    else:
        prompt = atomic_instruction_prompt(script, skill.value)
    notes = []
    for attempt in range(2):
        try:
            text = client.complete(prompt).strip()
        except Exception as exc:
            notes.append(f"attempt {attempt + 1}: transport failure: {exc}")
            continue
        problem = _validate_external_instruction(text, skill)
        if problem is None:
            provenance = {
                "generator": EXTERNAL,
                "replayed": isinstance(client, ReplayClient),
            }
            if notes:
                provenance["notes"] = notes
            return text, provenance
        notes.append(f"attempt {attempt + 1}: {problem}")
    text = build_template_instruction(sample, skill, cfg)
    return text, {
        "generator": TEMPLATE,
        "grammar_version": GRAMMAR_VERSION,
        "fallback_from": EXTERNAL,
        "notes": notes,
    }


# ---------------------------------------------------------------------------
# dataset building and statistics
# ---------------------------------------------------------------------------

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def tokenize(text: str) -> list[str]:
    """Lowercase, strip punctuation, split on whitespace."""
    return text.lower().translate(_PUNCT_TABLE).split()


def dataset_stats(instructions: Iterable[str]) -> DatasetStats:
    vocab: set[str] = set()
    count = 0
    total_tokens = 0
    for text in instructions:
        tokens = tokenize(text)
        vocab.update(tokens)
        count += 1
        total_tokens += len(tokens)
    mean_len = (total_tokens / count) if count else 0.0
    return DatasetStats(instr_count=count, vocab_size=len(vocab), mean_instr_len=mean_len)


MAX_BUILD_ATTEMPTS = 1_000_000


def build_dataset(
    graph: NavGraph,
    skill: Skill,
    n: int,
    seed: int,
    generator: str = TEMPLATE,
    *,
    cfg: FilterConfig | None = None,
    client: ModelClient | None = None,
    length_range: tuple[int, int] = (MIN_WALK_STEPS, MAX_WALK_STEPS),
    length_weights: dict[int, float] | None = None,
) -> list[SynthDatasetEntry]:
    """Rejection-sample walks through the skill filter until n entries exist.

    Dataset bytes are fully determined by (graph, skill, n, seed, generator).
    Raises when the filter accepts less than 0.1% over the attempt budget.
    """
    if n < 1:
        raise ContractError("n must be >= 1")
    cfg = cfg or FilterConfig()
    rng = random.Random(seed)
    lengths, mass = _length_choices(length_range, length_weights)
    starts = sorted(k for k, vp in graph.nodes.items() if vp.region != ERROR_REGION)
    if not starts:
        raise GenerationError("graph has no usable start nodes")

    entries: list[SynthDatasetEntry] = []
    attempts = 0
    walk_failures = 0
    while len(entries) < n:
        attempts += 1
        if attempts > MAX_BUILD_ATTEMPTS or (
            attempts >= 100_000 and len(entries) < attempts * 0.001
        ):
            rate = len(entries) / attempts
            raise GenerationError(
                f"{skill.value} filter acceptance rate {rate:.5f} too low "
                f"after {attempts} attempts"
            )
        length = rng.choices(lengths, weights=mass)[0]
        walk = _try_walk(graph, rng, starts, length)
        if walk is None:
            walk_failures += 1
            if walk_failures > 10_000 and not entries:
                raise GenerationError(
                    f"graph cannot host self-avoiding walks of {length_range} steps"
                )
            continue
        walk_failures = 0
        sample = _build_sample(graph, walk, seed)
        verdict = passes_filter(sample, skill, cfg)
        if not verdict.accepted:
            continue
        text, provenance = generate_instruction(sample, skill, generator, client=client, cfg=cfg)
        provenance = {**provenance, "attempt": attempts}
        entries.append(
            SynthDatasetEntry(
                trajectory=sample,
                instruction=text,
                skill=skill,
                generator=provenance.get("generator", generator),
                provenance=provenance,
            )
        )
    return entries


def entry_to_dict(entry: SynthDatasetEntry) -> dict:
    return {
        "path": list(entry.trajectory.nodes),
        "instruction": entry.instruction,
        "skill": entry.skill.value,
        "generator": entry.generator,
        "seed": entry.trajectory.seed,
    }


def write_dataset(entries: Sequence[SynthDatasetEntry], sink: str | Path | IO[str]) -> None:
    """One JSON object per line: path, instruction, skill, generator, seed."""
    if isinstance(sink, (str, Path)):
        with open(sink, "w", encoding="utf-8") as fh:
            write_dataset(entries, fh)
        return
    for entry in entries:
        sink.write(json.dumps(entry_to_dict(entry), sort_keys=True, ensure_ascii=False) + "\n")


def read_dataset_instructions(source: str | Path) -> list[str]:
    out = []
    with open(source, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line)["instruction"])
    return out
