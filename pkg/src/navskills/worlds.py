"""Procedural worlds: small fixtures, a labeled multi-floor house, episode suites.

Everything here is deterministic given its seed. The house generator produces a
world rich enough for every trajectory filter (region changes, a tall stair
edge, persistent landmarks, pause spots); the specialist suite builds episodes
where exactly one greedy specialist's heuristic identifies the correct hop at
every junction.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .episode import EpisodeSpec
from .graph import NavGraph, Viewpoint
from .taxonomy import ROUTED_SKILLS, Skill


def triangle(a: float = 3.0, b: float = 4.0) -> NavGraph:
    """Right triangle with legs a, b; hypotenuse connects A and C directly."""
    nodes = [
        Viewpoint("A", (0.0, 0.0, 0.0), "hallway"),
        Viewpoint("B", (a, 0.0, 0.0), "hallway"),
        Viewpoint("C", (a, b, 0.0), "kitchen"),
    ]
    edges = [
        ("A", "B", a),
        ("B", "C", b),
        ("A", "C", math.hypot(a, b)),
    ]
    return NavGraph(nodes, edges)


def corridor(n: int, spacing: float = 2.0, region: str = "hallway") -> NavGraph:
    """Path graph n0 - n1 - ... - n{n-1} along +y."""
    nodes = [Viewpoint(f"n{i}", (0.0, i * spacing, 0.0), region) for i in range(n)]
    edges = [(f"n{i}", f"n{i+1}", spacing) for i in range(n - 1)]
    return NavGraph(nodes, edges)


_REGION_PALETTE = ["hallway", "kitchen", "bedroom", "living room", "office", "bathroom"]
_LANDMARK_PALETTE = ["sofa", "lamp", "painting", "table", "plant", "mirror", "desk", "rug"]


def random_geometric(
    n: int,
    seed: int,
    *,
    radius: float = 3.5,
    extent: float = 10.0,
) -> NavGraph:
    """Connected random geometric graph with region labels and landmark tags."""
    rng = random.Random(seed)
    points = [(rng.uniform(0, extent), rng.uniform(0, extent), 0.0) for _ in range(n)]
    nodes = []
    for i, pos in enumerate(points):
        region = _REGION_PALETTE[rng.randrange(len(_REGION_PALETTE))]
        tags = frozenset(rng.sample(_LANDMARK_PALETTE, rng.randrange(0, 3)))
        nodes.append(Viewpoint(f"v{i}", pos, region, tags))
    edges: list[tuple[str, str, float]] = []
    present: set[tuple[str, str]] = set()

    def _add(i: int, j: int) -> None:
        a, b = f"v{i}", f"v{j}"
        key = (a, b) if a <= b else (b, a)
        if a != b and key not in present:
            present.add(key)
            edges.append((a, b, math.dist(points[i], points[j])))

    for i in range(n):
        for j in range(i + 1, n):
            if math.dist(points[i], points[j]) <= radius:
                _add(i, j)

    # stitch components together through nearest cross-component pairs
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x: int, y: int) -> None:
        parent[find(x)] = find(y)

    for a, b, _ in edges:
        union(int(a[1:]), int(b[1:]))
    while True:
        roots = {find(i) for i in range(n)}
        if len(roots) == 1:
            break
        base_root = find(0)
        best = None
        for i in range(n):
            if find(i) != base_root:
                continue
            for j in range(n):
                if find(j) == base_root:
                    continue
                d = math.dist(points[i], points[j])
                if best is None or d < best[0]:
                    best = (d, i, j)
        assert best is not None
        _, i, j = best
        _add(i, j)
        union(i, j)
    return NavGraph(nodes, edges)


# ---------------------------------------------------------------------------
# two-story house for synthesis and demos
# ---------------------------------------------------------------------------

_HOUSE_ROOMS = [
    # (name prefix, region, node offsets, landmark sets per node)
    ("k", "kitchen", [(0.0, 3.0), (2.0, 3.0), (4.0, 3.0)],
     [{"counter", "sink"}, {"counter", "sink"}, {"fridge"}]),
    ("l", "living room", [(0.0, -3.0), (2.0, -3.0), (4.0, -3.0), (6.0, -3.0)],
     [{"sofa", "lamp"}, {"sofa", "lamp"}, {"television", "painting"}, {"television", "painting"}]),
    ("d", "dining room", [(6.0, 3.0), (8.0, 3.0)],
     [{"table", "chair"}, {"table", "chair"}]),
    ("o", "office", [(10.0, 3.0), (10.0, 5.0)],
     [{"desk", "bookshelf"}, {"desk", "bookshelf"}]),
]

_UPPER_ROOMS = [
    ("b", "bedroom", [(0.0, 3.0), (2.0, 3.0), (4.0, 3.0)],
     [{"bed", "dresser"}, {"bed", "dresser"}, {"mirror"}]),
    ("ba", "bathroom", [(2.0, -3.0), (4.0, -3.0)],
     [{"mirror", "sink"}, {"mirror", "sink"}]),
]


def demo_house(seed: int = 0, *, with_error_region: bool = False) -> NavGraph:
    """Two floors of labeled rooms joined by hallways and one tall staircase.

    The staircase edge changes z by 3 m, hallway nodes share a persistent rug
    tag, several adjacent node pairs carry identical landmark sets, and a few
    nodes carry pause-context tags, so every skill filter has acceptable mass.
    """
    rng = random.Random(seed)
    nodes: list[Viewpoint] = []
    edges: list[tuple[str, str, float]] = []

    def jitter() -> float:
        return rng.uniform(-0.25, 0.25)

    def add_node(name: str, x: float, y: float, z: float, region: str, tags: set[str]) -> None:
        nodes.append(Viewpoint(name, (x + jitter(), y + jitter(), z), region, frozenset(tags)))

    def connect(a: str, b: str) -> None:
        pos = {vp.id: vp.position for vp in nodes}
        edges.append((a, b, math.dist(pos[a], pos[b])))

    # ground-floor hallway spine with a persistent rug
    spine_tags = [{"rug", "painting"}, {"rug", "painting"}, {"rug"}, {"rug", "plant"},
                  {"rug", "plant"}, {"rug", "sign"}]
    for i in range(6):
        add_node(f"h{i}", 2.0 * i, 0.0, 0.0, "hallway", spine_tags[i])
    for i in range(5):
        connect(f"h{i}", f"h{i+1}")

    for prefix, region, offsets, tag_sets in _HOUSE_ROOMS:
        names = []
        for j, ((dx, dy), tags) in enumerate(zip(offsets, tag_sets)):
            name = f"{prefix}{j}"
            add_node(name, dx, dy, 0.0, region, set(tags))
            names.append(name)
        for a, b in zip(names, names[1:]):
            connect(a, b)
        # door to the nearest spine node
        door_spine = f"h{min(5, max(0, round(offsets[0][0] / 2.0)))}"
        connect(names[0], door_spine)
        if len(names) > 2:
            other_spine = f"h{min(5, max(0, round(offsets[-1][0] / 2.0)))}"
            if other_spine != door_spine:
                connect(names[-1], other_spine)

    # staircase: two landings 3 m apart vertically
    add_node("s0", 12.0, 0.0, 0.0, "stairwell", {"stairs"})
    add_node("s1", 12.0, 2.0, 3.0, "stairwell", {"stairs"})
    connect("h5", "s0")
    connect("s0", "s1")

    # upper corridor
    corridor_tags = [{"picture"}, {"picture"}, {"bench"}, {"bench"}]
    for i in range(4):
        add_node(f"u{i}", 10.0 - 2.0 * i, 2.0, 3.0, "corridor", corridor_tags[i])
    connect("s1", "u0")
    for i in range(3):
        connect(f"u{i}", f"u{i+1}")

    for prefix, region, offsets, tag_sets in _UPPER_ROOMS:
        names = []
        for j, ((dx, dy), tags) in enumerate(zip(offsets, tag_sets)):
            name = f"{prefix}{j}"
            add_node(name, dx, dy, 3.0, region, set(tags))
            names.append(name)
        for a, b in zip(names, names[1:]):
            connect(a, b)
        connect(names[0], "u3")
        if len(names) > 2:
            connect(names[-1], "u2")

    if with_error_region:
        add_node("err0", -2.0, 0.0, 0.0, "Error", set())
        connect("err0", "h0")

    return NavGraph(nodes, edges)


# ---------------------------------------------------------------------------
# specialist episode suite
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpecialistCase:
    """One constructed episode plus the skill whose specialist solves it."""

    graph: NavGraph
    spec: EpisodeSpec
    skill: Skill


_HOP = 4.0
_JUNCTIONS = 3

_LANDMARK_SEQUENCE = ["sofa", "lamp", "painting"]
_REGION_SEQUENCE = ["kitchen", "dining room", "living room"]


def _offset(pos: tuple[float, float, float], heading_deg: float, dist: float,
            dz: float = 0.0) -> tuple[float, float, float]:
    rad = math.radians(heading_deg)
    return (pos[0] + dist * math.sin(rad), pos[1] + dist * math.cos(rad), pos[2] + dz)


def _case_script(skill: Skill, turns: list[float], going_down: bool) -> list[dict]:
    """Per-decision script: subgoal plus the correct child's attributes (or stop)."""
    script = []
    for k in range(_JUNCTIONS):
        word = "left" if turns[k] < 0 else "right"
        if skill is Skill.DIRECTION_ADJUSTMENT:
            step = {"subgoal": f"Turn {word}.", "region": "hallway", "tags": set(), "dz": 0.0}
        elif skill is Skill.VERTICAL_MOVEMENT:
            step = {
                "subgoal": "Walk down the stairs." if going_down else "Climb up the stairs.",
                "region": "hallway", "tags": {"stairs"}, "dz": -3.0 if going_down else 3.0,
            }
        elif skill is Skill.LANDMARK_DETECTION:
            tag = _LANDMARK_SEQUENCE[k]
            step = {"subgoal": f"Walk to the {tag}.", "region": "hallway", "tags": {tag}, "dz": 0.0}
        elif skill is Skill.AREA_REGION_IDENTIFICATION:
            region = _REGION_SEQUENCE[k]
            step = {"subgoal": f"Enter the {region}.", "region": region, "tags": set(), "dz": 0.0}
        else:  # Stop and Pause: two landmark approaches, then a grounded stop
            if k == 0:
                step = {"subgoal": "Walk to the sofa.", "region": "hallway",
                        "tags": {"sofa"}, "dz": 0.0}
            elif k == 1:
                step = {"subgoal": "Walk to the lamp.", "region": "lobby",
                        "tags": {"lamp", "glass doors"}, "dz": 0.0}
            else:
                step = {"subgoal": "Stop at the glass doors.", "stop": True}
        script.append(step)
    return script


def _build_case(skill: Skill, index: int, seed: int) -> SpecialistCase:
    rng = random.Random(f"{seed}:{skill.value}:{index}")
    turns = [rng.choice((-90.0, 90.0)) for _ in range(_JUNCTIONS)]
    going_down = rng.random() < 0.5
    script = _case_script(skill, turns, going_down)

    nodes: list[Viewpoint] = []
    edges: list[tuple[str, str, float]] = []
    positions: dict[str, tuple[float, float, float]] = {}

    def add(name: str, pos: tuple[float, float, float], region: str, tags: set[str]) -> None:
        positions[name] = pos
        nodes.append(Viewpoint(name, pos, region, frozenset(tags)))

    def link(a: str, b: str) -> None:
        edges.append((a, b, math.dist(positions[a], positions[b])))

    heading = 0.0  # first decision treats +y as straight ahead
    pos = (0.0, 0.0, 0.0)
    add("n0", pos, "hallway", set())

    subgoals: list[str] = []
    chain = ["n0"]
    for k, step in enumerate(script):
        here = chain[-1]
        subgoals.append(step["subgoal"])
        # decoys at every decision node: straight ahead with a slight rise,
        # and the opposite side; regions/tags never mentioned by any subgoal
        d_straight = f"{here}_ds"
        add(d_straight, _offset(pos, heading, _HOP, dz=0.8), "bathroom", {"mirror"})
        link(here, d_straight)
        d_side = f"{here}_dx"
        add(d_side, _offset(pos, heading - turns[k], _HOP), "garage", {"desk"})
        link(here, d_side)

        if step.get("stop"):
            continue  # the subgoal halts at the current node; no new hop
        heading = (heading + turns[k]) % 360.0
        pos = _offset(pos, heading, _HOP, dz=step["dz"])
        nxt = f"n{len(chain)}"
        add(nxt, pos, step["region"], step["tags"])
        link(here, nxt)
        chain.append(nxt)

    graph = NavGraph(nodes, edges)
    spec = EpisodeSpec(
        graph=graph,
        start="n0",
        goal=chain[-1],
        instruction=" ".join(subgoals),
        max_steps=_JUNCTIONS + 3,
        action_space_mode="local",
        seed=index,
    )
    return SpecialistCase(graph=graph, spec=spec, skill=skill)


def specialist_suite(seed: int = 0, per_skill: int = 8) -> list[SpecialistCase]:
    """Episodes solvable by their matching greedy specialist and, at each
    junction, misleading for at least two mismatched specialists."""
    cases = []
    for skill in ROUTED_SKILLS:
        for i in range(per_skill):
            cases.append(_build_case(skill, i, seed))
    return cases
