"""Discrete navigation world: viewpoints, weighted connectivity, symbolic panoramas.

The environment is an undirected graph of viewpoints. Observations are symbolic:
each view at a node reports the bearing, elevation change, landmark tags and
region label of one navigable neighbor. Bearings live in the x-y plane with
0 deg = +y axis and clockwise positive.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from heapq import heappop, heappush
from pathlib import Path
from typing import IO, Iterable, Mapping

from .errors import ContractError, GraphParseError, GraphValidationError, UnknownNodeError

Position = tuple[float, float, float]

# Relative tolerance for checking stored edge lengths against node geometry.
LENGTH_RTOL = 1e-6


@dataclass(frozen=True)
class Viewpoint:
    """A navigable node: position in meters, a region label and landmark tags."""

    id: str
    position: Position
    region: str
    landmarks: frozenset[str] = frozenset()
    descriptor: tuple[float, ...] | None = None


@dataclass(frozen=True)
class View:
    """One directional view from a panorama; navigable views carry ``leads_to``."""

    heading_deg: float
    elevation_delta: float
    visible_landmarks: frozenset[str]
    visible_region: str
    leads_to: str | None


@dataclass(frozen=True)
class Panorama:
    """All views available at a node, sorted by heading, plus the node's own tags."""

    at: str
    views: tuple[View, ...]
    landmarks: frozenset[str]
    region: str

    def navigable(self) -> tuple[View, ...]:
        return tuple(v for v in self.views if v.leads_to is not None)

    def view_toward(self, neighbor: str) -> View | None:
        for v in self.views:
            if v.leads_to == neighbor:
                return v
        return None

    def summary(self) -> str:
        """Stable one-line text rendering used in prompts and history digests."""
        tags = ", ".join(sorted(self.landmarks)) or "nothing notable"
        return f"{self.at}: in the {self.region}; you can see {tags}"


def bearing_deg(a: Position, b: Position) -> float:
    """Planar bearing from a to b, degrees in [0, 360), 0 = +y, clockwise."""
    dx = b[0] - a[0]
    dy = b[1] - a[1]
    return math.degrees(math.atan2(dx, dy)) % 360.0


def signed_turn_deg(incoming_bearing: float, outgoing_bearing: float) -> float:
    """Signed turn between bearings in (-180, 180]; positive = clockwise (right)."""
    delta = (outgoing_bearing - incoming_bearing) % 360.0
    if delta > 180.0:
        delta -= 360.0
    return delta


class NavGraph:
    """Immutable undirected weighted graph of viewpoints.

    Construction validates every invariant and reports all violations at once.
    After construction the graph is never mutated, so reads are safe from any
    number of threads.
    """

    def __init__(
        self,
        nodes: Iterable[Viewpoint],
        edges: Iterable[tuple[str, str, float]],
        *,
        allow_custom_lengths: bool = False,
    ):
        self._nodes: dict[str, Viewpoint] = {}
        self._adj: dict[str, dict[str, float]] = {}
        self._pano_cache: dict[str, Panorama] = {}
        violations: list[str] = []

        for vp in nodes:
            if vp.id in self._nodes:
                violations.append(f"duplicate viewpoint id {vp.id!r}")
                continue
            if any(not tag for tag in vp.landmarks):
                violations.append(f"viewpoint {vp.id!r} has an empty landmark tag")
            self._nodes[vp.id] = vp
            self._adj[vp.id] = {}

        seen: set[tuple[str, str]] = set()
        for a, b, length in edges:
            key = (a, b) if a <= b else (b, a)
            if a == b:
                violations.append(f"self-loop edge at {a!r}")
                continue
            missing = [x for x in (a, b) if x not in self._nodes]
            if missing:
                violations.extend(f"edge ({a!r}, {b!r}) references unknown node {m!r}" for m in missing)
                continue
            if key in seen:
                violations.append(f"duplicate edge ({key[0]!r}, {key[1]!r})")
                continue
            seen.add(key)
            if not (length > 0.0):
                violations.append(f"edge ({a!r}, {b!r}) has non-positive length {length}")
                continue
            if not allow_custom_lengths:
                euclid = _distance(self._nodes[a].position, self._nodes[b].position)
                if not math.isclose(length, euclid, rel_tol=LENGTH_RTOL, abs_tol=0.0):
                    violations.append(
                        f"edge ({a!r}, {b!r}) length {length} != node distance {euclid:.9g}"
                    )
                    continue
            self._adj[a][b] = length
            self._adj[b][a] = length

        if violations:
            raise GraphValidationError(violations)

    # -- basic queries ------------------------------------------------------

    @property
    def nodes(self) -> Mapping[str, Viewpoint]:
        return self._nodes

    def node(self, node_id: str) -> Viewpoint:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownNodeError(node_id) from None

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def edge_count(self) -> int:
        return sum(len(nbrs) for nbrs in self._adj.values()) // 2

    def edges(self) -> list[tuple[str, str, float]]:
        out = []
        for a, nbrs in self._adj.items():
            for b, length in nbrs.items():
                if a < b:
                    out.append((a, b, length))
        return out

    def edge_length(self, a: str, b: str) -> float:
        self.node(a)
        self.node(b)
        try:
            return self._adj[a][b]
        except KeyError:
            raise ContractError(f"({a!r}, {b!r}) is not an edge") from None

    def has_edge(self, a: str, b: str) -> bool:
        return b in self._adj.get(a, ())

    def neighbors(self, node_id: str) -> set[str]:
        self.node(node_id)
        return set(self._adj[node_id])

    # -- geometry -----------------------------------------------------------

    def bearing(self, a: str, b: str) -> float:
        return bearing_deg(self.node(a).position, self.node(b).position)

    def geodesic(self, a: str, b: str) -> tuple[float, list[str]]:
        """Shortest-path distance and node sequence from a to b.

        Returns (0.0, [a]) when a == b and (inf, []) when b is unreachable.
        Ties between equal-length paths break toward lexicographically smaller
        node ids, so results are deterministic.
        """
        self.node(a)
        self.node(b)
        if a == b:
            return 0.0, [a]
        dist: dict[str, float] = {a: 0.0}
        prev: dict[str, str] = {}
        heap: list[tuple[float, str]] = [(0.0, a)]
        done: set[str] = set()
        while heap:
            d, u = heappop(heap)
            if u in done:
                continue
            done.add(u)
            if u == b:
                break
            for v, w in self._adj[u].items():
                nd = d + w
                if nd < dist.get(v, math.inf):
                    dist[v] = nd
                    prev[v] = u
                    heappush(heap, (nd, v))
        if b not in done:
            return math.inf, []
        path = [b]
        while path[-1] != a:
            path.append(prev[path[-1]])
        path.reverse()
        return dist[b], path

    def path_length(self, path: Iterable[str]) -> float:
        """Total length of a node walk; every consecutive pair must be an edge."""
        total = 0.0
        prev_node: str | None = None
        for node in path:
            if prev_node is not None:
                total += self.edge_length(prev_node, node)
            prev_node = node
        return total

    def observe(self, node_id: str) -> Panorama:
        """Symbolic panorama at a node: one view per navigable neighbor."""
        cached = self._pano_cache.get(node_id)
        if cached is not None:
            return cached
        vp = self.node(node_id)
        views = []
        for nbr_id in self._adj[node_id]:
            nbr = self._nodes[nbr_id]
            views.append(
                View(
                    heading_deg=bearing_deg(vp.position, nbr.position),
                    elevation_delta=nbr.position[2] - vp.position[2],
                    visible_landmarks=nbr.landmarks,
                    visible_region=nbr.region,
                    leads_to=nbr_id,
                )
            )
        views.sort(key=lambda v: (v.heading_deg, v.leads_to))
        pano = Panorama(at=node_id, views=tuple(views), landmarks=vp.landmarks, region=vp.region)
        self._pano_cache[node_id] = pano
        return pano

    def heading_change(self, prev: str, via: str, nxt: str) -> float:
        """Absolute planar turn angle in [0, 180] at ``via`` along prev->via->nxt."""
        if not self.has_edge(prev, via):
            raise ContractError(f"({prev!r}, {via!r}) is not an edge")
        if not self.has_edge(via, nxt):
            raise ContractError(f"({via!r}, {nxt!r}) is not an edge")
        return abs(signed_turn_deg(self.bearing(prev, via), self.bearing(via, nxt)))

    def signed_heading_change(self, prev: str, via: str, nxt: str) -> float:
        """Signed turn in (-180, 180] at ``via``; positive = right (clockwise)."""
        if not self.has_edge(prev, via):
            raise ContractError(f"({prev!r}, {via!r}) is not an edge")
        if not self.has_edge(via, nxt):
            raise ContractError(f"({via!r}, {nxt!r}) is not an edge")
        return signed_turn_deg(self.bearing(prev, via), self.bearing(via, nxt))

    # -- tag inventory (used by keyword grounding in agents) -----------------

    def landmark_inventory(self) -> frozenset[str]:
        tags: set[str] = set()
        for vp in self._nodes.values():
            tags.update(vp.landmarks)
        return frozenset(tags)

    def region_inventory(self) -> frozenset[str]:
        return frozenset(vp.region for vp in self._nodes.values())

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {
                    "id": vp.id,
                    "x": vp.position[0],
                    "y": vp.position[1],
                    "z": vp.position[2],
                    "region": vp.region,
                    "landmarks": sorted(vp.landmarks),
                    **({"descriptor": list(vp.descriptor)} if vp.descriptor is not None else {}),
                }
                for vp in self._nodes.values()
            ],
            "edges": [{"a": a, "b": b, "length": length} for a, b, length in self.edges()],
        }


def _distance(a: Position, b: Position) -> float:
    return math.dist(a, b)


def _parse_node(record: object, index: int) -> Viewpoint:
    if not isinstance(record, dict):
        raise GraphParseError(f"nodes[{index}]: expected an object, got {type(record).__name__}")
    ident = record.get("id")
    if not isinstance(ident, str) or not ident:
        raise GraphParseError(f"nodes[{index}]: missing or invalid field 'id'")
    coords = []
    for axis in ("x", "y", "z"):
        value = record.get(axis)
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise GraphParseError(f"nodes[{index}] ({ident!r}): missing or non-numeric field {axis!r}")
        coords.append(float(value))
    region = record.get("region")
    if not isinstance(region, str) or not region:
        raise GraphParseError(f"nodes[{index}] ({ident!r}): missing or invalid field 'region'")
    landmarks = record.get("landmarks", [])
    if not isinstance(landmarks, list) or any(not isinstance(t, str) for t in landmarks):
        raise GraphParseError(f"nodes[{index}] ({ident!r}): field 'landmarks' must be a string array")
    descriptor = record.get("descriptor")
    desc_tuple: tuple[float, ...] | None = None
    if descriptor is not None:
        if not isinstance(descriptor, list) or any(
            not isinstance(v, (int, float)) or isinstance(v, bool) for v in descriptor
        ):
            raise GraphParseError(f"nodes[{index}] ({ident!r}): field 'descriptor' must be a number array")
        desc_tuple = tuple(float(v) for v in descriptor)
    return Viewpoint(
        id=ident,
        position=(coords[0], coords[1], coords[2]),
        region=region,
        landmarks=frozenset(landmarks),
        descriptor=desc_tuple,
    )


def load_graph(
    source: str | Path | IO[bytes] | IO[str],
    *,
    allow_custom_lengths: bool = False,
) -> NavGraph:
    """Load a graph from a JSON file / stream.

    Expected shape: ``{"nodes": [{"id","x","y","z","region","landmarks"}...],
    "edges": [{"a","b","length"?}...]}``. Edge lengths are optional and default
    to the Euclidean distance between endpoints; stored lengths must agree with
    the geometry unless ``allow_custom_lengths`` is set.
    """
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            return load_graph(fh, allow_custom_lengths=allow_custom_lengths)
    raw = source.read()
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise GraphParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise GraphParseError("top-level value must be an object")
    node_records = doc.get("nodes")
    if not isinstance(node_records, list):
        raise GraphParseError("missing or invalid top-level field 'nodes'")
    edge_records = doc.get("edges")
    if not isinstance(edge_records, list):
        raise GraphParseError("missing or invalid top-level field 'edges'")

    nodes = [_parse_node(rec, i) for i, rec in enumerate(node_records)]
    by_id = {vp.id: vp for vp in nodes}

    edges: list[tuple[str, str, float]] = []
    for i, rec in enumerate(edge_records):
        if not isinstance(rec, dict):
            raise GraphParseError(f"edges[{i}]: expected an object, got {type(rec).__name__}")
        a = rec.get("a")
        b = rec.get("b")
        if not isinstance(a, str) or not isinstance(b, str):
            raise GraphParseError(f"edges[{i}]: fields 'a' and 'b' must be strings")
        length = rec.get("length")
        if length is None:
            if a in by_id and b in by_id:
                length = _distance(by_id[a].position, by_id[b].position)
            else:
                length = 1.0  # placeholder; endpoint validation reports the real problem
        elif not isinstance(length, (int, float)) or isinstance(length, bool):
            raise GraphParseError(f"edges[{i}] ({a!r}, {b!r}): field 'length' must be a number")
        edges.append((a, b, float(length)))

    return NavGraph(nodes, edges, allow_custom_lengths=allow_custom_lengths)


def loads_graph(text: str, *, allow_custom_lengths: bool = False) -> NavGraph:
    return load_graph(io.StringIO(text), allow_custom_lengths=allow_custom_lengths)
