"""Labeled network graphs with deterministic minimum-latency routing.

A Platform is an immutable, connected, undirected graph whose links carry a
latency (milliseconds) and a bandwidth (MB/s). Routing is shortest path on
latency with deterministic tie-breaking, and is symmetric by construction:
the route from b to a is the reverse of the route from a to b.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from heapq import heappop, heappush
from pathlib import Path
from typing import Iterable, Iterator

HOST = "host"
ROUTER = "router"
NODE_KINDS = (HOST, ROUTER)


class NetworkError(ValueError):
    """Raised for invalid platforms, routes, or platform files."""


def edge_key(a: str, b: str) -> tuple[str, str]:
    """Canonical undirected edge identity (lexicographically ordered pair)."""
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class Node:
    id: str
    kind: str

    def __post_init__(self) -> None:
        if not self.id:
            raise NetworkError("empty node id")
        if self.kind not in NODE_KINDS:
            raise NetworkError(f"unknown node kind {self.kind!r} for node {self.id!r}")


@dataclass(frozen=True)
class LinkLabel:
    latency_ms: float
    bandwidth_mbps: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.latency_ms) and self.latency_ms > 0):
            raise NetworkError(f"non-positive latency: {self.latency_ms!r}")
        if not (math.isfinite(self.bandwidth_mbps) and self.bandwidth_mbps > 0):
            raise NetworkError(f"non-positive bandwidth: {self.bandwidth_mbps!r}")


@dataclass(frozen=True)
class Route:
    """A simple path, stored as the visited node sequence."""

    nodes: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.nodes) < 2:
            raise NetworkError("a route needs at least two nodes")
        if len(set(self.nodes)) != len(self.nodes):
            raise NetworkError(f"route revisits a node: {self.nodes}")

    @property
    def src(self) -> str:
        return self.nodes[0]

    @property
    def dst(self) -> str:
        return self.nodes[-1]

    @property
    def links(self) -> tuple[tuple[str, str], ...]:
        """Traversed links as canonical undirected edge keys, in path order."""
        return tuple(edge_key(a, b) for a, b in zip(self.nodes, self.nodes[1:]))

    def reversed(self) -> "Route":
        return Route(tuple(reversed(self.nodes)))


class Platform:
    """Immutable undirected labeled graph; must be connected, no self loops.

    Nodes are `host` (observable to measurements) or `router` (internal).
    """

    def __init__(self, name: str, nodes: Iterable[Node], links: Iterable[tuple[str, str, LinkLabel]]):
        self.name = name
        self._nodes: dict[str, Node] = {}
        for node in nodes:
            if node.id in self._nodes:
                raise NetworkError(f"duplicate node: {node.id!r}")
            self._nodes[node.id] = node
        self._adj: dict[str, dict[str, LinkLabel]] = {nid: {} for nid in self._nodes}
        self._links: dict[tuple[str, str], LinkLabel] = {}
        for a, b, label in links:
            if a == b:
                raise NetworkError(f"self-loop on node {a!r}")
            for end in (a, b):
                if end not in self._nodes:
                    raise NetworkError(f"link endpoint is not a node: {end!r}")
            key = edge_key(a, b)
            if key in self._links:
                raise NetworkError(f"duplicate link: {key}")
            self._links[key] = label
            self._adj[a][b] = label
            self._adj[b][a] = label
        if not self._nodes:
            raise NetworkError("platform has no nodes")
        self._check_connected()
        self._sssp_cache: dict[str, dict[str, tuple[float, int, tuple[str, ...]]]] = {}

    def _check_connected(self) -> None:
        start = next(iter(self._nodes))
        seen = {start}
        stack = [start]
        while stack:
            for nbr in self._adj[stack.pop()]:
                if nbr not in seen:
                    seen.add(nbr)
                    stack.append(nbr)
        if len(seen) != len(self._nodes):
            missing = sorted(set(self._nodes) - seen)
            raise NetworkError(f"platform is not connected; unreachable: {missing[:5]}")

    @property
    def node_ids(self) -> list[str]:
        return sorted(self._nodes)

    @property
    def nodes(self) -> list[Node]:
        return [self._nodes[nid] for nid in self.node_ids]

    @property
    def links(self) -> dict[tuple[str, str], LinkLabel]:
        return dict(self._links)

    def host_ids(self) -> list[str]:
        return sorted(nid for nid, n in self._nodes.items() if n.kind == HOST)

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes

    def node(self, node_id: str) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise NetworkError(f"node not found: {node_id!r}") from None

    def link(self, a: str, b: str) -> LinkLabel:
        try:
            return self._links[edge_key(a, b)]
        except KeyError:
            raise NetworkError(f"not a link of the platform: {edge_key(a, b)}") from None

    def neighbors(self, node_id: str) -> dict[str, LinkLabel]:
        self.node(node_id)
        return dict(self._adj[node_id])

    def _sssp(self, src: str) -> dict[str, tuple[float, int, tuple[str, ...]]]:
        """Best (latency, hops, node sequence) from src to every node.

        Ties on latency break by hop count, then by lexicographic node
        sequence, which makes the result deterministic.
        """
        cached = self._sssp_cache.get(src)
        if cached is not None:
            return cached
        best: dict[str, tuple[float, int, tuple[str, ...]]] = {src: (0.0, 0, (src,))}
        heap: list[tuple[float, int, tuple[str, ...]]] = [(0.0, 0, (src,))]
        while heap:
            lat, hops, path = heappop(heap)
            node = path[-1]
            if best[node] != (lat, hops, path):
                continue
            for nbr, label in self._adj[node].items():
                cand = (lat + label.latency_ms, hops + 1, path + (nbr,))
                cur = best.get(nbr)
                if cur is None or cand < cur:
                    best[nbr] = cand
                    heappush(heap, cand)
        self._sssp_cache[src] = best
        return best

    def __repr__(self) -> str:
        return f"Platform({self.name!r}, {len(self._nodes)} nodes, {len(self._links)} links)"


def route(platform: Platform, src: str, dst: str) -> Route:
    """Minimum-latency route between two nodes.

    Deterministic: latency ties break on hop count, then on the
    lexicographically smallest node sequence. Symmetric: the route is always
    derived from the lexicographically smaller endpoint, so route(b, a) is
    exactly the reverse of route(a, b).
    """
    for end in (src, dst):
        if not platform.has_node(end):
            raise NetworkError(f"node not found: {end!r}")
    if src == dst:
        raise NetworkError(f"no route from a node to itself: {src!r}")
    lo, hi = (src, dst) if src < dst else (dst, src)
    entry = platform._sssp(lo).get(hi)
    if entry is None:
        raise NetworkError(f"no route between {src!r} and {dst!r}")
    forward = Route(entry[2])
    return forward if src < dst else forward.reversed()


def path_latency(platform: Platform, r: Route) -> float:
    """Sum of link latencies along the route, in milliseconds."""
    return sum(platform.link(a, b).latency_ms for a, b in zip(r.nodes, r.nodes[1:]))


def path_bandwidth(platform: Platform, r: Route) -> float:
    """Bottleneck (minimum) link bandwidth along the route, in MB/s."""
    return min(platform.link(a, b).bandwidth_mbps for a, b in zip(r.nodes, r.nodes[1:]))


def routes_share_link(platform: Platform, r1: Route, r2: Route) -> bool:
    """Whether the two routes traverse at least one common physical link."""
    for r in (r1, r2):
        for a, b in zip(r.nodes, r.nodes[1:]):
            platform.link(a, b)
    return bool(set(r1.links) & set(r2.links))


# ---------------------------------------------------------------------------
# Platform file format: JSON document with exactly the fields
#   name: str
#   nodes: [{"id": str, "kind": "host"|"router"}, ...]
#   edges: [{"a": str, "b": str, "latency_ms": num, "bandwidth_mbps": num}, ...]
# Unknown fields are rejected.
# ---------------------------------------------------------------------------

_NODE_FIELDS = {"id", "kind"}
_EDGE_FIELDS = {"a", "b", "latency_ms", "bandwidth_mbps"}
_PLATFORM_FIELDS = {"name", "nodes", "edges"}


def platform_to_dict(platform: Platform) -> dict:
    return {
        "name": platform.name,
        "nodes": [{"id": n.id, "kind": n.kind} for n in platform.nodes],
        "edges": [
            {"a": a, "b": b, "latency_ms": label.latency_ms, "bandwidth_mbps": label.bandwidth_mbps}
            for (a, b), label in sorted(platform.links.items())
        ],
    }


def _check_fields(record: dict, allowed: set[str], what: str) -> None:
    if not isinstance(record, dict):
        raise NetworkError(f"{what} must be an object, got {type(record).__name__}")
    unknown = sorted(set(record) - allowed)
    if unknown:
        raise NetworkError(f"unknown field(s) {unknown} in {what}: {record!r}")
    missing = sorted(allowed - set(record))
    if missing:
        raise NetworkError(f"missing field(s) {missing} in {what}: {record!r}")


def _positive_number(value, what: str, record: dict) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise NetworkError(f"{what} must be a number in {record!r}")
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise NetworkError(f"non-positive {what} in {record!r}")
    return value


def platform_from_dict(data: dict) -> Platform:
    _check_fields(data, _PLATFORM_FIELDS, "platform document")
    if not isinstance(data["name"], str):
        raise NetworkError("platform name must be a string")
    nodes = []
    for rec in data["nodes"]:
        _check_fields(rec, _NODE_FIELDS, "node record")
        nodes.append(Node(id=rec["id"], kind=rec["kind"]))
    links = []
    for rec in data["edges"]:
        _check_fields(rec, _EDGE_FIELDS, "edge record")
        label = LinkLabel(
            latency_ms=_positive_number(rec["latency_ms"], "latency", rec),
            bandwidth_mbps=_positive_number(rec["bandwidth_mbps"], "bandwidth", rec),
        )
        links.append((rec["a"], rec["b"], label))
    return Platform(data["name"], nodes, links)


def save_platform(platform: Platform, path: str | Path) -> None:
    Path(path).write_text(json.dumps(platform_to_dict(platform), indent=2) + "\n")


def load_platform(path: str | Path) -> Platform:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise NetworkError(f"cannot parse platform file {path}: {exc}") from exc
    return platform_from_dict(data)


def all_pairs(items: Iterable[str]) -> Iterator[tuple[str, str]]:
    """Sorted unordered pairs of the given ids."""
    ordered = sorted(items)
    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            yield (a, b)
