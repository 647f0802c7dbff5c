"""Network model builders driven by end-to-end measurements.

A Model is a labeled graph over the measured hosts plus an explicit route
table; predictions read the stored routes (latency sums along the route,
bottleneck bandwidth along the route). Builders:

 * clique: complete graph, every pair routed directly.
 * latency tree / bandwidth tree: minimum-latency / maximum-bandwidth
   spanning tree over the measured pairs, routed along tree paths.
 * improving: repeatedly inserts the direct edge of the worst-connected
   over-predicted pair and reroutes other over-predicted pairs through it.
 * aggregate: grows a connected host set from the closest pair, greedily
   adding edges that make many routes accurate, with a final repair pass.

Inserted edges are always labeled with the measured end-to-end values of
their endpoints, which makes a pair's direct route exactly accurate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from netrecon.measurement import MeasurementSet
from netrecon.network import (
    HOST,
    LinkLabel,
    Node,
    Platform,
    Route,
    edge_key,
    platform_from_dict,
    platform_to_dict,
    route,
)

DEFAULT_THRESHOLD = 1.10
DEFAULT_SLACK = 1.5

LATENCY = "latency"
BANDWIDTH = "bandwidth"

# Slop applied to ratio comparisons so float noise cannot flip a pair that
# sits exactly on the threshold.
_REL_EPS = 1e-12


class ReconstructionError(ValueError):
    """Raised for invalid models or unroutable predictions."""


@dataclass
class Model:
    """Reconstructed platform plus the route table built alongside it."""

    graph: Platform
    routes: dict[tuple[str, str], tuple[str, ...]]
    builder: str
    hosts: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.hosts:
            self.hosts = tuple(self.graph.node_ids)

    def route_nodes(self, a: str, b: str) -> tuple[str, ...]:
        """Stored route oriented a -> b (reversing the canonical direction)."""
        key = edge_key(a, b)
        nodes = self.routes.get(key)
        if nodes is None:
            raise ReconstructionError(f"pair not routed in model: {key}")
        return nodes if a <= b else tuple(reversed(nodes))

    def route(self, a: str, b: str) -> Route:
        return Route(self.route_nodes(a, b))

    def pairs(self) -> list[tuple[str, str]]:
        return [(a, b) for i, a in enumerate(self.hosts) for b in self.hosts[i + 1:]]

    def validate(self) -> None:
        expected = set(self.pairs())
        stored = set(self.routes)
        if stored != expected:
            raise ReconstructionError(
                f"route table does not cover the host pairs exactly "
                f"(missing {sorted(expected - stored)[:3]}, extra {sorted(stored - expected)[:3]})"
            )
        for (a, b), nodes in self.routes.items():
            if nodes[0] != a or nodes[-1] != b:
                raise ReconstructionError(f"route for {(a, b)} has endpoints {nodes[0], nodes[-1]}")
            if len(set(nodes)) != len(nodes):
                raise ReconstructionError(f"route for {(a, b)} is not simple: {nodes}")
            for u, v in zip(nodes, nodes[1:]):
                self.graph.link(u, v)


def predict(model: Model, kind: str, a: str, b: str) -> float:
    """Predicted end-to-end latency (ms) or bandwidth (MB/s) of a host pair."""
    nodes = model.route_nodes(a, b)
    steps = list(zip(nodes, nodes[1:]))
    if kind == LATENCY:
        return sum(model.graph.link(u, v).latency_ms for u, v in steps)
    if kind == BANDWIDTH:
        return min(model.graph.link(u, v).bandwidth_mbps for u, v in steps)
    raise ReconstructionError(f"unknown prediction kind {kind!r}")


def model_routes(model: Model):
    """Route provider over the model's stored table, for the simulator."""

    def lookup(src: str, dst: str) -> Route:
        return model.route(src, dst)

    return lookup


# ---------------------------------------------------------------------------
# Shared working-state helpers. Builders accumulate edges/routes in plain
# dicts and assemble the immutable Platform at the end. Route values are
# stored against the canonical (sorted) pair, oriented low -> high.
# ---------------------------------------------------------------------------

def _store(routes: dict, pair: tuple[str, str], nodes: tuple[str, ...]) -> None:
    routes[pair] = nodes if nodes[0] == pair[0] else tuple(reversed(nodes))


def _oriented(routes: dict, a: str, b: str) -> tuple[str, ...]:
    if a == b:
        return (a,)
    nodes = routes[edge_key(a, b)]
    return nodes if a <= b else tuple(reversed(nodes))


def _route_lat(edges: dict, nodes: tuple[str, ...]) -> float:
    return sum(edges[edge_key(u, v)][0] for u, v in zip(nodes, nodes[1:]))


def _ratio_ok(pred: float, meas: float, threshold: float) -> bool:
    return max(pred / meas, meas / pred) <= threshold * (1 + _REL_EPS)


def _over(pred: float, meas: float, threshold: float) -> bool:
    return pred > meas * threshold * (1 + _REL_EPS)


def _assemble(ms: MeasurementSet, edges: dict, routes: dict, builder: str) -> Model:
    nodes = [Node(h, HOST) for h in ms.hosts]
    links = [(a, b, LinkLabel(lat, bw)) for (a, b), (lat, bw) in sorted(edges.items())]
    source = ms.source_platform_name or "measurements"
    graph = Platform(f"{source}:{builder}", nodes, links)
    model = Model(graph, routes, builder, tuple(ms.hosts))
    model.validate()
    return model


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def build_clique(ms: MeasurementSet) -> Model:
    """Complete graph labeled with the measured values; pairs routed directly."""
    edges = {}
    routes: dict[tuple[str, str], tuple[str, ...]] = {}
    for pair in ms.pairs():
        edges[pair] = (ms.lat_between(*pair), ms.bw_between(*pair))
        routes[pair] = pair
    return _assemble(ms, edges, routes, "clique")


def _kruskal(ms: MeasurementSet, maximize_bandwidth: bool) -> dict:
    if maximize_bandwidth:
        order = sorted(ms.pairs(), key=lambda p: (-ms.bw_between(*p), p))
    else:
        order = sorted(ms.pairs(), key=lambda p: (ms.lat_between(*p), p))
    parent = {h: h for h in ms.hosts}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = {}
    for a, b in order:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            edges[(a, b)] = (ms.lat_between(a, b), ms.bw_between(a, b))
            if len(edges) == len(ms.hosts) - 1:
                break
    return edges


def _tree_routes(hosts: Sequence[str], edges: dict) -> dict:
    adjacency: dict[str, list[str]] = {h: [] for h in hosts}
    for a, b in edges:
        adjacency[a].append(b)
        adjacency[b].append(a)
    routes: dict[tuple[str, str], tuple[str, ...]] = {}
    for root in hosts:
        paths = {root: (root,)}
        stack = [root]
        while stack:
            node = stack.pop()
            for nbr in adjacency[node]:
                if nbr not in paths:
                    paths[nbr] = paths[node] + (nbr,)
                    stack.append(nbr)
        for dst, nodes in paths.items():
            if root < dst:
                routes[(root, dst)] = nodes
    return routes


def build_tree_lat(ms: MeasurementSet) -> Model:
    """Minimum spanning tree on measured latencies, routed along tree paths."""
    edges = _kruskal(ms, maximize_bandwidth=False)
    return _assemble(ms, edges, _tree_routes(ms.hosts, edges), "treelat")


def build_tree_bw(ms: MeasurementSet) -> Model:
    """Maximum spanning tree on measured bandwidths, routed along tree paths."""
    edges = _kruskal(ms, maximize_bandwidth=True)
    return _assemble(ms, edges, _tree_routes(ms.hosts, edges), "treebw")


def improve(model: Model, ms: MeasurementSet, threshold: float = DEFAULT_THRESHOLD) -> Model:
    """Insert direct edges until no pair's latency is over-predicted.

    Each round picks the over-predicted pair with the smallest measured
    latency, connects it directly, and then offers every other still
    over-predicted pair a reroute through the new edge; a reroute is
    installed only when it is a simple path strictly closer to the measured
    latency than the current prediction. Under-predictions are left alone.
    """
    if threshold < 1:
        raise ReconstructionError(f"threshold must be >= 1, got {threshold}")
    model.validate()
    pairs = ms.pairs()
    if set(pairs) - set(model.routes):
        raise ReconstructionError("model does not route all measured pairs")
    edges = {key: (lbl.latency_ms, lbl.bandwidth_mbps) for key, lbl in model.graph.links.items()}
    routes = dict(model.routes)
    meas = {pair: ms.lat_between(*pair) for pair in pairs}

    def over(pair: tuple[str, str]) -> bool:
        return _over(_route_lat(edges, routes[pair]), meas[pair], threshold)

    for _ in range(len(pairs) + 1):
        overs = [pair for pair in pairs if over(pair)]
        if not overs:
            break
        i, j = min(overs, key=lambda p: (meas[p], p))
        edges[(i, j)] = (ms.lat_between(i, j), ms.bw_between(i, j))
        routes[(i, j)] = (i, j)
        for pair in overs:
            if pair == (i, j) or not over(pair):
                continue
            a, b = pair
            candidates = []
            for x, y in ((i, j), (j, i)):
                nodes = _oriented(routes, a, x) + _oriented(routes, y, b)
                if len(set(nodes)) != len(nodes):
                    continue
                lat = _route_lat(edges, nodes)
                candidates.append((abs(lat - meas[pair]), nodes))
            if not candidates:
                continue
            distance, nodes = min(candidates)
            if distance < abs(_route_lat(edges, routes[pair]) - meas[pair]):
                _store(routes, pair, nodes)
    else:
        raise ReconstructionError("improving did not converge")  # unreachable by construction
    return _assemble(ms, edges, routes, "imp" + model.builder)


def build_aggregate(
    ms: MeasurementSet,
    threshold: float = DEFAULT_THRESHOLD,
    slack: float = DEFAULT_SLACK,
) -> Model:
    """Grow a connected set from the closest pair, adding edges greedily.

    Each new node attaches through edges chosen to make the most of its
    routes accurate, subject to the rule that a further edge may not be more
    than `slack` times the latency of the node's first edge. Routes that stay
    inaccurate are parked on a repair list; every edge addition re-scans that
    list, and whatever remains after all nodes join is fixed with direct
    edges, cheapest measured latency first.
    """
    if threshold < 1:
        raise ReconstructionError(f"threshold must be >= 1, got {threshold}")
    if slack < 1:
        raise ReconstructionError(f"slack must be >= 1, got {slack}")
    hosts = list(ms.hosts)
    pairs = ms.pairs()
    meas = {pair: ms.lat_between(*pair) for pair in pairs}
    edges: dict[tuple[str, str], tuple[float, float]] = {}
    routes: dict[tuple[str, str], tuple[str, ...]] = {}
    inaccurate: set[tuple[str, str]] = set()

    def add_edge(pair: tuple[str, str]) -> None:
        edges[pair] = (ms.lat_between(*pair), ms.bw_between(*pair))

    def rescan(g: str, h: str) -> None:
        # A new edge may define an accurate route for a parked pair.
        for pair in sorted(inaccurate):
            a, b = pair
            best = None
            for x, y in ((g, h), (h, g)):
                if (a != x and edge_key(a, x) not in routes) or (y != b and edge_key(y, b) not in routes):
                    continue
                nodes = _oriented(routes, a, x) + _oriented(routes, y, b)
                if len(set(nodes)) != len(nodes):
                    continue
                lat = _route_lat(edges, nodes)
                if _ratio_ok(lat, meas[pair], threshold):
                    candidate = (abs(lat - meas[pair]), nodes)
                    best = candidate if best is None else min(best, candidate)
            if best is not None:
                _store(routes, pair, best[1])
                inaccurate.discard(pair)

    seed_pair = min(pairs, key=lambda p: (meas[p], p))
    add_edge(seed_pair)
    routes[seed_pair] = seed_pair
    connected = set(seed_pair)

    while len(connected) < len(hosts):
        s = min(
            (h for h in hosts if h not in connected),
            key=lambda h: (min(meas[edge_key(h, c)] for c in connected), h),
        )
        pending = set(connected)  # members whose pair with s is not yet accurate
        first_edge_lat: float | None = None
        while pending:
            candidates = []
            for c in sorted(connected):
                k_sc = edge_key(s, c)
                if k_sc in edges:
                    continue
                lat_sc = meas[k_sc]
                if first_edge_lat is not None and lat_sc > slack * first_edge_lat * (1 + _REL_EPS):
                    continue
                newly = []
                for d in sorted(pending):
                    cand_lat = lat_sc if d == c else lat_sc + _route_lat(edges, routes[edge_key(c, d)])
                    if _ratio_ok(cand_lat, meas[edge_key(s, d)], threshold):
                        newly.append(d)
                if newly:
                    candidates.append((-len(newly), lat_sc, c, newly))
            if not candidates:
                break
            _, lat_sc, c, newly = min(candidates)
            add_edge(edge_key(s, c))
            if first_edge_lat is None:
                first_edge_lat = lat_sc
            for d in newly:
                _store(routes, edge_key(s, d), (s,) + _oriented(routes, c, d))
                pending.discard(d)
            rescan(s, c)
        attached = [c for c in sorted(connected) if edge_key(s, c) in edges]
        for d in sorted(pending):
            best = min(
                (
                    (abs(meas[edge_key(s, c)] + _route_lat(edges, routes[edge_key(c, d)]) - meas[edge_key(s, d)]), c)
                    for c in attached
                    if c != d
                ),
            )
            c = best[1]
            _store(routes, edge_key(s, d), (s,) + _oriented(routes, c, d))
            inaccurate.add(edge_key(s, d))
        connected.add(s)

    while inaccurate:
        pair = min(inaccurate, key=lambda p: (meas[p], p))
        add_edge(pair)
        routes[pair] = pair
        inaccurate.discard(pair)
        rescan(*pair)

    return _assemble(ms, edges, routes, "aggregate")


def exact_copy(platform: Platform, hosts: Sequence[str] | None = None) -> Model:
    """The platform itself as a model, with its own routing; evaluation oracle."""
    observed = sorted(hosts) if hosts is not None else platform.host_ids() or platform.node_ids
    routes: dict[tuple[str, str], tuple[str, ...]] = {}
    for i, a in enumerate(observed):
        for b in observed[i + 1:]:
            routes[(a, b)] = route(platform, a, b).nodes
    return Model(platform, routes, "copy", tuple(observed))


# ---------------------------------------------------------------------------
# Model files: the platform format plus a routes section.
# ---------------------------------------------------------------------------

def model_to_dict(model: Model) -> dict:
    doc = platform_to_dict(model.graph)
    doc["builder"] = model.builder
    doc["hosts"] = list(model.hosts)
    doc["routes"] = [
        {"a": a, "b": b, "path": list(nodes)} for (a, b), nodes in sorted(model.routes.items())
    ]
    return doc


def model_from_dict(data: dict) -> Model:
    extra = {"builder", "hosts", "routes"}
    missing = sorted(extra - set(data))
    if missing:
        raise ReconstructionError(f"missing field(s) {missing} in model file")
    graph = platform_from_dict({k: v for k, v in data.items() if k not in extra})
    routes = {}
    for rec in data["routes"]:
        nodes = tuple(rec["path"])
        routes[(rec["a"], rec["b"])] = nodes
    model = Model(graph, routes, data["builder"], tuple(data["hosts"]))
    model.validate()
    return model


def save_model(model: Model, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n")


def load_model(path: str | Path) -> Model:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ReconstructionError(f"cannot parse model file {path}: {exc}") from exc
    return model_from_dict(data)
