from __future__ import annotations

import random

import pytest

from conftest import make_platform, random_connected_platform
from oracles import exhaustive_min_latency

from netrecon.network import (
    LinkLabel,
    NetworkError,
    Node,
    Platform,
    Route,
    load_platform,
    path_bandwidth,
    path_latency,
    platform_from_dict,
    platform_to_dict,
    route,
    routes_share_link,
    save_platform,
)


def test_route_chain_only_path(chain):
    r = route(chain, "A", "C")
    assert r.nodes == ("A", "B", "C")
    assert r.links == (("A", "B"), ("B", "C"))


def test_route_prefers_lower_latency():
    p = make_platform("tri", "ABC", [], [
        ("A", "B", 5.0, 10.0), ("B", "C", 5.0, 10.0), ("A", "C", 20.0, 10.0),
    ])
    assert route(p, "A", "C").nodes == ("A", "B", "C")  # 10 < 20


def test_route_tie_breaks_lexicographically(square):
    # both two-hop routes cost 2; the lexicographically smaller sequence wins
    assert route(square, "A", "C").nodes == ("A", "B", "C")
    assert route(square, "B", "D").nodes == ("B", "A", "D")


def test_route_symmetry_is_exact_reversal(square):
    for a in "ABCD":
        for b in "ABCD":
            if a == b:
                continue
            fwd = route(square, a, b).nodes
            rev = route(square, b, a).nodes
            assert fwd == tuple(reversed(rev))


def test_route_errors(chain):
    with pytest.raises(NetworkError, match="node not found"):
        route(chain, "A", "Z")
    with pytest.raises(NetworkError, match="itself"):
        route(chain, "A", "A")


def test_path_latency_and_bandwidth(chain):
    r = route(chain, "A", "C")
    assert path_latency(chain, r) == 3.0
    assert path_bandwidth(chain, r) == 10.0


def test_path_latency_single_small_link():
    p = make_platform("tiny", "AB", [], [("A", "B", 0.1, 80.0)])
    assert path_latency(p, route(p, "A", "B")) == pytest.approx(0.1)


def test_bandwidth_bottleneck_variants():
    p = make_platform("u", "ABCD", [], [
        ("A", "B", 1.0, 50.0), ("B", "C", 1.0, 50.0), ("C", "D", 1.0, 50.0),
    ])
    assert path_bandwidth(p, route(p, "A", "D")) == 50.0


def test_routes_share_link_star(star):
    ab = route(star, "A", "B")
    cd = route(star, "C", "D")
    ac = route(star, "A", "C")
    assert not routes_share_link(star, ab, cd)
    assert routes_share_link(star, ab, ac)  # both cross A-X


def test_routes_share_link_dumbbell(dumbbell):
    r1 = route(dumbbell, "a1", "b1")
    r2 = route(dumbbell, "a2", "b2")
    assert routes_share_link(dumbbell, r1, r2)  # middle link


def test_route_determinism(square):
    first = route(square, "A", "C")
    assert all(route(square, "A", "C") == first for _ in range(5))


def test_routing_triangle_consistency():
    rng = random.Random(7)
    for _ in range(20):
        p = random_connected_platform(rng, rng.randint(4, 7))
        ids = p.node_ids
        for a in ids:
            for c in ids:
                if a == c:
                    continue
                lat_ac = path_latency(p, route(p, a, c))
                for b in ids:
                    if b in (a, c):
                        continue
                    detour = path_latency(p, route(p, a, b)) + path_latency(p, route(p, b, c))
                    assert lat_ac <= detour + 1e-9


def test_route_matches_exhaustive_enumeration():
    rng = random.Random(11)
    for _ in range(150):
        n = rng.randint(2, 7)
        p = random_connected_platform(rng, n, extra_edges=rng.randint(0, 4))
        adjacency = {
            v: {u: p.link(v, u).latency_ms for u in p.neighbors(v)} for v in p.node_ids
        }
        ids = p.node_ids
        a, b = rng.sample(ids, 2)
        assert path_latency(p, route(p, a, b)) == pytest.approx(
            exhaustive_min_latency(adjacency, a, b), rel=1e-12
        )


def test_platform_invariants_rejected():
    with pytest.raises(NetworkError, match="duplicate node"):
        Platform("x", [Node("a", "host"), Node("a", "host")], [])
    with pytest.raises(NetworkError, match="self-loop"):
        Platform("x", [Node("a", "host")], [("a", "a", LinkLabel(1, 1))])
    with pytest.raises(NetworkError, match="not connected"):
        Platform("x", [Node("a", "host"), Node("b", "host")], [])
    with pytest.raises(NetworkError, match="non-positive latency"):
        LinkLabel(0.0, 10.0)
    with pytest.raises(NetworkError, match="non-positive bandwidth"):
        LinkLabel(1.0, -1.0)


def test_route_value_is_simple():
    with pytest.raises(NetworkError, match="revisits"):
        Route(("a", "b", "a"))


def test_platform_file_round_trip(tmp_path, dumbbell):
    path = tmp_path / "p.json"
    save_platform(dumbbell, path)
    loaded = load_platform(path)
    assert platform_to_dict(loaded) == platform_to_dict(dumbbell)


def test_platform_file_rejects_unknown_fields(tmp_path, chain):
    doc = platform_to_dict(chain)
    doc["nodes"][0]["color"] = "red"
    with pytest.raises(NetworkError, match="unknown field"):
        platform_from_dict(doc)
    doc = platform_to_dict(chain)
    doc["comment"] = "hi"
    with pytest.raises(NetworkError, match="unknown field"):
        platform_from_dict(doc)


def test_platform_file_rejects_bad_labels(chain):
    doc = platform_to_dict(chain)
    doc["edges"][0]["latency_ms"] = 0
    with pytest.raises(NetworkError, match="non-positive latency"):
        platform_from_dict(doc)
    doc = platform_to_dict(chain)
    doc["nodes"].append({"id": "A", "kind": "host"})
    with pytest.raises(NetworkError, match="duplicate node"):
        platform_from_dict(doc)
