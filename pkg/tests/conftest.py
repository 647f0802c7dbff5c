from __future__ import annotations

import random

import pytest

from netrecon.network import HOST, ROUTER, LinkLabel, Node, Platform


def make_platform(name, host_ids, router_ids, links):
    nodes = [Node(h, HOST) for h in host_ids] + [Node(r, ROUTER) for r in router_ids]
    return Platform(name, nodes, [(a, b, LinkLabel(lat, bw)) for a, b, lat, bw in links])


@pytest.fixture
def chain():
    # A - B - C with latencies 1, 2 and bandwidths 100, 10
    return make_platform("chain", "ABC", [], [("A", "B", 1.0, 100.0), ("B", "C", 2.0, 10.0)])


@pytest.fixture
def star():
    links = [(h, "X", 1.0, 100.0) for h in "ABCD"]
    return make_platform("star", "ABCD", ["X"], links)


@pytest.fixture
def dumbbell():
    # a1, a2 - X === Y - b1, b2; shared 100 MB/s middle link
    links = [
        ("a1", "X", 1.0, 1000.0), ("a2", "X", 1.0, 1000.0),
        ("b1", "Y", 1.0, 1000.0), ("b2", "Y", 1.0, 1000.0),
        ("X", "Y", 5.0, 100.0),
    ]
    return make_platform("dumbbell", ["a1", "a2", "b1", "b2"], ["X", "Y"], links)


@pytest.fixture
def square():
    # 4-host cycle with unit latencies
    links = [("A", "B", 1.0, 100.0), ("B", "C", 1.0, 100.0),
             ("C", "D", 1.0, 100.0), ("A", "D", 1.0, 100.0)]
    return make_platform("square", "ABCD", [], links)


def random_connected_platform(rng: random.Random, n_nodes: int, extra_edges: int = 2):
    """Random connected host-only platform with distinct-ish labels."""
    ids = [f"n{i}" for i in range(n_nodes)]
    links = []
    present = set()
    for i in range(1, n_nodes):
        j = rng.randrange(i)
        links.append((ids[j], ids[i], rng.uniform(0.5, 20.0), rng.uniform(5.0, 500.0)))
        present.add((j, i))
    absent = [
        (i, j) for i in range(n_nodes) for j in range(i + 1, n_nodes)
        if (i, j) not in present
    ]
    for i, j in rng.sample(absent, min(extra_edges, len(absent))):
        links.append((ids[i], ids[j], rng.uniform(0.5, 20.0), rng.uniform(5.0, 500.0)))
    return make_platform(f"rand{n_nodes}", ids, [], links)
