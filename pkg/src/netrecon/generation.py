"""Synthetic wide-area platform generation.

Generates two-level Internet-like platforms: a random backbone of routers
(spanning tree plus optional extra edges, WAN-labeled) with clusters of
hosts attached as stars (LAN-labeled). Deterministic in the seed; the RNG
is Python's Mersenne Twister (random.Random), which is portable and
documented.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Sequence

from netrecon.network import HOST, ROUTER, LinkLabel, NetworkError, Node, Platform

ALL_NODES = "all"
HOSTS_ONLY = "hosts"
OBSERVABILITY_MODES = (ALL_NODES, HOSTS_ONLY)


@dataclass(frozen=True)
class GenParams:
    n_hosts: int = 60
    n_backbone_routers: int = 10
    clusters: int = 6
    wan_latency_range: tuple[float, float] = (5.0, 150.0)
    lan_latency_range: tuple[float, float] = (0.1, 1.0)
    wan_bw_range: tuple[float, float] = (10.0, 100.0)
    lan_bw_range: tuple[float, float] = (100.0, 1000.0)
    extra_backbone_edges: int = 3
    seed: int = 0

    def validate(self) -> None:
        for name in ("n_hosts", "n_backbone_routers", "clusters"):
            if getattr(self, name) < 1:
                raise NetworkError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.extra_backbone_edges < 0:
            raise NetworkError("extra_backbone_edges must be >= 0")
        for name in ("wan_latency_range", "lan_latency_range", "wan_bw_range", "lan_bw_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise NetworkError(f"{name} must satisfy 0 < min <= max, got ({lo}, {hi})")

    def with_seed(self, seed: int) -> "GenParams":
        return replace(self, seed=seed)


def _uniform(rng: random.Random, bounds: tuple[float, float]) -> float:
    lo, hi = bounds
    return min(max(rng.uniform(lo, hi), lo), hi)


def generate(params: GenParams) -> Platform:
    """Build a connected backbone-plus-clusters platform from the parameters."""
    params.validate()
    rng = random.Random(params.seed)
    r_width = max(2, len(str(params.n_backbone_routers - 1)))
    h_width = max(3, len(str(params.n_hosts - 1)))
    routers = [f"r{i:0{r_width}d}" for i in range(params.n_backbone_routers)]
    hosts = [f"h{i:0{h_width}d}" for i in range(params.n_hosts)]

    links: list[tuple[str, str, LinkLabel]] = []

    def wan_label() -> LinkLabel:
        return LinkLabel(_uniform(rng, params.wan_latency_range), _uniform(rng, params.wan_bw_range))

    def lan_label() -> LinkLabel:
        return LinkLabel(_uniform(rng, params.lan_latency_range), _uniform(rng, params.lan_bw_range))

    # Backbone: random spanning tree, then extra meshing edges.
    present = set()
    for i in range(1, params.n_backbone_routers):
        parent = rng.randrange(i)
        links.append((routers[parent], routers[i], wan_label()))
        present.add((min(parent, i), max(parent, i)))
    absent = sorted(
        (i, j)
        for i in range(params.n_backbone_routers)
        for j in range(i + 1, params.n_backbone_routers)
        if (i, j) not in present
    )
    if params.extra_backbone_edges > len(absent):
        raise NetworkError(
            f"extra_backbone_edges={params.extra_backbone_edges} exceeds the "
            f"{len(absent)} available backbone pairs"
        )
    for i, j in sorted(rng.sample(absent, params.extra_backbone_edges)):
        links.append((routers[i], routers[j], wan_label()))

    # Hosts: round-robin into clusters, each cluster a star on its router.
    for idx, host in enumerate(hosts):
        cluster = idx % params.clusters
        attach = routers[cluster % params.n_backbone_routers]
        links.append((attach, host, lan_label()))

    nodes = [Node(r, ROUTER) for r in routers] + [Node(h, HOST) for h in hosts]
    name = f"synth-h{params.n_hosts}-r{params.n_backbone_routers}-s{params.seed}"
    return Platform(name, nodes, links)


def observable_hosts(platform: Platform, mode: str) -> list[str]:
    """Node ids a measurement process can run on, sorted lexicographically."""
    if mode == ALL_NODES:
        return platform.node_ids
    if mode == HOSTS_ONLY:
        return platform.host_ids()
    raise NetworkError(f"unknown observability mode {mode!r} (use one of {OBSERVABILITY_MODES})")


def genparams_from_dict(data: dict) -> GenParams:
    """GenParams from a config mapping; field names mirror the dataclass."""
    allowed = {f for f in GenParams.__dataclass_fields__}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise NetworkError(f"unknown generator parameter(s): {unknown}")
    kwargs = dict(data)
    for name in ("wan_latency_range", "lan_latency_range", "wan_bw_range", "lan_bw_range"):
        if name in kwargs:
            kwargs[name] = tuple(kwargs[name])
    params = GenParams(**kwargs)
    params.validate()
    return params


def hosts_for(platform: Platform, mode: str, subset: Sequence[str] | None = None) -> list[str]:
    """Observable hosts, optionally restricted to an explicit subset."""
    hosts = observable_hosts(platform, mode)
    if subset is None:
        return hosts
    missing = sorted(set(subset) - set(hosts))
    if missing:
        raise NetworkError(f"hosts not observable in mode {mode!r}: {missing}")
    return sorted(subset)
