"""Flow-level network simulation under max-min fair bandwidth sharing.

Transfers are fluid flows: a transfer of size S over a route with latency l
and allocated rate r takes l + 1000*S/r milliseconds (latency charged once,
at start). Concurrent flows share link capacity max-min fairly; the
allocation is recomputed whenever a flow starts or finishes.

Also provides the four application kernels used for applicative evaluation
(token ring, sequential broadcast, all-to-all, outer-product parallel matrix
multiplication) as dependency-annotated transfer schedules.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from heapq import heappop, heappush
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from netrecon.network import Platform, Route, path_latency, route

# Switch from the dict-based to the vectorized allocator above this many
# flow*link cells; both paths implement the same progressive filling.
_VECTOR_THRESHOLD = 512


class SimulationError(ValueError):
    """Raised for invalid traces or unroutable transfers."""


@dataclass(frozen=True)
class Transfer:
    id: int
    src: str
    dst: str
    size_mb: float
    deps: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        if self.src == self.dst:
            raise SimulationError(f"transfer {self.id}: src equals dst ({self.src!r})")
        if not (math.isfinite(self.size_mb) and self.size_mb >= 0):
            raise SimulationError(f"transfer {self.id}: invalid size {self.size_mb!r}")


@dataclass(frozen=True)
class AppTrace:
    name: str
    transfers: tuple[Transfer, ...]
    params: tuple[tuple[str, object], ...] = ()

    def __post_init__(self) -> None:
        ids = [t.id for t in self.transfers]
        if len(set(ids)) != len(ids):
            raise SimulationError(f"trace {self.name!r}: duplicate transfer ids")
        known = set(ids)
        for t in self.transfers:
            unknown = t.deps - known
            if unknown:
                raise SimulationError(f"transfer {t.id}: unknown deps {sorted(unknown)}")
        _check_acyclic(self.transfers)

    def param(self, key: str):
        return dict(self.params)[key]


def _check_acyclic(transfers: Sequence[Transfer]) -> None:
    remaining = {t.id: set(t.deps) for t in transfers}
    dependents: dict[int, list[int]] = {t.id: [] for t in transfers}
    for t in transfers:
        for d in t.deps:
            dependents[d].append(t.id)
    ready = sorted(tid for tid, deps in remaining.items() if not deps)
    done = 0
    while ready:
        tid = ready.pop()
        done += 1
        for dep in dependents[tid]:
            remaining[dep].discard(tid)
            if not remaining[dep]:
                ready.append(dep)
    if done != len(transfers):
        raise SimulationError("cyclic transfer dependencies")


# ---------------------------------------------------------------------------
# Max-min fair allocation (progressive filling / water-filling)
# ---------------------------------------------------------------------------

def maxmin_allocate(platform: Platform, routes: Sequence[Route]) -> list[float]:
    """Max-min fair rates (MB/s) for flows following the given routes.

    Progressive filling: repeatedly saturate the link with the smallest
    fair share capacity/active-flow-count, freeze its flows at that share,
    and continue with the residual capacities. Ties between links break
    lexicographically on the link id, which does not change the (unique)
    resulting allocation, only the computation order.
    """
    if not routes:
        return []
    flow_links = []
    for r in routes:
        links = r.links
        for key in links:
            platform.link(*key)  # validates the route against the platform
        flow_links.append(frozenset(links))
    caps = {key: label.bandwidth_mbps for key, label in platform.links.items()}
    return waterfill(caps, flow_links)


def waterfill(capacities: Mapping[tuple[str, str], float], flow_links: Sequence[frozenset]) -> list[float]:
    """Progressive filling over explicit capacities and per-flow link sets."""
    used = set().union(*flow_links) if flow_links else set()
    link_ids = sorted(used)
    if len(flow_links) * len(link_ids) >= _VECTOR_THRESHOLD:
        index = {key: i for i, key in enumerate(link_ids)}
        incidence = np.zeros((len(flow_links), len(link_ids)), dtype=bool)
        for f, links in enumerate(flow_links):
            for key in links:
                incidence[f, index[key]] = True
        caps = np.array([capacities[key] for key in link_ids], dtype=float)
        return list(waterfill_vectorized(incidence, caps))
    return _waterfill_dict({key: capacities[key] for key in link_ids}, flow_links)


def _waterfill_dict(residual: dict, flow_links: Sequence[frozenset]) -> list[float]:
    residual = dict(residual)
    rates = [0.0] * len(flow_links)
    active = set(range(len(flow_links)))
    while active:
        counts: dict[tuple[str, str], int] = {}
        for f in active:
            for key in flow_links[f]:
                counts[key] = counts.get(key, 0) + 1
        level, bottleneck = min(
            ((residual[key] / n, key) for key, n in counts.items()),
            key=lambda item: (item[0], item[1]),
        )
        frozen = {f for f in active if bottleneck in flow_links[f]}
        for f in frozen:
            rates[f] = level
            for key in flow_links[f]:
                residual[key] -= level
        active -= frozen
    return rates


def waterfill_vectorized(incidence: np.ndarray, capacities: np.ndarray) -> np.ndarray:
    """Progressive filling on a (flows x links) boolean incidence matrix."""
    n_flows = incidence.shape[0]
    rates = np.zeros(n_flows)
    active = np.ones(n_flows, dtype=bool)
    residual = capacities.astype(float).copy()
    while active.any():
        counts = incidence[active].sum(axis=0)
        crossed = counts > 0
        if not crossed.any():  # defensive: every flow crosses >= 1 link
            raise SimulationError("flow without links in allocation")
        fair = np.full_like(residual, np.inf)
        fair[crossed] = residual[crossed] / counts[crossed]
        level = fair.min()
        saturated = fair <= level
        frozen = active & (incidence[:, saturated].any(axis=1))
        rates[frozen] = level
        residual -= level * incidence[frozen].sum(axis=0)
        active &= ~frozen
    return rates


def check_allocation(
    capacities: Mapping[tuple[str, str], float],
    flow_links: Sequence[frozenset],
    rates: Sequence[float],
    rtol: float = 1e-9,
) -> None:
    """Max-min optimality certificate; raises SimulationError on violation.

    Checks (a) no link over capacity, (b) every rate positive, (c) every flow
    crosses at least one saturated link on which no flow is faster.
    """
    loads: dict[tuple[str, str], float] = {}
    fastest: dict[tuple[str, str], float] = {}
    for links, rate in zip(flow_links, rates):
        if rate <= 0:
            raise SimulationError(f"non-positive flow rate {rate}")
        for key in links:
            loads[key] = loads.get(key, 0.0) + rate
            fastest[key] = max(fastest.get(key, 0.0), rate)
    for key, load in loads.items():
        if load > capacities[key] * (1 + rtol):
            raise SimulationError(f"link {key} over capacity: {load} > {capacities[key]}")
    for links, rate in zip(flow_links, rates):
        bottlenecked = any(
            loads[key] >= capacities[key] * (1 - rtol) and fastest[key] <= rate * (1 + rtol)
            for key in links
        )
        if not bottlenecked:
            raise SimulationError(f"flow at rate {rate} is not bottlenecked on any link")


# ---------------------------------------------------------------------------
# Event-driven simulation
# ---------------------------------------------------------------------------

RouteLookup = Callable[[str, str], Route]


def platform_routes(platform: Platform) -> RouteLookup:
    """Route provider using the platform's own minimum-latency routing."""
    cache: dict[tuple[str, str], Route] = {}

    def lookup(src: str, dst: str) -> Route:
        key = (src, dst)
        found = cache.get(key)
        if found is None:
            found = cache[key] = route(platform, src, dst)
        return found

    return lookup


@dataclass
class SimResult:
    completion_ms: float
    finish_ms: dict[int, float]
    segments: list[tuple[float, float, dict[int, float]]] = field(default_factory=list)


def simulate(
    platform: Platform,
    routes: RouteLookup,
    trace: AppTrace,
    record_segments: bool = False,
) -> SimResult:
    """Run a transfer schedule to completion; returns times in milliseconds.

    A transfer is released when all its dependencies have completed, waits
    one route latency, then transmits at its max-min share until its volume
    is delivered. Event order is deterministic: time, then transfer id.
    """
    if not trace.transfers:
        return SimResult(0.0, {})

    by_id = {t.id: t for t in trace.transfers}
    flow_links: dict[int, frozenset] = {}
    latency: dict[int, float] = {}
    for t in trace.transfers:
        r = routes(t.src, t.dst)
        flow_links[t.id] = frozenset(r.links)
        latency[t.id] = path_latency(platform, r)

    link_ids = sorted(set().union(*flow_links.values()))
    link_index = {key: i for i, key in enumerate(link_ids)}
    caps = np.array([platform.link(*key).bandwidth_mbps for key in link_ids], dtype=float)
    rows = {
        tid: np.bincount(
            [link_index[key] for key in links], minlength=len(link_ids)
        ).astype(bool)
        for tid, links in flow_links.items()
    }

    dependents: dict[int, list[int]] = {t.id: [] for t in trace.transfers}
    missing = {t.id: len(t.deps) for t in trace.transfers}
    for t in trace.transfers:
        for d in t.deps:
            dependents[d].append(t.id)

    starts: list[tuple[float, int]] = []  # transmission-start events
    for t in trace.transfers:
        if missing[t.id] == 0:
            heappush(starts, (latency[t.id], t.id))

    active: dict[int, float] = {}  # id -> remaining MB
    rates: dict[int, float] = {}
    finished: dict[int, float] = {}
    result = SimResult(0.0, finished)
    now = 0.0

    def reallocate() -> None:
        rates.clear()
        if not active:
            return
        ids = sorted(active)
        incidence = np.vstack([rows[tid] for tid in ids])
        shares = waterfill_vectorized(incidence, caps)
        for tid, share in zip(ids, shares):
            rates[tid] = float(share)

    def complete(tid: int, at: float) -> None:
        finished[tid] = at
        for dep in dependents[tid]:
            missing[dep] -= 1
            if missing[dep] == 0:
                heappush(starts, (at + latency[dep], dep))

    while active or starts:
        next_finish = math.inf
        for tid, remaining in active.items():
            eta = now + remaining / rates[tid]
            if eta < next_finish:
                next_finish = eta
        next_start = starts[0][0] if starts else math.inf
        t_next = min(next_finish, next_start)

        if record_segments and active and t_next > now:
            result.segments.append((now, t_next, dict(rates)))
        for tid in active:
            active[tid] -= rates[tid] * (t_next - now)
        now = t_next

        changed = False
        finishing = sorted(
            tid for tid, remaining in active.items()
            if remaining <= 1e-9 * max(by_id[tid].size_mb, 1.0)
        )
        for tid in finishing:
            del active[tid]
            complete(tid, now)
            changed = True
        while starts and starts[0][0] <= now + 1e-12:
            _, tid = heappop(starts)
            if by_id[tid].size_mb <= 0.0:
                complete(tid, now)  # nothing to transmit past the latency
            else:
                active[tid] = by_id[tid].size_mb * 1000.0  # MB -> MB*ms/s scale
                changed = True
        if changed:
            reallocate()

    result.completion_ms = max(finished.values())
    return result


# Note on units: rates are MB/s while times are ms, so remaining volumes are
# tracked in MB*1000 (see the 1000.0 factor above); 1 MB at 1 MB/s = 1000 ms.


# ---------------------------------------------------------------------------
# Application kernels
# ---------------------------------------------------------------------------

def _require_hosts(hosts: Sequence[str], minimum: int, kernel: str) -> list[str]:
    ordered = sorted(hosts)
    if len(set(ordered)) != len(ordered):
        raise SimulationError(f"{kernel}: duplicate hosts")
    if len(ordered) < minimum:
        raise SimulationError(f"{kernel}: needs at least {minimum} hosts, got {len(ordered)}")
    return ordered


def token_ring_trace(hosts: Sequence[str], seed: int, token_mb: float) -> AppTrace:
    """Token circulating three times around a seeded random ring."""
    ordered = _require_hosts(hosts, 2, "token ring")
    ring = list(ordered)
    random.Random(seed).shuffle(ring)
    n = len(ring)
    transfers = []
    for i in range(3 * n):
        transfers.append(
            Transfer(
                id=i,
                src=ring[i % n],
                dst=ring[(i + 1) % n],
                size_mb=token_mb,
                deps=frozenset() if i == 0 else frozenset({i - 1}),
            )
        )
    return AppTrace("token", tuple(transfers), (("seed", seed), ("token_mb", token_mb)))


def broadcast_trace(hosts: Sequence[str], seed: int, message_mb: float) -> AppTrace:
    """A seeded random root sends the same message to every other host, one at a time."""
    ordered = _require_hosts(hosts, 2, "broadcast")
    root = random.Random(seed).choice(ordered)
    targets = [h for h in ordered if h != root]
    transfers = []
    for i, dst in enumerate(targets):
        transfers.append(
            Transfer(
                id=i,
                src=root,
                dst=dst,
                size_mb=message_mb,
                deps=frozenset() if i == 0 else frozenset({i - 1}),
            )
        )
    return AppTrace("broadcast", tuple(transfers), (("seed", seed), ("message_mb", message_mb)))


def all2all_trace(hosts: Sequence[str], message_mb: float) -> AppTrace:
    """Every host sends to every other host simultaneously."""
    ordered = _require_hosts(hosts, 2, "all-to-all")
    transfers = []
    tid = 0
    for src in ordered:
        for dst in ordered:
            if src == dst:
                continue
            transfers.append(Transfer(id=tid, src=src, dst=dst, size_mb=message_mb))
            tid += 1
    return AppTrace("all2all", tuple(transfers), (("message_mb", message_mb),))


def grid_shape(n_hosts: int) -> tuple[int, int]:
    """Near-square process grid p x q with p*q <= n_hosts."""
    if n_hosts < 1:
        raise SimulationError("grid needs at least one host")
    p = int(math.isqrt(n_hosts))
    return p, n_hosts // p


def pmm_trace(
    hosts: Sequence[str],
    grid: tuple[int, int],
    matrix_dim: int,
    block: int,
) -> AppTrace:
    """Outer-product parallel matrix multiply communication schedule.

    At each of matrix_dim/block steps, the owners of the pivot block column
    broadcast along their process row and the owners of the pivot block row
    broadcast along their process column; steps are bulk-synchronous. Sizes
    are 8-byte elements expressed in MB; computation is not modeled.
    """
    p, q = grid
    if p < 1 or q < 1:
        raise SimulationError(f"invalid process grid {grid}")
    ordered = _require_hosts(hosts, p * q, "pmm")
    if matrix_dim < 1 or block < 1:
        raise SimulationError("matrix dimension and block size must be positive")
    if matrix_dim % block:
        raise SimulationError(f"block {block} does not divide matrix dimension {matrix_dim}")
    procs = [[ordered[r * q + c] for c in range(q)] for r in range(p)]
    col_mb = block * (matrix_dim / p) * 8e-6  # block column piece held per row
    row_mb = block * (matrix_dim / q) * 8e-6
    transfers: list[Transfer] = []
    prev_step: list[int] = []
    tid = 0
    for k in range(matrix_dim // block):
        deps = frozenset(prev_step)
        step: list[int] = []
        pivot_c = k % q
        pivot_r = k % p
        for r in range(p):
            owner = procs[r][pivot_c]
            for c in range(q):
                if c == pivot_c:
                    continue
                transfers.append(Transfer(tid, owner, procs[r][c], col_mb, deps))
                step.append(tid)
                tid += 1
        for c in range(q):
            owner = procs[pivot_r][c]
            for r in range(p):
                if r == pivot_r:
                    continue
                transfers.append(Transfer(tid, owner, procs[r][c], row_mb, deps))
                step.append(tid)
                tid += 1
        prev_step = step
    return AppTrace(
        "pmm",
        tuple(transfers),
        (("grid", grid), ("matrix_dim", matrix_dim), ("block", block)),
    )


# ---------------------------------------------------------------------------
# Trace serialization (debugging / replay)
# ---------------------------------------------------------------------------

def trace_to_dict(trace: AppTrace) -> dict:
    return {
        "name": trace.name,
        "params": {k: list(v) if isinstance(v, tuple) else v for k, v in trace.params},
        "transfers": [
            {"id": t.id, "src": t.src, "dst": t.dst, "size_mb": t.size_mb, "deps": sorted(t.deps)}
            for t in trace.transfers
        ],
    }


def trace_from_dict(data: dict) -> AppTrace:
    transfers = tuple(
        Transfer(rec["id"], rec["src"], rec["dst"], rec["size_mb"], frozenset(rec["deps"]))
        for rec in data["transfers"]
    )
    params = tuple(
        (k, tuple(v) if isinstance(v, list) else v) for k, v in data.get("params", {}).items()
    )
    return AppTrace(data["name"], transfers, params)


def save_trace(trace: AppTrace, path: str | Path) -> None:
    Path(path).write_text(json.dumps(trace_to_dict(trace), indent=2) + "\n")


def load_trace(path: str | Path) -> AppTrace:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SimulationError(f"cannot parse trace file {path}: {exc}") from exc
    return trace_from_dict(data)
