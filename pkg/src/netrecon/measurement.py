"""End-to-end measurement emulation over simulated platforms.

Produces the latency/bandwidth matrices and pairwise flow-interference
records that reconstruction algorithms consume, and persists them to a
file repository. Measurements are noise-free: they equal the platform's
routed path properties exactly.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np

from netrecon.network import NetworkError, Platform, path_bandwidth, path_latency, route
from netrecon.simulate import waterfill

LAT_UNIT = "ms"
BW_UNIT = "MB/s"


class MeasurementError(ValueError):
    """Raised for invalid measurement sets or measurement files."""


@dataclass(frozen=True)
class InterferenceRecord:
    """Concurrent rates of two flows between disjoint host pairs."""

    flow1: tuple[str, str]
    flow2: tuple[str, str]
    bw1_concurrent: float
    bw2_concurrent: float

    def __post_init__(self) -> None:
        hosts = (*self.flow1, *self.flow2)
        if len(set(hosts)) != 4:
            raise MeasurementError(f"interference pairs are not disjoint: {hosts}")


@dataclass
class MeasurementSet:
    """Host-indexed symmetric latency/bandwidth matrices plus interference records."""

    hosts: tuple[str, ...]
    lat: np.ndarray
    bw: np.ndarray
    interference: tuple[InterferenceRecord, ...] = ()
    source_platform_name: str = ""
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._index = {h: i for i, h in enumerate(self.hosts)}
        self.validate()

    def validate(self) -> None:
        if len(self.hosts) < 2:
            raise MeasurementError("empty host list (need at least two hosts)")
        if list(self.hosts) != sorted(set(self.hosts)):
            raise MeasurementError("hosts must be sorted and duplicate-free")
        n = len(self.hosts)
        for name, matrix in (("lat", self.lat), ("bw", self.bw)):
            if matrix.shape != (n, n):
                raise MeasurementError(f"{name} matrix shape {matrix.shape} != ({n}, {n})")
            if not np.array_equal(matrix, matrix.T):
                raise MeasurementError(f"asymmetric matrix: {name}")
            off = matrix[~np.eye(n, dtype=bool)]
            if not (np.isfinite(off).all() and (off > 0).all()):
                raise MeasurementError(f"non-positive or non-finite entry in {name} matrix")
        for rec in self.interference:
            for flow, measured in ((rec.flow1, rec.bw1_concurrent), (rec.flow2, rec.bw2_concurrent)):
                standalone = self.bw_between(*flow)
                if measured > standalone * (1 + 1e-9):
                    raise MeasurementError(
                        f"concurrent rate {measured} exceeds standalone {standalone} for {flow}"
                    )

    def index(self, host: str) -> int:
        try:
            return self._index[host]
        except KeyError:
            raise MeasurementError(f"unknown host: {host!r}") from None

    def lat_between(self, a: str, b: str) -> float:
        if a == b:
            raise MeasurementError("no latency between a host and itself")
        return float(self.lat[self.index(a), self.index(b)])

    def bw_between(self, a: str, b: str) -> float:
        if a == b:
            raise MeasurementError("no bandwidth between a host and itself")
        return float(self.bw[self.index(a), self.index(b)])

    def pairs(self) -> list[tuple[str, str]]:
        return [(a, b) for i, a in enumerate(self.hosts) for b in self.hosts[i + 1:]]

    def with_interference(self, records: Sequence[InterferenceRecord]) -> "MeasurementSet":
        return MeasurementSet(
            self.hosts, self.lat, self.bw, tuple(records), self.source_platform_name
        )


def measure_end_to_end(platform: Platform, hosts: Sequence[str]) -> MeasurementSet:
    """Routed latency and bottleneck bandwidth between every host pair."""
    ordered = sorted(hosts)
    if len(set(ordered)) != len(ordered):
        raise MeasurementError("duplicate hosts in measurement request")
    for h in ordered:
        if not platform.has_node(h):
            raise NetworkError(f"node not found: {h!r}")
    n = len(ordered)
    if n < 2:
        raise MeasurementError("need at least two hosts to measure")
    lat = np.zeros((n, n))
    bw = np.zeros((n, n))
    for i, a in enumerate(ordered):
        for j in range(i + 1, n):
            r = route(platform, a, ordered[j])
            lat[i, j] = lat[j, i] = path_latency(platform, r)
            bw[i, j] = bw[j, i] = path_bandwidth(platform, r)
    return MeasurementSet(tuple(ordered), lat, bw, (), platform.name)


def _disjoint_pair_count(n_hosts: int) -> int:
    # Each 4-host subset yields 3 ways to split into two disjoint pairs.
    return 3 * math.comb(n_hosts, 4)


def measure_interference(
    platform: Platform,
    hosts: Sequence[str],
    sampling: str = "all",
    k: int | None = None,
    seed: int = 0,
) -> list[InterferenceRecord]:
    """Concurrent rates for pairs of flows between disjoint host pairs.

    sampling="all" enumerates every unordered pair of disjoint host pairs;
    sampling="random" draws k of them deterministically from the seed.
    """
    ordered = sorted(hosts)
    for h in ordered:
        if not platform.has_node(h):
            raise NetworkError(f"node not found: {h!r}")
    pairs = [(a, b) for i, a in enumerate(ordered) for b in ordered[i + 1:]]
    routes = {pair: route(platform, *pair) for pair in pairs}
    links = {pair: frozenset(routes[pair].links) for pair in pairs}
    standalone = {pair: path_bandwidth(platform, routes[pair]) for pair in pairs}
    caps = {key: label.bandwidth_mbps for key, label in platform.links.items()}

    if sampling == "all":
        selected = [
            (p1, p2)
            for p1, p2 in combinations(pairs, 2)
            if not set(p1) & set(p2)
        ]
    elif sampling == "random":
        if k is None or k < 0:
            raise MeasurementError("random sampling needs a non-negative k")
        total = _disjoint_pair_count(len(ordered))
        if k >= total:
            return measure_interference(platform, hosts, "all")
        rng = random.Random(seed)
        chosen: set[tuple[tuple[str, str], tuple[str, str]]] = set()
        while len(chosen) < k:
            p1 = pairs[rng.randrange(len(pairs))]
            p2 = pairs[rng.randrange(len(pairs))]
            if set(p1) & set(p2):
                continue
            chosen.add((p1, p2) if p1 < p2 else (p2, p1))
        selected = sorted(chosen)
    else:
        raise MeasurementError(f"unknown sampling mode {sampling!r}")

    records = []
    for p1, p2 in selected:
        if links[p1] & links[p2]:
            rate1, rate2 = waterfill(caps, [links[p1], links[p2]])
        else:
            rate1, rate2 = standalone[p1], standalone[p2]
        records.append(InterferenceRecord(p1, p2, rate1, rate2))
    return records


def measure_platform(
    platform: Platform,
    hosts: Sequence[str],
    sampling: str = "all",
    k: int | None = None,
    seed: int = 0,
) -> MeasurementSet:
    """End-to-end matrices plus interference records in one measurement set."""
    ms = measure_end_to_end(platform, hosts)
    return ms.with_interference(measure_interference(platform, hosts, sampling, k, seed))


# ---------------------------------------------------------------------------
# File repository. JSON document:
#   units: {"latency": "ms", "bandwidth": "MB/s"}
#   source_platform: str
#   hosts: sorted host ids
#   lat, bw: strict upper triangle, row-major (loader also accepts a full
#            square matrix, which must be symmetric)
#   interference: [{"a1","b1","a2","b2","bw1","bw2"}, ...]
# ---------------------------------------------------------------------------

_MS_FIELDS = {"units", "source_platform", "hosts", "lat", "bw", "interference"}
_REC_FIELDS = {"a1", "b1", "a2", "b2", "bw1", "bw2"}


def _triangle(matrix: np.ndarray) -> list[float]:
    n = matrix.shape[0]
    return [float(matrix[i, j]) for i in range(n) for j in range(i + 1, n)]


def _matrix_from_payload(payload, n: int, name: str) -> np.ndarray:
    matrix = np.zeros((n, n))
    if payload and isinstance(payload[0], list):
        if len(payload) != n or any(len(row) != n for row in payload):
            raise MeasurementError(f"{name} matrix is not {n}x{n}")
        full = np.array(payload, dtype=float)
        if not np.array_equal(full, full.T):
            raise MeasurementError(f"asymmetric matrix: {name}")
        matrix = full
        np.fill_diagonal(matrix, 0.0)
        return matrix
    expected = n * (n - 1) // 2
    if len(payload) != expected:
        raise MeasurementError(
            f"{name} triangle has {len(payload)} entries, expected {expected} for {n} hosts"
        )
    it = iter(payload)
    for i in range(n):
        for j in range(i + 1, n):
            matrix[i, j] = matrix[j, i] = float(next(it))
    return matrix


def measurements_to_dict(ms: MeasurementSet) -> dict:
    return {
        "units": {"latency": LAT_UNIT, "bandwidth": BW_UNIT},
        "source_platform": ms.source_platform_name,
        "hosts": list(ms.hosts),
        "lat": _triangle(ms.lat),
        "bw": _triangle(ms.bw),
        "interference": [
            {
                "a1": rec.flow1[0], "b1": rec.flow1[1],
                "a2": rec.flow2[0], "b2": rec.flow2[1],
                "bw1": rec.bw1_concurrent, "bw2": rec.bw2_concurrent,
            }
            for rec in ms.interference
        ],
    }


def measurements_from_dict(data: dict) -> MeasurementSet:
    unknown = sorted(set(data) - _MS_FIELDS)
    if unknown:
        raise MeasurementError(f"unknown field(s) {unknown} in measurement file")
    units = data.get("units", {})
    if units.get("latency") != LAT_UNIT or units.get("bandwidth") != BW_UNIT:
        raise MeasurementError(f"unsupported units header: {units!r}")
    hosts = data.get("hosts", [])
    if not hosts:
        raise MeasurementError("empty host list")
    n = len(hosts)
    lat = _matrix_from_payload(data["lat"], n, "lat")
    bw = _matrix_from_payload(data["bw"], n, "bw")
    records = []
    for pos, rec in enumerate(data.get("interference", [])):
        unknown = sorted(set(rec) - _REC_FIELDS)
        if unknown:
            raise MeasurementError(f"unknown field(s) {unknown} in interference record {pos}")
        try:
            records.append(
                InterferenceRecord(
                    (rec["a1"], rec["b1"]), (rec["a2"], rec["b2"]),
                    float(rec["bw1"]), float(rec["bw2"]),
                )
            )
        except KeyError as exc:
            raise MeasurementError(f"missing field {exc} in interference record {pos}") from None
    return MeasurementSet(tuple(hosts), lat, bw, tuple(records), data.get("source_platform", ""))


def save_measurements(ms: MeasurementSet, path: str | Path) -> None:
    Path(path).write_text(json.dumps(measurements_to_dict(ms), indent=2) + "\n")


def load_measurements(path: str | Path) -> MeasurementSet:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MeasurementError(f"cannot parse measurement file {path}: {exc}") from exc
    return measurements_from_dict(data)
