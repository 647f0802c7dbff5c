from __future__ import annotations

import random

import numpy as np
import pytest

from conftest import random_connected_platform

from netrecon.generation import GenParams, generate, observable_hosts, HOSTS_ONLY
from netrecon.measurement import (
    InterferenceRecord,
    MeasurementError,
    MeasurementSet,
    load_measurements,
    measure_end_to_end,
    measure_interference,
    measure_platform,
    measurements_from_dict,
    measurements_to_dict,
    save_measurements,
)
from netrecon.network import path_bandwidth, route


def test_end_to_end_chain_values(chain):
    ms = measure_end_to_end(chain, ["A", "B", "C"])
    assert ms.lat_between("A", "C") == 3.0
    assert ms.bw_between("A", "C") == 10.0
    assert ms.lat_between("A", "B") == 1.0


def test_end_to_end_matrices_symmetric():
    rng = random.Random(3)
    p = random_connected_platform(rng, 6)
    ms = measure_end_to_end(p, p.node_ids)
    assert np.array_equal(ms.lat, ms.lat.T)
    assert np.array_equal(ms.bw, ms.bw.T)


def test_end_to_end_two_hosts_single_link():
    from conftest import make_platform

    p = make_platform("pair", "AB", [], [("A", "B", 0.5, 80.0)])
    ms = measure_end_to_end(p, ["A", "B"])
    assert ms.lat_between("A", "B") == 0.5
    assert ms.bw_between("A", "B") == 80.0


def test_interference_disjoint_routes_keep_standalone(star):
    records = measure_interference(star, ["A", "B", "C", "D"])
    rec = next(r for r in records if r.flow1 == ("A", "B") and r.flow2 == ("C", "D"))
    assert rec.bw1_concurrent == 100.0
    assert rec.bw2_concurrent == 100.0


def test_interference_fair_split_on_shared_link(dumbbell):
    records = measure_interference(dumbbell, ["a1", "a2", "b1", "b2"])
    rec = next(r for r in records if r.flow1 == ("a1", "b1") and r.flow2 == ("a2", "b2"))
    assert rec.bw1_concurrent == pytest.approx(50.0)
    assert rec.bw2_concurrent == pytest.approx(50.0)


def test_interference_monotone_vs_standalone():
    p = generate(GenParams(n_hosts=8, n_backbone_routers=3, clusters=2, seed=11,
                           extra_backbone_edges=1))
    hosts = observable_hosts(p, HOSTS_ONLY)
    for rec in measure_interference(p, hosts):
        for flow, measured in ((rec.flow1, rec.bw1_concurrent), (rec.flow2, rec.bw2_concurrent)):
            standalone = path_bandwidth(p, route(p, *flow))
            assert measured <= standalone + 1e-9


def test_interference_random_sampling_deterministic(dumbbell):
    hosts = ["a1", "a2", "b1", "b2"]
    first = measure_interference(dumbbell, hosts, sampling="random", k=2, seed=5)
    second = measure_interference(dumbbell, hosts, sampling="random", k=2, seed=5)
    assert first == second
    other = measure_interference(dumbbell, hosts, sampling="random", k=2, seed=6)
    assert len(other) == 2


def test_interference_requires_disjoint_pairs():
    with pytest.raises(MeasurementError, match="disjoint"):
        InterferenceRecord(("a", "b"), ("a", "c"), 1.0, 1.0)


def test_measurement_round_trip(tmp_path, dumbbell):
    ms = measure_platform(dumbbell, ["a1", "a2", "b1", "b2"])
    path = tmp_path / "ms.json"
    save_measurements(ms, path)
    loaded = load_measurements(path)
    assert loaded.hosts == ms.hosts
    assert np.array_equal(loaded.lat, ms.lat)
    assert np.array_equal(loaded.bw, ms.bw)
    assert loaded.interference == ms.interference
    assert loaded.source_platform_name == "dumbbell"


def test_load_rejects_asymmetric_matrix(chain):
    ms = measure_end_to_end(chain, ["A", "B", "C"])
    doc = measurements_to_dict(ms)
    doc["lat"] = [[0, 1, 3], [1, 0, 2], [3, 2.5, 0]]  # full matrix, asymmetric
    with pytest.raises(MeasurementError, match="asymmetric matrix"):
        measurements_from_dict(doc)


def test_load_accepts_full_symmetric_matrix(chain):
    ms = measure_end_to_end(chain, ["A", "B", "C"])
    doc = measurements_to_dict(ms)
    doc["lat"] = [[0, 1, 3], [1, 0, 2], [3, 2, 0]]
    loaded = measurements_from_dict(doc)
    assert loaded.lat_between("A", "C") == 3.0


def test_load_rejects_empty_hosts(chain):
    doc = measurements_to_dict(measure_end_to_end(chain, ["A", "B", "C"]))
    doc["hosts"] = []
    with pytest.raises(MeasurementError, match="empty host list"):
        measurements_from_dict(doc)


def test_load_rejects_unknown_fields(chain):
    doc = measurements_to_dict(measure_end_to_end(chain, ["A", "B", "C"]))
    doc["comment"] = "x"
    with pytest.raises(MeasurementError, match="unknown field"):
        measurements_from_dict(doc)


def test_measurement_set_invariants():
    lat = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(MeasurementError, match="sorted"):
        MeasurementSet(("b", "a"), lat, lat)
    with pytest.raises(MeasurementError, match="asymmetric"):
        MeasurementSet(("a", "b"), np.array([[0.0, 1.0], [2.0, 0.0]]), lat)
    with pytest.raises(MeasurementError, match="non-positive"):
        MeasurementSet(("a", "b"), np.array([[0.0, -1.0], [-1.0, 0.0]]), lat)


def test_measures_match_route_properties():
    rng = random.Random(17)
    p = random_connected_platform(rng, 7, extra_edges=3)
    ms = measure_end_to_end(p, p.node_ids)
    for a, b in ms.pairs():
        r = route(p, a, b)
        assert ms.lat_between(a, b) == pytest.approx(sum(p.link(u, v).latency_ms for u, v in zip(r.nodes, r.nodes[1:])))
        assert ms.bw_between(a, b) == path_bandwidth(p, r)
