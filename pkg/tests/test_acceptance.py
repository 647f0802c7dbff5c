"""Acceptance suite: one test per criterion, printing a pass/fail line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Criterion 9's degradation clause is not reproducible under noise-free
measurement emulation (see the "Known failure" note in the README); it is
asserted faithfully and fails honestly.
"""

from __future__ import annotations

import json
import math
import random
import time
from dataclasses import dataclass
from importlib import resources

import numpy as np
import pytest

from oracles import exhaustive_spanning_weight, grid_maximin

from netrecon.cli import load_campaign_config, run_pipeline
from netrecon.estimators import BUILDER_TAGS, build_model
from netrecon.evaluate import (
    applicative_report,
    end_to_end_report,
    interference_report,
)
from netrecon.generation import ALL_NODES, HOSTS_ONLY, GenParams, generate, observable_hosts
from netrecon.measurement import MeasurementSet, measure_end_to_end, measure_platform
from netrecon.network import load_platform
from netrecon.reconstruct import exact_copy, predict
from netrecon.simulate import check_allocation, waterfill

pytestmark = pytest.mark.acceptance

THRESHOLD = 1.10
NONCLIQUE = ("treelat", "treebw", "imptreelat", "imptreebw", "aggregate")

# Desk-scale stand-in for the synthetic-platform campaign: 10 platforms of
# 30 hosts on an 8-router backbone with mild meshing.
CAMPAIGN_PARAMS = [
    GenParams(n_hosts=30, n_backbone_routers=8, clusters=5,
              extra_backbone_edges=2, seed=100 + i)
    for i in range(10)
]


def report_line(criterion: str, ok: bool, detail: str) -> None:
    print(f"[acceptance] criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")


@dataclass
class CampaignEntry:
    platform: object
    ms_full: MeasurementSet
    ms_hidden: MeasurementSet
    models_full: dict
    models_hidden: dict
    index: int


@pytest.fixture(scope="session")
def campaign():
    entries = []
    for i, params in enumerate(CAMPAIGN_PARAMS):
        p = generate(params)
        ms_full = measure_end_to_end(p, observable_hosts(p, ALL_NODES))
        ms_hidden = measure_end_to_end(p, observable_hosts(p, HOSTS_ONLY))
        entries.append(CampaignEntry(
            platform=p,
            ms_full=ms_full,
            ms_hidden=ms_hidden,
            models_full={tag: build_model(tag, ms_full) for tag in BUILDER_TAGS},
            models_hidden={tag: build_model(tag, ms_hidden) for tag in BUILDER_TAGS},
            index=i,
        ))
    return entries


def test_criterion_1_identity_oracle():
    # Uniform link bandwidth so that link sharing always shows up as a
    # measurable rate drop; latencies vary freely.
    params = GenParams(n_hosts=20, n_backbone_routers=4, clusters=4,
                       extra_backbone_edges=1, seed=7,
                       wan_latency_range=(5.0, 50.0), lan_latency_range=(0.1, 1.0),
                       wan_bw_range=(50.0, 50.0), lan_bw_range=(50.0, 50.0))
    p = generate(params)
    hosts = observable_hosts(p, HOSTS_ONLY)
    ms = measure_platform(p, hosts, sampling="all")
    kernel_params = {"token_mb": 0.01, "message_mb": 5.0, "matrix_dim": 256, "block": 64}

    started = time.perf_counter()
    copy = exact_copy(p, hosts)
    lat = end_to_end_report(copy, ms, "latency").geo_mean_all
    bw = end_to_end_report(copy, ms, "bandwidth").geo_mean_all
    interf = interference_report(p, copy, ms.interference).accuracy_fraction
    app = {
        kernel: applicative_report(p, copy, kernel, kernel_params, seed=13)
        for kernel in ("token", "broadcast", "all2all", "pmm")
    }
    elapsed = time.perf_counter() - started

    deviations = {"latency": lat, "bandwidth": bw, "interference": interf, **app}
    worst = max(abs(v - 1.0) for v in deviations.values())
    ok = worst <= 1e-9 and elapsed < 1.0
    report_line("1", ok, f"worst deviation {worst:.2e}, runtime {elapsed:.2f}s")
    assert worst <= 1e-9, deviations
    assert elapsed < 1.0, f"identity evaluation took {elapsed:.2f}s (budget 1s)"


def test_criterion_2_clique_end_to_end_exactness(campaign):
    worst = 0.0
    for entry in campaign:
        for ms, models in ((entry.ms_full, entry.models_full),
                           (entry.ms_hidden, entry.models_hidden)):
            for metric in ("latency", "bandwidth"):
                geo = end_to_end_report(models["clique"], ms, metric).geo_mean_all
                worst = max(worst, abs(geo - 1.0))
    ok = worst <= 1e-9
    report_line("2", ok, f"worst clique geo-mean deviation {worst:.2e}")
    assert ok


def test_criterion_3_improving_postcondition(campaign):
    checked = 0
    for entry in campaign:
        for tag in ("imptreelat", "imptreebw"):
            model = entry.models_full[tag]
            for a, b in entry.ms_full.pairs():
                pred = predict(model, "latency", a, b)
                meas = entry.ms_full.lat_between(a, b)
                assert pred <= THRESHOLD * meas * (1 + 1e-9), (
                    f"{tag} over-predicts {a}-{b} on platform {entry.index}: "
                    f"{pred} vs {meas}"
                )
                checked += 1
    report_line("3", True, f"{checked} pairs, zero over-predictions beyond {THRESHOLD}")


def test_criterion_4_tree_recovery():
    worst = 0.0
    for seed in range(5):
        params = GenParams(n_hosts=20, n_backbone_routers=6, clusters=4,
                           extra_backbone_edges=0, seed=500 + seed)
        p = generate(params)
        ms = measure_end_to_end(p, observable_hosts(p, ALL_NODES))
        model = build_model("treelat", ms)
        assert set(model.graph.links) == set(p.links), f"edge set differs on seed {seed}"
        for metric in ("latency", "bandwidth"):
            geo = end_to_end_report(model, ms, metric).geo_mean_all
            worst = max(worst, abs(geo - 1.0))
    ok = worst <= 1e-9
    report_line("4", ok, f"5 tree platforms recovered, worst report deviation {worst:.2e}")
    assert ok


def _sorted_sum(values) -> float:
    return sum(sorted(values))


def test_criterion_5_spanning_tree_oracle():
    rng = random.Random(2024)
    for case in range(200):
        n = rng.randint(3, 7)
        hosts = tuple(f"h{i}" for i in range(n))
        lat = np.zeros((n, n))
        bw = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                lat[i, j] = lat[j, i] = rng.uniform(0.1, 50.0)
                bw[i, j] = bw[j, i] = rng.uniform(1.0, 800.0)
        ms = MeasurementSet(hosts, lat, bw, (), f"case{case}")
        lat_w = {p: ms.lat_between(*p) for p in ms.pairs()}
        bw_w = {p: ms.bw_between(*p) for p in ms.pairs()}
        tree_lat = build_model("treelat", ms)
        tree_bw = build_model("treebw", ms)
        got_lat = _sorted_sum(lat_w[e] for e in tree_lat.graph.links)
        got_bw = _sorted_sum(bw_w[e] for e in tree_bw.graph.links)
        assert got_lat == exhaustive_spanning_weight(hosts, lat_w, maximize=False)
        assert got_bw == exhaustive_spanning_weight(hosts, bw_w, maximize=True)
    report_line("5", True, "200 measurement sets match brute-force spanning trees exactly")


def test_criterion_6_maxmin_oracle():
    rng = random.Random(99)
    worst = 0.0
    for _ in range(100):
        n_links = rng.randint(1, 4)
        n_flows = rng.randint(1, 4)
        caps = {("link", str(i)): float(rng.randint(1, 100)) for i in range(n_links)}
        keys = sorted(caps)
        flows = [frozenset(rng.sample(keys, rng.randint(1, n_links))) for _ in range(n_flows)]
        rates = waterfill(caps, flows)
        oracle = grid_maximin(caps, flows)
        for got, want in zip(rates, oracle):
            worst = max(worst, abs(got - want) / max(want, 1e-12))
        check_allocation(caps, flows, rates)
    ok = worst <= 1e-3
    report_line("6", ok, f"100 instances, worst relative deviation {worst:.2e}")
    assert ok


def test_criterion_7_trend_reproduction(campaign):
    kernel_params = {"token_mb": 0.01, "message_mb": 10.0}
    ratios_bw, ratios_clique = [], []
    token_dev = broadcast_dev = 0.0
    for entry in campaign:
        p, ms = entry.platform, entry.ms_full
        seed = entry.index
        ratios_bw.append(applicative_report(p, entry.models_full["imptreebw"],
                                            "all2all", kernel_params, seed))
        clique = entry.models_full["clique"]
        ratios_clique.append(applicative_report(p, clique, "all2all", kernel_params, seed))
        token_dev = max(token_dev, abs(applicative_report(p, clique, "token",
                                                          kernel_params, seed) - 1.0))
        broadcast_dev = max(broadcast_dev, abs(applicative_report(p, clique, "broadcast",
                                                                  kernel_params, seed) - 1.0))
    geo = math.exp(sum(math.log(r) for r in ratios_bw) / len(ratios_bw))
    clique_worse = sum(1 for c, b in zip(ratios_clique, ratios_bw) if c > b)
    ok_a = geo <= 1.25
    ok_b = clique_worse >= 8
    ok_c = token_dev <= 1e-6 and broadcast_dev <= 1e-6
    report_line("7", ok_a and ok_b and ok_c,
                f"imptreebw all2all geo {geo:.4f} <= 1.25: {ok_a}; "
                f"clique worse on {clique_worse}/10: {ok_b}; "
                f"clique token/broadcast dev {max(token_dev, broadcast_dev):.2e}: {ok_c}")
    assert ok_a, f"imptreebw all2all geometric mean {geo:.4f} exceeds 1.25"
    assert ok_b, f"clique all2all worse on only {clique_worse}/10 platforms"
    assert ok_c


def test_criterion_8_interference_trend():
    with resources.as_file(resources.files("netrecon") / "data" / "renater_like.json") as path:
        p = load_platform(path)
    hosts = observable_hosts(p, HOSTS_ONLY)
    assert len(hosts) == 11
    ms = measure_platform(p, hosts, sampling="all")
    reports = {
        tag: interference_report(p, build_model(tag, ms), ms.interference)
        for tag in ("imptreebw", "imptreelat")
    }
    acc_bw = reports["imptreebw"].accuracy_fraction
    fp_bw = reports["imptreebw"].false_positive_fraction
    fp_lat = reports["imptreelat"].false_positive_fraction
    ok = acc_bw >= 0.90 and fp_lat > fp_bw
    report_line("8", ok, f"imptreebw accuracy {acc_bw:.3f} >= 0.90; "
                         f"fp imptreelat {fp_lat:.3f} > fp imptreebw {fp_bw:.3f}")
    assert acc_bw >= 0.90
    assert fp_lat > fp_bw


def test_criterion_9_hidden_router_degradation(campaign):
    clique_dev = 0.0
    for entry in campaign:
        for metric in ("latency", "bandwidth"):
            geo = end_to_end_report(entry.models_hidden["clique"], entry.ms_hidden,
                                    metric).geo_mean_all
            clique_dev = max(clique_dev, abs(geo - 1.0))
    assert clique_dev <= 1e-9, "clique end-to-end reports drift in hosts-only mode"

    counts = {}
    for tag in NONCLIQUE:
        counts[tag] = sum(
            1 for entry in campaign
            if end_to_end_report(entry.models_hidden[tag], entry.ms_hidden,
                                 "bandwidth").geo_mean_all
            > end_to_end_report(entry.models_full[tag], entry.ms_full,
                                "bandwidth").geo_mean_all
        )
    ok = all(c >= 7 for c in counts.values())
    report_line("9", ok, f"clique stays exact; hidden-worse counts {counts} (need >= 7 each)")
    assert ok, (
        f"hidden-mode bandwidth degradation not reproduced: {counts}. "
        "Under noise-free measurement emulation, host-level bottleneck "
        "bandwidths on tree-like platforms satisfy the widest-path property, "
        "so bandwidth-anchored builders stay exact (or better) without router "
        "access; see the README's Known-failure note."
    )


def test_criterion_10_pipeline_determinism(tmp_path):
    config_doc = {
        "name": "determinism",
        "observability": "hosts",
        "platforms": {"generate": [
            {"n_hosts": 12, "n_backbone_routers": 4, "clusters": 3, "extra_backbone_edges": 1},
            {"n_hosts": 12, "n_backbone_routers": 4, "clusters": 3, "extra_backbone_edges": 0},
        ]},
        "builders": ["clique", "treebw", "imptreebw"],
        "kernels": ["token", "all2all"],
        "kernel_params": {"token_mb": 0.01, "message_mb": 2.0},
        "seed": 21,
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config_doc))
    out1 = run_pipeline(load_campaign_config(config_path), tmp_path / "run1")
    out2 = run_pipeline(load_campaign_config(config_path), tmp_path / "run2")
    same = all(
        (out1 / name).read_bytes() == (out2 / name).read_bytes()
        for name in ("summary.csv", "interference.csv", "extremes.csv")
    )
    report_line("10", same, "two pipeline runs produce byte-identical CSV output")
    assert same
