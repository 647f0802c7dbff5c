"""Scoring of reconstructed models against their original platform.

Three complementary views: end-to-end accuracy of per-pair latency and
bandwidth predictions (geometric-mean accuracy indices with over/under
breakdown), interference-prediction correctness (does the model's route
sharing match the measured rate drops), and applicative accuracy (simulated
completion time of application kernels on the model vs the original).

Accuracy of a prediction x_R against a measurement x_M is
max(x_R/x_M, x_M/x_R): 1.0 is perfect, larger is worse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from netrecon.measurement import InterferenceRecord, MeasurementSet
from netrecon.network import Platform, path_bandwidth, route
from netrecon.reconstruct import BANDWIDTH, LATENCY, Model, model_routes, predict
from netrecon.simulate import (
    AppTrace,
    all2all_trace,
    broadcast_trace,
    grid_shape,
    platform_routes,
    pmm_trace,
    simulate,
    token_ring_trace,
)

KERNELS = ("token", "broadcast", "all2all", "pmm")

KERNEL_DEFAULTS: dict[str, float | int] = {
    "token_mb": 0.01,
    "message_mb": 10.0,
    "matrix_dim": 1024,
    "block": 256,
}

# Relative tolerance below which a prediction counts as exact.
_EXACT_RTOL = 1e-9

DEFAULT_EPSILON = 0.05


class EvaluationError(ValueError):
    """Raised for invalid evaluation inputs."""


def accuracy(x_r: float, x_m: float) -> float:
    """max(x_r/x_m, x_m/x_r); requires both values positive."""
    if not (x_r > 0 and x_m > 0) or not (math.isfinite(x_r) and math.isfinite(x_m)):
        raise EvaluationError(f"accuracy needs positive finite values, got ({x_r}, {x_m})")
    return max(x_r / x_m, x_m / x_r)


@dataclass(frozen=True)
class AccuracyReport:
    metric: str
    geo_mean_all: float
    geo_mean_over: float
    geo_mean_under: float
    count_over: int
    count_under: int
    count_exact: int
    minimum: float
    maximum: float

    @property
    def total(self) -> int:
        return self.count_over + self.count_under + self.count_exact


def _geo_mean(values: Sequence[float]) -> float:
    if not values:
        return 1.0
    return math.exp(sum(math.log(v) for v in values) / len(values))


def _classify(pred: float, meas: float) -> str:
    if abs(pred - meas) <= _EXACT_RTOL * meas:
        return "exact"
    return "over" if pred > meas else "under"


def _report_from_pairs(metric: str, observed: Sequence[tuple[float, float]]) -> AccuracyReport:
    ratios = []
    buckets = {"over": [], "under": [], "exact": []}
    for pred, meas in observed:
        ratio = accuracy(pred, meas)
        ratios.append(ratio)
        buckets[_classify(pred, meas)].append(ratio)
    return AccuracyReport(
        metric=metric,
        geo_mean_all=_geo_mean(ratios),
        geo_mean_over=_geo_mean(buckets["over"]),
        geo_mean_under=_geo_mean(buckets["under"]),
        count_over=len(buckets["over"]),
        count_under=len(buckets["under"]),
        count_exact=len(buckets["exact"]),
        minimum=min(ratios),
        maximum=max(ratios),
    )


def end_to_end_report(model: Model, ms: MeasurementSet, metric: str) -> AccuracyReport:
    """Geometric-mean accuracy of the model's per-pair predictions."""
    if metric not in (LATENCY, BANDWIDTH):
        raise EvaluationError(f"unknown end-to-end metric {metric!r}")
    getter = ms.lat_between if metric == LATENCY else ms.bw_between
    observed = [(predict(model, metric, a, b), getter(a, b)) for a, b in ms.pairs()]
    return _report_from_pairs(metric, observed)


def predicts_interference(model: Model, flow1: tuple[str, str], flow2: tuple[str, str]) -> bool:
    """Whether the model routes the two flows across at least one common link."""
    links1 = set(model.route(*flow1).links)
    links2 = set(model.route(*flow2).links)
    return bool(links1 & links2)


@dataclass(frozen=True)
class InterferenceReport:
    total: int
    correct: int
    false_positive: int
    false_negative: int

    @property
    def accuracy_fraction(self) -> float:
        return self.correct / self.total if self.total else 1.0

    @property
    def false_positive_fraction(self) -> float:
        return self.false_positive / self.total if self.total else 0.0


def interference_report(
    platform: Platform,
    model: Model,
    records: Sequence[InterferenceRecord],
    epsilon: float = DEFAULT_EPSILON,
) -> InterferenceReport:
    """Compare the model's sharing predictions with measured rate drops.

    Ground truth for a record is a concurrent rate more than `epsilon`
    (relative) below the standalone rate of either flow; sharing a link
    without a rate drop does not count as real interference.
    """
    if not 0 < epsilon < 1:
        raise EvaluationError(f"epsilon must be in (0, 1), got {epsilon}")
    standalone: dict[tuple[str, str], float] = {}
    model_links: dict[tuple[str, str], frozenset] = {}

    def standalone_bw(pair: tuple[str, str]) -> float:
        found = standalone.get(pair)
        if found is None:
            found = standalone[pair] = path_bandwidth(platform, route(platform, *pair))
        return found

    def links_of(pair: tuple[str, str]) -> frozenset:
        found = model_links.get(pair)
        if found is None:
            found = model_links[pair] = frozenset(model.route(*pair).links)
        return found

    correct = false_positive = false_negative = 0
    for rec in records:
        dropped = (
            rec.bw1_concurrent < (1 - epsilon) * standalone_bw(rec.flow1)
            or rec.bw2_concurrent < (1 - epsilon) * standalone_bw(rec.flow2)
        )
        predicted = bool(links_of(rec.flow1) & links_of(rec.flow2))
        if predicted == dropped:
            correct += 1
        elif predicted:
            false_positive += 1
        else:
            false_negative += 1
    return InterferenceReport(len(records), correct, false_positive, false_negative)


def build_kernel_trace(
    kernel: str,
    hosts: Sequence[str],
    params: Mapping[str, float | int],
    seed: int,
) -> AppTrace:
    merged = dict(KERNEL_DEFAULTS)
    merged.update(params)
    if kernel == "token":
        return token_ring_trace(hosts, seed, float(merged["token_mb"]))
    if kernel == "broadcast":
        return broadcast_trace(hosts, seed, float(merged["message_mb"]))
    if kernel == "all2all":
        return all2all_trace(hosts, float(merged["message_mb"]))
    if kernel == "pmm":
        grid = merged.get("grid") or grid_shape(len(hosts))
        p, q = grid
        if p * q < 2:
            raise EvaluationError(f"pmm needs at least 2 grid hosts, got {p}x{q}")
        return pmm_trace(hosts, (p, q), int(merged["matrix_dim"]), int(merged["block"]))
    raise EvaluationError(f"unknown kernel {kernel!r} (expected one of {KERNELS})")


def kernel_hosts(platform: Platform, model: Model) -> list[str]:
    """Endpoints for application kernels: the model's compute hosts.

    Application kernels run on hosts; router nodes can be measurement
    vantage points (all-nodes observability) but never application
    endpoints. Falls back to every modeled node when the platform has no
    host-kind nodes at all.
    """
    hosts = [h for h in model.hosts if platform.has_node(h) and platform.node(h).kind == "host"]
    return hosts or list(model.hosts)


def applicative_report(
    platform: Platform,
    model: Model,
    kernel: str,
    params: Mapping[str, float | int] | None = None,
    seed: int = 0,
    hosts: Sequence[str] | None = None,
) -> float:
    """Accuracy of the model's predicted completion time for a kernel.

    The same trace (same seed) is simulated on the original platform with
    its own routing and on the model graph with the model's route table.
    """
    endpoints = list(hosts) if hosts is not None else kernel_hosts(platform, model)
    trace = build_kernel_trace(kernel, endpoints, params or {}, seed)
    t_orig = simulate(platform, platform_routes(platform), trace).completion_ms
    t_model = simulate(model.graph, model_routes(model), trace).completion_ms
    return accuracy(t_model, t_orig)


def single_value_report(metric: str, pred: float, meas: float) -> AccuracyReport:
    """An AccuracyReport for one observation (used for applicative metrics)."""
    return _report_from_pairs(metric, [(pred, meas)])


def applicative_accuracy_report(
    platform: Platform,
    model: Model,
    kernel: str,
    params: Mapping[str, float | int] | None = None,
    seed: int = 0,
    hosts: Sequence[str] | None = None,
) -> AccuracyReport:
    endpoints = list(hosts) if hosts is not None else kernel_hosts(platform, model)
    trace = build_kernel_trace(kernel, endpoints, params or {}, seed)
    t_orig = simulate(platform, platform_routes(platform), trace).completion_ms
    t_model = simulate(model.graph, model_routes(model), trace).completion_ms
    return single_value_report(kernel, t_model, t_orig)


# ---------------------------------------------------------------------------
# CSV emission (fixed headers, stable float formatting)
# ---------------------------------------------------------------------------

ACCURACY_CSV_HEADER = (
    "campaign,platform,builder,metric,geo_mean_all,geo_mean_over,geo_mean_under,"
    "min,max,count_over,count_under,count_exact"
)

INTERFERENCE_CSV_HEADER = (
    "campaign,platform,builder,total,correct,false_positive,false_negative,accuracy_fraction"
)


def fmt(value: float) -> str:
    return format(value, ".12g")


def accuracy_csv_row(campaign: str, platform_name: str, builder: str, report: AccuracyReport) -> str:
    return ",".join(
        [
            campaign,
            platform_name,
            builder,
            report.metric,
            fmt(report.geo_mean_all),
            fmt(report.geo_mean_over),
            fmt(report.geo_mean_under),
            fmt(report.minimum),
            fmt(report.maximum),
            str(report.count_over),
            str(report.count_under),
            str(report.count_exact),
        ]
    )


def interference_csv_row(
    campaign: str, platform_name: str, builder: str, report: InterferenceReport
) -> str:
    return ",".join(
        [
            campaign,
            platform_name,
            builder,
            str(report.total),
            str(report.correct),
            str(report.false_positive),
            str(report.false_negative),
            fmt(report.accuracy_fraction),
        ]
    )
