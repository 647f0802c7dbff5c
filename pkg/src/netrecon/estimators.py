"""Estimator-style interface to the model builders.

Builders follow the scikit-learn convention: constructor arguments are kept
verbatim as hyper-parameters (get_params/set_params/clone work), fit() takes
a MeasurementSet and stores the reconstructed topology in `model_`, and
predict() maps host pairs to predicted latencies or bandwidths.

    >>> builder = ImprovingBuilder(base=BandwidthTreeBuilder())
    >>> builder.fit(measurements).predict([("a", "b")], metric="latency")
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from netrecon.measurement import MeasurementSet
from netrecon.reconstruct import (
    DEFAULT_SLACK,
    DEFAULT_THRESHOLD,
    LATENCY,
    Model,
    ReconstructionError,
    build_aggregate,
    build_clique,
    build_tree_bw,
    build_tree_lat,
    improve,
    predict,
)


def check_measurements(X) -> MeasurementSet:
    """Validate fit input: a MeasurementSet with at least two hosts."""
    if not isinstance(X, MeasurementSet):
        raise TypeError(f"expected a MeasurementSet, got {type(X).__name__}")
    X.validate()
    return X


class TopologyBuilder(BaseEstimator):
    """Base class: fit a MeasurementSet, predict per-pair values."""

    def _build(self, ms: MeasurementSet) -> Model:
        raise NotImplementedError

    def fit(self, X, y=None):
        ms = check_measurements(X)
        self.model_ = self._build(ms)
        self.hosts_ = self.model_.hosts
        return self

    def _fitted_model(self) -> Model:
        model = getattr(self, "model_", None)
        if model is None:
            raise NotFittedError(f"{type(self).__name__} is not fitted; call fit first")
        return model

    def predict(self, pairs: Sequence[tuple[str, str]], metric: str = LATENCY) -> np.ndarray:
        model = self._fitted_model()
        return np.array([predict(model, metric, a, b) for a, b in pairs])

    def fit_predict(self, X, pairs: Sequence[tuple[str, str]], metric: str = LATENCY) -> np.ndarray:
        return self.fit(X).predict(pairs, metric)


class CliqueBuilder(TopologyBuilder):
    """Complete graph over the measured hosts; reproduces every measurement."""

    def _build(self, ms: MeasurementSet) -> Model:
        return build_clique(ms)


class LatencyTreeBuilder(TopologyBuilder):
    """Minimum spanning tree on measured latencies."""

    def _build(self, ms: MeasurementSet) -> Model:
        return build_tree_lat(ms)


class BandwidthTreeBuilder(TopologyBuilder):
    """Maximum spanning tree on measured bandwidths."""

    def _build(self, ms: MeasurementSet) -> Model:
        return build_tree_bw(ms)


class ImprovingBuilder(TopologyBuilder):
    """Meta-builder: fits `base`, then repairs over-predicted latencies.

    Parameters
    ----------
    base : TopologyBuilder or None
        Seed topology builder; defaults to the bandwidth spanning tree.
    threshold : float
        Accuracy ratio above which a pair counts as over-predicted.
    """

    def __init__(self, base: TopologyBuilder | None = None, threshold: float = DEFAULT_THRESHOLD):
        self.base = base
        self.threshold = threshold

    def _build(self, ms: MeasurementSet) -> Model:
        base = self.base if self.base is not None else BandwidthTreeBuilder()
        seed_model = base._build(ms)
        return improve(seed_model, ms, self.threshold)


class AggregateBuilder(TopologyBuilder):
    """Constructive builder growing a connected host set by latency."""

    def __init__(self, threshold: float = DEFAULT_THRESHOLD, slack: float = DEFAULT_SLACK):
        self.threshold = threshold
        self.slack = slack

    def _build(self, ms: MeasurementSet) -> Model:
        return build_aggregate(ms, self.threshold, self.slack)


BUILDER_TAGS = ("clique", "treelat", "treebw", "imptreelat", "imptreebw", "aggregate")


def make_builder(
    tag: str,
    threshold: float = DEFAULT_THRESHOLD,
    slack: float = DEFAULT_SLACK,
) -> TopologyBuilder:
    """Builder instance for a CLI tag; raises listing valid tags when unknown."""
    if tag == "clique":
        return CliqueBuilder()
    if tag == "treelat":
        return LatencyTreeBuilder()
    if tag == "treebw":
        return BandwidthTreeBuilder()
    if tag == "imptreelat":
        return ImprovingBuilder(base=LatencyTreeBuilder(), threshold=threshold)
    if tag == "imptreebw":
        return ImprovingBuilder(base=BandwidthTreeBuilder(), threshold=threshold)
    if tag == "aggregate":
        return AggregateBuilder(threshold=threshold, slack=slack)
    raise ReconstructionError(f"unknown builder {tag!r}; valid builders: {', '.join(BUILDER_TAGS)}")


def build_model(
    tag: str,
    ms: MeasurementSet,
    threshold: float = DEFAULT_THRESHOLD,
    slack: float = DEFAULT_SLACK,
) -> Model:
    """One-shot build: fit the tagged builder and return its model."""
    return make_builder(tag, threshold, slack).fit(ms).model_
