"""netrecon: reconstruct network models from end-to-end measurements.

The toolkit covers the full loop: generate or load a ground-truth platform,
emulate application-level measurements on it (latency/bandwidth matrices,
flow interference), reconstruct labeled-graph models with explicit route
tables, and score the models end-to-end, on interference prediction, and on
simulated application kernels.
"""

from netrecon.estimators import (
    AggregateBuilder,
    BandwidthTreeBuilder,
    BUILDER_TAGS,
    CliqueBuilder,
    ImprovingBuilder,
    LatencyTreeBuilder,
    TopologyBuilder,
    build_model,
    make_builder,
)
from netrecon.evaluate import (
    AccuracyReport,
    InterferenceReport,
    accuracy,
    applicative_report,
    end_to_end_report,
    interference_report,
    predicts_interference,
)
from netrecon.generation import ALL_NODES, HOSTS_ONLY, GenParams, generate, observable_hosts
from netrecon.measurement import (
    InterferenceRecord,
    MeasurementSet,
    load_measurements,
    measure_end_to_end,
    measure_interference,
    measure_platform,
    save_measurements,
)
from netrecon.network import (
    HOST,
    ROUTER,
    LinkLabel,
    NetworkError,
    Node,
    Platform,
    Route,
    load_platform,
    path_bandwidth,
    path_latency,
    route,
    routes_share_link,
    save_platform,
)
from netrecon.reconstruct import (
    Model,
    build_aggregate,
    build_clique,
    build_tree_bw,
    build_tree_lat,
    exact_copy,
    improve,
    load_model,
    predict,
    save_model,
)
from netrecon.simulate import (
    AppTrace,
    Transfer,
    all2all_trace,
    broadcast_trace,
    load_trace,
    maxmin_allocate,
    pmm_trace,
    save_trace,
    simulate,
    token_ring_trace,
)

__version__ = "0.1.0"
