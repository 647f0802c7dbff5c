"""Command-line front end: generate, measure, reconstruct, evaluate, pipeline.

All artifacts are files in the package's JSON formats; reports are CSV with
fixed headers. Every command is deterministic given its arguments and
inputs, and the pipeline emits byte-stable output so campaign reruns diff
clean.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from netrecon.estimators import BUILDER_TAGS, build_model
from netrecon.evaluate import (
    ACCURACY_CSV_HEADER,
    DEFAULT_EPSILON,
    INTERFERENCE_CSV_HEADER,
    KERNELS,
    accuracy_csv_row,
    applicative_accuracy_report,
    end_to_end_report,
    fmt,
    interference_csv_row,
    interference_report,
)
from netrecon.generation import (
    ALL_NODES,
    HOSTS_ONLY,
    GenParams,
    generate,
    genparams_from_dict,
    observable_hosts,
)
from netrecon.measurement import (
    MeasurementSet,
    load_measurements,
    measure_end_to_end,
    measure_interference,
    save_measurements,
)
from netrecon.network import Platform, load_platform, save_platform
from netrecon.reconstruct import DEFAULT_SLACK, DEFAULT_THRESHOLD, load_model, save_model

# Above this many observable hosts the CLI samples interference pairs
# instead of enumerating all of them (k = 20 * n^2).
_EXHAUSTIVE_HOST_LIMIT = 30


class CliError(Exception):
    """User-facing command failure; printed to stderr with exit status 1."""


def _interference(platform: Platform, hosts, sampling: str, k: int | None, seed: int):
    if sampling == "auto":
        if len(hosts) <= _EXHAUSTIVE_HOST_LIMIT:
            sampling = "all"
        else:
            sampling, k = "random", 20 * len(hosts) ** 2
    elif sampling == "random" and k is None:
        k = 20 * len(hosts) ** 2
    return measure_interference(platform, hosts, sampling, k, seed)


def cmd_generate(args) -> None:
    if args.hosts < 2:
        raise CliError(f"need at least 2 hosts for a measurable platform, got {args.hosts}")
    params = GenParams(
        n_hosts=args.hosts,
        n_backbone_routers=args.routers,
        clusters=args.clusters,
        wan_latency_range=tuple(args.wan_latency),
        lan_latency_range=tuple(args.lan_latency),
        wan_bw_range=tuple(args.wan_bw),
        lan_bw_range=tuple(args.lan_bw),
        extra_backbone_edges=args.extra_edges,
        seed=args.seed,
    )
    platform = generate(params)
    save_platform(platform, args.out)
    print(f"{platform.name}: {len(platform.node_ids)} nodes, {len(platform.links)} edges -> {args.out}")


def cmd_measure(args) -> None:
    platform = load_platform(args.platform)
    hosts = observable_hosts(platform, args.observability)
    ms = measure_end_to_end(platform, hosts)
    records = _interference(platform, hosts, args.sampling, args.sample_k, args.seed)
    ms = ms.with_interference(records)
    save_measurements(ms, args.out)
    print(f"{platform.name}: {len(hosts)} hosts, {len(records)} interference records -> {args.out}")


def cmd_reconstruct(args) -> None:
    ms = load_measurements(args.measurements)
    model = build_model(args.builder, ms, args.threshold, args.slack)
    save_model(model, args.out)
    print(f"{model.builder}: {len(model.hosts)} hosts, {len(model.graph.links)} edges -> {args.out}")


def _evaluation_rows(
    campaign: str,
    platform: Platform,
    model,
    ms: MeasurementSet,
    kernels: Sequence[str],
    kernel_params: dict,
    seed: int,
    epsilon: float,
) -> tuple[list[str], list[str]]:
    accuracy_rows = []
    for metric in ("latency", "bandwidth"):
        report = end_to_end_report(model, ms, metric)
        accuracy_rows.append(accuracy_csv_row(campaign, platform.name, model.builder, report))
    for kernel in kernels:
        report = applicative_accuracy_report(platform, model, kernel, kernel_params, seed)
        accuracy_rows.append(accuracy_csv_row(campaign, platform.name, model.builder, report))
    interference_rows = []
    if ms.interference:
        report = interference_report(platform, model, ms.interference, epsilon)
        interference_rows.append(interference_csv_row(campaign, platform.name, model.builder, report))
    return accuracy_rows, interference_rows


def _write_reports(outdir: Path, accuracy_rows: list[str], interference_rows: list[str]) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "summary.csv").write_text("\n".join([ACCURACY_CSV_HEADER, *accuracy_rows]) + "\n")
    (outdir / "interference.csv").write_text(
        "\n".join([INTERFERENCE_CSV_HEADER, *interference_rows]) + "\n"
    )


def cmd_evaluate(args) -> None:
    platform = load_platform(args.platform)
    model = load_model(args.model)
    ms = load_measurements(args.measurements)
    kernels = _parse_kernels(args.kernels)
    kernel_params = {
        "token_mb": args.token_mb,
        "message_mb": args.message_mb,
        "matrix_dim": args.pmm_n,
        "block": args.pmm_block,
    }
    accuracy_rows, interference_rows = _evaluation_rows(
        args.campaign, platform, model, ms, kernels, kernel_params, args.seed, args.epsilon
    )
    outdir = Path(args.out)
    _write_reports(outdir, accuracy_rows, interference_rows)
    print(f"{len(accuracy_rows)} accuracy rows, {len(interference_rows)} interference rows -> {outdir}")


def _parse_kernels(spec: str) -> list[str]:
    if not spec:
        return []
    kernels = [k.strip() for k in spec.split(",") if k.strip()]
    unknown = sorted(set(kernels) - set(KERNELS))
    if unknown:
        raise CliError(f"unknown kernel(s) {unknown}; valid kernels: {', '.join(KERNELS)}")
    return kernels


# ---------------------------------------------------------------------------
# Pipeline: full campaign from a JSON config
# ---------------------------------------------------------------------------

_CONFIG_FIELDS = {
    "name", "output_dir", "platforms", "observability", "builders", "kernels",
    "kernel_params", "threshold", "slack", "epsilon", "seed", "interference_sampling",
}


def load_campaign_config(path: str | Path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    unknown = sorted(set(data) - _CONFIG_FIELDS)
    if unknown:
        raise CliError(f"unknown config field(s): {unknown}")
    config = {
        "name": data.get("name", "campaign"),
        "output_dir": data.get("output_dir", "campaign-out"),
        "observability": data.get("observability", ALL_NODES),
        "builders": data.get("builders", list(BUILDER_TAGS)),
        "kernels": data.get("kernels", list(KERNELS)),
        "kernel_params": data.get("kernel_params", {}),
        "threshold": float(data.get("threshold", DEFAULT_THRESHOLD)),
        "slack": float(data.get("slack", DEFAULT_SLACK)),
        "epsilon": float(data.get("epsilon", DEFAULT_EPSILON)),
        "seed": int(data.get("seed", 0)),
        "interference_sampling": data.get("interference_sampling", "auto"),
    }
    platforms = data.get("platforms", {})
    generate_specs = platforms.get("generate", [])
    files = platforms.get("files", [])
    if not generate_specs and not files:
        raise CliError("config lists no platforms (platforms.generate / platforms.files)")
    if config["observability"] not in (ALL_NODES, HOSTS_ONLY):
        raise CliError(f"invalid observability {config['observability']!r}")
    unknown_builders = sorted(set(config["builders"]) - set(BUILDER_TAGS))
    if unknown_builders:
        raise CliError(f"unknown builder(s) {unknown_builders}; valid: {', '.join(BUILDER_TAGS)}")
    if not config["builders"]:
        raise CliError("config lists no builders")
    unknown_kernels = sorted(set(config["kernels"]) - set(KERNELS))
    if unknown_kernels:
        raise CliError(f"unknown kernel(s) {unknown_kernels}; valid: {', '.join(KERNELS)}")
    missing = [f for f in files if not Path(f).is_file()]
    if missing:
        raise CliError(f"platform file(s) not found: {missing}")
    config["platform_files"] = [Path(f) for f in files]
    specs = []
    for i, spec in enumerate(generate_specs):
        if "seed" not in spec:
            spec = dict(spec, seed=config["seed"] * 10_000 + i)
        try:
            specs.append(genparams_from_dict(spec))
        except (ValueError, TypeError) as exc:
            raise CliError(f"invalid generator spec #{i}: {exc}") from exc
    config["generate_specs"] = specs
    return config


def run_pipeline(config: dict, output_dir: Path | None = None) -> Path:
    outdir = Path(output_dir or config["output_dir"])
    for sub in ("platforms", "measurements", "models"):
        (outdir / sub).mkdir(parents=True, exist_ok=True)

    platforms: list[Platform] = [generate(spec) for spec in config["generate_specs"]]
    platforms += [load_platform(f) for f in config["platform_files"]]

    accuracy_rows: list[str] = []
    interference_rows: list[str] = []
    geo_by_cell: dict[tuple[str, str], list[float]] = {}

    for index, platform in enumerate(platforms):
        save_platform(platform, outdir / "platforms" / f"{platform.name}.json")
        hosts = observable_hosts(platform, config["observability"])
        ms = measure_end_to_end(platform, hosts)
        records = _interference(
            platform, hosts, config["interference_sampling"], None, config["seed"]
        )
        ms = ms.with_interference(records)
        save_measurements(ms, outdir / "measurements" / f"{platform.name}.json")
        kernel_seed = config["seed"] * 1_000 + index
        for tag in config["builders"]:
            model = build_model(tag, ms, config["threshold"], config["slack"])
            save_model(model, outdir / "models" / f"{platform.name}__{tag}.json")
            acc, interf = _evaluation_rows(
                config["name"], platform, model, ms, config["kernels"],
                config["kernel_params"], kernel_seed, config["epsilon"],
            )
            accuracy_rows.extend(acc)
            interference_rows.extend(interf)
            for row in acc:
                fields = row.split(",")
                geo_by_cell.setdefault((fields[2], fields[3]), []).append(float(fields[4]))

    def sort_key(row: str):
        fields = row.split(",")
        return (fields[1], fields[2], fields[3])

    accuracy_rows.sort(key=sort_key)
    interference_rows.sort(key=lambda row: tuple(row.split(",")[1:3]))
    _write_reports(outdir, accuracy_rows, interference_rows)

    extreme_rows = [
        f"{config['name']},{builder},{metric},{fmt(min(values))},{fmt(max(values))}"
        for (builder, metric), values in sorted(geo_by_cell.items())
    ]
    (outdir / "extremes.csv").write_text(
        "\n".join(["campaign,builder,metric,geo_mean_min,geo_mean_max", *extreme_rows]) + "\n"
    )
    return outdir


def cmd_pipeline(args) -> None:
    config = load_campaign_config(args.config)
    outdir = run_pipeline(config, Path(args.out) if args.out else None)
    print(f"campaign {config['name']}: {len(config['builders'])} builders -> {outdir}")


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _range(parser, flag: str, default: tuple[float, float], help_text: str) -> None:
    parser.add_argument(flag, nargs=2, type=float, metavar=("MIN", "MAX"),
                        default=list(default), help=help_text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netrecon",
        description="Reconstruct network models from end-to-end measurements and score them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a synthetic platform file")
    gen.add_argument("--hosts", type=int, default=60)
    gen.add_argument("--routers", type=int, default=10)
    gen.add_argument("--clusters", type=int, default=6)
    gen.add_argument("--extra-edges", type=int, default=3)
    _range(gen, "--wan-latency", (5.0, 150.0), "WAN latency range, ms")
    _range(gen, "--lan-latency", (0.1, 1.0), "LAN latency range, ms")
    _range(gen, "--wan-bw", (10.0, 100.0), "WAN bandwidth range, MB/s")
    _range(gen, "--lan-bw", (100.0, 1000.0), "LAN bandwidth range, MB/s")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_generate)

    mea = sub.add_parser("measure", help="measure a platform file into a measurement file")
    mea.add_argument("--platform", required=True)
    mea.add_argument("--observability", choices=(ALL_NODES, HOSTS_ONLY), default=ALL_NODES)
    mea.add_argument("--sampling", choices=("auto", "all", "random"), default="auto")
    mea.add_argument("--sample-k", type=int, default=None)
    mea.add_argument("--seed", type=int, default=0)
    mea.add_argument("--out", required=True)
    mea.set_defaults(func=cmd_measure)

    rec = sub.add_parser("reconstruct", help="build a model file from measurements")
    rec.add_argument("--measurements", required=True)
    rec.add_argument("--builder", required=True)
    rec.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    rec.add_argument("--slack", type=float, default=DEFAULT_SLACK)
    rec.add_argument("--out", required=True)
    rec.set_defaults(func=cmd_reconstruct)

    eva = sub.add_parser("evaluate", help="score a model against its platform")
    eva.add_argument("--platform", required=True)
    eva.add_argument("--model", required=True)
    eva.add_argument("--measurements", required=True)
    eva.add_argument("--kernels", default="token,broadcast,all2all,pmm")
    eva.add_argument("--token-mb", type=float, default=0.01)
    eva.add_argument("--message-mb", type=float, default=10.0)
    eva.add_argument("--pmm-n", type=int, default=1024)
    eva.add_argument("--pmm-block", type=int, default=256)
    eva.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    eva.add_argument("--seed", type=int, default=0)
    eva.add_argument("--campaign", default="adhoc")
    eva.add_argument("--out", required=True)
    eva.set_defaults(func=cmd_evaluate)

    pipe = sub.add_parser("pipeline", help="run a full campaign from a config file")
    pipe.add_argument("--config", required=True)
    pipe.add_argument("--out", default=None)
    pipe.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
