"""Command-line entry point: ``run``, ``sweep``, ``capacity`` and ``paths``."""

from __future__ import annotations

import argparse
import sys

from .cvqkd_model import QkdParams, link_key_capacity
from .errors import ConfigError, InputDomainError
from .io import RunManifest, config_digest, emit_results, load_config, summary_row, SUMMARY_COLUMNS
from .network import k_shortest_paths, named_topology
from .sweep import run_scenario, sweep


def _node_id(topology, token: str) -> int:
    try:
        return int(token)
    except ValueError:
        pass
    for n in topology.nodes:
        if n.name.lower() == token.lower():
            return n.id
    raise InputDomainError(f"unknown node {token!r}")


def _print_rows(results) -> None:
    print(",".join(SUMMARY_COLUMNS))
    for r in results:
        print(",".join(summary_row(r)))


def cmd_run(args) -> int:
    config, _ = load_config(args.config)
    result = run_scenario(config)
    manifest = RunManifest.start(config_digest(config))
    emit_results([result], args.out, detail=args.detail, manifest=manifest)
    _print_rows([result])
    return 0


def cmd_sweep(args) -> int:
    config, axes = load_config(args.config)
    if not axes:
        raise ConfigError("no sweep section in config", "sweep")
    manifest = RunManifest.start(config_digest(config, axes))
    results = sweep(config, axes, threads=args.threads)
    emit_results(results, args.out, detail=args.detail, manifest=manifest)
    failed = [r for r in results if r.error]
    for r in failed:
        print(f"{r.scenario_id}: {r.error}", file=sys.stderr)
    print(f"{len(results)} scenarios written to {args.out} ({len(failed)} failed)")
    return 1 if failed else 0


def cmd_capacity(args) -> int:
    topology = named_topology(args.topology, args.lam)
    params = QkdParams()
    print("link_id,src,dst,length_km,capacity_bps")
    for link in topology.links:
        cap = link_key_capacity(link.scaled_length_km, args.channels, params)
        src, dst = topology.node_name(link.src), topology.node_name(link.dst)
        print(f"{link.id},{src},{dst},{link.scaled_length_km:.6g},{cap:.0f}")
    return 0


def cmd_paths(args) -> int:
    topology = named_topology(args.topology, args.lam)
    src, dst = _node_id(topology, args.src), _node_id(topology, args.dst)
    for i, p in enumerate(k_shortest_paths(topology, src, dst, args.k)):
        names = "-".join(topology.node_name(n) for n in p.nodes)
        print(f"{i + 1}\t{p.length_km:.6g} km\t{names}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvqkd-wdm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def outputs(p):
        p.add_argument("--out", default="results", help="output directory (default: results)")
        p.add_argument("--detail", action="store_true", help="also write per-link links.csv")
        p.add_argument("--threads", type=int, default=1, help="parallel scenarios; output is unaffected")

    p = sub.add_parser("run", help="run the single scenario described by a config")
    p.add_argument("config")
    outputs(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run the grid in the config's sweep section")
    p.add_argument("config")
    outputs(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("capacity", help="per-link QKD key capacity with default constants")
    p.add_argument("topology")
    p.add_argument("lam", type=float, metavar="lambda")
    p.add_argument("--channels", type=int, default=0, help="active WDM channels per link")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("paths", help="k shortest loopless paths between two nodes")
    p.add_argument("topology")
    p.add_argument("src")
    p.add_argument("dst")
    p.add_argument("k", type=int)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.set_defaults(func=cmd_paths)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InputDomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
