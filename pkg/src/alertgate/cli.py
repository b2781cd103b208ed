"""Command-line entry point: ``alertgate correlate | gen | bench``.

Exit codes: 0 success, 1 input or parse error, 2 graph validation
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from alertgate.attack_graph import load_attack_graph
from alertgate.errors import AlertGateError, GraphValidationError
from alertgate.floodbench import FloodSpec, ScenarioSpec, generate_flood, interleave_scenario, run_benchmark
from alertgate.pipeline import PipelineConfig, run_pipeline

EXIT_OK, EXIT_INPUT, EXIT_GRAPH, EXIT_IO = 0, 1, 2, 3


def _add_filter_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rate", type=float, default=2.0, help="per-queue tokens per second")
    p.add_argument("--burst", type=float, default=20.0, help="per-queue bucket size")
    p.add_argument("--fallback-rate", type=float, default=2.0,
                   help="tokens per second for each unmapped signature")
    p.add_argument("--fallback-burst", type=float, default=20.0,
                   help="bucket size for each unmapped signature")
    p.add_argument("--mode", choices=("stop", "hypothesize"), default="stop",
                   help="what to do at an empty queue during correlation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alertgate", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("correlate", help="throttle and correlate an alert stream")
    p.add_argument("--graph", required=True)
    p.add_argument("--input", default="-", help="alert stream file, or - for stdin")
    _add_filter_flags(p)
    p.add_argument("--out-alerts", required=True)
    p.add_argument("--out-graph", required=True)
    p.add_argument("--dot")
    p.add_argument("--stats", action="store_true", help="print run statistics as JSON to stderr")

    p = sub.add_parser("gen", help="generate a synthetic alert flood")
    p.add_argument("--total", type=int, required=True)
    p.add_argument("--pps", type=float, required=True)
    p.add_argument("--sig", default="icmp-flood")
    p.add_argument("--dst", required=True)
    p.add_argument("--random-src", action="store_true")
    p.add_argument("--src-cidr", default="0.0.0.0/0")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start-ts", type=float, default=0.0)
    p.add_argument("--scenario", help="scenario file to interleave (requires --graph)")
    p.add_argument("--graph")
    p.add_argument("--output", "-o", help="write here instead of stdout")

    p = sub.add_parser("bench", help="compare unthrottled and throttled runs")
    p.add_argument("--graph", required=True)
    p.add_argument("--input", required=True)
    _add_filter_flags(p)
    p.add_argument("--report", required=True)
    return parser


def _correlate(args) -> int:
    config = PipelineConfig(
        graph_path=args.graph, input_path=args.input,
        output_alert_path=args.out_alerts, output_graph_path=args.out_graph,
        dot_path=args.dot, rate=args.rate, burst=args.burst,
        fallback_rate=args.fallback_rate, fallback_burst=args.fallback_burst,
        hypothesis_mode=args.mode,
    )
    stats = run_pipeline(config)
    if args.stats:
        print(json.dumps(stats.to_dict(), indent=1), file=sys.stderr)
    return EXIT_OK


def _gen(args) -> int:
    spec = FloodSpec(total=args.total, pps=args.pps, sig=args.sig, dst=args.dst,
                     src_mode="random" if args.random_src else "fixed",
                     src_cidr=args.src_cidr, seed=args.seed, start_ts=args.start_ts)
    text = generate_flood(spec)
    if args.scenario:
        if not args.graph:
            raise AlertGateError("--scenario requires --graph")
        graph = load_attack_graph(Path(args.graph).read_text())
        scenario = ScenarioSpec.from_dict(json.loads(Path(args.scenario).read_text()))
        text = interleave_scenario(text, scenario, graph)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _bench(args) -> int:
    graph = load_attack_graph(Path(args.graph).read_text())
    stream = Path(args.input).read_text()
    report = run_benchmark(graph, stream, rate=args.rate, burst=args.burst,
                           fallback_rate=args.fallback_rate,
                           fallback_burst=args.fallback_burst, mode=args.mode)
    Path(args.report).write_text(json.dumps(report.to_dict(), indent=1) + "\n")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"correlate": _correlate, "gen": _gen, "bench": _bench}[args.command]
    try:
        return handler(args)
    except GraphValidationError as exc:
        print(f"alertgate: invalid attack graph: {exc}", file=sys.stderr)
        return EXIT_GRAPH
    except (AlertGateError, ValueError, KeyError) as exc:
        print(f"alertgate: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"alertgate: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
