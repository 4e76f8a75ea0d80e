"""Command line entry point: ``mfpo run <config>`` and ``mfpo report <csv...>``."""

import argparse
import sys

from .errors import ParseError
from .harness import compare_report, load_config, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfpo", description="Federated policy optimization experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="train with a config file and write metrics CSV")
    p_run.add_argument("config", help="flat key = value config file")
    p_run.add_argument("--seed", type=int, help="master seed")
    p_run.add_argument("--out", help="output CSV path")
    p_run.add_argument("-N", "--agents", type=int, dest="N", help="number of agents")
    p_run.add_argument("-K", "--local-steps", type=int, dest="K", help="local steps per round")
    p_run.add_argument("-D", "--batch", type=int, dest="D", help="trajectories per step")

    p_rep = sub.add_parser("report", help="compare runs against a return threshold")
    p_rep.add_argument("csv", nargs="+", help="metric files written by 'run'")
    p_rep.add_argument("--threshold", type=float, required=True, help="target evaluation return")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        try:
            config = load_config(args.config).replace(seed=args.seed, N=args.N, K=args.K, D=args.D)
        except ParseError as exc:
            print(f"error: {args.config}: {exc}", file=sys.stderr)
            return 2
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return run(config, out=args.out)
    try:
        report = compare_report(args.csv, args.threshold)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(report.format())
    return 0
