"""Command-line entry point.

Exit codes: 0 success, 1 if any arm failed, 2 for invalid configuration.
"""

import argparse
import json
import sys

from .config import parse_config
from .errors import ConfigurationError
from .harness import emit_report, run_matrix


def _add_common(parser):
    parser.add_argument("--config", metavar="PATH",
                        help="JSON config file (defaults apply when omitted)")
    parser.add_argument("--seeds", type=int, metavar="N",
                        help="override seeds with 0..N-1")
    parser.add_argument("--out", dest="out_dir", metavar="DIR",
                        help="output directory for curves.csv / summary.json")
    parser.add_argument("--jobs", type=int, metavar="N",
                        help="run arms in up to N worker threads")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fedal",
        description="Federated active learning simulator and benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the strategy/baseline matrix")
    _add_common(run_p)
    run_p.add_argument("--strategy", action="append", dest="strategies",
                       metavar="NAME", help="repeatable; overrides the strategy set")
    run_p.add_argument("--gamma", type=float, help="annotation budget ratio")
    run_p.add_argument("--parallel-clients", action="store_true", default=None,
                       help="run clients of a round in a thread pool")

    abl_p = sub.add_parser("ablation",
                           help="entropy-source ablation over sample ratios")
    _add_common(abl_p)

    rep_p = sub.add_parser("report", help="print a summary.json as a table")
    rep_p.add_argument("summary", metavar="SUMMARY_JSON")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "report":
        try:
            with open(args.summary, encoding="utf-8") as fh:
                summary = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read summary: {exc}", file=sys.stderr)
            return 2
        emit_report(summary)
        return 0

    overrides = {k: getattr(args, k, None)
                 for k in ("strategies", "gamma", "seeds", "out_dir", "jobs",
                           "parallel_clients")}
    try:
        config = parse_config(args.config, overrides)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    summary, n_failed = run_matrix(config, ablation=args.command == "ablation")
    emit_report(summary)
    if n_failed:
        print(f"error: {n_failed} arm(s) failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
