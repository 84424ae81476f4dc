#!/usr/bin/env python3
"""Print the analytic-vs-Monte-Carlo agreement table for one scenario."""

import argparse
import sys

from uavcov.cli import load_config, validate


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=None, help="key=value config file")
    parser.add_argument("--trials", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--threads", type=int, default=2)
    args = parser.parse_args()

    params = load_config(args.config)
    report = validate(params, args.trials, args.seed, threads=args.threads)
    print(report.render(), end="")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
