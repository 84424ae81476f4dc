#!/usr/bin/env python3
"""Run all figure presets and write one CSV per parameter family.

Each preset sweeps an axis with both engines, so this takes a while at
publication-quality trial counts; use --trials to trade precision for time.
"""

import argparse
import pathlib
import time

from uavcov.cli import (
    BOUNDARY_DEFAULTS,
    SweepSpec,
    figure_preset,
    params_from_boundary,
    rows_to_csv,
    run_sweep,
)

PRESETS = ("fig2a", "fig2b", "fig3a", "fig3b")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="results")
    parser.add_argument("--trials", type=int, default=20_000)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--threads", type=int, default=2)
    parser.add_argument("--presets", default=",".join(PRESETS),
                        help="comma-separated subset of the presets")
    args = parser.parse_args()

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for preset in args.presets.split(","):
        for variant in figure_preset(preset):
            boundary = dict(BOUNDARY_DEFAULTS)
            boundary.update(variant.overrides)
            params = params_from_boundary(boundary)
            spec = SweepSpec(
                axis=variant.spec.axis, values=variant.spec.values,
                metrics=variant.spec.metrics, policies=variant.spec.policies,
                antennas=variant.spec.antennas, engine=variant.spec.engine,
                trials=args.trials, seed=args.seed)
            start = time.time()
            rows = run_sweep(spec, params, threads=args.threads)
            path = outdir / f"{preset}_{variant.label}.csv"
            with open(path, "w", encoding="utf-8", newline="") as fh:
                rows_to_csv(rows, fh)
            print(f"{path}  ({len(rows)} rows, {time.time() - start:.0f}s)")


if __name__ == "__main__":
    main()
