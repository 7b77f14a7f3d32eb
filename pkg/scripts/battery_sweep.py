#!/usr/bin/env python3
"""Battery-capacity experiment: heuristic closed form, its simulation and
the policy-iteration upper bound across the battery sweep, one curve pair
per grid resolution and source power."""

import argparse

from swipt_relay.experiment import (
    ExperimentConfig,
    report_gains,
    rows_to_csv,
    run_sweep,
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="battery_sweep.csv")
    parser.add_argument("--seed", type=int, default=20260810)
    parser.add_argument("--blocks", type=int, default=100_000)
    parser.add_argument("--channel-states", type=int, default=200)
    parser.add_argument(
        "--powers", type=float, nargs="+", default=[0.5, 1.0, 2.0],
        help="source powers (mW) to overlay",
    )
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    all_rows = []
    for power in args.powers:
        config = ExperimentConfig(
            sweep="battery",
            source_power=power,
            seed=args.seed,
            blocks=args.blocks,
            n_channel_states=args.channel_states,
            workers=args.workers,
        )
        rows = run_sweep(config)
        all_rows.extend(rows)
        print(f"# source power {power} mW")
        for line in report_gains(rows).format_lines():
            print(line)

    with open(args.out, "w", encoding="utf-8", newline="") as handle:
        handle.write(rows_to_csv(all_rows))
    print(f"wrote {len(all_rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
