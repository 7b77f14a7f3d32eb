#!/usr/bin/env python3
"""Source-power experiment: how fast the heuristic closes on the upper
bound as the source power grows, one curve pair per battery capacity."""

import argparse

from swipt_relay.experiment import (
    ExperimentConfig,
    report_gains,
    rows_to_csv,
    run_sweep,
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="power_sweep.csv")
    parser.add_argument("--seed", type=int, default=20260810)
    parser.add_argument("--blocks", type=int, default=100_000)
    parser.add_argument("--channel-states", type=int, default=200)
    parser.add_argument(
        "--batteries", type=float, nargs="+", default=[2.0, 10.0],
        help="battery capacities (uJ) to overlay",
    )
    parser.add_argument(
        "--powers", type=float, nargs="+",
        default=[0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
        help="source powers (mW) on the sweep axis",
    )
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    all_rows = []
    for battery in args.batteries:
        config = ExperimentConfig(
            sweep="power",
            power_sweep=tuple(args.powers),
            battery_capacity=battery,
            seed=args.seed,
            blocks=args.blocks,
            n_channel_states=args.channel_states,
            workers=args.workers,
        )
        rows = run_sweep(config)
        all_rows.extend(rows)
        print(f"# battery capacity {battery} uJ")
        for line in report_gains(rows).format_lines():
            print(line)

    with open(args.out, "w", encoding="utf-8", newline="") as handle:
        handle.write(rows_to_csv(all_rows))
    print(f"wrote {len(all_rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
