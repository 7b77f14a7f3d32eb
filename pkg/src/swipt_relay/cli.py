"""Command-line interface.

One verb per capability: `channel` dumps the quantized alphabet,
`heuristic` evaluates the draining policy's closed form, `bound` solves
the finite-state upper bound, `simulate` runs the Monte Carlo under the
heuristic policy, and `sweep` produces the full experiment CSV.
"""

import argparse
import sys

from .experiment import (
    ExperimentConfig,
    parse_config,
    report_gains,
    rows_to_csv,
    run_sweep,
)
from .mdp import build_mdp, policy_iteration, upper_bound
from .relay import heuristic_average_success, make_heuristic_policy
from .simulate import RESULT_CSV_HEADER, SimulationConfig, simulate_original

__all__ = ["main"]

_DEFAULTS = ExperimentConfig()

_PHYSICS_FLAGS = (
    ("source_power", float, "source transmit power in mW"),
    ("noise_power", float, "noise power in mW"),
    ("block_duration", float, "block duration in ms"),
    ("conversion_efficiency", float, "harvester conversion efficiency in (0,1)"),
    ("rate", float, "information rate in bits/s/Hz"),
    ("battery_capacity", float, "relay battery capacity in uJ"),
)


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


def _common_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument(
        "--config",
        metavar="PATH",
        help="key = value configuration file; flags override its values",
    )
    for name, kind, help_text in _PHYSICS_FLAGS:
        flag = "--" + name.replace("_", "-")
        parser.add_argument(
            flag,
            dest=name,
            type=kind,
            help=f"{help_text} (default: {getattr(_DEFAULTS, name)})",
        )
    parser.add_argument(
        "--channel-states",
        dest="n_channel_states",
        type=int,
        help=f"channel alphabet size (default: {_DEFAULTS.n_channel_states})",
    )
    parser.add_argument(
        "--seed",
        dest="seed",
        type=int,
        help=f"base random seed (default: {_DEFAULTS.seed})",
    )
    return parser


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="swipt-relay",
        description=(
            "Average success probability of a battery-limited power-splitting "
            "SWIPT decode-and-forward relay: heuristic closed form, "
            "finite-state upper bound, Monte Carlo validation."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_channel = sub.add_parser(
        "channel",
        parents=[common],
        help="dump the quantized channel alphabet as CSV (index,gain,probability)",
    )
    p_channel.add_argument("--out", default="-", help="output path, '-' for stdout")

    sub.add_parser(
        "heuristic",
        parents=[common],
        help="print the closed-form average success of the draining policy",
    )

    p_bound = sub.add_parser(
        "bound",
        parents=[common],
        help="print the finite-state upper bound per grid resolution",
    )
    p_bound.add_argument(
        "--levels",
        dest="n_levels",
        type=_int_list,
        help=f"battery level counts, comma separated (default: "
        f"{','.join(str(n) for n in _DEFAULTS.n_levels)})",
    )

    p_sim = sub.add_parser(
        "simulate",
        parents=[common],
        help="Monte Carlo of the heuristic policy (CSV: seed,M,mean,stderr)",
    )
    p_sim.add_argument(
        "--blocks",
        dest="blocks",
        type=int,
        help=f"number of simulated blocks (default: {_DEFAULTS.blocks})",
    )
    p_sim.add_argument("--out", default="-", help="output path, '-' for stdout")

    p_sweep = sub.add_parser(
        "sweep",
        parents=[common],
        help="run the full sweep and write the experiment CSV",
    )
    p_sweep.add_argument(
        "--sweep",
        dest="sweep",
        choices=("battery", "power"),
        help=f"sweep axis (default: {_DEFAULTS.sweep})",
    )
    p_sweep.add_argument(
        "--levels",
        dest="n_levels",
        type=_int_list,
        help=f"battery level counts, comma separated (default: "
        f"{','.join(str(n) for n in _DEFAULTS.n_levels)})",
    )
    p_sweep.add_argument(
        "--blocks",
        dest="blocks",
        type=int,
        help=f"simulated blocks per sweep point (default: {_DEFAULTS.blocks})",
    )
    p_sweep.add_argument(
        "--battery-sweep",
        dest="battery_sweep",
        type=_float_list,
        help="battery capacities in uJ, comma separated (default: "
        + ",".join(format(v, "g") for v in _DEFAULTS.battery_sweep),
    )
    p_sweep.add_argument(
        "--power-sweep",
        dest="power_sweep",
        type=_float_list,
        help="source powers in mW, comma separated (default: "
        + ",".join(format(v, "g") for v in _DEFAULTS.power_sweep),
    )
    p_sweep.add_argument(
        "--workers",
        dest="workers",
        type=int,
        help=f"parallel sweep workers (default: {_DEFAULTS.workers})",
    )
    p_sweep.add_argument(
        "--out",
        dest="out",
        help=f"output CSV path (default: {_DEFAULTS.out})",
    )
    return parser


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    skip = {"command", "config"}
    if args.command in ("channel", "simulate"):
        skip.add("out")  # their --out is a direct output path, not config state
    overrides = {
        key: value
        for key, value in vars(args).items()
        if key not in skip and value is not None
    }
    return parse_config(args.config, overrides)


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


def _cmd_channel(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    channel, _ = config.channels()
    lines = ["index,gain,probability"]
    for i, (gain, prob) in enumerate(zip(channel.gains, channel.pmf)):
        lines.append(f"{i},{gain:.12g},{prob:.12g}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def _cmd_heuristic(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    h_channel, g_channel = config.channels()
    value = heuristic_average_success(h_channel, g_channel, config.system_params())
    print(format(value, ".12g"))
    return 0


def _cmd_bound(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    h_channel, g_channel = config.channels()
    params = config.system_params()
    print("n_levels,p_upper_bound")
    for n_levels in config.n_levels:
        model = build_mdp(h_channel, g_channel, params, n_levels)
        result = policy_iteration(model)
        bound = upper_bound(model, result, h_channel)
        print(f"{n_levels},{bound:.12g}")
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    h_channel, g_channel = config.channels()
    params = config.system_params()
    result = simulate_original(
        make_heuristic_policy(g_channel, params),
        h_channel,
        g_channel,
        params,
        SimulationConfig(blocks=config.blocks, seed=config.seed),
    )
    _write_text(args.out, RESULT_CSV_HEADER + "\n" + result.csv_row() + "\n")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    rows = run_sweep(config)
    _write_text(config.out, rows_to_csv(rows))
    for row in rows:
        if row.status != "ok":
            print(
                f"sweep_value={row.sweep_value:g} n_levels={row.n_levels}: "
                f"{row.error}",
                file=sys.stderr,
            )
    try:
        for line in report_gains(rows).format_lines():
            print(line)
    except ValueError:
        pass  # fewer than two successful sweep points: nothing to report
    return 0 if all(row.status == "ok" for row in rows) else 1


_COMMANDS = {
    "channel": _cmd_channel,
    "heuristic": _cmd_heuristic,
    "bound": _cmd_bound,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
