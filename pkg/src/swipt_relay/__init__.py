"""Success-probability analysis of a battery-limited power-splitting SWIPT
decode-and-forward relay.

The package computes (a) the closed-form long-run average success
probability of a battery-draining heuristic policy, (b) a rigorous upper
bound on the best achievable average success probability via a
finite-state average-reward decision problem solved by policy iteration,
and (c) seeded Monte Carlo estimates of both on the original
continuous-energy system.
"""

from .channel import (
    FiniteChannel,
    channel_from_table,
    quantize_equiprobable_exponential,
)
from .mdp import (
    BatteryGrid,
    DiscreteAction,
    DiscreteStateSpace,
    MdpModel,
    MultichainSuspectedError,
    NonConvergenceError,
    PolicyIterationResult,
    build_mdp,
    default_initial_rule,
    enumerate_actions,
    oracle_gain_bruteforce,
    policy_evaluate,
    policy_improve,
    policy_iteration,
    round_up_level,
    upper_bound,
)
from .experiment import (
    ExperimentConfig,
    GainReport,
    SweepRow,
    parse_config,
    report_gains,
    rows_to_csv,
    run_sweep,
)
from .relay import (
    Action,
    InfeasibleActionError,
    State,
    StateClass,
    SystemParams,
    classify_state,
    delivery_success_prob,
    destination_snr,
    energy_after_harvest,
    energy_after_transmit,
    heuristic_average_success,
    heuristic_rule,
    make_heuristic_policy,
    max_ps_ratio,
    relay_snr,
    success_prob,
)
from .simulate import (
    PolicyViolationError,
    SimulationConfig,
    SimulationResult,
    sample_channel,
    simulate_discrete,
    simulate_original,
)

__version__ = "0.1.0"
