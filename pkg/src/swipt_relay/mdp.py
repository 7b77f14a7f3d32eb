"""Finite-state upper bound on the achievable average success probability.

The continuous battery is replaced by a uniform level grid: after every
block a hypothetical energy source tops the residual energy up to the next
grid level, which can only help any policy. On the modified system the
splitting ratio can be restricted to full harvesting or the largest
decodable ratio, and the transmit energy to the values that land the
residual exactly on a grid level, without lowering the optimum. The
resulting finite average-reward decision problem is solved by policy
iteration; its gain is the bound.
"""

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.csgraph
import scipy.sparse.linalg

from .channel import FiniteChannel
from .relay import (
    Action,
    State,
    StateClass,
    SystemParams,
    classify_state,
    energy_after_harvest,
    max_ps_ratio,
    success_prob,
)

__all__ = [
    "BatteryGrid",
    "DiscreteAction",
    "DiscreteStateSpace",
    "MdpModel",
    "MultichainSuspectedError",
    "NonConvergenceError",
    "PolicyIterationResult",
    "build_mdp",
    "default_initial_rule",
    "enumerate_actions",
    "oracle_gain_bruteforce",
    "policy_evaluate",
    "policy_improve",
    "policy_iteration",
    "round_up_level",
    "upper_bound",
]

# Dense linear solves up to this many states; sparse factorization above.
_DENSE_LIMIT = 5000
# Condition-number estimates beyond 1e12 are treated as a singular
# evaluation system, the numerical signature of multiple recurrent classes.
_RCOND_MIN = 1e-12
_RESIDUAL_TOL = 1e-9


class MultichainSuspectedError(RuntimeError):
    """The evaluated chain does not look unichain (singular evaluation
    system or more than one recurrent class)."""


class NonConvergenceError(RuntimeError):
    """Policy iteration hit its iteration cap without the rule repeating."""


@dataclass(frozen=True)
class BatteryGrid:
    """Uniformly spaced battery levels from empty to full capacity."""

    n_levels: int
    capacity: float
    levels: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        if self.n_levels < 2:
            raise ValueError(f"n_levels must be at least 2, got {self.n_levels}")
        if not (math.isfinite(self.capacity) and self.capacity > 0.0):
            raise ValueError(
                f"capacity must be finite and positive, got {self.capacity}"
            )
        levels = np.linspace(0.0, self.capacity, self.n_levels)
        levels.flags.writeable = False
        object.__setattr__(self, "levels", levels)

    @property
    def spacing(self) -> float:
        return self.capacity / (self.n_levels - 1)


def round_up_level(energy: float, grid: BatteryGrid, exact_up: bool = True) -> int:
    """Level index the hypothetical source tops the battery up to.

    Residual energy inside [level i, level i+1) is driven to level i+1;
    with exact_up (the literal reading, and the default) an energy
    exactly on a grid level is also driven one level higher, except at
    full capacity which stays put. exact_up=False keeps exact grid hits
    in place instead, for sensitivity checks.
    """
    if not 0.0 <= energy <= grid.capacity:
        raise ValueError(
            f"energy must lie in [0, {grid.capacity}], got {energy}"
        )
    side = "right" if exact_up else "left"
    idx = int(np.searchsorted(grid.levels, energy, side=side))
    return min(idx, grid.n_levels - 1)


@dataclass(frozen=True)
class DiscreteStateSpace:
    """Battery levels crossed with the source-relay channel alphabet.

    Flat indexing groups states by battery level, with the channel index
    varying fastest: state (level j, channel i) sits at j * n_channels + i.
    """

    grid: BatteryGrid
    channel: FiniteChannel

    @property
    def n_states(self) -> int:
        return self.grid.n_levels * self.channel.count

    def flat_index(self, level: int, channel: int) -> int:
        if not 0 <= level < self.grid.n_levels:
            raise ValueError(f"level index {level} out of range")
        if not 0 <= channel < self.channel.count:
            raise ValueError(f"channel index {channel} out of range")
        return level * self.channel.count + channel

    def level_channel(self, flat: int) -> tuple[int, int]:
        if not 0 <= flat < self.n_states:
            raise ValueError(f"flat index {flat} out of range")
        return divmod(flat, self.channel.count)


@dataclass(frozen=True)
class DiscreteAction:
    """One reduced action: a splitting branch and a grid target.

    transmit_energy is what the relay really radiates (the reward is
    computed from it); target_level is the grid level the residual lands
    on exactly; post_level is the level after the end-of-block top-up.
    """

    ps_ratio: float
    transmit_energy: float
    target_level: int
    post_level: int
    reward: float


def enumerate_actions(
    energy: float,
    gain: float,
    g_channel: FiniteChannel,
    params: SystemParams,
    grid: BatteryGrid,
    exact_up: bool = True,
) -> list[DiscreteAction]:
    """Reduced action list for one discrete state.

    One action per splitting branch and reachable grid target: harvest
    everything (ratio 1) always, plus the largest decodable ratio when
    the state can succeed at all; the transmit energy is whatever lands
    the residual exactly on the target level. The full-harvest action
    targeting the empty level is always present, so the list is never
    empty. Rewards use the true transmit energy; the top-up happens only
    after the block.
    """
    state = State(energy, gain)
    branches = [1.0]
    if classify_state(state, g_channel, params) is StateClass.CAN_SUCCEED:
        branches.append(max_ps_ratio(gain, params))
    actions: list[DiscreteAction] = []
    seen: set[tuple[float, int]] = set()
    for ratio in branches:
        half = energy_after_harvest(energy, gain, ratio, params)
        last_target = int(np.searchsorted(grid.levels, half, side="right")) - 1
        for target in range(last_target + 1):
            key = (ratio, target)
            if key in seen:
                continue
            seen.add(key)
            spend = float(half - grid.levels[target])
            post = round_up_level(float(grid.levels[target]), grid, exact_up)
            reward = success_prob(state, Action(ratio, spend), g_channel, params)
            actions.append(DiscreteAction(ratio, spend, target, post, reward))
    return actions


@dataclass(frozen=True, eq=False)
class MdpModel:
    """Discrete decision problem: states, reduced action lists, rewards
    and the block-structured transition law.

    The transition row of an action places the source-relay channel pmf
    in the block of columns belonging to its post-top-up level; rows
    therefore depend on the action only through post_level.
    """

    space: DiscreteStateSpace
    g_channel: FiniteChannel
    params: SystemParams
    actions: tuple[tuple[DiscreteAction, ...], ...]
    exact_up: bool = True
    _rewards: tuple[np.ndarray, ...] = field(init=False, repr=False)
    _posts: tuple[np.ndarray, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.actions) != self.space.n_states:
            raise ValueError(
                f"need one action list per state: {len(self.actions)} lists "
                f"for {self.space.n_states} states"
            )
        if any(len(acts) == 0 for acts in self.actions):
            raise ValueError("every state needs at least one action")
        rewards = tuple(
            np.array([a.reward for a in acts]) for acts in self.actions
        )
        posts = tuple(
            np.array([a.post_level for a in acts], dtype=np.intp)
            for acts in self.actions
        )
        object.__setattr__(self, "_rewards", rewards)
        object.__setattr__(self, "_posts", posts)

    @property
    def n_states(self) -> int:
        return self.space.n_states

    @property
    def h_pmf(self) -> np.ndarray:
        return self.space.channel.pmf

    def _check_rule(self, rule: np.ndarray) -> np.ndarray:
        rule = np.asarray(rule, dtype=np.intp)
        if rule.shape != (self.n_states,):
            raise ValueError(
                f"rule must assign one action per state, got shape {rule.shape}"
            )
        for s, k in enumerate(rule):
            if not 0 <= k < len(self.actions[s]):
                raise ValueError(f"state {s}: action index {k} out of range")
        return rule

    def reward_vector(self, rule: np.ndarray) -> np.ndarray:
        """Per-state reward of the rule's chosen actions."""
        rule = self._check_rule(rule)
        return np.array([self._rewards[s][k] for s, k in enumerate(rule)])

    def post_levels(self, rule: np.ndarray) -> np.ndarray:
        """Per-state post-top-up level of the rule's chosen actions."""
        rule = self._check_rule(rule)
        return np.array(
            [self._posts[s][k] for s, k in enumerate(rule)], dtype=np.intp
        )

    def transition_row(self, state: int, action: DiscreteAction) -> np.ndarray:
        """Dense transition row of one state under one of its actions."""
        del state  # the row depends on the action's post level only
        n_channels = self.space.channel.count
        row = np.zeros(self.n_states)
        start = action.post_level * n_channels
        row[start : start + n_channels] = self.h_pmf
        return row

    def transition_matrix(self, rule: np.ndarray) -> np.ndarray:
        """Dense transition matrix of a stationary rule."""
        posts = self.post_levels(rule)
        n_channels = self.space.channel.count
        matrix = np.zeros((self.n_states, self.n_states))
        for s, post in enumerate(posts):
            start = post * n_channels
            matrix[s, start : start + n_channels] = self.h_pmf
        return matrix


def build_mdp(
    h_channel: FiniteChannel,
    g_channel: FiniteChannel,
    params: SystemParams,
    n_levels: int,
    exact_up: bool = True,
) -> MdpModel:
    """Assemble the discrete model over (battery level, channel state)
    pairs, with per-state action lists from enumerate_actions."""
    if n_levels < 2:
        raise ValueError(f"n_levels must be at least 2, got {n_levels}")
    grid = BatteryGrid(n_levels, params.battery_capacity)
    space = DiscreteStateSpace(grid, h_channel)
    actions = []
    for level in range(n_levels):
        level_energy = float(grid.levels[level])
        for i in range(h_channel.count):
            actions.append(
                tuple(
                    enumerate_actions(
                        level_energy,
                        float(h_channel.gains[i]),
                        g_channel,
                        params,
                        grid,
                        exact_up=exact_up,
                    )
                )
            )
    return MdpModel(
        space=space,
        g_channel=g_channel,
        params=params,
        actions=tuple(actions),
        exact_up=exact_up,
    )


def _expected_bias_by_level(model: MdpModel, bias: np.ndarray) -> np.ndarray:
    """Channel-pmf average of the bias over each battery-level block."""
    n_channels = model.space.channel.count
    return bias.reshape(model.space.grid.n_levels, n_channels) @ model.h_pmf


def _evaluation_residual(
    model: MdpModel, rule: np.ndarray, gain: float, bias: np.ndarray
) -> float:
    posts = model.post_levels(rule)
    rewards = model.reward_vector(rule)
    theta_bias = _expected_bias_by_level(model, bias)[posts]
    return float(np.max(np.abs(rewards + theta_bias - gain - bias)))


def _solve_dense(model: MdpModel, rule: np.ndarray, rewards: np.ndarray):
    matrix = -model.transition_matrix(rule)
    matrix[np.diag_indices(model.n_states)] += 1.0
    # bias[0] = 0 frees the first column for the gain unknown.
    matrix[:, 0] = 1.0
    norm = np.linalg.norm(matrix, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(matrix)
    gecon = scipy.linalg.get_lapack_funcs(("gecon",), (matrix,))
    rcond, _ = gecon[0](lu, norm)
    if not np.isfinite(rcond) or rcond < _RCOND_MIN:
        raise MultichainSuspectedError(
            f"evaluation system has reciprocal condition {rcond:.3e}; the "
            f"rule's chain is probably not unichain (rule head {rule[:8]})"
        )
    return scipy.linalg.lu_solve((lu, piv), rewards)


def _solve_sparse(model: MdpModel, rule: np.ndarray, rewards: np.ndarray):
    n = model.n_states
    n_channels = model.space.channel.count
    posts = model.post_levels(rule)
    rows = np.repeat(np.arange(n), n_channels)
    cols = (posts[:, None] * n_channels + np.arange(n_channels)).ravel()
    data = -np.tile(model.h_pmf, n)
    matrix = scipy.sparse.coo_matrix((data, (rows, cols)), shape=(n, n)).tolil()
    matrix.setdiag(matrix.diagonal() + 1.0)
    matrix[:, 0] = 1.0
    matrix = matrix.tocsc()
    try:
        lu = scipy.sparse.linalg.splu(matrix)
    except RuntimeError as exc:  # "Factor is exactly singular"
        raise MultichainSuspectedError(
            f"sparse evaluation factorization failed ({exc}); the rule's "
            f"chain is probably not unichain"
        ) from exc
    inv_op = scipy.sparse.linalg.LinearOperator(
        (n, n),
        matvec=lu.solve,
        rmatvec=lambda v: lu.solve(v, trans="T"),
    )
    norm = scipy.sparse.linalg.onenormest(matrix)
    inv_norm = scipy.sparse.linalg.onenormest(inv_op)
    rcond = 1.0 / (norm * inv_norm)
    if not np.isfinite(rcond) or rcond < _RCOND_MIN:
        raise MultichainSuspectedError(
            f"evaluation system has reciprocal condition {rcond:.3e}; the "
            f"rule's chain is probably not unichain (rule head {rule[:8]})"
        )
    return lu.solve(rewards)


def policy_evaluate(model: MdpModel, rule: np.ndarray) -> tuple[float, np.ndarray]:
    """Gain and bias of a stationary rule.

    Solves the unichain average-reward evaluation equations

        gain + bias = rewards + transitions @ bias,    bias[0] = 0,

    and checks their residual. A numerically singular system (condition
    estimate beyond 1e12) raises MultichainSuspectedError, the signature
    of a chain with more than one recurrent class.
    """
    rule = model._check_rule(rule)
    rewards = model.reward_vector(rule)
    if model.n_states <= _DENSE_LIMIT:
        solution = _solve_dense(model, rule, rewards)
    else:
        solution = _solve_sparse(model, rule, rewards)
    gain = float(solution[0])
    bias = solution.copy()
    bias[0] = 0.0
    residual = _evaluation_residual(model, rule, gain, bias)
    if residual > _RESIDUAL_TOL:
        raise MultichainSuspectedError(
            f"evaluation equations solved to residual {residual:.3e} "
            f"(tolerance {_RESIDUAL_TOL}); the linear system is unreliable"
        )
    return gain, bias


def policy_improve(
    model: MdpModel,
    gain: float,
    bias: np.ndarray,
    incumbent: np.ndarray | None = None,
) -> np.ndarray:
    """One improvement sweep over the action lists.

    Per state, picks the action maximizing immediate reward plus the
    expected bias of the successor block (the gain shifts every candidate
    equally, so it cannot affect the argmax). The incumbent action is
    kept when it ties the maximum, the standard anti-cycling rule;
    without an incumbent, ties go to the smallest action index.
    """
    del gain
    block_bias = _expected_bias_by_level(model, np.asarray(bias, dtype=float))
    if incumbent is not None:
        incumbent = model._check_rule(incumbent)
    rule = np.empty(model.n_states, dtype=np.intp)
    for s in range(model.n_states):
        values = model._rewards[s] + block_bias[model._posts[s]]
        best = int(np.argmax(values))  # first maximum = smallest index
        if incumbent is not None and values[incumbent[s]] == values[best]:
            best = int(incumbent[s])
        rule[s] = best
    return rule


def default_initial_rule(model: MdpModel) -> np.ndarray:
    """Drain-to-empty starting rule: the action that empties the battery
    on the decodable branch when one exists, else on the full-harvest
    branch (the discrete analogue of the battery-draining heuristic)."""
    rule = np.empty(model.n_states, dtype=np.intp)
    for s, acts in enumerate(model.actions):
        drains = [(a.ps_ratio, k) for k, a in enumerate(acts) if a.target_level == 0]
        rule[s] = min(drains)[1]
    return rule


@dataclass(frozen=True)
class PolicyIterationResult:
    """Converged gain, bias, rule and the per-iteration gain trace."""

    gain: float
    bias: np.ndarray
    rule: np.ndarray
    iterations: int
    gain_history: tuple[float, ...]


def policy_iteration(
    model: MdpModel,
    initial_rule: np.ndarray | None = None,
    max_iterations: int = 10_000,
) -> PolicyIterationResult:
    """Average-reward policy iteration: alternate evaluation and
    improvement until the rule repeats."""
    if initial_rule is None:
        rule = default_initial_rule(model)
    else:
        rule = model._check_rule(initial_rule)
    gains: list[float] = []
    for iteration in range(1, max_iterations + 1):
        gain, bias = policy_evaluate(model, rule)
        gains.append(gain)
        improved = policy_improve(model, gain, bias, incumbent=rule)
        if np.array_equal(improved, rule):
            return PolicyIterationResult(
                gain=gain,
                bias=bias,
                rule=rule,
                iterations=iteration,
                gain_history=tuple(gains),
            )
        rule = improved
    raise NonConvergenceError(
        f"policy iteration did not converge within {max_iterations} iterations"
    )


def _recurrent_class_count(model: MdpModel, rule: np.ndarray) -> int:
    """Exact number of recurrent classes of the rule's chain (sink
    components of the strongly-connected-component condensation)."""
    n = model.n_states
    n_channels = model.space.channel.count
    posts = model.post_levels(rule)
    rows = np.repeat(np.arange(n), n_channels)
    cols = (posts[:, None] * n_channels + np.arange(n_channels)).ravel()
    graph = scipy.sparse.coo_matrix(
        (np.ones(rows.size), (rows, cols)), shape=(n, n)
    ).tocsr()
    n_comp, labels = scipy.sparse.csgraph.connected_components(
        graph, directed=True, connection="strong"
    )
    has_exit = np.zeros(n_comp, dtype=bool)
    crossing = labels[rows] != labels[cols]
    has_exit[labels[rows[crossing]]] = True
    return int(n_comp - has_exit.sum())


def upper_bound(
    model: MdpModel,
    result: PolicyIterationResult,
    h_channel: FiniteChannel,
    *,
    check: str = "structural",
    check_blocks: int = 20_000,
    check_seed: int = 0,
) -> float:
    """Bound on the original system's best average success probability.

    The bound is the channel-pmf average of the modified system's optimal
    long-run success over the empty-battery start states, which equals
    the policy-iteration gain when the optimal chain has one recurrent
    class. That premise is verified before returning:

    - check="structural" (default): count the recurrent classes of the
      optimal rule's chain exactly and reject more than one;
    - check="simulate": simulate the chain from every empty-battery start
      state and require agreement with the gain within Monte Carlo error;
    - check="none": trust the caller.
    """
    if h_channel.count != model.space.channel.count:
        raise ValueError(
            "h_channel does not match the model's source-relay alphabet"
        )
    if check == "structural":
        classes = _recurrent_class_count(model, result.rule)
        if classes != 1:
            raise MultichainSuspectedError(
                f"optimal rule's chain has {classes} recurrent classes; the "
                f"gain is not state-independent"
            )
    elif check == "simulate":
        from .simulate import SimulationConfig, simulate_discrete

        for i in range(h_channel.count):
            config = SimulationConfig(
                blocks=check_blocks, seed=check_seed + i, initial_energy=0.0
            )
            sim = simulate_discrete(model, result.rule, config, initial_channel=i)
            slack = 3.0 * sim.stderr + 1e-9
            if abs(sim.mean - result.gain) > slack:
                raise MultichainSuspectedError(
                    f"start state (empty, channel {i}) averages {sim.mean:.6g} "
                    f"vs gain {result.gain:.6g} (allowed deviation {slack:.3g})"
                )
    elif check != "none":
        raise ValueError(f"unknown check mode {check!r}")
    # With a state-independent long-run average the pmf-weighted sum over
    # the empty-battery start states collapses to the gain itself.
    return float(h_channel.pmf @ np.full(h_channel.count, result.gain))


def oracle_gain_bruteforce(
    model: MdpModel,
    max_rules: int = 1_000_000,
    tol: float = 1e-12,
    max_doublings: int = 100,
) -> float:
    """Exhaustive maximum long-run average reward over every stationary
    deterministic rule, for cross-checking policy iteration on tiny
    models.

    Each rule's chain is driven to its limiting occupancy from the
    empty-battery start (channel drawn from its pmf) by repeatedly
    squaring the half-lazy operator (I + transitions) / 2, which has the
    same limit as the plain chain's time averages but converges
    geometrically even through periodic structure; iteration stops once
    one more squaring moves no entry by more than tol.
    """
    counts = [len(acts) for acts in model.actions]
    n_rules = math.prod(counts)
    if n_rules > max_rules:
        raise ValueError(
            f"{n_rules} stationary deterministic rules exceed the "
            f"enumeration budget of {max_rules}"
        )
    n = model.n_states
    n_channels = model.space.channel.count
    start = np.zeros(n)
    start[:n_channels] = model.h_pmf
    best = -np.inf
    identity = np.eye(n)
    for combo in itertools.product(*(range(c) for c in counts)):
        rule = np.array(combo, dtype=np.intp)
        lazy = 0.5 * (identity + model.transition_matrix(rule))
        for _ in range(max_doublings):
            squared = lazy @ lazy
            done = np.max(np.abs(squared - lazy)) < tol
            lazy = squared
            if done:
                break
        else:
            raise NonConvergenceError(
                f"chain limit not reached within {max_doublings} doublings"
            )
        gain = float(start @ lazy @ model.reward_vector(rule))
        best = max(best, gain)
    return best
