import numpy as np
import pytest

from swipt_relay import (
    BatteryGrid,
    DiscreteAction,
    DiscreteStateSpace,
    MdpModel,
    SystemParams,
    channel_from_table,
    quantize_equiprobable_exponential,
)

# Scalar operating point used across the suite (the experiment defaults).
DEFAULT_PARAMS = SystemParams(
    source_power=1.0,
    noise_power=0.001,
    block_duration=1.0,
    conversion_efficiency=0.5,
    rate=1.5,
    battery_capacity=10.0,
)

# Small-alphabet scenario whose optimal rule genuinely needs lookahead
# (policy iteration takes two passes, the gain is interior).
HARD_TINY_PARAMS = SystemParams(
    source_power=0.5,
    noise_power=0.02,
    block_duration=1.0,
    conversion_efficiency=0.5,
    rate=1.5,
    battery_capacity=0.5,
)


@pytest.fixture(scope="session")
def default_params() -> SystemParams:
    return DEFAULT_PARAMS


@pytest.fixture(scope="session")
def hard_tiny_params() -> SystemParams:
    return HARD_TINY_PARAMS


@pytest.fixture(scope="session")
def channel2():
    return quantize_equiprobable_exponential(2)


@pytest.fixture(scope="session")
def channel200():
    return quantize_equiprobable_exponential(200)


@pytest.fixture
def hand_model():
    """Factory for models with hand-chosen rewards and post levels, for
    testing the solvers in isolation from the physics.

    layout: per state, list of (reward, post_level) action tuples, given as
    a list of length n_levels * len(pmf) in flat state order.
    """

    def build(pmf, n_levels, layout, capacity=1.0):
        gains = np.arange(1.0, len(pmf) + 1.0)
        channel = channel_from_table(gains, pmf)
        space = DiscreteStateSpace(BatteryGrid(n_levels, capacity), channel)
        assert len(layout) == space.n_states
        actions = tuple(
            tuple(
                DiscreteAction(
                    ps_ratio=1.0,
                    transmit_energy=0.0,
                    target_level=0,
                    post_level=post,
                    reward=reward,
                )
                for reward, post in state_actions
            )
            for state_actions in layout
        )
        return MdpModel(
            space=space,
            g_channel=channel,
            params=DEFAULT_PARAMS,
            actions=actions,
        )

    return build
