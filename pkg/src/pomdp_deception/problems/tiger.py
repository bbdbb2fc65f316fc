"""The Tiger problem: two doors, a noisy listen action, one terminal opening."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import DiscreteDistribution, ExplicitPomdpModel

TIGER_LEFT, TIGER_RIGHT = 0, 1
LISTEN, OPEN_LEFT, OPEN_RIGHT = 0, 1, 2
HEAR_LEFT, HEAR_RIGHT = 0, 1


@dataclass(frozen=True)
class TigerConfig:
    """Parameters of the two-door problem.

    The sensor reports the correct side with probability p_T; opening a door
    ends the episode with r_safe or r_danger. Episodes that reach step_cap
    without a door choice are forced out and recorded separately.
    """

    p_T: float = 0.85
    r_listen: float = -1.0
    r_safe: float = 10.0
    r_danger: float = -20.0
    discount: float = 0.95
    step_cap: int = 50

    def __post_init__(self):
        if not 0.5 < self.p_T <= 1.0:
            raise ValueError("p_T must lie in (0.5, 1]")
        if self.step_cap < 1:
            raise ValueError("step_cap must be >= 1")


def tiger_model(cfg: TigerConfig | None = None) -> ExplicitPomdpModel:
    """Build the 2-state, 3-action, 2-observation explicit model.

    Listening keeps the state fixed and emits the correct-side observation
    with probability p_T; either opening routes all mass into the absorbing
    terminal column. The initial belief is impartial, (0.5, 0.5).
    """
    cfg = cfg or TigerConfig()
    p = cfg.p_T
    n_s, n_a, n_o = 2, 3, 2
    transition = np.zeros((n_a, n_s, n_s + 1))
    transition[LISTEN, TIGER_LEFT, TIGER_LEFT] = 1.0
    transition[LISTEN, TIGER_RIGHT, TIGER_RIGHT] = 1.0
    transition[OPEN_LEFT, :, n_s] = 1.0
    transition[OPEN_RIGHT, :, n_s] = 1.0

    obs = np.full((n_a, n_s + 1, n_o), 0.5)
    obs[LISTEN, TIGER_LEFT] = (p, 1.0 - p)
    obs[LISTEN, TIGER_RIGHT] = (1.0 - p, p)

    rewards = np.zeros((n_a, n_s, n_s + 1))
    rewards[LISTEN, TIGER_LEFT, TIGER_LEFT] = cfg.r_listen
    rewards[LISTEN, TIGER_RIGHT, TIGER_RIGHT] = cfg.r_listen
    rewards[OPEN_LEFT, TIGER_LEFT, n_s] = cfg.r_danger
    rewards[OPEN_LEFT, TIGER_RIGHT, n_s] = cfg.r_safe
    rewards[OPEN_RIGHT, TIGER_LEFT, n_s] = cfg.r_safe
    rewards[OPEN_RIGHT, TIGER_RIGHT, n_s] = cfg.r_danger

    return ExplicitPomdpModel(
        transition=transition,
        obs=obs,
        rewards=rewards,
        discount=cfg.discount,
        initial_belief=DiscreteDistribution([0.5, 0.5]),
        state_names=("tiger-left", "tiger-right"),
        action_names=("listen", "open-left", "open-right"),
        observation_names=("hear-left", "hear-right"),
        true_obs_table={LISTEN: np.array([HEAR_LEFT, HEAR_RIGHT])},
        informative={LISTEN: (HEAR_LEFT, HEAR_RIGHT)},
        step_cap=cfg.step_cap,
    )
