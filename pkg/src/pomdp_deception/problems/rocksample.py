"""RockSample: deterministic rover navigation with distance-noisy rock sensing.

The joint state factors into a known position and one binary Good/Bad flag
per rock; states are packed as ``pos_index * 2**k + rock_bits`` with a single
absorbing exit state at the end. The model is generative: transition rows are
computed on demand (they are point masses), which keeps the 7x7, 8-rock
instance usable without materializing 12k x 12k matrices.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from ..core import DiscreteDistribution, PomdpModel, StepOnTerminal

NORTH, SOUTH, EAST, WEST, SAMPLE = 0, 1, 2, 3, 4
CHECK_BASE = 5
OBS_NONE = 0

# Canonical 7x7, 8-rock instance; top line is the highest y row, the trailing
# G column is the exit strip one cell east of the grid.
DEFAULT_MAP_TEXT = """\
.7.....G
.....6.G
..45...G
......3G
.......G
1..2...G
..0S...G
"""


class SampleOffRock(Exception):
    """Sample evaluated on a cell without a rock."""


def sensor_accuracy(d: float, D: float) -> float:
    """Distance-dependent check accuracy, (1 + 2^(-d/D)) / 2.

    Exactly 1 on top of the rock, 0.75 at distance D, and 0.5 in the limit.
    """
    if d < 0 or D <= 0:
        raise ValueError("require d >= 0 and D > 0")
    return 0.5 * (1.0 + 2.0 ** (-d / D))


@dataclass(frozen=True)
class RockSampleConfig:
    grid_width: int = 7
    grid_height: int = 7
    rock_positions: tuple[tuple[int, int], ...] = (
        (2, 0), (0, 1), (3, 1), (6, 3), (2, 4), (3, 4), (5, 5), (1, 6),
    )
    start: tuple[int, int] = (3, 0)
    exit_column: int = 7
    half_efficiency_distance: float = 20.0
    r_sample_good: float = 10.0
    r_sample_penalty: float = 10.0
    r_exit: float = 10.0
    discount: float = 0.95
    step_cap: int = 100

    def __post_init__(self):
        if len(set(self.rock_positions)) != len(self.rock_positions):
            raise ValueError("rock positions must be distinct")
        for x, y in self.rock_positions + (self.start,):
            if not (0 <= x < self.grid_width and 0 <= y < self.grid_height):
                raise ValueError(f"cell ({x}, {y}) outside the grid")
        if self.exit_column != self.grid_width:
            raise ValueError("exit strip must sit one column east of the grid")


@dataclass(frozen=True)
class RockSampleState:
    """Decoded state view used at API boundaries; solvers keep packed ints."""

    position: tuple[int, int]
    rocks: tuple[bool, ...]
    exited: bool = False


def sample_reward(state: RockSampleState, rock_belief: float, cfg: RockSampleConfig) -> float:
    """Reward of sampling at the agent's cell under the belief-coupled rule.

    Pays +r_sample_good only when the rock is Good and believed Good
    (strict majority, ties count as believed-Bad); every other combination
    is the penalty. The caller flips the rock to Bad afterwards.
    """
    try:
        rock = cfg.rock_positions.index(state.position)
    except ValueError:
        raise SampleOffRock(f"no rock at {state.position}") from None
    if state.rocks[rock] and rock_belief > 0.5:
        return cfg.r_sample_good
    return -cfg.r_sample_penalty


class RockSamplePlanningContext:
    """Per-simulation scratchpad carried through a planner's lookahead.

    beliefs: per-rock Good marginals seeded from the episode's exact tracked
    belief, then updated along simulated Check actions (likelihood from the
    simulated observation, which is drawn from the particle's rock bit). A
    simulated Sample consumes its entry. Seeding from the exact belief —
    never from noisy particle marginals — keeps the 0.5 prior gate strictly
    shut until a real check has spoken.
    actual_bits: the real environment's rock bits — the Sample reward
    channel is defined over the actual rock state, so the simulator pays
    against it rather than against the simulated particle's bit.
    lure: reward the agent's model attributes to each Check under costly
    deception (the kernel's r_d folded into the reward model).
    """

    __slots__ = ("beliefs", "actual_bits", "lure")

    def __init__(self, beliefs, actual_bits: int, lure: float = 0.0):
        self.beliefs = list(beliefs)
        self.actual_bits = actual_bits
        self.lure = lure

    def clone(self) -> "RockSamplePlanningContext":
        return RockSamplePlanningContext(self.beliefs, self.actual_bits, self.lure)


class RockSampleModel(PomdpModel):
    """Generative RockSample model over packed integer states."""

    def __init__(self, cfg: RockSampleConfig | None = None):
        cfg = cfg or RockSampleConfig()
        self.cfg = cfg
        w, h = cfg.grid_width, cfg.grid_height
        self.n_rocks = len(cfg.rock_positions)
        self._n_pos = w * h
        self._bits = 1 << self.n_rocks
        self.n_states = self._n_pos * self._bits
        self.n_actions = SAMPLE + 1 + self.n_rocks
        self.n_observations = 1 + 2 * self.n_rocks
        self.discount = cfg.discount
        self.step_cap = cfg.step_cap

        self.state_names = ()  # too many to enumerate; formatted on demand
        self.action_names = tuple(
            ["north", "south", "east", "west", "sample"]
            + [f"check-{i}" for i in range(self.n_rocks)]
        )
        self.observation_names = tuple(
            ["none"] + [name for i in range(self.n_rocks) for name in (f"good-{i}", f"bad-{i}")]
        )

        self._rock_at = [-1] * self._n_pos
        for i, (x, y) in enumerate(cfg.rock_positions):
            self._rock_at[y * w + x] = i

        # accuracy[pos][rock], Euclidean distances in cell units
        self._acc = [
            [
                sensor_accuracy(
                    math.dist((p % w, p // w), cfg.rock_positions[i]),
                    cfg.half_efficiency_distance,
                )
                for i in range(self.n_rocks)
            ]
            for p in range(self._n_pos)
        ]

        self._legal = []
        self._move_to = []  # per pos: {action: new pos or -1 for exit}
        for p in range(self._n_pos):
            x, y = p % w, p // w
            moves = {}
            if y + 1 < h:
                moves[NORTH] = p + w
            if y - 1 >= 0:
                moves[SOUTH] = p - w
            if x + 1 < w:
                moves[EAST] = p + 1
            else:
                moves[EAST] = -1  # into the exit strip
            if x - 1 >= 0:
                moves[WEST] = p - 1
            legal = list(moves)
            if self._rock_at[p] >= 0:
                legal.append(SAMPLE)
            legal.extend(range(CHECK_BASE, CHECK_BASE + self.n_rocks))
            self._legal.append(tuple(sorted(legal)))
            self._move_to.append(moves)
        self._rollout_moves = [
            tuple(a for a in self._legal[p] if a < SAMPLE) for p in range(self._n_pos)
        ]

        start_pos = cfg.start[1] * w + cfg.start[0]
        self._start_pos = start_pos
        belief = np.zeros(self.n_states)
        base = start_pos * self._bits
        belief[base : base + self._bits] = 1.0 / self._bits
        self.initial_belief = DiscreteDistribution(belief)

    # ---- state packing -------------------------------------------------

    def encode(self, pos: tuple[int, int], rocks) -> int:
        bits = 0
        for i, good in enumerate(rocks):
            if good:
                bits |= 1 << i
        return (pos[1] * self.cfg.grid_width + pos[0]) * self._bits + bits

    def decode(self, s: int) -> RockSampleState:
        if self.is_terminal(s):
            return RockSampleState(position=(-1, -1), rocks=(False,) * self.n_rocks, exited=True)
        pos, bits = divmod(s, self._bits)
        w = self.cfg.grid_width
        return RockSampleState(
            position=(pos % w, pos // w),
            rocks=tuple(bool(bits >> i & 1) for i in range(self.n_rocks)),
        )

    def state_label(self, s: int) -> str:
        st = self.decode(s)
        if st.exited:
            return "exited"
        bits = "".join("G" if g else "B" for g in st.rocks)
        return f"({st.position[0]},{st.position[1]}):{bits}"

    def initial_state(self, rng: random.Random) -> int:
        return self._start_pos * self._bits + rng.randrange(self._bits)

    # ---- model interface -----------------------------------------------

    def legal_actions(self, s: int):
        return self._legal[s // self._bits]

    def transition_support(self, s: int, a: int):
        pos, bits = divmod(s, self._bits)
        if a < SAMPLE:
            np_ = self._move_to[pos].get(a)
            if np_ is None:
                return [(s, 1.0)]  # illegal moves are not offered; treat as no-op
            if np_ < 0:
                return [(self.terminal_state, 1.0)]
            return [(np_ * self._bits + bits, 1.0)]
        if a == SAMPLE:
            rock = self._rock_at[pos]
            if rock < 0:
                return [(s, 1.0)]
            return [(pos * self._bits + (bits & ~(1 << rock)), 1.0)]
        return [(s, 1.0)]  # checks never change state

    def obs_prob(self, o: int, s2: int, a: int) -> float:
        if a < CHECK_BASE or self.is_terminal(s2):
            return 1.0 if o == OBS_NONE else 0.0
        rock = a - CHECK_BASE
        good = s2 >> rock & 1
        acc = self._acc[s2 // self._bits][rock]
        good_obs, bad_obs = 1 + 2 * rock, 2 + 2 * rock
        if o == good_obs:
            return acc if good else 1.0 - acc
        if o == bad_obs:
            return 1.0 - acc if good else acc
        return 0.0

    def sample_obs(self, s2: int, a: int, rng: random.Random) -> int:
        if a < CHECK_BASE or self.is_terminal(s2):
            return OBS_NONE
        rock = a - CHECK_BASE
        good = s2 >> rock & 1
        truthful = rng.random() < self._acc[s2 // self._bits][rock]
        seen_good = bool(good) == truthful
        return 1 + 2 * rock if seen_good else 2 + 2 * rock

    def reward(self, s: int, a: int, s2: int) -> float:
        """Belief-free reward channel: Sample pays by the actual rock alone.

        The belief-coupled rule needs the agent's marginal and is applied by
        step(rock_beliefs=...) and sim_step; this channel is what generic
        solvers (value iteration on small instances) see.
        """
        if a < SAMPLE:
            return self.cfg.r_exit if self.is_terminal(s2) else 0.0
        if a == SAMPLE:
            rock = self._rock_at[s // self._bits]
            if rock < 0:
                return 0.0
            return self.cfg.r_sample_good if s >> rock & 1 else -self.cfg.r_sample_penalty
        return 0.0

    def true_obs(self, s: int, a: int) -> int | None:
        if a < CHECK_BASE or self.is_terminal(s):
            return None
        rock = a - CHECK_BASE
        return 1 + 2 * rock if s >> rock & 1 else 2 + 2 * rock

    def informative_obs(self, a: int):
        if a < CHECK_BASE:
            return None
        rock = a - CHECK_BASE
        return (1 + 2 * rock, 2 + 2 * rock)

    def check_accuracy(self, s: int, rock: int) -> float:
        return self._acc[s // self._bits][rock]

    def rock_at_state(self, s: int) -> int:
        """Rock index under the agent's cell, or -1."""
        return self._rock_at[s // self._bits]

    def rock_bits(self, s: int) -> int:
        return s % self._bits

    def step(self, s: int, a: int, rng: random.Random, rock_beliefs=None):
        """Real environment step.

        When rock_beliefs is given, Sample pays the belief-coupled rule
        (+good only when the rock is Good and its marginal exceeds 0.5).
        """
        if self.is_terminal(s):
            raise StepOnTerminal(f"state {s} is terminal")
        pos, bits = divmod(s, self._bits)
        if a == SAMPLE and rock_beliefs is not None:
            rock = self._rock_at[pos]
            if rock < 0:
                raise SampleOffRock(f"no rock at position index {pos}")
            good = bool(s >> rock & 1)
            if good and rock_beliefs[rock] > 0.5:
                r = self.cfg.r_sample_good
            else:
                r = -self.cfg.r_sample_penalty
            return pos * self._bits + (bits & ~(1 << rock)), OBS_NONE, r
        ((s2, _),) = self.transition_support(s, a)
        o = self.sample_obs(s2, a, rng)
        return s2, o, self.reward(s, a, s2)

    def make_sim_context(self, rock_beliefs=None, actual_bits: int = 0, lure: float = 0.0):
        return RockSamplePlanningContext(
            rock_beliefs if rock_beliefs is not None else [0.5] * self.n_rocks,
            actual_bits,
            lure,
        )

    def sim_step(self, s: int, a: int, rng: random.Random, ctx=None):
        """Planner-side generative step.

        Without a context this is the plain environment step. With a
        RockSamplePlanningContext, Checks update the carried rock marginals
        and earn the costly-deception lure, and Sample pays against the real
        rock bits gated by the carried marginal.
        """
        if ctx is None:
            return self.step(s, a, rng)
        pos, bits = divmod(s, self._bits)
        if a >= CHECK_BASE:
            rock = a - CHECK_BASE
            acc = self._acc[pos][rock]
            good = s >> rock & 1
            truthful = rng.random() < acc
            seen_good = bool(good) == truthful
            b = ctx.beliefs[rock]
            if seen_good:
                o = 1 + 2 * rock
                num = b * acc
                den = num + (1.0 - b) * (1.0 - acc)
            else:
                o = 2 + 2 * rock
                num = b * (1.0 - acc)
                den = num + (1.0 - b) * acc
            if den > 0.0:
                ctx.beliefs[rock] = num / den
            return s, o, ctx.lure
        if a == SAMPLE:
            rock = self._rock_at[pos]
            if rock < 0:
                return s, OBS_NONE, 0.0
            if ctx.actual_bits >> rock & 1 and ctx.beliefs[rock] > 0.5:
                r = self.cfg.r_sample_good
            else:
                r = -self.cfg.r_sample_penalty
            ctx.beliefs[rock] = 0.0
            return pos * self._bits + (bits & ~(1 << rock)), OBS_NONE, r
        np_ = self._move_to[pos].get(a)
        if np_ is None:
            return s, OBS_NONE, 0.0
        if np_ < 0:
            return self.terminal_state, OBS_NONE, self.cfg.r_exit
        return np_ * self._bits + bits, OBS_NONE, 0.0

    def rollout_legal(self, s: int, ctx):
        """Rollout preference: sample immediately on a believed-Good rock,
        otherwise walk with the movement actions, leaving Check exploration
        to the tree (checks are state no-ops, so spending rollout depth on
        them starves the value signal from the exit and the rocks)."""
        pos = s // self._bits
        if ctx is None:
            return self._legal[pos]
        rock = self._rock_at[pos]
        if rock >= 0 and ctx.beliefs[rock] > 0.5:
            return (SAMPLE,)
        return self._rollout_moves[pos]

    def perturb_particle(self, s: int, rng: random.Random, rate: float = 0.1) -> int:
        """Reinvigoration noise: flip each rock bit independently at `rate`."""
        pos, bits = divmod(s, self._bits)
        for i in range(self.n_rocks):
            if rng.random() < rate:
                bits ^= 1 << i
        return pos * self._bits + bits

    def rock_marginals(self, particles) -> list[float]:
        """Per-rock empirical Good frequency of a particle multiset."""
        n = len(particles)
        if n == 0:
            raise ValueError("empty particle set")
        counts = [0] * self.n_rocks
        for s in particles:
            for i in range(self.n_rocks):
                counts[i] += s >> i & 1
        return [c / n for c in counts]


def rocksample_model(cfg: RockSampleConfig | None = None) -> RockSampleModel:
    return RockSampleModel(cfg)


def parse_map(text: str, **overrides) -> RockSampleConfig:
    """Parse the plain-text grid format into a RockSampleConfig.

    'S' start, 'G' exit strip cells, digits rocks, '.' floor. The first line
    is the highest-y row. Reward/discount knobs pass through **overrides.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty map")
    height = len(lines)
    widths = {len(ln) for ln in lines}
    if len(widths) != 1:
        raise ValueError("ragged map lines")
    exit_cols = set()
    rocks: dict[int, tuple[int, int]] = {}
    start = None
    grid_width = None
    for row, line in enumerate(lines):
        y = height - 1 - row
        for x, ch in enumerate(line):
            if ch == "G":
                exit_cols.add(x)
            elif ch == "S":
                start = (x, y)
            elif ch.isdigit():
                rocks[int(ch)] = (x, y)
            elif ch != ".":
                raise ValueError(f"unknown map glyph {ch!r}")
    if not exit_cols or len(exit_cols) != 1:
        raise ValueError("map must have exactly one exit column of G cells")
    grid_width = exit_cols.pop()
    if start is None:
        raise ValueError("map must mark the start cell with S")
    if sorted(rocks) != list(range(len(rocks))):
        raise ValueError("rock digits must be 0..k-1")
    return RockSampleConfig(
        grid_width=grid_width,
        grid_height=height,
        rock_positions=tuple(rocks[i] for i in range(len(rocks))),
        start=start,
        exit_column=grid_width,
        **overrides,
    )
