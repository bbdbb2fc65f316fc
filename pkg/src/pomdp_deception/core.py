"""Discrete POMDP primitives: distributions, model interface, belief arithmetic.

States, actions and observations are dense integer indices so that solver
inner loops stay allocation-free and CSV output is stable. Live states are
``0 .. n_states-1``; a model may additionally route transitions into a single
absorbing terminal index ``n_states`` (``terminal_state``), which carries no
belief mass and no continuation value.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field

import numpy as np

BELIEF_ATOL = 1e-9
LIKELIHOOD_FLOOR = 1e-12


class PomdpError(Exception):
    """Base class for model/solver contract violations."""


class ImpossibleObservation(PomdpError):
    """The model assigns zero likelihood to a delivered observation."""


class StepOnTerminal(PomdpError):
    """step() was called on a terminal state."""


class UnclassifiableAction(PomdpError):
    """Action both transits state and emits informative observations."""


class DiscreteDistribution:
    """Normalized probability vector over a finite support.

    Entries must be nonnegative and sum to one within ``BELIEF_ATOL``.
    ``renormalize=True`` rescales first, which is used after repeated belief
    updates to stop rounding drift from accumulating.
    """

    __slots__ = ("probs",)

    def __init__(self, probs, renormalize: bool = False):
        p = np.asarray(probs, dtype=np.float64).copy()
        if p.ndim != 1 or p.size == 0:
            raise ValueError("distribution must be a non-empty 1-d vector")
        if np.any(p < 0):
            if np.any(p < -BELIEF_ATOL):
                raise ValueError(f"negative probability entry: {p.min()}")
            p = np.clip(p, 0.0, None)
        total = p.sum()
        if renormalize:
            if total <= 0:
                raise ValueError("cannot renormalize a zero vector")
            p /= total
        elif abs(total - 1.0) > BELIEF_ATOL:
            raise ValueError(f"probabilities sum to {total}, not 1")
        self.probs = p

    @property
    def support_size(self) -> int:
        return self.probs.size

    def sample(self, rng: random.Random) -> int:
        r = rng.random()
        acc = 0.0
        last = 0
        for i, p in enumerate(self.probs):
            if p > 0.0:
                acc += p
                last = i
                if r < acc:
                    return i
        return last

    def __len__(self) -> int:
        return self.probs.size

    def __getitem__(self, i):
        return self.probs[i]

    def __iter__(self):
        return iter(self.probs)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probs, dtype=dtype)

    def __repr__(self) -> str:
        return f"DiscreteDistribution({np.array2string(self.probs, precision=6)})"


class ActionClass(enum.Enum):
    OPERATING = "operating"
    OBSERVING = "observing"
    TERMINALIZING = "terminalizing"


class PomdpModel:
    """Interface shared by explicit-matrix and generative models.

    Subclasses fill the index registries and implement the transition,
    observation and reward queries. Models are immutable after construction
    and safe to share across parallel episode workers.
    """

    n_states: int
    n_actions: int
    n_observations: int
    discount: float
    state_names: tuple[str, ...]
    action_names: tuple[str, ...]
    observation_names: tuple[str, ...]
    initial_belief: DiscreteDistribution
    step_cap: int

    @property
    def terminal_state(self) -> int:
        return self.n_states

    def is_terminal(self, s: int) -> bool:
        return s >= self.n_states

    def legal_actions(self, s: int):
        return range(self.n_actions)

    def transition_support(self, s: int, a: int):
        """Successor support as (state, probability) pairs; states may be terminal."""
        raise NotImplementedError

    def obs_prob(self, o: int, s2: int, a: int) -> float:
        """O(o | s', a); defined for terminal s' as the uninformative channel."""
        raise NotImplementedError

    def sample_obs(self, s2: int, a: int, rng: random.Random) -> int:
        raise NotImplementedError

    def reward(self, s: int, a: int, s2: int) -> float:
        raise NotImplementedError

    def expected_reward(self, s: int, a: int) -> float:
        return sum(p * self.reward(s, a, s2) for s2, p in self.transition_support(s, a))

    def true_obs(self, s: int, a: int) -> int | None:
        """The single true observation for an observing action in state s."""
        return None

    def informative_obs(self, a: int) -> tuple[int, ...] | None:
        """Informative observation space of action a, or None when a's channel
        is uninformative (such observations bypass the deception kernel)."""
        return None

    def step(self, s: int, a: int, rng: random.Random):
        """Sample (s', o, r). Deterministic given (seed, call sequence)."""
        if self.is_terminal(s):
            raise StepOnTerminal(f"state {s} is terminal")
        support = self.transition_support(s, a)
        if len(support) == 1:
            s2 = support[0][0]
        else:
            r = rng.random()
            acc = 0.0
            s2 = support[-1][0]
            for cand, p in support:
                acc += p
                if r < acc:
                    s2 = cand
                    break
        o = self.sample_obs(s2, a, rng)
        return s2, o, self.reward(s, a, s2)

    def make_sim_context(self, **kwargs):
        """Planner-side per-simulation context; base models need none."""
        return None

    def sim_step(self, s: int, a: int, rng: random.Random, ctx=None):
        """Generative step as seen by a planner's simulator."""
        return self.step(s, a, rng)

    def rollout_legal(self, s: int, ctx):
        """Rollout action preference hook; base models apply no mask."""
        return self.legal_actions(s)


class ExplicitPomdpModel(PomdpModel):
    """Dense-matrix model for problems small enough to enumerate.

    transition[a, s, s'] covers live states plus the trailing terminal
    column; obs[a, s2, o] covers live states plus the terminal row.
    """

    def __init__(
        self,
        transition: np.ndarray,
        obs: np.ndarray,
        rewards: np.ndarray,
        discount: float,
        initial_belief,
        state_names,
        action_names,
        observation_names,
        true_obs_table: dict[int, np.ndarray] | None = None,
        informative: dict[int, tuple[int, ...]] | None = None,
        step_cap: int = 50,
    ):
        self.n_actions, n_rows, n_cols = transition.shape
        self.n_states = n_rows
        if n_cols not in (n_rows, n_rows + 1):
            raise ValueError("transition must be (A, S, S) or (A, S, S+1)")
        self.n_observations = obs.shape[2]
        self.discount = float(discount)
        self.transition = np.asarray(transition, dtype=np.float64)
        self.obs = np.asarray(obs, dtype=np.float64)
        self.rewards = np.asarray(rewards, dtype=np.float64)
        self.state_names = tuple(state_names)
        self.action_names = tuple(action_names)
        self.observation_names = tuple(observation_names)
        self.initial_belief = DiscreteDistribution(initial_belief)
        self._true_obs = true_obs_table or {}
        self._informative = informative or {}
        self.step_cap = step_cap
        for a in range(self.n_actions):
            for s in range(self.n_states):
                row = self.transition[a, s]
                if abs(row.sum() - 1.0) > BELIEF_ATOL or np.any(row < 0):
                    raise ValueError(f"invalid transition row (a={a}, s={s})")
        for a in range(self.n_actions):
            for s2 in range(self.obs.shape[1]):
                row = self.obs[a, s2]
                if abs(row.sum() - 1.0) > BELIEF_ATOL or np.any(row < 0):
                    raise ValueError(f"invalid observation row (a={a}, s'={s2})")
        self._support = [
            [
                [(int(s2), float(p)) for s2, p in enumerate(self.transition[a, s]) if p > 0.0]
                for s in range(self.n_states)
            ]
            for a in range(self.n_actions)
        ]

    def transition_support(self, s, a):
        return self._support[a][s]

    def obs_prob(self, o, s2, a):
        return float(self.obs[a, s2, o])

    def sample_obs(self, s2, a, rng):
        row = self.obs[a, s2]
        r = rng.random()
        acc = 0.0
        for o, p in enumerate(row):
            acc += p
            if r < acc:
                return o
        return int(row.size - 1)

    def reward(self, s, a, s2):
        return float(self.rewards[a, s, s2])

    def true_obs(self, s, a):
        table = self._true_obs.get(a)
        if table is None:
            return None
        return int(table[s])

    def informative_obs(self, a):
        return self._informative.get(a)


@dataclass
class StepRecord:
    """One executed environment step, with deception provenance."""

    state: int
    action: int
    reward: float
    next_state: int
    delivered_obs: int | None = None
    original_obs: int | None = None
    true_obs: int | None = None
    is_false: bool = False
    is_deceived: bool = False
    target: int | None = None
    belief_target_before: float | None = None
    belief_target_after: float | None = None
    position: tuple[int, int] | None = None


@dataclass
class Trajectory:
    """Episode carrier consumed by the metrics pipelines."""

    seed: int
    steps: list[StepRecord] = field(default_factory=list)
    final_state: int = -1
    forced_out: bool = False
    aborted: bool = False

    @property
    def rewards(self) -> list[float]:
        return [st.reward for st in self.steps]


def propagated_prior(model: PomdpModel, b, a: int) -> np.ndarray:
    """Transition-propagated belief over live states, Σ_s T(s'|s,a) b(s).

    Mass routed into terminal states is dropped (no belief is maintained
    after termination; the shipped problems never partially terminate).
    """
    bp = np.asarray(b, dtype=np.float64)
    prior = np.zeros(model.n_states)
    for s in np.nonzero(bp)[0]:
        for s2, p in model.transition_support(int(s), a):
            if s2 < model.n_states:
                prior[s2] += bp[s] * p
    return prior


def observation_likelihood(model: PomdpModel, b, a: int, o: int) -> float:
    """Pr(o | b, a) = Σ_{s'} O(o|s',a) Σ_s T(s'|s,a) b(s)."""
    prior = propagated_prior(model, b, a)
    total = 0.0
    for s2 in np.nonzero(prior)[0]:
        total += model.obs_prob(o, int(s2), a) * prior[s2]
    return float(total)


def belief_update(model: PomdpModel, b, a: int, o: int) -> DiscreteDistribution:
    """Bayes posterior b'(s') ∝ O(o|s',a) Σ_s T(s'|s,a) b(s).

    Raises ImpossibleObservation when Pr(o|b,a) vanishes, i.e. the caller
    delivered an observation the model rules out.
    """
    prior = propagated_prior(model, b, a)
    post = np.zeros_like(prior)
    for s2 in np.nonzero(prior)[0]:
        post[s2] = model.obs_prob(o, int(s2), a) * prior[s2]
    norm = post.sum()
    if norm <= LIKELIHOOD_FLOOR:
        raise ImpossibleObservation(
            f"Pr(o={o} | b, a={a}) = {norm} is zero within {LIKELIHOOD_FLOOR}"
        )
    return DiscreteDistribution(post / norm, renormalize=True)


def step(model: PomdpModel, s: int, a: int, rng: random.Random):
    """Module-level alias of PomdpModel.step (spec operation surface)."""
    return model.step(s, a, rng)


def discounted_return(rewards, gamma: float) -> float:
    """Σ_k gamma^k r_k for an ordered reward list."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    total = 0.0
    weight = 1.0
    for r in rewards:
        total += weight * r
        weight *= gamma
    return total


def classify_action(model: PomdpModel, a: int) -> ActionClass:
    """Split actions into observing / operating / terminalizing.

    Observing: identity transition everywhere and an informative channel.
    Terminalizing: every legal application lands in a terminal state.
    Operating: transits (or idles) with an uninformative channel.
    """
    if not 0 <= a < model.n_actions:
        raise ValueError(f"action {a} out of range")
    informative = model.informative_obs(a) is not None
    stays = True
    always_terminal = True
    for s in range(model.n_states):
        if a not in set(model.legal_actions(s)):
            continue
        support = model.transition_support(s, a)
        if support != [(s, 1.0)]:
            stays = False
        if any(s2 < model.n_states for s2, _ in support):
            always_terminal = False
    if stays and informative:
        return ActionClass.OBSERVING
    if always_terminal:
        return ActionClass.TERMINALIZING
    if not informative:
        return ActionClass.OPERATING
    raise UnclassifiableAction(
        f"action {a} transits state while emitting informative observations"
    )
