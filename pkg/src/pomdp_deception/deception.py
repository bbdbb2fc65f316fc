"""Deceptive kernels intercepting observations before the agent sees them.

A kernel rewrites each informative observation; uninformative observations
bypass it entirely. Three implementations are shipped:

* Prob — filters truthful observations through at rate p_k, replacing the
  rest with a uniform draw from the false candidates; already-false
  observations pass unchanged. End to end the agent receives the truth with
  probability p_T * p_k.
* Rand — ignores the input and delivers a uniform draw over the whole
  (informative) observation space.
* Oppo — never delivers the truth: a uniform draw from the false candidates.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass


class DegenerateObservationSpace(Exception):
    """No false candidate exists to deliver (|obs_space \\ {true}| = 0)."""


class KernelKind(enum.Enum):
    NONE = "none"
    PROB = "prob"
    RAND = "rand"
    OPPO = "oppo"


@dataclass(frozen=True)
class KernelSpec:
    """Deception policy: kind, deceptive rate p_k (Prob only) and optional
    per-application reward r_d (0 disables costly-deception mode)."""

    kind: KernelKind = KernelKind.NONE
    p_k: float = 1.0
    r_d: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p_k <= 1.0:
            raise ValueError(f"p_k must lie in [0, 1], got {self.p_k}")
        if not (self.r_d == self.r_d and abs(self.r_d) != float("inf")):
            raise ValueError("r_d must be finite")

    @property
    def active(self) -> bool:
        return self.kind is not KernelKind.NONE


@dataclass(frozen=True)
class DeceivedObservation:
    """Delivered observation with provenance flags.

    is_false marks disagreement with the ground truth, is_deceived marks
    disagreement with the pre-kernel original; both are recomputable from
    the index fields.
    """

    delivered: int
    original: int
    true_obs: int
    is_false: bool
    is_deceived: bool

    @classmethod
    def build(cls, delivered: int, original: int, true_obs: int) -> "DeceivedObservation":
        return cls(
            delivered=delivered,
            original=original,
            true_obs=true_obs,
            is_false=delivered != true_obs,
            is_deceived=delivered != original,
        )


def _false_candidates(obs_space, true_obs: int) -> list[int]:
    fakes = [o for o in obs_space if o != true_obs]
    if not fakes:
        raise DegenerateObservationSpace(
            f"observation space {tuple(obs_space)} has no false candidate"
        )
    return fakes


def apply_kernel(
    kernel: KernelSpec,
    original: int,
    true_obs: int,
    obs_space,
    rng: random.Random,
) -> DeceivedObservation:
    """Rewrite one informative observation according to the kernel.

    obs_space is the informative observation set for the acting channel and
    must contain both original and true_obs.
    """
    if original not in obs_space or true_obs not in obs_space:
        raise ValueError("original and true_obs must lie in obs_space")
    kind = kernel.kind
    if kind is KernelKind.NONE:
        delivered = original
    elif kind is KernelKind.PROB:
        if original == true_obs:
            if rng.random() < kernel.p_k:
                delivered = original
            else:
                fakes = _false_candidates(obs_space, true_obs)
                delivered = fakes[rng.randrange(len(fakes))]
        else:
            delivered = original
    elif kind is KernelKind.RAND:
        space = list(obs_space)
        delivered = space[rng.randrange(len(space))]
    elif kind is KernelKind.OPPO:
        fakes = _false_candidates(obs_space, true_obs)
        delivered = fakes[rng.randrange(len(fakes))]
    else:  # pragma: no cover
        raise ValueError(f"unknown kernel kind {kind}")
    return DeceivedObservation.build(delivered, original, true_obs)


def aggregate_true_rate(kernel: KernelSpec, p_T: float, obs_space_size: int = 2) -> float:
    """End-to-end probability that the agent receives the true observation
    after both sensor noise (accuracy p_T) and the kernel."""
    if not 0.0 <= p_T <= 1.0:
        raise ValueError("p_T must lie in [0, 1]")
    kind = kernel.kind
    if kind is KernelKind.NONE:
        return p_T
    if kind is KernelKind.PROB:
        return p_T * kernel.p_k
    if kind is KernelKind.RAND:
        return 1.0 / obs_space_size
    return 0.0


def expected_deceived_rate(kernel: KernelSpec, p_T: float, obs_space_size: int = 2) -> float:
    """Probability that the delivered observation differs from the original.

    Used by the costly-deception accounting: Prob rewrites truthful originals
    at rate 1-p_k, Rand collides with the original at rate 1/|Ω|, Oppo
    (channel hijack, original = truth) rewrites always.
    """
    if not 0.0 <= p_T <= 1.0:
        raise ValueError("p_T must lie in [0, 1]")
    kind = kernel.kind
    if kind is KernelKind.NONE:
        return 0.0
    if kind is KernelKind.PROB:
        return p_T * (1.0 - kernel.p_k)
    if kind is KernelKind.RAND:
        return 1.0 - 1.0 / obs_space_size
    return 1.0


def check_rate_ordering(kernels, p_T_min: float, obs_space_size: int = 2) -> bool:
    """True iff the aggregate true rates of the given Prob/Rand/Oppo specs
    are strictly ordered Prob > Rand > Oppo at the worst-case sensor
    accuracy. The harness refuses to label a configuration paper-faithful
    when this fails (it does at the RockSample distance limit 0.5)."""
    by_kind = {k.kind: k for k in kernels}
    rates = []
    for kind in (KernelKind.PROB, KernelKind.RAND, KernelKind.OPPO):
        spec = by_kind.get(kind, KernelSpec(kind=kind))
        rates.append(aggregate_true_rate(spec, p_T_min, obs_space_size))
    return rates[0] > rates[1] > rates[2]


def deception_cost(kernel: KernelSpec, applied: bool) -> float:
    """Stepwise reward credited when an active kernel deceived this step."""
    if kernel.kind is KernelKind.NONE or not applied:
        return 0.0
    return kernel.r_d
