"""Closed-form belief-discrepancy and belief-trap quantities, each paired
with a Monte-Carlo verifier that simulates the underlying mechanism."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BeliefRatioResult:
    """True-vs-deceived single-update posterior ratio on the true state."""

    ratio: float
    p_T: float
    p_F: float
    p_0: float


def belief_ratio(p_T: float, p_0: float) -> BeliefRatioResult:
    """Ratio of the truthful posterior to the deceived posterior on the true
    state of a binary target after one observation.

    (p_T^2 - (p_T - p_F) p_T p_0) / (p_F^2 + (p_T - p_F) p_F p_0); it falls
    from (p_T/p_F)^2 at p_0 = 0 down to 1 at p_0 = 1.
    """
    if not 0.5 < p_T < 1.0:
        raise ValueError("p_T must lie in (0.5, 1)")
    if not 0.0 <= p_0 <= 1.0:
        raise ValueError("p_0 must lie in [0, 1]")
    p_F = 1.0 - p_T
    spread = p_T - p_F
    ratio = (p_T * p_T - spread * p_T * p_0) / (p_F * p_F + spread * p_F * p_0)
    return BeliefRatioResult(ratio=ratio, p_T=p_T, p_F=p_F, p_0=p_0)


def trap_fail_prob(p_T: float, steps: int) -> float:
    """Closed-form probability of still being belief-trapped after 2 or 4
    observing steps, with the true observation arriving at rate p_T:
    2 p_T (1-p_T) for two steps and its square for four."""
    if not 0.0 <= p_T <= 1.0:
        raise ValueError("p_T must lie in [0, 1]")
    pair_fail = 2.0 * p_T * (1.0 - p_T)
    if steps == 2:
        return pair_fail
    if steps == 4:
        return pair_fail * pair_fail
    raise ValueError("closed form is derived for steps in {2, 4} only")


def trap_fail_mc(
    p_T: float,
    steps: int,
    trials: int,
    rng,
    model_accuracy: float = 0.85,
    threshold: float | None = None,
) -> float:
    """Monte-Carlo verifier: simulate the belief chain from (0.5, 0.5) under
    an identity transition and i.i.d. observations that are correct with
    rate p_T, updating with the agent's sensor model (model_accuracy) and
    escaping — absorbing — once a belief component strictly exceeds the
    threshold (default: the sensor accuracy, as the trap is defined).

    Returns the fraction of trials still trapped after `steps` observations.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0.0 <= p_T <= 1.0:
        raise ValueError("p_T must lie in [0, 1]")
    if not 0.5 < model_accuracy <= 1.0:
        raise ValueError("model_accuracy must lie in (0.5, 1]")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    thr = model_accuracy if threshold is None else threshold
    acc = model_accuracy
    belief = np.full(trials, 0.5)
    trapped = np.ones(trials, dtype=bool)
    for _ in range(steps):
        correct = gen.random(trials) < p_T
        like_true = np.where(correct, acc, 1.0 - acc)
        like_false = np.where(correct, 1.0 - acc, acc)
        num = belief * like_true
        den = num + (1.0 - belief) * like_false
        updated = num / den
        belief = np.where(trapped, updated, belief)
        escaped_now = trapped & (np.maximum(belief, 1.0 - belief) > thr)
        trapped &= ~escaped_now
    return float(trapped.mean())
