"""Linear value function approximation over belief features.

One weight vector per action plays the role of a learned alpha-vector,
initialized at the immediate-reward hyperplanes and trained with episodic
semi-gradient TD(0) on experienced transitions (b, a, r, b'). Episodes
restrict terminalizing actions to the one with the best belief-expected
immediate reward: the agent may decide *when* to commit, but it always
commits to the door its belief favors — which is exactly the lever
observation deception attacks. Every 10th epoch a greedy validation episode
is played and logged with real environment rewards; those validations are
the sole source of the reported statistics.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from .core import ActionClass, ExplicitPomdpModel, belief_update, classify_action, discounted_return
from .deception import KernelKind, KernelSpec, apply_kernel, deception_cost


class DivergenceDetected(Exception):
    """A weight escaped the 10 * |R|max / (1 - gamma) stability envelope."""


@dataclass
class LinearValueFunction:
    """Per-action weight vectors over belief features."""

    weights: np.ndarray  # (A, S)
    training_epochs: int = 0


@dataclass(frozen=True)
class LvfaConfig:
    epochs: int = 4500
    lr: float = 0.1
    lr_end: float | None = None  # linear decay target; None keeps lr flat
    epsilon_start: float = 0.1
    epsilon_end: float = 0.1
    validate_every: int = 10
    final_validations: int = 0
    divergence_factor: float = 10.0
    # Tiger's constants make "listen forever" and "open wrong" exact value
    # ties (r_listen/(1-gamma) = r_danger); when a terminalizing action is
    # within this much of the best value, commit instead of dithering at
    # the tie
    commit_margin: float = 1.1
    # a door may only be opened once some belief component reaches this level
    # (one confident observation from the uniform prior); disable with 0
    commit_threshold: float = 0.85


@dataclass
class ValidationEpisode:
    """One greedy validation rollout with real environment rewards."""

    epoch: int
    undiscounted: float
    discounted: float
    listens: int
    final_action: int
    belief_trace: list[float]
    correct: bool | None
    forced_out: bool
    obs_events: list = field(default_factory=list)


def predict(vf: LinearValueFunction, b) -> np.ndarray:
    """Per-action values ⟨w_a, b⟩."""
    return vf.weights @ np.asarray(b, dtype=np.float64)


def greedy_action(vf: LinearValueFunction, b) -> int:
    """Argmax of predict; exact ties resolve to the lowest action index."""
    return int(np.argmax(predict(vf, b)))


def _intercepted_obs(model, kernel, s2, a, o_orig, rng):
    """Kernel interception for one observation; None when uninformative.

    Oppo hijacks the channel outright, so its recorded original is the true
    observation rather than a sensor draw.
    """
    space = model.informative_obs(a)
    if space is None:
        return None
    t = model.true_obs(s2, a)
    original = t if kernel.kind is KernelKind.OPPO else o_orig
    return apply_kernel(kernel, original, t, space, rng)


def train(
    model: ExplicitPomdpModel,
    kernel: KernelSpec,
    cfg: LvfaConfig,
    seed: int = 0,
) -> tuple[LinearValueFunction, list[ValidationEpisode]]:
    """Train per-action belief weights with semi-gradient TD(0).

    epsilon-greedy exploration decays linearly from epsilon_start to
    epsilon_end across epochs; validation episodes are pure greedy.
    """
    if not isinstance(model, ExplicitPomdpModel):
        raise TypeError("LVFA training needs an explicit-matrix model")
    rng = random.Random(seed)
    rbar = np.einsum("ast,ast->as", model.transition, model.rewards)  # (A, S)
    # start at the immediate-reward hyperplanes (the horizon-1 value function)
    # so early greedy validations never open a door blind at the uniform prior
    w = rbar.copy()
    gamma = model.discount
    r_abs = float(np.abs(model.rewards).max())
    bound = cfg.divergence_factor * r_abs / max(1.0 - gamma, 1e-9)
    terminalizing = [
        a
        for a in range(model.n_actions)
        if classify_action(model, a) is ActionClass.TERMINALIZING
    ]
    validations: list[ValidationEpisode] = []

    for epoch in range(1, cfg.epochs + 1):
        if cfg.epochs > 1:
            frac = (epoch - 1) / (cfg.epochs - 1)
        else:
            frac = 0.0
        eps = cfg.epsilon_start + frac * (cfg.epsilon_end - cfg.epsilon_start)
        lr_now = cfg.lr
        if cfg.lr_end is not None:
            lr_now = cfg.lr + frac * (cfg.lr_end - cfg.lr)
        _run_episode(
            model, kernel, w, rbar, terminalizing, rng, eps=eps, lr=lr_now,
            commit_margin=cfg.commit_margin, commit_threshold=cfg.commit_threshold,
        )
        if np.abs(w).max() > bound:
            raise DivergenceDetected(f"|w| exceeded {bound}")
        if epoch % cfg.validate_every == 0:
            validations.append(
                _run_episode(
                    model, kernel, w, rbar, terminalizing, rng, eps=0.0, lr=0.0,
                    commit_margin=cfg.commit_margin,
                    commit_threshold=cfg.commit_threshold, epoch=epoch,
                )
            )
    for j in range(cfg.final_validations):
        validations.append(
            _run_episode(
                model,
                kernel,
                w,
                rbar,
                terminalizing,
                rng,
                eps=0.0,
                lr=0.0,
                commit_margin=cfg.commit_margin,
                commit_threshold=cfg.commit_threshold,
                epoch=cfg.epochs + j + 1,
            )
        )
    return LinearValueFunction(weights=w, training_epochs=cfg.epochs), validations


def _allowed_actions(model, rbar, terminalizing, b, threshold: float = 0.0):
    """Non-terminalizing actions, plus the belief-preferred terminal one once
    the belief is committed enough.

    Committing is always to the door the current belief favors (ties keep the
    lowest action index), and only when some belief component has reached the
    commit threshold — the agent never opens a door on a hunch it has not
    heard support for.
    """
    if not terminalizing:
        return list(range(model.n_actions))
    allowed = [a for a in range(model.n_actions) if a not in terminalizing]
    if not allowed or float(np.max(b)) >= threshold - 1e-9:
        scores = [float(b @ rbar[a]) for a in terminalizing]
        allowed.append(terminalizing[int(np.argmax(scores))])
    return sorted(allowed)


def _run_episode(
    model, kernel, w, rbar, terminalizing, rng, eps, lr,
    commit_margin: float = 0.0, commit_threshold: float = 0.0,
    epoch: int | None = None,
):
    """One episode; learns in place when lr > 0, logs when epoch is given."""
    b = np.array(model.initial_belief.probs)
    s = model.initial_belief.sample(rng)
    gamma = model.discount
    rewards: list[float] = []
    trace = [float(b[0])]
    listens = 0
    obs_events = []
    final_action = -1
    forced_out = False
    step_i = 0
    while True:
        if step_i >= model.step_cap:
            forced_out = True
            break
        allowed = _allowed_actions(model, rbar, terminalizing, b, commit_threshold)
        if eps > 0.0 and rng.random() < eps:
            a = allowed[rng.randrange(len(allowed))]
        else:
            q = w @ b
            a = max(allowed, key=lambda act: (q[act], -act))
            if commit_margin > 0.0 and a not in terminalizing:
                commit = [act for act in allowed if act in terminalizing]
                if commit and q[commit[0]] >= q[a] - commit_margin:
                    a = commit[0]
        final_action = a
        s2, o_orig, r_env = model.step(s, a, rng)
        dec = _intercepted_obs(model, kernel, s2, a, o_orig, rng)
        r_real = r_env
        if dec is not None:
            r_real += deception_cost(kernel, applied=dec.is_deceived)
        rewards.append(r_real)
        terminal = model.is_terminal(s2)
        if terminal:
            b2 = None
            target = r_real
        else:
            if dec is not None:
                b_before = float(b[0])
                b2 = belief_update(model, b, a, dec.delivered).probs
                obs_events.append((step_i, dec, b_before, float(b2[0])))
                listens += 1
            else:
                b2 = b  # identity transitions only in the shipped explicit models
            q2 = w @ b2
            allowed2 = _allowed_actions(model, rbar, terminalizing, b2, commit_threshold)
            target = r_real + gamma * float(max(q2[act] for act in allowed2))
        if lr > 0.0:
            w[a] += lr * (target - float(w[a] @ b)) * b
        if terminal:
            break
        b = b2
        trace.append(float(b[0]))
        s = s2
        step_i += 1

    if epoch is None:
        return None
    # correctness judged from the terminal environment reward, not the belief
    correct: bool | None = None
    if not forced_out:
        correct = r_env > 0
    return ValidationEpisode(
        epoch=epoch,
        undiscounted=sum(rewards),
        discounted=discounted_return(rewards, gamma),
        listens=listens,
        final_action=final_action,
        belief_trace=trace,
        correct=correct,
        forced_out=forced_out,
        obs_events=obs_events,
    )
