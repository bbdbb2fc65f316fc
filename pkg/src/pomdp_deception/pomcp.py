"""Partially Observable Monte-Carlo Planning: UCT over a history tree with an
unweighted particle filter.

The tree is owned by a single episode; simulations mutate it sequentially.
After the real step, advance() re-roots at the matching child and refills its
particle set by rejection sampling against the delivered observation,
reinvigorating survivor copies (with model-local noise where the model
provides it) when the filter stalls on a deception-starved observation.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .core import DiscreteDistribution, PomdpModel


class EmptyParticleSet(Exception):
    """search()/advance() needs at least one root particle."""


class ParticleDepletion(Exception):
    """Rejection filtering and reinvigoration could not reach particle_lower."""


@dataclass(frozen=True)
class PomcpConfig:
    simulations: int = 4096
    uct_c: float = 25.0
    rollout_depth: int = 100
    particle_lower: int = 64
    particle_upper: int = 1024
    discount_truncation: float = 0.005
    refill_attempts_factor: int = 16
    reinvigoration_noise: float = 0.1
    # rollout preference: let models veto actions during rollouts (e.g. no
    # Sample on a rock not currently believed Good); off by default
    rollout_mask: bool = False

    def __post_init__(self):
        if self.simulations < 1:
            raise ValueError("need at least one simulation per decision")
        if self.particle_lower > self.particle_upper:
            raise ValueError("particle_lower must not exceed particle_upper")


class ActionEdge:
    __slots__ = ("visits", "value", "children")

    def __init__(self):
        self.visits = 0
        self.value = 0.0
        self.children: dict[int, HistoryNode] = {}


class HistoryNode:
    """History-tree node ⟨N(h), V(h), B(h)⟩ with action/observation children."""

    __slots__ = ("visits", "value", "particles", "children")

    def __init__(self, particles=None):
        self.visits = 0
        self.value = 0.0
        self.particles: list[int] = list(particles) if particles else []
        self.children: dict[int, ActionEdge] = {}


def particle_belief(particles, n_states: int) -> DiscreteDistribution:
    """Empirical frequency distribution of a particle multiset."""
    if not particles:
        raise EmptyParticleSet("cannot form a belief from zero particles")
    counts = [0.0] * n_states
    inc = 1.0 / len(particles)
    for s in particles:
        counts[s] += inc
    return DiscreteDistribution(counts, renormalize=True)


class PomcpPlanner:
    """One planner instance per episode (the tree is mutable state)."""

    def __init__(self, model: PomdpModel, cfg: PomcpConfig, rng: random.Random):
        self.model = model
        self.cfg = cfg
        self.rng = rng
        gamma = model.discount
        if gamma < 1.0 and cfg.discount_truncation > 0.0:
            trunc = int(math.log(cfg.discount_truncation) / math.log(gamma)) + 1
        else:
            trunc = cfg.rollout_depth
        self.max_depth = min(cfg.rollout_depth, trunc)

    def new_root(self, particles) -> HistoryNode:
        return HistoryNode(particles=particles)

    def search(self, root: HistoryNode, ctx_factory=None) -> int:
        """Run the simulation budget from the root and return the greedy action."""
        if not root.particles:
            raise EmptyParticleSet("search needs root particles")
        n = len(root.particles)
        for _ in range(self.cfg.simulations):
            s = root.particles[self.rng.randrange(n)]
            ctx = ctx_factory() if ctx_factory is not None else None
            self._simulate(s, root, 0, ctx)
        best_a, best_q = -1, -math.inf
        for a in sorted(root.children):
            edge = root.children[a]
            if edge.visits > 0 and edge.value > best_q:
                best_a, best_q = a, edge.value
        if best_a < 0:
            legal = self.model.legal_actions(root.particles[0])
            return legal[self.rng.randrange(len(legal))]
        return best_a

    def _simulate(self, s: int, node: HistoryNode, depth: int, ctx) -> float:
        model = self.model
        if depth >= self.max_depth or model.is_terminal(s):
            return 0.0
        if not node.children:
            for a in model.legal_actions(s):
                node.children[a] = ActionEdge()
            ret = self._rollout(s, depth, ctx)
            node.visits += 1
            node.value += (ret - node.value) / node.visits
            return ret
        log_n = math.log(node.visits) if node.visits > 0 else 0.0
        c = self.cfg.uct_c
        best_a, best_u = -1, -math.inf
        for a, edge in node.children.items():
            if edge.visits == 0:
                best_a = a
                break
            u = edge.value + c * math.sqrt(log_n / edge.visits)
            if u > best_u:
                best_a, best_u = a, u
        edge = node.children[best_a]
        s2, o, r = model.sim_step(s, best_a, self.rng, ctx)
        if model.is_terminal(s2) or depth + 1 >= self.max_depth:
            ret = r
        else:
            child = edge.children.get(o)
            if child is None:
                child = HistoryNode()
                edge.children[o] = child
            if len(child.particles) < self.cfg.particle_upper:
                child.particles.append(s2)
            ret = r + model.discount * self._simulate(s2, child, depth + 1, ctx)
        edge.visits += 1
        edge.value += (ret - edge.value) / edge.visits
        node.visits += 1
        node.value += (ret - node.value) / node.visits
        return ret

    def _rollout(self, s: int, depth: int, ctx) -> float:
        model = self.model
        rng = self.rng
        gamma = model.discount
        masked = self.cfg.rollout_mask
        total = 0.0
        disc = 1.0
        while depth < self.max_depth and not model.is_terminal(s):
            if masked:
                legal = model.rollout_legal(s, ctx)
            else:
                legal = model.legal_actions(s)
            a = legal[rng.randrange(len(legal))]
            s, _, r = model.sim_step(s, a, rng, ctx)
            total += disc * r
            disc *= gamma
            depth += 1
        return total

    def advance(self, root: HistoryNode, a: int, o: int) -> HistoryNode:
        """Re-root after executing `a` and receiving the delivered `o`,
        refilling the child's particles to at least particle_lower."""
        if not root.particles:
            raise EmptyParticleSet("advance needs root particles")
        model = self.model
        cfg = self.cfg
        rng = self.rng
        edge = root.children.get(a)
        child = edge.children.get(o) if edge is not None else None
        if child is None:
            child = HistoryNode()
        particles = child.particles
        if len(particles) < cfg.particle_lower:
            src = root.particles
            n_src = len(src)
            budget = cfg.refill_attempts_factor * cfg.particle_upper
            attempts = 0
            while len(particles) < cfg.particle_lower and attempts < budget:
                attempts += 1
                s = src[rng.randrange(n_src)]
                s2, o2, _ = model.sim_step(s, a, rng, None)
                if o2 == o and not model.is_terminal(s2):
                    particles.append(s2)
            if len(particles) < cfg.particle_lower:
                self._reinvigorate(particles, a, o, cfg.particle_lower, src)
        if len(particles) > cfg.particle_upper:
            del particles[cfg.particle_upper :]
        return child

    def _reinvigorate(self, survivors: list[int], a: int, o: int, target: int, src) -> None:
        """Top survivors up with noised copies; with zero survivors, restart
        from transition-propagated root particles when the model can perturb."""
        model = self.model
        rng = self.rng
        perturb = getattr(model, "perturb_particle", None)
        noise = self.cfg.reinvigoration_noise
        if not survivors:
            if perturb is None:
                raise ParticleDepletion(
                    f"no particle survives observation {o} after action {a}"
                )
            n_src = len(src)
            attempts = 0
            budget = self.cfg.refill_attempts_factor * max(target, 1)
            while len(survivors) < target and attempts < budget:
                attempts += 1
                s = src[rng.randrange(n_src)]
                s2, _, _ = model.sim_step(s, a, rng, None)
                if not model.is_terminal(s2):
                    survivors.append(perturb(s2, rng, noise))
            if not survivors:
                raise ParticleDepletion(
                    f"reinvigoration stalled on observation {o} after action {a}"
                )
            # fall through to survivor copies if the budget ran short
        base = list(survivors)
        n_base = len(base)
        while len(survivors) < target:
            s = base[rng.randrange(n_base)]
            survivors.append(perturb(s, rng, noise) if perturb is not None else s)
