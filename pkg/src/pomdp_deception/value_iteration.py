"""Exact finite-horizon value iteration over alpha-vector sets.

Used both as the Tiger reference solver and as the trusted comparison point
for the approximate solvers. Requires an explicit-matrix model; the backup is
an incremental cross-sum with pruning after every observation stage, which
keeps horizon-8 Tiger well under a second without any LP machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ExplicitPomdpModel

_TIE_TOL = 1e-12


class ModelTooLarge(Exception):
    """Backup work bound |S|*|A|*|O|*|Gamma| exceeded the configured budget."""


@dataclass(frozen=True)
class AlphaVector:
    """One per-state value hyperplane tagged with its action."""

    values: tuple[float, ...]
    action: int

    def dot(self, b) -> float:
        return float(np.dot(self.values, b))


@dataclass(frozen=True)
class AlphaVectorSet:
    vectors: tuple[AlphaVector, ...]
    horizon: int

    def value(self, b) -> float:
        return max(v.dot(b) for v in self.vectors)


def _envelope_prune_2d(vectors: list[AlphaVector]) -> list[AlphaVector]:
    """Exact interval scan for |S| = 2: keep vectors maximal on some open
    subinterval of the belief segment (touch-only crossings are dropped)."""
    if len(vectors) <= 1:
        return vectors
    arr = np.array([v.values for v in vectors])
    breakpoints = {0.0, 1.0}
    n = len(vectors)
    for i in range(n):
        for j in range(i + 1, n):
            dv0 = arr[i, 0] - arr[j, 0]
            dv1 = arr[i, 1] - arr[j, 1]
            denom = dv0 - dv1
            if abs(denom) > _TIE_TOL:
                p = -dv1 / denom
                if 0.0 < p < 1.0:
                    breakpoints.add(p)
    points = sorted(breakpoints)
    midpoints = [(a + b) / 2.0 for a, b in zip(points, points[1:])]
    keep = set()
    for p in midpoints:
        vals = arr[:, 0] * p + arr[:, 1] * (1.0 - p)
        best = vals.max()
        winners = np.nonzero(vals >= best - _TIE_TOL)[0]
        keep.add(int(winners[0]))
    return [vectors[i] for i in sorted(keep)]


def prune_dominated(vectors) -> list[AlphaVector]:
    """Remove pointwise-dominated vectors; for 2-state models additionally
    remove vectors never maximal anywhere on the belief segment."""
    vecs = list(vectors)
    if not vecs:
        return []
    arr = np.array([v.values for v in vecs])
    kept_idx: list[int] = []
    for i in range(len(vecs)):
        dominated = False
        for j in kept_idx:
            if np.all(arr[j] >= arr[i] - _TIE_TOL):
                dominated = True
                break
        if dominated:
            continue
        kept_idx = [j for j in kept_idx if not np.all(arr[i] >= arr[j] + _TIE_TOL)]
        kept_idx.append(i)
    survivors = [vecs[i] for i in kept_idx]
    if arr.shape[1] == 2:
        survivors = _envelope_prune_2d(survivors)
    return survivors


def _expected_rewards(model: ExplicitPomdpModel) -> np.ndarray:
    """r̄[a, s] = Σ_{s'} T(s'|s,a) R(s,a,s'), terminal column included."""
    return np.einsum("ast,ast->as", model.transition, model.rewards)


def bellman_backup(
    model: ExplicitPomdpModel,
    gamma_set: AlphaVectorSet,
    budget: int = 2_000_000,
) -> AlphaVectorSet:
    """One exact backup: Γ_{t+1} = prune(∪_a {r̄_a + γ Σ_o choice_o})."""
    if not isinstance(model, ExplicitPomdpModel):
        raise TypeError("exact backup needs an explicit-matrix model")
    n_s, n_a, n_o = model.n_states, model.n_actions, model.n_observations
    work = n_s * n_a * n_o * max(1, len(gamma_set.vectors))
    if work > budget:
        raise ModelTooLarge(f"backup work {work} exceeds budget {budget}")
    rbar = _expected_rewards(model)
    gamma = model.discount
    prev = np.array([v.values for v in gamma_set.vectors])
    out: list[AlphaVector] = []
    for a in range(n_a):
        t_live = model.transition[a, :, :n_s]
        partial = [np.zeros(n_s)]
        for o in range(n_o):
            column = model.obs[a, :n_s, o]
            proj = gamma * (t_live * column[None, :]) @ prev.T  # (S, |Γ|)
            best: dict[tuple[float, ...], np.ndarray] = {}
            for g in partial:
                for k in range(proj.shape[1]):
                    cand = g + proj[:, k]
                    best[tuple(np.round(cand, 12))] = cand
            pruned = prune_dominated(
                [AlphaVector(tuple(v), a) for v in best.values()]
            )
            partial = [np.array(v.values) for v in pruned]
        for g in partial:
            out.append(AlphaVector(tuple(rbar[a] + g), a))
    return AlphaVectorSet(tuple(prune_dominated(out)), gamma_set.horizon + 1)


def solve_horizon(
    model: ExplicitPomdpModel, horizon: int, budget: int = 2_000_000
) -> AlphaVectorSet:
    """Iterate the backup from the zero value function up to `horizon`."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    gamma_set = AlphaVectorSet(
        (AlphaVector(tuple(0.0 for _ in range(model.n_states)), 0),), 0
    )
    for _ in range(horizon):
        gamma_set = bellman_backup(model, gamma_set, budget=budget)
    return gamma_set


def best_action(gamma_set: AlphaVectorSet, b) -> tuple[int, float]:
    """Argmax-vector lookup; ties break toward the lowest action index."""
    bv = np.asarray(b, dtype=np.float64)
    best_val = -np.inf
    best_act = 0
    for vec in gamma_set.vectors:
        val = vec.dot(bv)
        if val > best_val + _TIE_TOL or (
            abs(val - best_val) <= _TIE_TOL and vec.action < best_act
        ):
            best_val = max(val, best_val)
            best_act = vec.action
    return best_act, best_val


def alpha_csv_rows(gamma_set: AlphaVectorSet) -> list[tuple[int, float, float]]:
    """(action, v(s=0), v(s=1)) rows for the alpha-vector plot exports."""
    return [(v.action, v.values[0], v.values[1]) for v in gamma_set.vectors]
