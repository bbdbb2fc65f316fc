"""Observation categorization, belief-change attribution and aggregates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ObsRecord:
    """One informative observation with its downstream attribution.

    polarity is 'T' when the delivered observation is positive for the
    target (Good rock / the door-0 side); later_action_class is finalized at
    episode end: P if the target rock is sampled before the next check of the
    same rock, N otherwise for negatives (and for visited positives), Ignore
    for positives whose cell is never visited in the window.
    """

    episode: int
    step: int
    target: int
    delivered: int
    original: int
    true_obs: int
    is_false: bool
    is_deceived: bool
    polarity: str = ""
    later_action_class: str = "Pending"
    belief_before: float = 0.0
    belief_after: float = 0.0
    changed: bool = False
    from_false: bool = False
    from_deceived: bool = False
    target_pos: tuple[int, int] | None = None


@dataclass
class EpisodeStats:
    episode: int
    seed: int
    steps: int
    undiscounted: float
    discounted: float
    listens: int = 0
    checks: int = 0
    samples: int = 0
    correct: bool | None = None
    forced_out: bool = False
    aborted: bool = False
    positions: list[tuple[int, int]] = field(default_factory=list)
    belief_trace: list[float] = field(default_factory=list)


@dataclass
class MetricsSummary:
    """Per-configuration aggregate mirroring the result-table columns."""

    problem: str
    solver: str
    kernel: str
    p_k: float
    r_d: float
    episodes: int
    master_seed: int
    undiscounted_mean: float
    undiscounted_se: float
    discounted_mean: float
    discounted_se: float
    correct_choices: int | None = None
    incorrect_choices: int | None = None
    other_cases: int | None = None
    avg_listens: float | None = None
    avg_sampled_rocks: float | None = None
    avg_checkings: float | None = None
    avg_steps: float | None = None
    obs_total: int = 0
    belief_changes: int = 0
    belief_changes_false: int = 0
    belief_changes_deceived: int = 0
    aborted_episodes: int = 0
    rate_ordering_ok: bool | None = None

    def class_counts(self, records, deceived: bool) -> dict[str, int]:
        counts = {"TP": 0, "TN": 0, "FP": 0, "FN": 0, "Ignore": 0}
        for rec in records:
            if rec.is_deceived == deceived and rec.later_action_class in counts:
                counts[rec.later_action_class] += 1
        return counts


def mean_se(values) -> tuple[float, float]:
    """Sample mean and standard error (std/sqrt(n)) over episodes."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        return 0.0, 0.0
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / np.sqrt(arr.size))


def attribute_belief_change(rec: ObsRecord, tie_is_negative: bool = True) -> None:
    """Mark whether the update flipped the target's MAP label and whether a
    false/deceived observation is on the hook for it. Ties (exactly 0.5)
    count as the negative label."""
    before = rec.belief_before > 0.5
    after = rec.belief_after > 0.5
    rec.changed = before != after
    rec.from_false = rec.changed and rec.is_false
    rec.from_deceived = rec.changed and rec.is_deceived


def categorize_observation(records: list[ObsRecord], samples, visits) -> None:
    """Finalize later_action_class for one episode's check records.

    samples: list of (step, rock) Sample executions; visits: list of
    (step, position) with positions at each step start; records carry the
    rock index in `target`. An observation is P when its rock is sampled any
    time afterwards — a deceived negative the agent overrides and samples
    anyway is the deception *failing* (FP), not a miss.
    """
    for rec in records:
        sampled = any(
            t > rec.step for t, rk in samples if rk == rec.target
        )
        if sampled:
            rec.later_action_class = "TP" if rec.polarity == "T" else "FP"
            continue
        visited = any(
            t > rec.step and pos == rec.target_pos for t, pos in visits
        )
        if visited:
            rec.later_action_class = "TN" if rec.polarity == "T" else "FN"
        else:
            rec.later_action_class = "Ignore"


def occupancy_grid(episode_positions, width: int, height: int) -> np.ndarray:
    """Mean visit counts per cell over episodes; grid[y, x] layout.

    The grid total equals the average steps per episode because each step
    occupies exactly one in-grid cell at its start.
    """
    episodes = list(episode_positions)
    if not episodes:
        raise ValueError("occupancy grid needs at least one episode")
    grid = np.zeros((height, width))
    for positions in episodes:
        for x, y in positions:
            grid[y, x] += 1.0
    return grid / len(episodes)


def reward_belief_histogram(
    traces_and_returns,
    belief_bins: int = 20,
    return_edges=None,
):
    """2D histogram counts over (stepwise belief, episode final return).

    Every stepwise belief in an episode contributes one count at that
    episode's final undiscounted return. Returns (counts, belief_edges,
    return_edges) with counts[i, j] for belief bin i, return bin j.
    """
    pairs = [(b, ret) for trace, ret in traces_and_returns for b in trace]
    belief_edges = np.linspace(0.0, 1.0, belief_bins + 1)
    if return_edges is None:
        if pairs:
            rets = [r for _, r in pairs]
            lo, hi = min(rets), max(rets)
            pad = max(1.0, 0.05 * (hi - lo))
            return_edges = np.linspace(lo - pad, hi + pad, 25)
        else:
            return_edges = np.linspace(-1.0, 1.0, 25)
    if not pairs:
        return (
            np.zeros((belief_bins, len(return_edges) - 1)),
            belief_edges,
            np.asarray(return_edges, dtype=np.float64),
        )
    beliefs = np.array([b for b, _ in pairs])
    rets = np.array([r for _, r in pairs])
    counts, be, re_ = np.histogram2d(beliefs, rets, bins=[belief_edges, return_edges])
    return counts, be, re_
