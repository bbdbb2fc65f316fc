"""CSV persistence with a stable column order and 6-significant-digit floats."""

from __future__ import annotations

import csv
from pathlib import Path


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def write_csv(path: str | Path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


SUMMARY_COLUMNS = [
    "label",
    "problem",
    "solver",
    "kernel",
    "p_k",
    "r_d",
    "episodes",
    "master_seed",
    "undiscounted_mean",
    "undiscounted_se",
    "discounted_mean",
    "discounted_se",
    "correct_choices",
    "incorrect_choices",
    "other_cases",
    "avg_listens",
    "avg_sampled_rocks",
    "avg_checkings",
    "avg_steps",
    "obs_total",
    "belief_changes",
    "belief_changes_false",
    "belief_changes_deceived",
    "aborted_episodes",
    "rate_ordering_ok",
]

EPISODE_COLUMNS = [
    "episode",
    "seed",
    "steps",
    "undiscounted",
    "discounted",
    "listens",
    "checkings",
    "sampled_rocks",
    "correct",
    "forced_out",
    "aborted",
]

STEP_COLUMNS = [
    "episode",
    "step",
    "pos_x",
    "pos_y",
    "action",
    "action_name",
    "reward",
    "delivered_obs",
    "original_obs",
    "true_obs",
    "is_false",
    "is_deceived",
    "target",
    "belief_target_before",
    "belief_target_after",
    "root_stats",
    "rock_marginals",
]

OBS_COLUMNS = [
    "episode",
    "step",
    "target",
    "delivered",
    "original",
    "true_obs",
    "is_false",
    "is_deceived",
    "polarity",
    "later_action_class",
    "belief_before",
    "belief_after",
    "changed",
    "from_false",
    "from_deceived",
]

OCCUPANCY_COLUMNS = ["x", "y", "mean_visits"]

BELIEF_HIST_COLUMNS = [
    "belief_lo",
    "belief_hi",
    "return_lo",
    "return_hi",
    "count",
]

ALPHA_COLUMNS = ["action", "v0", "v1"]

VALIDATION_COLUMNS = [
    "run",
    "epoch",
    "undiscounted",
    "discounted",
    "listens",
    "final_action",
    "belief_trace",
]
