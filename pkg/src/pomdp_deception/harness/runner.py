"""Seeded experiment execution: episode loops per solver, metric assembly,
CSV artifacts. Episodes draw independent RNG streams from (master seed,
episode index); aggregation reduces in episode order so results do not
depend on worker scheduling."""

from __future__ import annotations

import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from ..core import StepRecord, Trajectory, belief_update, discounted_return
from ..deception import (
    KernelKind,
    KernelSpec,
    apply_kernel,
    check_rate_ordering,
    deception_cost,
)
from ..linear_vf import LvfaConfig, train
from ..pomcp import ParticleDepletion, PomcpConfig, PomcpPlanner, particle_belief
from ..problems import rocksample as rs
from ..problems import tiger as tg
from ..value_iteration import alpha_csv_rows, best_action, solve_horizon
from .config import ExperimentConfig
from .csvio import (
    ALPHA_COLUMNS,
    BELIEF_HIST_COLUMNS,
    EPISODE_COLUMNS,
    OBS_COLUMNS,
    OCCUPANCY_COLUMNS,
    STEP_COLUMNS,
    SUMMARY_COLUMNS,
    VALIDATION_COLUMNS,
    write_csv,
)
from .metrics import (
    EpisodeStats,
    MetricsSummary,
    ObsRecord,
    attribute_belief_change,
    categorize_observation,
    mean_se,
    occupancy_grid,
    reward_belief_histogram,
)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    summary: MetricsSummary
    episodes: list[EpisodeStats]
    obs_records: list[ObsRecord]
    step_rows: list[tuple] = field(default_factory=list)
    alpha_rows: list[tuple] | None = None
    occupancy: np.ndarray | None = None
    validation_rows: list[tuple] = field(default_factory=list)
    files: dict[str, Path] = field(default_factory=dict)


@lru_cache(maxsize=16)
def _tiger(cfg: tg.TigerConfig):
    return tg.tiger_model(cfg)


@lru_cache(maxsize=16)
def _rocksample(cfg: rs.RockSampleConfig):
    return rs.RockSampleModel(cfg)


def _episode_seed(master_seed: int, episode: int) -> int:
    return master_seed * 1_000_003 + episode


def _intercept(model, kernel, s2, a, o_orig, rng):
    """Kernel interception; Oppo hijacks the channel (original := truth)."""
    space = model.informative_obs(a)
    if space is None:
        return None
    t = model.true_obs(s2, a)
    original = t if kernel.kind is KernelKind.OPPO else o_orig
    return apply_kernel(kernel, original, t, space, rng)


# ---------------------------------------------------------------------------
# Tiger episodes driven by an explicit belief-indexed policy (VI / POMCP-free)


def _tiger_policy_episode(model, kernel, policy, rng, episode, seed):
    b = np.array(model.initial_belief.probs)
    s = model.initial_belief.sample(rng)
    trajectory = Trajectory(seed=seed)
    trace = [float(b[0])]
    listens = 0
    records: list[ObsRecord] = []
    forced_out = False
    correct = None
    step_i = 0
    while True:
        if step_i >= model.step_cap:
            forced_out = True
            break
        a = policy(b)
        s2, o_orig, r_env = model.step(s, a, rng)
        dec = _intercept(model, kernel, s2, a, o_orig, rng)
        r = r_env + deception_cost(kernel, dec.is_deceived if dec else False)
        terminal = model.is_terminal(s2)
        b_before = float(b[0])
        b_after = b_before
        if dec is not None and not terminal:
            b = belief_update(model, b, a, dec.delivered).probs
            b_after = float(b[0])
            listens += 1
            rec = ObsRecord(
                episode=episode,
                step=step_i,
                target=0,
                delivered=dec.delivered,
                original=dec.original,
                true_obs=dec.true_obs,
                is_false=dec.is_false,
                is_deceived=dec.is_deceived,
                polarity="T" if dec.delivered == tg.HEAR_LEFT else "F",
                later_action_class="",
                belief_before=b_before,
                belief_after=b_after,
            )
            attribute_belief_change(rec)
            records.append(rec)
            trace.append(b_after)
        trajectory.steps.append(
            StepRecord(
                state=s,
                action=a,
                reward=r,
                next_state=s2,
                delivered_obs=dec.delivered if dec else o_orig,
                original_obs=dec.original if dec else o_orig,
                true_obs=dec.true_obs if dec else None,
                is_false=dec.is_false if dec else False,
                is_deceived=dec.is_deceived if dec else False,
                target=0,
                belief_target_before=b_before,
                belief_target_after=b_after,
            )
        )
        if terminal:
            correct = r_env > 0
            break
        s = s2
        step_i += 1
    trajectory.final_state = s2 if trajectory.steps else s
    trajectory.forced_out = forced_out
    rewards = trajectory.rewards
    step_rows = [
        _step_row(episode, i, st, model, ("", ""))
        for i, st in enumerate(trajectory.steps)
    ]
    stats = EpisodeStats(
        episode=episode,
        seed=seed,
        steps=len(rewards),
        undiscounted=sum(rewards),
        discounted=discounted_return(rewards, model.discount),
        listens=listens,
        correct=correct,
        forced_out=forced_out,
        belief_trace=trace,
    )
    return stats, records, step_rows


# ---------------------------------------------------------------------------
# POMCP episodes (Tiger and RockSample)


def _rock_belief_update(belief: float, accuracy: float, delivered: int) -> float:
    """Exact 2-entry Bayes update for one rock's Good marginal; the per-rock
    update equals the joint update's marginal because rocks are independent
    given the observation stream. Saturated beliefs are clamped so a
    deception-contradicted certain belief can still move."""
    b = min(max(belief, 1e-6), 1.0 - 1e-6)
    seen_good = (delivered - 1) % 2 == 0
    like_good = accuracy if seen_good else 1.0 - accuracy
    like_bad = 1.0 - accuracy if seen_good else accuracy
    num = b * like_good
    return num / (num + (1.0 - b) * like_bad)


def _polarity(is_rs: bool, delivered: int) -> str:
    if is_rs:
        return "T" if (delivered - 1) % 2 == 0 else "F"
    return "T" if delivered == tg.HEAR_LEFT else "F"


def _pomcp_episode(problem, tiger_cfg, rs_cfg, pomcp_cfg, kernel, master_seed, episode):
    seed = _episode_seed(master_seed, episode)
    rng = random.Random(seed)
    is_rs = problem == "rocksample"
    model = _rocksample(rs_cfg) if is_rs else _tiger(tiger_cfg)
    planner = PomcpPlanner(model, pomcp_cfg, rng)
    if is_rs:
        s = model.initial_state(rng)
        particles = [model.initial_state(rng) for _ in range(pomcp_cfg.particle_upper)]
    else:
        s = model.initial_belief.sample(rng)
        particles = [
            model.initial_belief.sample(rng) for _ in range(pomcp_cfg.particle_upper)
        ]
    root = planner.new_root(particles)
    beliefs = [0.5] * model.n_rocks if is_rs else None  # exact per-rock marginals
    trajectory = Trajectory(seed=seed)
    extras: list[tuple[str, str]] = []  # (root V/N stats, rock marginals) per step
    records: list[ObsRecord] = []
    positions: list[tuple[int, int]] = []
    samples: list[tuple[int, int]] = []
    trace: list[float] = []
    listens = checks = n_samples = 0
    forced_out = aborted = False
    correct = None
    step_i = 0
    while True:
        if step_i >= model.step_cap:
            forced_out = True
            break
        if is_rs:
            st = model.decode(s)
            positions.append(st.position)
            actual_bits = model.rock_bits(s)
            lure = kernel.r_d if kernel.active else 0.0
            ctx_factory = lambda: model.make_sim_context(beliefs, actual_bits, lure)  # noqa: E731
        else:
            dist = particle_belief(root.particles, model.n_states)
            trace.append(float(dist[0]))
            ctx_factory = None
        a = planner.search(root, ctx_factory)
        root_stats = ";".join(
            f"{act}:{edge.visits}:{edge.value:.4g}"
            for act, edge in sorted(root.children.items())
            if edge.visits > 0
        )
        marg_str = ";".join(f"{m:.4g}" for m in beliefs) if is_rs else ""
        if is_rs and a == rs.SAMPLE:
            rock = model.rock_at_state(s)
            s2, o_orig, r_env = model.step(s, a, rng, rock_beliefs=beliefs)
            samples.append((step_i, rock))
            n_samples += 1
            beliefs[rock] = 0.0  # sampled rocks are consumed
        else:
            s2, o_orig, r_env = model.step(s, a, rng)
        dec = _intercept(model, kernel, s2, a, o_orig, rng)
        r = r_env + deception_cost(kernel, dec.is_deceived if dec else False)
        delivered = dec.delivered if dec else o_orig
        terminal = model.is_terminal(s2)
        target = -1
        b_before = b_after = 0.0
        if dec is not None:
            if is_rs:
                target = a - rs.CHECK_BASE
                checks += 1
                b_before = beliefs[target]
                b_after = _rock_belief_update(
                    b_before, model.check_accuracy(s, target), delivered
                )
                beliefs[target] = b_after
            else:
                target = 0
                listens += 1
                b_before = float(particle_belief(root.particles, model.n_states)[0])
        if not terminal:
            try:
                root = planner.advance(root, a, delivered)
            except ParticleDepletion:
                aborted = True
        if dec is not None:
            if not is_rs:
                if aborted or terminal:
                    b_after = b_before
                else:
                    b_after = float(particle_belief(root.particles, model.n_states)[0])
            rec = ObsRecord(
                episode=episode,
                step=step_i,
                target=target,
                delivered=delivered,
                original=dec.original,
                true_obs=dec.true_obs,
                is_false=dec.is_false,
                is_deceived=dec.is_deceived,
                polarity=_polarity(is_rs, delivered),
                belief_before=b_before,
                belief_after=b_after,
                target_pos=rs_cfg.rock_positions[target] if is_rs else None,
            )
            attribute_belief_change(rec)
            records.append(rec)
        trajectory.steps.append(
            StepRecord(
                state=s,
                action=a,
                reward=r,
                next_state=s2,
                delivered_obs=delivered,
                original_obs=dec.original if dec else o_orig,
                true_obs=dec.true_obs if dec else None,
                is_false=dec.is_false if dec else False,
                is_deceived=dec.is_deceived if dec else False,
                target=target if target >= 0 else None,
                belief_target_before=b_before if dec else None,
                belief_target_after=b_after if dec else None,
                position=positions[-1] if is_rs else None,
            )
        )
        extras.append((root_stats, marg_str))
        if terminal:
            if not is_rs:
                correct = r_env > 0
            break
        if aborted:
            break
        s = s2
        step_i += 1
    trajectory.final_state = s2 if trajectory.steps else s
    trajectory.forced_out = forced_out
    trajectory.aborted = aborted
    if is_rs:
        categorize_observation(
            records, samples, [(t, p) for t, p in enumerate(positions)]
        )
    else:
        for rec in records:
            rec.later_action_class = ""
    rewards = trajectory.rewards
    step_rows = [
        _step_row(episode, i, st, model, extra)
        for i, (st, extra) in enumerate(zip(trajectory.steps, extras))
    ]
    stats = EpisodeStats(
        episode=episode,
        seed=seed,
        steps=len(rewards),
        undiscounted=sum(rewards),
        discounted=discounted_return(rewards, model.discount),
        listens=listens,
        checks=checks,
        samples=n_samples,
        correct=correct,
        forced_out=forced_out,
        aborted=aborted,
        positions=positions,
        belief_trace=trace,
    )
    return stats, records, step_rows


def _step_row(episode, step_i, rec: StepRecord, model, extra) -> tuple:
    pos = rec.position or ("", "")
    return (
        episode,
        step_i,
        pos[0],
        pos[1],
        rec.action,
        model.action_names[rec.action],
        rec.reward,
        rec.delivered_obs,
        rec.original_obs,
        rec.true_obs if rec.true_obs is not None else "",
        rec.is_false,
        rec.is_deceived,
        rec.target if rec.target is not None else "",
        rec.belief_target_before if rec.belief_target_before is not None else "",
        rec.belief_target_after if rec.belief_target_after is not None else "",
        extra[0],
        extra[1],
    )


# ---------------------------------------------------------------------------


def _run_lvfa(cfg: ExperimentConfig):
    model = _tiger(cfg.tiger)
    per_run = math.ceil(cfg.episodes / cfg.runs)
    in_training = cfg.lvfa.epochs // cfg.lvfa.validate_every
    lv_cfg = replace(cfg.lvfa, final_validations=max(0, per_run - in_training))
    episodes: list[EpisodeStats] = []
    records: list[ObsRecord] = []
    validation_rows: list[tuple] = []
    alpha_rows: list[tuple] | None = None
    ep_index = 0
    for run_i in range(cfg.runs):
        seed = _episode_seed(cfg.master_seed, run_i)
        vf, validations = train(model, cfg.kernel, lv_cfg, seed=seed)
        if alpha_rows is None:
            alpha_rows = [
                (a, float(vf.weights[a, 0]), float(vf.weights[a, 1]))
                for a in range(model.n_actions)
            ]
        for val in validations[:per_run]:
            episodes.append(
                EpisodeStats(
                    episode=ep_index,
                    seed=seed,
                    steps=len(val.belief_trace),
                    undiscounted=val.undiscounted,
                    discounted=val.discounted,
                    listens=val.listens,
                    correct=val.correct,
                    forced_out=val.forced_out,
                    belief_trace=val.belief_trace,
                )
            )
            validation_rows.append(
                (
                    run_i,
                    val.epoch,
                    val.undiscounted,
                    val.discounted,
                    val.listens,
                    val.final_action,
                    ";".join(f"{b:.6g}" for b in val.belief_trace),
                )
            )
            for step_i, dec, b_before, b_after in val.obs_events:
                rec = ObsRecord(
                    episode=ep_index,
                    step=step_i,
                    target=0,
                    delivered=dec.delivered,
                    original=dec.original,
                    true_obs=dec.true_obs,
                    is_false=dec.is_false,
                    is_deceived=dec.is_deceived,
                    polarity="T" if dec.delivered == tg.HEAR_LEFT else "F",
                    later_action_class="",
                    belief_before=b_before,
                    belief_after=b_after,
                )
                attribute_belief_change(rec)
                records.append(rec)
            ep_index += 1
    return episodes, records, [], alpha_rows, validation_rows


def _run_vi(cfg: ExperimentConfig):
    model = _tiger(cfg.tiger)
    gamma_set = solve_horizon(model, cfg.vi_horizon)
    episodes: list[EpisodeStats] = []
    records: list[ObsRecord] = []
    step_rows: list[tuple] = []

    def policy(b):
        return best_action(gamma_set, b)[0]

    for ep in range(cfg.episodes):
        seed = _episode_seed(cfg.master_seed, ep)
        stats, recs, rows = _tiger_policy_episode(
            model, cfg.kernel, policy, random.Random(seed), ep, seed
        )
        episodes.append(stats)
        records.extend(recs)
        step_rows.extend(rows)
    return episodes, records, step_rows, alpha_csv_rows(gamma_set), []


class _PartialRun(Exception):
    """Carrier for episodes completed before a propagating solver error."""

    def __init__(self, outputs, cause: Exception):
        super().__init__(str(cause))
        self.outputs = outputs
        self.cause = cause


def _run_pomcp_all(cfg: ExperimentConfig):
    args = [
        (cfg.problem, cfg.tiger, cfg.rocksample, cfg.pomcp, cfg.kernel, cfg.master_seed, ep)
        for ep in range(cfg.episodes)
    ]
    episodes: list[EpisodeStats] = []
    records: list[ObsRecord] = []
    step_rows: list[tuple] = []
    try:
        if cfg.workers > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                results = pool.map(_pomcp_episode_star, args, chunksize=8)
                for stats, recs, rows in results:
                    episodes.append(stats)
                    records.extend(recs)
                    step_rows.extend(rows)
        else:
            for a in args:
                stats, recs, rows = _pomcp_episode_star(a)
                episodes.append(stats)
                records.extend(recs)
                step_rows.extend(rows)
    except Exception as exc:  # flush completed episodes, then propagate
        raise _PartialRun((episodes, records, step_rows, None, []), exc) from exc
    return episodes, records, step_rows, None, []


def _pomcp_episode_star(args):
    return _pomcp_episode(*args)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Execute one configuration and write its CSV artifacts when out_dir is
    set. The kernel intercepts every informative observation before both the
    agent's belief update and the solver's particle filtering; deception
    cost, when enabled, is added to the step reward before discounting.
    Solver errors propagate, but whatever episodes completed are flushed to
    the output directory first."""
    if cfg.problem == "rocksample" and cfg.solver != "pomcp":
        raise ValueError("rocksample is solved by pomcp (explicit solvers do not scale)")
    outputs = ([], [], [], None, [])
    failure: Exception | None = None
    try:
        if cfg.solver == "lvfa":
            outputs = _run_lvfa(cfg)
        elif cfg.solver == "vi":
            outputs = _run_vi(cfg)
        else:
            outputs = _run_pomcp_all(cfg)
    except _PartialRun as partial:
        outputs = partial.outputs
        failure = partial.cause
    episodes, records, step_rows, alpha_rows, validation_rows = outputs

    summary = _assemble_summary(cfg, episodes, records)
    occupancy = None
    if cfg.problem == "rocksample" and episodes:
        occupancy = occupancy_grid(
            [e.positions for e in episodes],
            cfg.rocksample.grid_width,
            cfg.rocksample.grid_height,
        )
    result = ExperimentResult(
        config=cfg,
        summary=summary,
        episodes=episodes,
        obs_records=records,
        step_rows=step_rows,
        alpha_rows=alpha_rows,
        occupancy=occupancy,
        validation_rows=validation_rows,
    )
    if cfg.out_dir:
        result.files = write_outputs(result, Path(cfg.out_dir))
    if failure is not None:
        raise failure
    return result


def _assemble_summary(cfg, episodes, records) -> MetricsSummary:
    und_mean, und_se = mean_se(e.undiscounted for e in episodes)
    dis_mean, dis_se = mean_se(e.discounted for e in episodes)
    is_tiger = cfg.problem == "tiger"
    p_t_min = cfg.tiger.p_T if is_tiger else 0.5  # Eq-5 limit for rocksample
    ordering = check_rate_ordering(
        [
            KernelSpec(kind=KernelKind.PROB, p_k=cfg.kernel.p_k),
            KernelSpec(kind=KernelKind.RAND),
            KernelSpec(kind=KernelKind.OPPO),
        ],
        p_t_min,
        obs_space_size=2,
    )
    summary = MetricsSummary(
        problem=cfg.problem,
        solver=cfg.solver,
        kernel=cfg.kernel_label,
        p_k=cfg.kernel.p_k,
        r_d=cfg.kernel.r_d,
        episodes=len(episodes),
        master_seed=cfg.master_seed,
        undiscounted_mean=und_mean,
        undiscounted_se=und_se,
        discounted_mean=dis_mean,
        discounted_se=dis_se,
        obs_total=len(records),
        belief_changes=sum(r.changed for r in records),
        belief_changes_false=sum(r.from_false for r in records),
        belief_changes_deceived=sum(r.from_deceived for r in records),
        aborted_episodes=sum(e.aborted for e in episodes),
        rate_ordering_ok=ordering,
    )
    if is_tiger:
        summary.correct_choices = sum(1 for e in episodes if e.correct is True)
        summary.incorrect_choices = sum(1 for e in episodes if e.correct is False)
        summary.other_cases = sum(1 for e in episodes if e.forced_out)
        summary.avg_listens = float(np.mean([e.listens for e in episodes])) if episodes else 0.0
    elif episodes:
        summary.avg_sampled_rocks = float(np.mean([e.samples for e in episodes]))
        summary.avg_checkings = float(np.mean([e.checks for e in episodes]))
        summary.avg_steps = float(np.mean([e.steps for e in episodes]))
    return summary


def summary_row(s: MetricsSummary, label: str = "") -> list:
    return [
        label,
        s.problem,
        s.solver,
        s.kernel,
        s.p_k,
        s.r_d,
        s.episodes,
        s.master_seed,
        s.undiscounted_mean,
        s.undiscounted_se,
        s.discounted_mean,
        s.discounted_se,
        s.correct_choices,
        s.incorrect_choices,
        s.other_cases,
        s.avg_listens,
        s.avg_sampled_rocks,
        s.avg_checkings,
        s.avg_steps,
        s.obs_total,
        s.belief_changes,
        s.belief_changes_false,
        s.belief_changes_deceived,
        s.aborted_episodes,
        s.rate_ordering_ok,
    ]


def write_outputs(result: ExperimentResult, out_dir: Path) -> dict[str, Path]:
    """summary.csv, episodes.csv, steps.csv, observations.csv plus the
    problem-specific occupancy / belief-histogram / alpha exports."""
    cfg = result.config
    files: dict[str, Path] = {}
    label = cfg.label or cfg.kernel_label
    files["summary"] = write_csv(
        out_dir / "summary.csv",
        SUMMARY_COLUMNS,
        [summary_row(result.summary, label)],
    )
    files["episodes"] = write_csv(
        out_dir / "episodes.csv",
        EPISODE_COLUMNS,
        [
            (
                e.episode,
                e.seed,
                e.steps,
                e.undiscounted,
                e.discounted,
                e.listens,
                e.checks,
                e.samples,
                e.correct,
                e.forced_out,
                e.aborted,
            )
            for e in result.episodes
        ],
    )
    if result.step_rows:
        files["steps"] = write_csv(out_dir / "steps.csv", STEP_COLUMNS, result.step_rows)
    files["observations"] = write_csv(
        out_dir / "observations.csv",
        OBS_COLUMNS,
        [
            (
                r.episode,
                r.step,
                r.target,
                r.delivered,
                r.original,
                r.true_obs,
                r.is_false,
                r.is_deceived,
                r.polarity,
                r.later_action_class,
                r.belief_before,
                r.belief_after,
                r.changed,
                r.from_false,
                r.from_deceived,
            )
            for r in result.obs_records
        ],
    )
    if result.occupancy is not None:
        h, w = result.occupancy.shape
        files["occupancy"] = write_csv(
            out_dir / "occupancy.csv",
            OCCUPANCY_COLUMNS,
            [(x, y, float(result.occupancy[y, x])) for y in range(h) for x in range(w)],
        )
    if cfg.problem == "tiger":
        counts, b_edges, r_edges = reward_belief_histogram(
            [(e.belief_trace, e.undiscounted) for e in result.episodes]
        )
        rows = []
        for i in range(counts.shape[0]):
            for j in range(counts.shape[1]):
                rows.append(
                    (
                        float(b_edges[i]),
                        float(b_edges[i + 1]),
                        float(r_edges[j]),
                        float(r_edges[j + 1]),
                        int(counts[i, j]),
                    )
                )
        files["belief_hist"] = write_csv(
            out_dir / "belief_hist.csv", BELIEF_HIST_COLUMNS, rows
        )
    if result.alpha_rows:
        files["alpha"] = write_csv(out_dir / "alpha.csv", ALPHA_COLUMNS, result.alpha_rows)
    if result.validation_rows:
        files["validations"] = write_csv(
            out_dir / "validations.csv", VALIDATION_COLUMNS, result.validation_rows
        )
    return files


def run_sweep(base: ExperimentConfig, out_dir: Path, kernels=None) -> list[ExperimentResult]:
    """Kernel grid under one problem/solver; combined summary.csv on top."""
    if kernels is None:
        kernels = [
            KernelSpec(),
            KernelSpec(kind=KernelKind.PROB, p_k=base.kernel.p_k),
            KernelSpec(kind=KernelKind.RAND),
            KernelSpec(kind=KernelKind.OPPO),
        ]
    results = []
    rows = []
    for kernel in kernels:
        cfg = replace(base, kernel=kernel, out_dir=None)
        sub = replace(cfg, out_dir=str(Path(out_dir) / cfg.kernel_label))
        res = run_experiment(sub)
        results.append(res)
        rows.append(summary_row(res.summary, sub.kernel_label))
    write_csv(Path(out_dir) / "summary.csv", SUMMARY_COLUMNS, rows)
    return results
