"""Acceptance gate: every top-level criterion at its stated tolerance.

Heavy seeded experiment fixtures are shared module-wide; each criterion
prints one [ACCEPT] pass/fail line (visible with pytest -s).
"""

import hashlib
import random
import time
from dataclasses import replace

import numpy as np
import pytest

from pomdp_deception.analysis import belief_ratio, trap_fail_mc, trap_fail_prob
from pomdp_deception.core import belief_update, observation_likelihood, propagated_prior
from pomdp_deception.deception import (
    KernelKind,
    KernelSpec,
    aggregate_true_rate,
    apply_kernel,
)
from pomdp_deception.harness.config import ExperimentConfig
from pomdp_deception.harness.runner import run_experiment
from pomdp_deception.linear_vf import LvfaConfig
from pomdp_deception.pomcp import PomcpConfig, PomcpPlanner
from pomdp_deception.problems import LISTEN, RockSampleConfig, RockSampleModel, sensor_accuracy, tiger_model
from pomdp_deception.value_iteration import best_action, solve_horizon

from oracles import policy_tree_value_at

TIGER_P_K = 0.6 / 0.85  # paper's aggregate P_prob(o = o_T) = 0.6 at p_T = 0.85
RS_P_K = 0.8

TIGER_BASE = ExperimentConfig(
    problem="tiger",
    solver="lvfa",
    episodes=1000,
    runs=2,
    master_seed=13,
    lvfa=LvfaConfig(),
)

RS_BASE = ExperimentConfig(
    problem="rocksample",
    solver="pomcp",
    episodes=500,
    master_seed=11,
    pomcp=PomcpConfig(
        simulations=256,
        uct_c=10.0,
        rollout_depth=30,
        particle_lower=64,
        particle_upper=256,
        rollout_mask=True,
    ),
)


def report(name: str, ok: bool, detail: str = ""):
    print(f"\n[ACCEPT] {name}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"{name}: {detail}"


def info(name: str, detail: str):
    print(f"\n[ACCEPT] {name}: INFO  {detail}")


@pytest.fixture(scope="module")
def tiger_runs():
    kernels = {
        "baseline": KernelSpec(),
        "prob": KernelSpec(kind=KernelKind.PROB, p_k=TIGER_P_K),
        "rand": KernelSpec(kind=KernelKind.RAND),
        "oppo": KernelSpec(kind=KernelKind.OPPO),
    }
    return {
        name: run_experiment(replace(TIGER_BASE, kernel=kernel))
        for name, kernel in kernels.items()
    }


@pytest.fixture(scope="module")
def rs_runs():
    kernels = {
        "baseline": KernelSpec(),
        "prob": KernelSpec(kind=KernelKind.PROB, p_k=RS_P_K),
        "rand": KernelSpec(kind=KernelKind.RAND),
        "oppo": KernelSpec(kind=KernelKind.OPPO),
    }
    return {
        name: run_experiment(replace(RS_BASE, kernel=kernel))
        for name, kernel in kernels.items()
    }


@pytest.fixture(scope="module")
def rs_costed():
    return run_experiment(
        replace(RS_BASE, kernel=KernelSpec(kind=KernelKind.RAND, r_d=1.0))
    )


# ---------------------------------------------------------------------------
# Analytical exactness (fast, deterministic)


class TestAnalyticalExactness:
    def test_belief_ratio_upper_bound(self):
        got = belief_ratio(0.85, 0.0).ratio
        ok = abs(got - (0.85 / 0.15) ** 2) < 1e-6 and abs(got - 32.1111111) < 1e-6
        report("belief-ratio upper bound 32.111", ok, f"got {got:.7f}")

    def test_trap_probabilities_closed_form_and_mc(self):
        closed = (
            trap_fail_prob(0.85, 2),
            trap_fail_prob(0.85, 4),
            trap_fail_prob(0.5, 2),
            trap_fail_prob(0.5, 4),
        )
        ok = np.allclose(closed, (0.255, 0.065025, 0.5, 0.25), atol=1e-12)
        trials = 1_000_000
        mc_ok = True
        details = []
        for i, (p, steps) in enumerate(((0.85, 2), (0.85, 4), (0.5, 2), (0.5, 4))):
            mc = trap_fail_mc(p, steps, trials, rng=1000 + i)
            se = np.sqrt(closed[i] * (1 - closed[i]) / trials)
            mc_ok = mc_ok and abs(mc - closed[i]) <= 3 * se
            details.append(f"P{steps}({p})={mc:.4f}")
        report(
            "trap probabilities (0.255, 0.065) / (0.5, 0.25) + MC 3-sigma",
            ok and mc_ok,
            " ".join(details),
        )

    def test_sensor_accuracy_exact(self):
        ok = sensor_accuracy(0.0, 20.0) == 1.0 and sensor_accuracy(20.0, 20.0) == 0.75
        report("sensor accuracy exact points", ok, "d=0 -> 1.0, d=D -> 0.75")

    def test_vi_against_policy_tree_oracle(self):
        start = time.time()
        model = tiger_model()
        grid = np.linspace(0.0, 1.0, 101)
        beliefs = np.stack([grid, 1.0 - grid], axis=1)
        worst = 0.0
        for horizon in (1, 2, 3, 4):
            gamma_set = solve_horizon(model, horizon)
            oracle = policy_tree_value_at(model, horizon, beliefs)
            got = np.array([gamma_set.value(b) for b in beliefs])
            worst = max(worst, float(np.abs(got - oracle).max()))
        g8 = solve_horizon(model, 8)
        listen_ok = best_action(g8, [0.5, 0.5])[0] == LISTEN
        elapsed = time.time() - start
        report(
            "value iteration vs exhaustive policy trees (H<=4) + H=8 listen",
            worst <= 1e-9 and listen_ok and elapsed < 10.0,
            f"max|dV|={worst:.2e}, elapsed {elapsed:.2f}s",
        )


# ---------------------------------------------------------------------------
# Stochastic reproduction at desk scale


class TestTigerTableOne:
    def test_pooled_episode_count(self, tiger_runs):
        counts = {k: r.summary.episodes for k, r in tiger_runs.items()}
        report(
            "tiger: 1000 pooled validation episodes per kernel",
            all(c == 1000 for c in counts.values()),
            str(counts),
        )

    def test_return_ordering(self, tiger_runs):
        m = {k: r.summary.undiscounted_mean for k, r in tiger_runs.items()}
        ok = m["baseline"] > m["prob"] > m["rand"] > m["oppo"]
        report(
            "tiger: undiscounted ordering baseline > prob > rand > oppo",
            ok,
            f"{m['baseline']:.2f} > {m['prob']:.2f} > {m['rand']:.2f} > {m['oppo']:.2f}",
        )

    def test_baseline_band(self, tiger_runs):
        got = tiger_runs["baseline"].summary.undiscounted_mean
        report("tiger: baseline within 4.90 +/- 1.5", abs(got - 4.90) <= 1.5, f"{got:.2f}")

    def test_oppo_band(self, tiger_runs):
        got = tiger_runs["oppo"].summary.undiscounted_mean
        report("tiger: oppo within -20.47 +/- 1.5", abs(got + 20.47) <= 1.5, f"{got:.2f}")

    def test_baseline_correct_rate(self, tiger_runs):
        s = tiger_runs["baseline"].summary
        rate = s.correct_choices / s.episodes
        report("tiger: baseline correct-door rate >= 80%", rate >= 0.80, f"{rate:.1%}")

    def test_oppo_never_correct(self, tiger_runs):
        got = tiger_runs["oppo"].summary.correct_choices
        report("tiger: oppo correct choices = 0", got == 0, f"{got}")

    def test_rand_listen_trap(self, tiger_runs):
        rand = tiger_runs["rand"].summary.avg_listens
        base = tiger_runs["baseline"].summary.avg_listens
        report(
            "tiger: rand average listens >= 2.5x baseline",
            rand >= 2.5 * base,
            f"{rand:.2f} vs {base:.2f} (x{rand / base:.2f})",
        )


class TestRockSampleTableTwo:
    def test_return_ordering_and_gap(self, rs_runs):
        m = {k: r.summary.undiscounted_mean for k, r in rs_runs.items()}
        ordering = m["baseline"] > m["prob"] > m["rand"] > m["oppo"]
        gap = m["baseline"] - m["oppo"]
        report(
            "rocksample: ordering with baseline - oppo >= 8",
            ordering and gap >= 8.0,
            f"{m['baseline']:.2f} > {m['prob']:.2f} > {m['rand']:.2f} > {m['oppo']:.2f}, gap {gap:.2f}",
        )
        info(
            "rocksample: baseline band 23.4 +/- 4 (advisory)",
            f"baseline {m['baseline']:.2f} -> {'inside' if abs(m['baseline'] - 23.4) <= 4 else 'outside'}",
        )

    def test_oppo_sampled_rocks(self, rs_runs):
        got = rs_runs["oppo"].summary.avg_sampled_rocks
        report("rocksample: oppo avg sampled rocks <= 0.05", got <= 0.05, f"{got:.3f}")


class TestTableThreeSignature:
    def test_oppo_all_changes_deceived(self, rs_runs):
        s = rs_runs["oppo"].summary
        ok = s.belief_changes == s.belief_changes_false == s.belief_changes_deceived
        report(
            "table 3: oppo total = from-false = from-deceived",
            ok,
            f"{s.belief_changes} / {s.belief_changes_false} / {s.belief_changes_deceived}",
        )

    def test_baseline_no_deceived_changes(self, rs_runs):
        got = rs_runs["baseline"].summary.belief_changes_deceived
        report("table 3: baseline from-deceived = 0", got == 0, f"{got}")


def _ratio(counts):
    den = counts["TP"] + counts["FN"] + counts["TN"] + counts["FP"]
    return (counts["TP"] + counts["FN"]) / den if den else None


class TestTableFourSignature:
    def test_prob_deceived_inefficiency(self, rs_runs):
        res = rs_runs["prob"]
        normal = _ratio(res.summary.class_counts(res.obs_records, deceived=False))
        deceived = _ratio(res.summary.class_counts(res.obs_records, deceived=True))
        ok = normal is not None and deceived is not None and deceived <= normal - 0.2
        report(
            "table 4: prob deceived (TP+FN)/(TP+FN+TN+FP) <= normal - 0.2",
            ok,
            f"normal {normal:.3f}, deceived {deceived:.3f}",
        )

    def test_oppo_no_normal_observations(self, rs_runs):
        res = rs_runs["oppo"]
        got = sum(1 for r in res.obs_records if not r.is_deceived)
        report("table 4: oppo normal observation count = 0", got == 0, f"{got}")


class TestTableFiveSignature:
    def test_costly_rand_check_attachment(self, rs_runs, rs_costed):
        rand = rs_runs["rand"].summary
        costed = rs_costed.summary
        checks_ok = costed.avg_checkings >= 4.0 * rand.avg_checkings
        und_gain = costed.undiscounted_mean - rand.undiscounted_mean
        disc_gain = costed.discounted_mean - rand.discounted_mean
        directional = und_gain > 0 and disc_gain < und_gain / 2.0
        report(
            "table 5: rand r_d=1 checkings >= 4x and discounted gain << undiscounted",
            checks_ok and directional,
            f"checkings {costed.avg_checkings:.2f} vs {rand.avg_checkings:.2f}; "
            f"und gain {und_gain:.2f}, disc gain {disc_gain:.2f}",
        )


# ---------------------------------------------------------------------------
# Property suites


class TestPropertySuites:
    def test_belief_normalization_and_martingale(self):
        tiger = tiger_model()
        small = RockSampleModel(
            RockSampleConfig(
                grid_width=3,
                grid_height=3,
                rock_positions=((0, 0), (2, 2)),
                start=(1, 1),
                exit_column=3,
            )
        )
        rng = np.random.default_rng(99)
        worst_norm = worst_mart = 0.0
        for model, actions in ((tiger, [LISTEN]), (small, [5, 6])):
            for _ in range(50):
                b = rng.dirichlet(np.ones(model.n_states))
                for a in actions:
                    prior = propagated_prior(model, b, a)
                    mix = np.zeros(model.n_states)
                    for o in range(model.n_observations):
                        pr = observation_likelihood(model, b, a, o)
                        if pr > 1e-12:
                            post = belief_update(model, b, a, o).probs
                            worst_norm = max(worst_norm, abs(post.sum() - 1.0))
                            mix += pr * post
                    worst_mart = max(worst_mart, float(np.abs(mix - prior).max()))
        report(
            "properties: belief normalization + martingale within 1e-9",
            worst_norm <= 1e-9 and worst_mart <= 1e-9,
            f"norm {worst_norm:.2e}, martingale {worst_mart:.2e}",
        )

    def test_kernel_empirical_rates_one_million(self):
        p_T = 0.85
        draws = 1_000_000
        all_ok = True
        details = []
        for kind, p_k in (
            (KernelKind.NONE, 1.0),
            (KernelKind.PROB, 0.8),
            (KernelKind.RAND, 1.0),
            (KernelKind.OPPO, 1.0),
        ):
            spec = KernelSpec(kind=kind, p_k=p_k)
            expected = aggregate_true_rate(spec, p_T, 2)
            rng = random.Random(hash(kind.value) & 0xFFFF)
            hits = 0
            for _ in range(draws):
                original = 0 if rng.random() < p_T else 1
                hits += apply_kernel(spec, original, 0, (0, 1), rng).delivered == 0
            se = max(np.sqrt(expected * (1 - expected) / draws), 1e-9)
            ok = abs(hits / draws - expected) <= 3 * se
            if kind is KernelKind.OPPO:
                ok = hits == 0  # the truth is never delivered, not just rarely
            all_ok = all_ok and ok
            details.append(f"{kind.value}={hits / draws:.4f}")
        report(
            "properties: kernel empirical rates within 3 SE at 1e6 draws",
            all_ok,
            " ".join(details),
        )

    def test_particle_filter_total_variation(self):
        model = tiger_model()
        cfg = PomcpConfig(
            simulations=64, particle_lower=10_000, particle_upper=10_000
        )
        planner = PomcpPlanner(model, cfg, random.Random(31))
        seed_rng = random.Random(32)
        root = planner.new_root(
            [0 if seed_rng.random() < 0.5 else 1 for _ in range(10_000)]
        )
        belief = np.array([0.5, 0.5])
        worst = 0.0
        for obs in (0, 0, 1, 0):
            root = planner.advance(root, LISTEN, obs)
            belief = belief_update(model, belief, LISTEN, obs).probs
            counts = np.bincount(root.particles, minlength=2) / len(root.particles)
            worst = max(worst, 0.5 * float(np.abs(counts - belief).sum()))
        report(
            "properties: particle filter TV <= 0.05 vs exact beliefs at 1e4",
            worst <= 0.05,
            f"worst TV {worst:.4f}",
        )

    def test_pomcp_matches_vi_at_sixteen_k_simulations(self):
        model = tiger_model()
        g8 = solve_horizon(model, 8)
        cfg = PomcpConfig(
            simulations=2**14,
            uct_c=30.0,
            rollout_depth=40,
            particle_lower=64,
            particle_upper=1024,
        )
        agree = total = 0
        for p in (0.5, 0.15, 0.85):
            vi_action = best_action(g8, [p, 1 - p])[0]
            k = round(p * 1024)
            particles = [0] * k + [1] * (1024 - k)
            for trial in range(34):
                planner = PomcpPlanner(model, cfg, random.Random(5000 + trial))
                root = planner.new_root(list(particles))
                agree += planner.search(root) == vi_action
                total += 1
        report(
            "properties: POMCP agrees with VI H=8 in >= 95% of trials at 2^14 sims",
            agree / total >= 0.95,
            f"{agree}/{total} = {agree / total:.1%}",
        )

    def test_seeded_csv_reruns_byte_identical(self, tmp_path):
        base = replace(
            RS_BASE,
            episodes=1,
            master_seed=4,
            kernel=KernelSpec(kind=KernelKind.RAND),
        )
        digests = []
        for sub in ("first", "second"):
            out = tmp_path / sub
            run_experiment(replace(base, out_dir=str(out)))
            digests.append(
                tuple(
                    hashlib.sha256(p.read_bytes()).hexdigest()
                    for p in sorted(out.glob("*.csv"))
                )
            )
        report(
            "properties: seeded reruns produce byte-identical CSVs",
            digests[0] == digests[1] and len(digests[0]) >= 4,
            f"{len(digests[0])} files compared",
        )
