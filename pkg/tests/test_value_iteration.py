import numpy as np
import pytest

from pomdp_deception.core import belief_update
from pomdp_deception.problems import LISTEN, OPEN_LEFT, OPEN_RIGHT, tiger_model
from pomdp_deception.value_iteration import (
    AlphaVector,
    AlphaVectorSet,
    ModelTooLarge,
    alpha_csv_rows,
    bellman_backup,
    best_action,
    prune_dominated,
    solve_horizon,
)

from oracles import belief_expectimax, policy_tree_value_at


@pytest.fixture(scope="module")
def tiger():
    return tiger_model()


@pytest.fixture(scope="module")
def gamma_h8(tiger):
    return solve_horizon(tiger, 8)


class TestBellmanBackup:
    def test_horizon_one_vectors(self, tiger):
        got = {
            (v.action, tuple(np.round(v.values, 9)))
            for v in solve_horizon(tiger, 1).vectors
        }
        assert got == {
            (LISTEN, (-1.0, -1.0)),
            (OPEN_LEFT, (-20.0, 10.0)),
            (OPEN_RIGHT, (10.0, -20.0)),
        }

    def test_horizon_two_value_at_uniform(self, tiger):
        # -1 + 0.95 * E_o[max_alpha <alpha, b'(o)>] with H=1 alphas
        g2 = solve_horizon(tiger, 2)
        g1 = solve_horizon(tiger, 1)
        by_hand = -1.0
        for o in range(2):
            post = belief_update(tiger, [0.5, 0.5], LISTEN, o).probs
            by_hand += 0.95 * 0.5 * max(v.dot(post) for v in g1.vectors)
        assert abs(g2.value([0.5, 0.5]) - by_hand) < 1e-12
        oracle = policy_tree_value_at(tiger, 2, [[0.5, 0.5]])[0]
        assert abs(g2.value([0.5, 0.5]) - oracle) < 1e-9

    @pytest.mark.parametrize("horizon", [1, 2, 3, 4])
    def test_oracle_equivalence_101_grid(self, tiger, horizon):
        grid = np.linspace(0.0, 1.0, 101)
        beliefs = np.stack([grid, 1.0 - grid], axis=1)
        oracle_vals = policy_tree_value_at(tiger, horizon, beliefs)
        gamma_set = solve_horizon(tiger, horizon)
        for b, expected in zip(beliefs, oracle_vals):
            assert abs(gamma_set.value(b) - expected) <= 1e-9

    def test_h8_listen_at_uniform(self, gamma_h8):
        action, _ = best_action(gamma_h8, [0.5, 0.5])
        assert action == LISTEN

    def test_h8_open_left_when_sure(self, tiger, gamma_h8):
        action, value = best_action(gamma_h8, [0.05, 0.95])
        oracle_value, oracle_action = belief_expectimax(tiger, [0.05, 0.95], 8)
        assert action == oracle_action == OPEN_LEFT
        assert abs(value - oracle_value) < 1e-9

    def test_budget_guard(self, tiger):
        with pytest.raises(ModelTooLarge):
            solve_horizon(tiger, 3, budget=10)

    def test_requires_explicit_model(self):
        from pomdp_deception.problems import RockSampleModel

        zero = AlphaVectorSet((AlphaVector((0.0,), 0),), 0)
        with pytest.raises(TypeError):
            bellman_backup(RockSampleModel(), zero)


class TestPruneDominated:
    def test_pointwise(self):
        vecs = [AlphaVector((1.0, 1.0), 0), AlphaVector((0.0, 0.0), 1)]
        assert prune_dominated(vecs) == [vecs[0]]

    def test_interval_scan(self):
        vecs = [
            AlphaVector((2.0, 0.0), 0),
            AlphaVector((0.0, 2.0), 1),
            AlphaVector((0.9, 0.9), 2),
        ]
        # (0.9, 0.9) is below the crossing value 1.0 at the midpoint
        kept = prune_dominated(vecs)
        assert {tuple(v.values) for v in kept} == {(2.0, 0.0), (0.0, 2.0)}

    def test_surviving_middle(self):
        vecs = [
            AlphaVector((2.0, 0.0), 0),
            AlphaVector((0.0, 2.0), 1),
            AlphaVector((1.2, 1.2), 2),
        ]
        kept = prune_dominated(vecs)
        assert len(kept) == 3

    def test_singleton(self):
        vecs = [AlphaVector((1.0, -1.0), 2)]
        assert prune_dominated(vecs) == vecs

    def test_pruning_soundness_random_sets(self):
        rng = np.random.default_rng(5)
        grid = np.linspace(0, 1, 1001)
        beliefs = np.stack([grid, 1 - grid], axis=1)
        for _ in range(20):
            vecs = [
                AlphaVector(tuple(v), i)
                for i, v in enumerate(rng.normal(0, 5, size=(12, 2)))
            ]
            kept = prune_dominated(vecs)
            full = np.max(beliefs @ np.array([v.values for v in vecs]).T, axis=1)
            pruned = np.max(beliefs @ np.array([v.values for v in kept]).T, axis=1)
            assert np.allclose(full, pruned, atol=1e-12)


class TestBestAction:
    def test_open_left_when_certain(self, tiger):
        g1 = solve_horizon(tiger, 1)
        assert best_action(g1, [0.0, 1.0]) == (OPEN_LEFT, 10.0)

    def test_listen_at_uniform_h1(self, tiger):
        g1 = solve_horizon(tiger, 1)
        action, value = best_action(g1, [0.5, 0.5])
        assert action == LISTEN and value == -1.0

    def test_tie_breaks_low_action(self):
        vecs = AlphaVectorSet(
            (AlphaVector((1.0, 1.0), 2), AlphaVector((1.0, 1.0), 0)), 1
        )
        assert best_action(vecs, [0.5, 0.5])[0] == 0


class TestValueFunctionShape:
    def test_convexity_midpoints(self, gamma_h8):
        rng = np.random.default_rng(17)
        for _ in range(200):
            p, q = rng.random(2)
            b1 = np.array([p, 1 - p])
            b2 = np.array([q, 1 - q])
            mid = 0.5 * (b1 + b2)
            assert gamma_h8.value(mid) <= 0.5 * (
                gamma_h8.value(b1) + gamma_h8.value(b2)
            ) + 1e-9

    def test_deception_moves_argmax_across_a_crossing(self, tiger, gamma_h8):
        # a truthful vs deceived single-observation update must land on
        # different sides of some decision boundary
        found = False
        for p0 in np.linspace(0.01, 0.99, 99):
            b = np.array([p0, 1 - p0])
            post_true = belief_update(tiger, b, LISTEN, 0).probs
            post_false = belief_update(tiger, b, LISTEN, 1).probs
            if best_action(gamma_h8, post_true)[0] != best_action(gamma_h8, post_false)[0]:
                found = True
                break
        assert found

    def test_alpha_csv_rows(self, gamma_h8):
        rows = alpha_csv_rows(gamma_h8)
        assert len(rows) == len(gamma_h8.vectors)
        assert all(len(r) == 3 for r in rows)
