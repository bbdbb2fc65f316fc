import numpy as np
import pytest
import random

from pomdp_deception.core import (
    ActionClass,
    DiscreteDistribution,
    ExplicitPomdpModel,
    ImpossibleObservation,
    StepOnTerminal,
    UnclassifiableAction,
    belief_update,
    classify_action,
    discounted_return,
    observation_likelihood,
    propagated_prior,
    step,
)
from pomdp_deception.problems import (
    LISTEN,
    OPEN_LEFT,
    HEAR_LEFT,
    tiger_model,
)
from pomdp_deception.problems.rocksample import (
    NORTH,
    CHECK_BASE,
    RockSampleConfig,
    RockSampleModel,
)


SMALL_RS = RockSampleConfig(
    grid_width=3,
    grid_height=3,
    rock_positions=((0, 0), (2, 2)),
    start=(1, 1),
    exit_column=3,
)


class TestDiscreteDistribution:
    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            DiscreteDistribution([0.5, 0.6, -0.1])

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            DiscreteDistribution([0.5, 0.6])

    def test_renormalize(self):
        d = DiscreteDistribution([2.0, 2.0], renormalize=True)
        assert np.allclose(d.probs, [0.5, 0.5])

    def test_sample_deterministic(self):
        d = DiscreteDistribution([0.3, 0.7])
        draws = [d.sample(random.Random(5)) for _ in range(3)]
        assert len(set(draws)) == 1

    def test_sample_frequencies(self):
        d = DiscreteDistribution([0.2, 0.8])
        rng = random.Random(0)
        freq = sum(d.sample(rng) for _ in range(20000)) / 20000
        assert abs(freq - 0.8) < 0.02


class TestBeliefUpdate:
    def test_uniform_prior_cancels(self):
        m = tiger_model()
        post = belief_update(m, [0.5, 0.5], LISTEN, HEAR_LEFT)
        assert np.allclose(post.probs, [0.85, 0.15], atol=1e-12)

    def test_two_consistent_listens(self):
        # hand-applied Bayes: 0.85*0.85 / (0.85*0.85 + 0.15*0.15)
        m = tiger_model()
        post = belief_update(m, [0.85, 0.15], LISTEN, HEAR_LEFT)
        expected = 0.7225 / 0.745
        assert abs(post.probs[0] - expected) < 1e-12
        assert abs(post.probs[0] - 0.9697986577181208) < 1e-12

    def test_uninformative_observation_keeps_prior(self):
        # observation rows uniform over o: posterior equals propagated prior
        transition = np.zeros((1, 2, 2))
        transition[0] = [[0.7, 0.3], [0.4, 0.6]]
        obs = np.full((1, 2, 2), 0.5)
        rewards = np.zeros((1, 2, 2))
        m = ExplicitPomdpModel(
            transition, obs, rewards, 0.9, [0.6, 0.4],
            ("a", "b"), ("act",), ("x", "y"),
        )
        prior = propagated_prior(m, [0.6, 0.4], 0)
        post = belief_update(m, [0.6, 0.4], 0, 1)
        assert np.allclose(post.probs, prior / prior.sum(), atol=1e-12)

    def test_impossible_observation(self):
        transition = np.zeros((1, 2, 2))
        transition[0] = np.eye(2)
        obs = np.zeros((1, 2, 2))
        obs[0, 0] = [1.0, 0.0]
        obs[0, 1] = [0.0, 1.0]
        m = ExplicitPomdpModel(
            transition, obs, np.zeros((1, 2, 2)), 0.9, [1.0, 0.0],
            ("a", "b"), ("act",), ("x", "y"),
        )
        with pytest.raises(ImpossibleObservation):
            belief_update(m, [1.0, 0.0], 0, 1)

    def test_normalized_output_random_beliefs(self):
        m = tiger_model()
        rng = np.random.default_rng(42)
        for _ in range(100):
            b = rng.dirichlet([1, 1])
            for o in range(2):
                post = belief_update(m, b, LISTEN, o)
                assert abs(post.probs.sum() - 1.0) <= 1e-9
                assert np.all(post.probs >= 0)


class TestObservationLikelihood:
    def test_symmetry_at_uniform(self):
        m = tiger_model()
        assert abs(observation_likelihood(m, [0.5, 0.5], LISTEN, HEAR_LEFT) - 0.5) < 1e-12

    def test_point_mass(self):
        m = tiger_model()
        assert abs(observation_likelihood(m, [1.0, 0.0], LISTEN, HEAR_LEFT) - 0.85) < 1e-12

    @pytest.mark.parametrize("model_fn", [tiger_model, lambda: RockSampleModel(SMALL_RS)])
    def test_likelihood_closure(self, model_fn):
        model = model_fn()
        rng = np.random.default_rng(7)
        n = model.n_states
        actions = (
            [LISTEN]
            if model.n_actions == 3
            else [CHECK_BASE, CHECK_BASE + 1, NORTH]
        )
        for _ in range(100):
            b = rng.dirichlet(np.ones(n))
            for a in actions:
                total = sum(
                    observation_likelihood(model, b, a, o)
                    for o in range(model.n_observations)
                )
                assert abs(total - 1.0) <= 1e-9

    @pytest.mark.parametrize("model_fn", [tiger_model, lambda: RockSampleModel(SMALL_RS)])
    def test_martingale_by_observation(self, model_fn):
        # law of total probability: E_o[posterior] equals the propagated prior
        model = model_fn()
        rng = np.random.default_rng(3)
        n = model.n_states
        actions = [LISTEN] if model.n_actions == 3 else [CHECK_BASE, CHECK_BASE + 1]
        for _ in range(20):
            b = rng.dirichlet(np.ones(n))
            for a in actions:
                prior = propagated_prior(model, b, a)
                mix = np.zeros(n)
                for o in range(model.n_observations):
                    pr = observation_likelihood(model, b, a, o)
                    if pr > 1e-12:
                        mix += pr * belief_update(model, b, a, o).probs
                assert np.allclose(mix, prior, atol=1e-9)


class TestStep:
    def test_listen_reward(self):
        m = tiger_model()
        rng = random.Random(1)
        for _ in range(10):
            s2, o, r = step(m, 0, LISTEN, rng)
            assert r == -1.0
            assert s2 == 0

    def test_rocksample_move_deterministic(self):
        m = RockSampleModel()
        s = m.encode((3, 0), [False] * 8)
        for seed in range(5):
            s2, o, r = m.step(s, NORTH, random.Random(seed))
            assert m.decode(s2).position == (3, 1)
            assert o == 0 and r == 0.0

    def test_seeded_determinism(self):
        m = tiger_model()
        triples = [m.step(0, LISTEN, random.Random(99)) for _ in range(3)]
        assert len(set(triples)) == 1

    def test_step_on_terminal(self):
        m = tiger_model()
        rng = random.Random(0)
        s2, _, _ = m.step(0, OPEN_LEFT, rng)
        assert m.is_terminal(s2)
        with pytest.raises(StepOnTerminal):
            m.step(s2, LISTEN, rng)


class TestDiscountedReturn:
    def test_single(self):
        assert discounted_return([10], 0.95) == 10

    def test_two_step(self):
        assert abs(discounted_return([-1, 10], 0.95) - 8.5) < 1e-12

    def test_empty(self):
        assert discounted_return([], 0.5) == 0

    def test_bad_gamma(self):
        with pytest.raises(ValueError):
            discounted_return([1.0], 1.5)


class TestTrajectory:
    def test_carries_finite_bounded_steps(self):
        from pomdp_deception.core import StepRecord, Trajectory

        traj = Trajectory(seed=7)
        m = tiger_model()
        rng = random.Random(7)
        s = 0
        for _ in range(m.step_cap):
            s2, o, r = m.step(s, LISTEN, rng)
            traj.steps.append(
                StepRecord(state=s, action=LISTEN, reward=r, next_state=s2)
            )
            s = s2
        assert len(traj.steps) <= m.step_cap
        assert all(np.isfinite(r) for r in traj.rewards)


class TestClassifyAction:
    def test_tiger(self):
        m = tiger_model()
        assert classify_action(m, LISTEN) is ActionClass.OBSERVING
        assert classify_action(m, OPEN_LEFT) is ActionClass.TERMINALIZING

    def test_rocksample(self):
        m = RockSampleModel()
        assert classify_action(m, NORTH) is ActionClass.OPERATING
        assert classify_action(m, CHECK_BASE) is ActionClass.OBSERVING

    def test_unclassifiable(self):
        # transits state AND carries an informative channel
        transition = np.zeros((1, 2, 2))
        transition[0] = [[0.0, 1.0], [1.0, 0.0]]
        obs = np.zeros((1, 2, 2))
        obs[0, 0] = [0.9, 0.1]
        obs[0, 1] = [0.1, 0.9]
        m = ExplicitPomdpModel(
            transition, obs, np.zeros((1, 2, 2)), 0.9, [0.5, 0.5],
            ("a", "b"), ("swap",), ("x", "y"),
            true_obs_table={0: np.array([0, 1])},
            informative={0: (0, 1)},
        )
        with pytest.raises(UnclassifiableAction):
            classify_action(m, 0)
