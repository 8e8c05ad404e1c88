"""
Тесты байесовского фильтра против полного перебора траекторий
"""

import itertools

import numpy as np
import pytest

from rotlab.data.glyphs import glyph_prototypes
from rotlab.perception.bayes import (
    Belief, ImageObservationModel, ImpossibleEvidenceError, TabularObservationModel, TransitionModel,
    belief_update, frame_only, run_filter,
)


def random_world(rng, n_states, n_actions, n_symbols):
    states = [f"z{i}" for i in range(n_states)]
    actions = [f"a{i}" for i in range(n_actions)]
    alphabet = [f"x{i}" for i in range(n_symbols)]
    kernel = rng.dirichlet(np.ones(n_states), size=(n_actions, n_states))
    table = rng.dirichlet(np.ones(n_symbols), size=n_states)
    mu = TransitionModel(tuple(states), tuple(actions), kernel)
    o = TabularObservationModel(states, alphabet, table)
    return mu, o


def enumerate_posterior(prior, steps, mu, o):
    """P(z_T | x_1..x_T) суммированием по всем траекториям"""
    n = len(mu.states)
    totals = np.zeros(n)
    for path in itertools.product(range(n), repeat=len(steps) + 1):
        p = prior[path[0]]
        for t, (action, observation) in enumerate(steps):
            a = mu.actions.index(action)
            p *= mu.kernel[a, path[t], path[t + 1]] * o.table[path[t + 1], o.alphabet.index(observation)]
        totals[path[-1]] += p
    return totals / totals.sum()


class TestBeliefUpdate:
    def test_matches_enumeration(self, rng):
        for _ in range(40):
            n_states, n_actions = int(rng.integers(1, 5)), int(rng.integers(1, 3))
            mu, o = random_world(rng, n_states, n_actions, int(rng.integers(1, 4)))
            horizon = int(rng.integers(1, 5))
            steps = [(str(rng.choice(mu.actions)), str(rng.choice(o.alphabet))) for _ in range(horizon)]
            prior = Belief.from_weights(mu.states, rng.uniform(0.1, 1.0, n_states))
            beliefs = run_filter(prior, steps, mu, o)
            assert len(beliefs) == horizon + 1
            assert beliefs[0] is prior
            np.testing.assert_allclose(beliefs[-1].mass, enumerate_posterior(prior.mass, steps, mu, o),
                                       atol=1e-12, rtol=0)

    def test_identity_uninformative_keeps_prior(self):
        states = ("a", "b", "c")
        mu = TransitionModel.identity(states)
        o = TabularObservationModel(states, ["x"], np.ones((3, 1)))
        prior = Belief.from_weights(states, [1, 2, 7])
        post = belief_update(prior, "stay", "x", mu, o)
        np.testing.assert_allclose(post.mass, prior.mass, atol=1e-15)

    def test_previous_belief_untouched(self, rng):
        mu, o = random_world(rng, 3, 1, 2)
        prior = Belief.uniform(mu.states)
        before = prior.mass.copy()
        belief_update(prior, "a0", "x1", mu, o)
        np.testing.assert_array_equal(prior.mass, before)

    def test_impossible_evidence(self):
        states = ("a", "b")
        mu = TransitionModel.identity(states)
        o = TabularObservationModel(states, ["x", "y"], np.array([[1.0, 0.0], [1.0, 0.0]]))
        with pytest.raises(ImpossibleEvidenceError):
            belief_update(Belief.uniform(states), "stay", "y", mu, o)

    def test_map_mode_uses_best_state(self):
        states = ("a", "b")
        kernel = np.array([[[0.0, 1.0], [1.0, 0.0]]])
        mu = TransitionModel(states, ("swap",), kernel)
        o = TabularObservationModel(states, ["x"], np.ones((2, 1)))
        prior = Belief.from_weights(states, [0.6, 0.4])
        np.testing.assert_allclose(belief_update(prior, "swap", "x", mu, o, mode="map").mass, [0.0, 1.0])
        np.testing.assert_allclose(belief_update(prior, "swap", "x", mu, o).mass, [0.4, 0.6])

    def test_unknown_mode_and_action(self, rng):
        mu, o = random_world(rng, 2, 1, 2)
        prior = Belief.uniform(mu.states)
        with pytest.raises(ValueError):
            belief_update(prior, "a0", "x0", mu, o, mode="viterbi")
        with pytest.raises(ValueError):
            belief_update(prior, "jump", "x0", mu, o)
        with pytest.raises(ValueError):
            belief_update(prior, "a0", "unseen", mu, o)


class TestModels:
    def test_transition_rows_must_sum_to_one(self):
        with pytest.raises(ValueError):
            TransitionModel(("a", "b"), ("go",), np.array([[[0.5, 0.4], [0.0, 1.0]]]))

    def test_duplicate_states(self):
        with pytest.raises(ValueError):
            TransitionModel.identity(["a", "a"])

    def test_belief_must_be_distribution(self):
        with pytest.raises(ValueError):
            Belief(("a", "b"), np.array([0.7, 0.7]))
        with pytest.raises(ValueError):
            Belief(("a",), np.array([0.5, 0.5]))

    def test_most_likely_tie_takes_first(self):
        assert Belief.uniform(["p", "q"]).most_likely() == "p"

    def test_image_observation_prefers_true_state(self, rng):
        names = ["0", "1", "4"]
        o = ImageObservationModel(names, glyph_prototypes(names), contrast=0.6, noise=0.1, background=0.2)
        image = o.render("4", rng)
        post = frame_only(image, o)
        assert post.most_likely() == "4"
        assert np.all(o.likelihoods(image) <= 1.0)

    def test_image_observation_needs_noise(self):
        with pytest.raises(ValueError):
            ImageObservationModel(["0"], glyph_prototypes(["0"]), contrast=1.0, noise=0.0)
