"""
Tests for query strategies.
"""
import numpy as np
import pytest

from advdal.errors import InvalidArgumentError
from advdal.lib.attacks import AttackParams
from advdal.lib.network import MlpModel, cross_entropy
from advdal.lib.strategies import (
    Candidates, badge_embeddings, kmeanspp_select, select, select_badge, select_dfal, select_fvaal, select_random,
)

from conftest import random_model


def _boundary_candidates():
    # distances to the x0 = 0.5 boundary: 0.05, 0.3, 0.2, 0.01
    features = np.array([[0.45, 0.5], [0.2, 0.1], [0.7, 0.9], [0.49, 0.3]])
    return Candidates(np.array([0, 1, 2, 3]), features)


class TestCandidates:
    def test_shape_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            Candidates(np.array([0, 1]), np.zeros((3, 2)))

    def test_duplicate_ids(self):
        with pytest.raises(InvalidArgumentError):
            Candidates(np.array([4, 4]), np.zeros((2, 2)))


class TestRandom:
    def test_without_replacement(self):
        result = select_random(range(10, 30), 8, np.random.default_rng(0))
        assert len(set(result.chosen_ids)) == 8
        assert all(10 <= i < 30 for i in result.chosen_ids)
        assert result.byproducts == {}

    def test_seeded(self):
        first = select_random(range(50), 5, np.random.default_rng(3)).chosen_ids
        second = select_random(range(50), 5, np.random.default_rng(3)).chosen_ids
        assert first == second

    def test_zero_batch(self):
        assert select_random(range(5), 0, np.random.default_rng(0)).chosen_ids == []

    def test_batch_larger_than_pool(self):
        with pytest.raises(InvalidArgumentError):
            select_random(range(3), 4, np.random.default_rng(0))


class TestMarginStrategies:
    """FVAAL and DFAL rank by attack margin."""

    def test_fvaal_picks_smallest_margins(self, boundary_model):
        result = select_fvaal(boundary_model, _boundary_candidates(), 2, AttackParams(tolerance=0.001))
        assert result.chosen_ids == [3, 0]
        assert set(result.byproducts) == {3, 0}
        assert result.byproducts[3].margin == pytest.approx(0.01, abs=0.001)
        assert boundary_model.predict(result.byproducts[0].adversarial) == 1

    def test_dfal_picks_smallest_perturbations(self, boundary_model):
        result = select_dfal(boundary_model, _boundary_candidates(), 3, AttackParams())
        assert result.chosen_ids == [3, 0, 2]
        for sample_id in result.chosen_ids:
            byproduct = result.byproducts[sample_id]
            assert byproduct.margin > 0
            assert boundary_model.predict(byproduct.adversarial) != boundary_model.predict(
                _boundary_candidates().features[sample_id]
            )

    def test_unflipped_ranked_by_id(self, zero_model):
        candidates = Candidates(np.array([5, 2, 9]), np.array([[0.1, 0.2], [0.5, 0.5], [0.9, 0.3]]))
        result = select_fvaal(zero_model, candidates, 2, AttackParams())
        assert result.chosen_ids == [2, 5]
        assert result.byproducts == {}

    def test_worker_count_does_not_change_selection(self):
        model = random_model(2, input_dim=3, hidden_dim=6, num_classes=3)
        features = np.random.default_rng(0).uniform(size=(25, 3))
        candidates = Candidates(np.arange(100, 125), features)
        params = AttackParams()
        serial = select_fvaal(model, candidates, 6, params, workers=1).chosen_ids
        threaded = select_fvaal(model, candidates, 6, params, workers=4).chosen_ids
        assert serial == threaded

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_selection_independent_of_candidate_order(self, seed):
        model = random_model(seed, input_dim=3, hidden_dim=6, num_classes=3)
        features = np.random.default_rng(seed).uniform(size=(25, 3))
        ids = np.arange(100, 125)
        order = np.random.default_rng(seed + 50).permutation(25)
        params = AttackParams()
        original = select_fvaal(model, Candidates(ids, features), 6, params)
        shuffled = select_fvaal(model, Candidates(ids[order], features[order]), 6, params)
        assert shuffled.chosen_ids == original.chosen_ids
        assert set(shuffled.byproducts) == set(original.byproducts)

    def test_batch_larger_than_candidates(self, boundary_model):
        with pytest.raises(InvalidArgumentError):
            select_dfal(boundary_model, _boundary_candidates(), 5, AttackParams())


class TestBadge:
    """Gradient embeddings and k-means++ seeding."""

    def test_embedding_matches_finite_differences(self):
        model = random_model(7, input_dim=3, hidden_dim=4, num_classes=3)
        x = np.array([0.2, 0.6, 0.4])
        pseudo = model.predict(x)
        embedding = badge_embeddings(model, x[None, :])[0]
        step = 1e-6
        numeric = np.zeros_like(model.W2)
        for idx in np.ndindex(*model.W2.shape):
            plus, minus = model.W2.copy(), model.W2.copy()
            plus[idx] += step
            minus[idx] -= step
            up = cross_entropy(MlpModel(model.W1, model.b1, plus, model.b2).forward(x), pseudo)
            down = cross_entropy(MlpModel(model.W1, model.b1, minus, model.b2).forward(x), pseudo)
            numeric[idx] = (up - down) / (2 * step)
        assert np.allclose(embedding, numeric.reshape(-1), atol=1e-6)

    def test_embedding_shape(self):
        model = random_model(1, input_dim=2, hidden_dim=5, num_classes=4)
        assert badge_embeddings(model, np.zeros((3, 2))).shape == (3, 20)
        assert badge_embeddings(model, np.zeros((0, 2))).shape == (0, 20)

    def test_kmeanspp_distinct_and_seeded(self):
        embeddings = np.random.default_rng(0).normal(size=(40, 6))
        first = kmeanspp_select(embeddings, 10, np.random.default_rng(11))
        second = kmeanspp_select(embeddings, 10, np.random.default_rng(11))
        assert first == second
        assert len(set(first)) == 10

    def test_kmeanspp_prefers_separated_clusters(self):
        embeddings = np.vstack([np.zeros((20, 2)), np.full((1, 2), 100.0)])
        for seed in range(10):
            chosen = kmeanspp_select(embeddings, 2, np.random.default_rng(seed))
            if chosen[0] != 20:
                assert chosen[1] == 20

    def test_kmeanspp_covers_separated_clusters(self):
        rng = np.random.default_rng(0)
        centers = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
        embeddings = np.repeat(centers, 10, axis=0) + rng.normal(scale=0.01, size=(30, 2))
        cluster_of = np.repeat(np.arange(3), 10)
        covered = sum(
            len(set(cluster_of[kmeanspp_select(embeddings, 3, np.random.default_rng(trial))])) == 3
            for trial in range(200)
        )
        assert covered >= 0.95 * 200

    def test_kmeanspp_identical_embeddings(self):
        chosen = kmeanspp_select(np.ones((5, 3)), 5, np.random.default_rng(0))
        assert sorted(chosen) == [0, 1, 2, 3, 4]

    def test_select_badge_returns_ids(self, blobs):
        model = random_model(3, input_dim=4, hidden_dim=6, num_classes=3)
        candidates = Candidates(blobs.ids[:30] + 1000, blobs.features[:30])
        result = select_badge(model, candidates, 5, np.random.default_rng(0))
        assert len(set(result.chosen_ids)) == 5
        assert all(1000 <= i < 1030 for i in result.chosen_ids)


class TestDispatch:
    @pytest.mark.parametrize("strategy", ["random", "fvaal", "dfal", "badge"])
    def test_known_strategies(self, boundary_model, strategy):
        result = select(strategy, boundary_model, _boundary_candidates(), 2, np.random.default_rng(0), AttackParams())
        assert len(result.chosen_ids) == 2
        assert set(result.chosen_ids) <= {0, 1, 2, 3}

    def test_unknown_strategy(self, boundary_model):
        with pytest.raises(InvalidArgumentError):
            select("coreset", boundary_model, _boundary_candidates(), 2, np.random.default_rng(0), AttackParams())
