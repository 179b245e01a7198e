import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from reid_risk.model import (
    FinitePrior,
    PredictionMatrix,
    RepresentationMatrix,
    posterior_matrix,
    posterior_weights,
    sample_observation,
    sample_observation_vector,
    validate_representation_matrix,
)
from reid_risk.rng import stream

from conftest import random_row_stochastic


class TestValidation:
    def test_identity_is_valid(self):
        assert validate_representation_matrix(np.eye(2)) == []

    def test_row_sum_violation_reported(self):
        problems = validate_representation_matrix([[0.5, 0.6], [0.5, 0.5]])
        assert len(problems) == 1
        assert "row 0" in problems[0]

    def test_gap_matrix_is_valid(self):
        assert validate_representation_matrix([[0.5, 0, 0.5], [0, 0.5, 0.5]]) == []

    def test_negative_entry_reported_without_raising(self):
        problems = validate_representation_matrix([[1.5, -0.5]])
        assert any("negative" in p for p in problems)

    def test_constructor_rejects_invalid(self):
        with pytest.raises(ValueError):
            RepresentationMatrix([[0.5, 0.6]])

    def test_from_loaded_renormalises_small_drift_only(self):
        P = RepresentationMatrix.from_loaded([[0.3333333, 0.6666666]])
        assert abs(P.entries.sum() - 1) < 1e-12
        with pytest.raises(ValueError):
            RepresentationMatrix.from_loaded([[0.5, 0.49]])

    def test_entries_are_immutable(self):
        P = RepresentationMatrix(np.eye(2))
        with pytest.raises(ValueError):
            P.entries[0, 0] = 0.0

    def test_prediction_matrix_checks_columns(self):
        PredictionMatrix([[0.5, 1.0], [0.5, 0.0]])
        with pytest.raises(ValueError):
            PredictionMatrix([[0.5, 0.5], [0.5, 0.0]])


class TestSampling:
    def test_one_hot_row(self):
        P = RepresentationMatrix([[0, 1, 0]])
        rng = stream(1, "s")
        assert all(sample_observation(P, 0, rng) == 1 for _ in range(100))

    def test_fair_coin_frequency(self):
        P = RepresentationMatrix([[0.5, 0.5]])
        rng = stream(3, "coin")
        draws = [sample_observation(P, 0, rng) for _ in range(100_000)]
        assert abs(np.mean(np.asarray(draws) == 0) - 0.5) <= 0.01

    def test_replay_is_identical(self):
        P = RepresentationMatrix(random_row_stochastic(np.random.default_rng(0), 4, 6))
        a = [sample_observation(P, 2, stream(11, "replay")) for _ in range(3)]
        b = sample_observation_vector(P, stream(11, "vec"))
        c = sample_observation_vector(P, stream(11, "vec"))
        assert len(set(a)) == 1
        np.testing.assert_array_equal(b, c)

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            sample_observation(RepresentationMatrix(np.eye(2)), 2, stream(0))

    def test_identity_vector(self):
        np.testing.assert_array_equal(sample_observation_vector(RepresentationMatrix(np.eye(3)), stream(0)), [0, 1, 2])

    def test_constant_rows(self):
        P = RepresentationMatrix([[1, 0]] * 5)
        np.testing.assert_array_equal(sample_observation_vector(P, stream(0)), np.zeros(5))

    def test_coordinates_are_independent(self):
        P = RepresentationMatrix([[0.3, 0.7], [0.6, 0.4]])
        rng = stream(8, "indep")
        draws = np.array([sample_observation_vector(P, rng) for _ in range(100_000)])
        observed = np.bincount(draws[:, 0] * 2 + draws[:, 1], minlength=4)
        expected = np.outer(P.entries[0], P.entries[1]).ravel() * draws.shape[0]
        assert stats.chisquare(observed, expected).pvalue > 0.01

    def test_zero_probability_columns_never_drawn(self):
        P = RepresentationMatrix([[0, 0.5, 0, 0.5, 0]])
        draws = np.array([sample_observation_vector(P, stream(4, t))[0] for t in range(2000)])
        assert set(np.unique(draws)) <= {1, 3}

    @pytest.mark.parametrize("seed", range(5))
    def test_total_variation_concentration(self, seed):
        gen = np.random.default_rng(seed)
        m, T, delta = 6, 100_000, 0.01
        P = RepresentationMatrix(random_row_stochastic(gen, 3, m))
        i = seed % 3
        from reid_risk.model import sample_rows
        draws = sample_rows(P, np.full(T, i), stream(seed, "tv"))
        emp = np.bincount(draws, minlength=m) / T
        tv = 0.5 * np.abs(emp - P.entries[i]).sum()
        assert tv <= math.sqrt(m * math.log(2 / delta) / (2 * T))


class TestPosterior:
    def test_single_component_is_returned(self):
        P = RepresentationMatrix(random_row_stochastic(np.random.default_rng(1), 3, 4))
        prior = FinitePrior.single(P)
        for W in ([0, 1, 2], [3, 3, 3]):
            np.testing.assert_allclose(posterior_matrix(prior, np.array(W)).entries, P.entries)

    def test_zero_likelihood_component_is_eliminated(self):
        A = RepresentationMatrix([[1.0, 0.0], [0.5, 0.5]])
        B = RepresentationMatrix([[0.2, 0.8], [0.5, 0.5]])
        post = posterior_matrix(FinitePrior([0.5, 0.5], (A, B)), np.array([1, 0]))
        np.testing.assert_allclose(post.entries, B.entries)

    def test_one_user_two_components(self):
        # Enumeration: joint(component j, W=0) = 0.5 * P_j[0, 0].
        joint = np.array([0.5 * 0.9, 0.5 * 0.1])
        weights = joint / joint.sum()
        expected_row = weights[0] * np.array([0.9, 0.1]) + weights[1] * np.array([0.1, 0.9])
        np.testing.assert_allclose(weights, [0.9, 0.1])
        np.testing.assert_allclose(expected_row, [0.82, 0.18])
        prior = FinitePrior([0.5, 0.5], ([[0.9, 0.1]], [[0.1, 0.9]]))
        np.testing.assert_allclose(posterior_weights(prior, np.array([0])), weights)
        np.testing.assert_allclose(posterior_matrix(prior, np.array([0])).entries, [expected_row])

    def test_impossible_observation_raises(self):
        prior = FinitePrior.single(np.eye(2))
        with pytest.raises(ValueError):
            posterior_matrix(prior, np.array([1, 1]))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 3), st.integers(0, 2**31))
    def test_posterior_is_always_valid(self, n, m, comps, seed):
        gen = np.random.default_rng(seed)
        mats = tuple(RepresentationMatrix(random_row_stochastic(gen, n, m)) for _ in range(comps))
        prior = FinitePrior(gen.dirichlet(np.ones(comps)), mats)
        W = gen.integers(m, size=n)
        assert validate_representation_matrix(posterior_matrix(prior, W)) == []
