import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from reid_risk.topics import (
    PopulationModel,
    TopSetTable,
    TopicsConfig,
    generate_population,
    get_topic,
    inclusion_probabilities,
    per_epoch_matrix,
    sequence_log_likelihood,
    simulate_two_sites,
    site_sequences,
)

from oracles import product_matrix_entry, successive_sampling_inclusion


def single_user(top, N=350, epochs=1):
    return TopSetTable(np.array([[top] * epochs]), N)


class TestConfig:
    def test_default_rates(self):
        c = TopicsConfig()
        assert c.q_in == pytest.approx(0.95 / 5 + 0.05 / 350)
        assert c.q_in == pytest.approx(0.19014285714, abs=1e-10)
        assert c.q_out == pytest.approx(1 / 7000)
        assert 5 * c.q_in + 345 * c.q_out == pytest.approx(1.0)

    @pytest.mark.parametrize("kw", [dict(taxonomy_size=0), dict(top_set_size=10, taxonomy_size=5),
                                    dict(flip_prob=1.5), dict(flip_prob=-0.1), dict(epochs=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            TopicsConfig(**kw)

    def test_round_trip(self):
        c = TopicsConfig(50, 3, 0.2, 4)
        assert TopicsConfig.from_dict(c.to_dict()) == c
        assert TopicsConfig.from_dict({}) == TopicsConfig()
        assert c.with_epochs(2).epochs == 2


class TestGetTopic:
    def test_rates_match_mechanism(self):
        config = TopicsConfig()
        top = [3, 40, 77, 150, 349]
        table = single_user(top)
        sites = np.arange(1_000_000)
        out = get_topic(0, sites, 0, table, config, 11)
        counts = np.bincount(out, minlength=350)
        sigma = np.sqrt(config.q_in * (1 - config.q_in) * sites.size)
        for t in top:
            assert abs(counts[t] - config.q_in * sites.size) <= 3.5 * sigma
        expected = np.full(350, config.q_out)
        expected[top] = config.q_in
        assert stats.chisquare(counts, expected * sites.size).pvalue > 1e-3

    def test_full_flip_is_uniform(self):
        config = TopicsConfig(20, 3, 1.0, 1)
        out = get_topic(0, np.arange(200_000), 0, single_user([0, 1, 2], 20), config, 5)
        assert stats.chisquare(np.bincount(out, minlength=20)).pvalue > 1e-3

    def test_no_flip_single_topic(self):
        config = TopicsConfig(20, 1, 0.0, 3)
        table = single_user([7], 20, 3)
        out = get_topic(0, np.arange(1000)[:, None], np.arange(3)[None, :], table, config, 5)
        assert np.all(out == 7)

    def test_no_flip_stays_in_top_set(self):
        config = TopicsConfig(30, 5, 0.0, 1)
        out = get_topic(0, np.arange(50_000), 0, single_user([1, 4, 9, 16, 25], 30), config, 2)
        counts = np.bincount(out, minlength=30)
        assert set(np.nonzero(counts)[0]) == {1, 4, 9, 16, 25}
        assert stats.chisquare(counts[[1, 4, 9, 16, 25]]).pvalue > 1e-3

    def test_pure_function(self):
        config = TopicsConfig(epochs=4)
        table = generate_population(30, config, PopulationModel(), 8)
        first = get_topic(np.arange(30)[:, None], 9, np.arange(4)[None, :], table, config, 8)
        for _ in range(9):
            again = get_topic(np.arange(30)[:, None], 9, np.arange(4)[None, :], table, config, 8)
            np.testing.assert_array_equal(first, again)
        assert int(get_topic(4, 9, 2, table, config, 8)) == first[4, 2]

    def test_sites_are_independent_draws(self):
        config = TopicsConfig(50, 5, 0.5, 1)
        table = single_user([0, 1, 2, 3, 4], 50)
        a = get_topic(0, np.arange(0, 100_000, 2), 0, table, config, 1)
        b = get_topic(0, np.arange(1, 100_000, 2), 0, table, config, 1)
        table2 = np.zeros((50, 50))
        np.add.at(table2, (a, b), 1)
        keep = table2.sum(axis=1) > 0
        assert stats.chi2_contingency(table2[keep][:, table2.sum(axis=0) > 0]).pvalue > 1e-3

    def test_scalar_returns_zero_dim(self):
        out = get_topic(0, 1, 0, single_user([1, 2, 3, 4, 5]), TopicsConfig(), 0)
        assert out.shape == ()

    def test_site_sequences_shape(self):
        config = TopicsConfig(epochs=3)
        table = generate_population(10, config, PopulationModel(), 1)
        W = site_sequences(np.arange(10), 1, table, config, 1)
        assert W.shape == (10, 3)
        W2 = site_sequences(np.arange(10), np.arange(10), table, config, 1, epochs=2)
        assert W2.shape == (10, 2)
        np.testing.assert_array_equal(W2[1], W[1, :2])


class TestPopulation:
    def test_shape_and_validity(self):
        config = TopicsConfig(epochs=3)
        table = generate_population(500, config, PopulationModel(), 0)
        assert table.sets.shape == (500, 3, 5)
        assert np.all(np.diff(table.sets, axis=2) > 0)

    def test_deterministic(self):
        config = TopicsConfig(epochs=2)
        a = generate_population(5000, config, PopulationModel(), 4)
        b = generate_population(5000, config, PopulationModel(), 4)
        np.testing.assert_array_equal(a.sets, b.sets)
        c = generate_population(5000, config, PopulationModel(), 5)
        assert not np.array_equal(a.sets, c.sets)

    def test_prefix_stable_across_population_sizes(self):
        config = TopicsConfig(epochs=1)
        small = generate_population(100, config, PopulationModel(), 4)
        big = generate_population(200, config, PopulationModel(), 4)
        np.testing.assert_array_equal(small.sets, big.sets[:100])

    def test_inclusion_sums_to_k(self):
        config = TopicsConfig(epochs=1)
        table = generate_population(2000, config, PopulationModel(), 3)
        assert table.inclusion_frequency(0).sum() == pytest.approx(5.0)

    def test_uniform_inclusion(self):
        config = TopicsConfig(20, 4, 0.05, 1)
        table = generate_population(100_000, config, PopulationModel("uniform"), 2)
        np.testing.assert_allclose(table.inclusion_frequency(0), 0.2, atol=4 * np.sqrt(0.16 / 1e5))

    def test_zipf_sampler_matches_exact_inclusion(self):
        config = TopicsConfig(50, 5, 0.05, 1)
        pi = inclusion_probabilities(np.arange(1, 51) ** -1.0, 5)
        table = generate_population(200_000, config, PopulationModel(), 9)
        sigma = np.sqrt(pi * (1 - pi) / 200_000)
        assert np.all(np.abs(table.inclusion_frequency(0) - pi) <= 4.5 * sigma + 1e-12)

    def test_time_invariant_weights(self):
        config = TopicsConfig(epochs=4)
        model = PopulationModel()
        w = [model.epoch_weights(config, s, 1) for s in range(4)]
        assert all(np.array_equal(w[0], x) for x in w)
        moving = PopulationModel(time_invariant=False)
        w = [moving.epoch_weights(config, s, 1) for s in range(4)]
        assert not np.array_equal(w[0], w[1])
        assert all(np.allclose(np.sort(w[0]), np.sort(x)) for x in w)

    def test_explicit_weights(self):
        config = TopicsConfig(6, 2, 0.0, 2)
        model = PopulationModel("explicit", weights=[[1, 1, 0, 0, 0, 0], [0, 0, 0, 0, 1, 1]])
        assert not model.time_invariant
        table = generate_population(100, config, model, 0)
        assert np.all(table.sets[:, 0] == [0, 1])
        assert np.all(table.sets[:, 1] == [4, 5])

    def test_explicit_needs_enough_topics(self):
        config = TopicsConfig(6, 3, 0.0, 1)
        with pytest.raises(ValueError):
            generate_population(5, config, PopulationModel("explicit", weights=[1, 1, 0, 0, 0, 0]), 0)

    def test_bad_model(self):
        with pytest.raises(ValueError):
            PopulationModel("pareto")
        with pytest.raises(ValueError):
            PopulationModel("explicit")
        with pytest.raises(ValueError):
            PopulationModel("explicit", weights=[-1, 2])

    def test_model_round_trip(self):
        m = PopulationModel(zipf_exponent=1.5, time_invariant=False)
        back = PopulationModel.from_dict(m.to_dict())
        assert back.zipf_exponent == 1.5 and not back.time_invariant

    def test_table_rejects_duplicates(self):
        with pytest.raises(ValueError):
            TopSetTable(np.array([[[1, 1]]]), 5)
        with pytest.raises(ValueError):
            TopSetTable(np.array([[[1, 9]]]), 5)


class TestInclusionProbabilities:
    @pytest.mark.parametrize("weights,k", [
        ([1, 2, 3, 4, 5, 6], 3),
        ([10, 1, 1, 0.1, 0.01], 2),
        (list(np.arange(1, 8) ** -1.0), 4),
        ([1, 0, 2, 3], 2),
    ])
    def test_against_enumeration(self, weights, k):
        np.testing.assert_allclose(inclusion_probabilities(weights, k),
                                   successive_sampling_inclusion(weights, k), atol=1e-9)

    def test_sums_to_k(self):
        pi = inclusion_probabilities(np.arange(1, 101) ** -1.0, 5)
        assert pi.sum() == pytest.approx(5.0, abs=1e-8)
        assert np.all(np.diff(pi) < 0)

    def test_uniform(self):
        np.testing.assert_allclose(inclusion_probabilities(np.ones(10), 3), 0.3, atol=1e-10)

    def test_exactly_k_positive(self):
        np.testing.assert_array_equal(inclusion_probabilities([0, 2, 0, 1], 2), [0, 1, 0, 1])
        with pytest.raises(ValueError):
            inclusion_probabilities([0, 2, 0, 0], 2)


class TestMatrices:
    def test_per_epoch_matrix(self):
        config = TopicsConfig(epochs=2)
        table = generate_population(40, config, PopulationModel(), 0)
        P = per_epoch_matrix(table, 1, config)
        assert P.shape == (40, 350)
        np.testing.assert_allclose(P.entries.sum(axis=1), 1.0)
        for i in (0, 17, 39):
            inside = np.zeros(350, bool)
            inside[table.sets[i, 1]] = True
            np.testing.assert_allclose(P.entries[i, inside], config.q_in)
            np.testing.assert_allclose(P.entries[i, ~inside], config.q_out)
        with pytest.raises(IndexError):
            per_epoch_matrix(table, 2, config)

    @pytest.mark.parametrize("r", [1, 2, 3])
    def test_likelihood_matches_product_matrix(self, r):
        N, k, p = 4, 2, 0.3
        config = TopicsConfig(N, k, p, r)
        table = generate_population(3, config, PopulationModel("uniform"), r)
        for i in range(3):
            total = 0.0
            for seq in itertools.product(range(N), repeat=r):
                ours = np.exp(sequence_log_likelihood(i, seq, table, config))
                ref = product_matrix_entry([table.sets[i, s] for s in range(r)], seq, N, k, p)
                assert ours == pytest.approx(ref, rel=1e-12)
                total += ours
            assert total == pytest.approx(1.0)

    def test_likelihood_of_impossible_sequence(self):
        config = TopicsConfig(5, 1, 0.0, 1)
        table = TopSetTable(np.array([[[2]]]), 5)
        assert sequence_log_likelihood(0, [3], table, config) == -np.inf
        assert sequence_log_likelihood(0, [2], table, config) == 0.0

    def test_likelihood_rejects_long_sequence(self):
        table = TopSetTable(np.array([[[2]]]), 5)
        with pytest.raises(ValueError):
            sequence_log_likelihood(0, [2, 2], table, TopicsConfig(5, 1, 0.0, 1))


class TestTwoSites:
    def test_exact_match_rate(self):
        config = TopicsConfig(epochs=4)
        sample = simulate_two_sites(20_000, config, PopulationModel(), 6)
        rate = np.mean(sample.site1 == sample.site2)
        expected = 5 * config.q_in ** 2 + 345 * config.q_out ** 2
        assert abs(rate - expected) <= 4 * np.sqrt(expected * (1 - expected) / sample.site1.size)

    def test_sites_consistent_with_get_topic(self):
        config = TopicsConfig(epochs=2)
        sample = simulate_two_sites(50, config, PopulationModel(), 1)
        assert sample.site1.shape == (50, 2)
        np.testing.assert_array_equal(sample.site2[7], get_topic(7, 2, np.arange(2), sample.table, config, 1))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 30), st.integers(1, 5), st.floats(0, 1), st.integers(0, 1000))
    def test_topics_in_range(self, N, k, p, seed):
        k = min(k, N)
        config = TopicsConfig(N, k, p, 2)
        sample = simulate_two_sites(20, config, PopulationModel(), seed)
        assert sample.site1.min() >= 0 and sample.site2.max() < N
        if p == 0:
            assert np.all(sample.table.contains(np.arange(20)[:, None], np.arange(2)[None, :], sample.site1))
