from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hir.resample import (
    MODE_DETERMINISTIC,
    MODE_GUMBEL,
    WeightTable,
    combine_log_weights,
    deterministic_topk,
    gumbel_noise,
    gumbel_topk,
)


def pl_inclusion_probs(weights, k):
    """Inclusion probabilities under sequential (Plackett-Luce) sampling
    without replacement, by brute-force enumeration of ordered draws."""
    weights = np.asarray(weights, dtype=np.float64)
    incl = np.zeros(weights.size)
    for order in permutations(range(weights.size), k):
        p = 1.0
        remaining = weights.sum()
        for idx in order:
            p *= weights[idx] / remaining
            remaining -= weights[idx]
        for idx in order:
            incl[idx] += p
    return incl


def table(ng, nn):
    return WeightTable(log_w_ng=np.asarray(ng, float), log_w_nn=np.asarray(nn, float))


class TestCombine:
    def test_alpha_one_returns_ng_exactly(self):
        ng = np.array([0.25, -3.5, 7.125, 0.0])
        nn = np.array([100.0, -2.0, 3.0, 4.0])
        out = combine_log_weights(table(ng, nn), alpha=1.0)
        assert np.array_equal(out, ng)

    def test_alpha_zero_returns_nn_exactly(self):
        ng = np.array([0.25, -3.5, 7.125])
        nn = np.array([100.0, -2.0, 3.0])
        out = combine_log_weights(table(ng, nn), alpha=0.0)
        assert np.array_equal(out, nn)

    def test_affine_combination(self):
        out = combine_log_weights(table([1.0], [3.0]), alpha=0.25)
        assert out[0] == pytest.approx(2.5, abs=1e-15)

    def test_nan_names_index_and_channel(self):
        bad = table([0.0, np.nan, 1.0], [0.0, 0.0, 0.0])
        with pytest.raises(ValueError, match="log_w_ng.*index 1"):
            combine_log_weights(bad, alpha=0.5)
        bad = table([0.0, 0.0], [np.nan, 0.0])
        with pytest.raises(ValueError, match="log_w_nn.*index 0"):
            combine_log_weights(bad, alpha=0.5)

    def test_alpha_out_of_range(self):
        with pytest.raises(ValueError):
            combine_log_weights(table([0.0], [0.0]), alpha=1.5)

    def test_standardization_centers_and_scales(self):
        ng = np.array([0.0, 2.0, 4.0])
        nn = np.array([1000.0, 2000.0, 3000.0])
        out = combine_log_weights(table(ng, nn), alpha=0.5, standardize=True)
        # both channels standardized to the same z-scores, so the blend
        # equals either channel's z-scores
        expected = (ng - ng.mean()) / ng.std()
        assert np.allclose(out, expected, atol=1e-12)

    def test_standardization_preserves_endpoint_ranking(self):
        rng = np.random.default_rng(0)
        ng, nn = rng.normal(size=30) * 50, rng.normal(size=30)
        raw = combine_log_weights(table(ng, nn), alpha=1.0)
        std = combine_log_weights(table(ng, nn), alpha=1.0, standardize=True)
        assert np.array_equal(np.argsort(-raw), np.argsort(-std))

    def test_mismatched_lengths_rejected(self):
        with pytest.raises(ValueError):
            WeightTable(log_w_ng=np.zeros(3), log_w_nn=np.zeros(4))


class TestDeterministicTopk:
    def test_ordering_forced(self):
        result = deterministic_topk(np.array([3.0, 1.0, 2.0]), k=2)
        assert result.indices.tolist() == [0, 2]
        assert result.scores.tolist() == [3.0, 2.0]
        assert result.mode == MODE_DETERMINISTIC

    def test_all_equal_tie_break_by_index(self):
        result = deterministic_topk(np.zeros(4), k=2)
        assert result.indices.tolist() == [0, 1]

    def test_constant_shift_invariance(self):
        rng = np.random.default_rng(1)
        w = rng.normal(size=50)
        base = deterministic_topk(w, k=7)
        shifted = deterministic_topk(w + 123.456, k=7)
        assert np.array_equal(base.indices, shifted.indices)

    def test_scores_non_increasing(self):
        rng = np.random.default_rng(2)
        w = rng.normal(size=100)
        result = deterministic_topk(w, k=20)
        assert np.all(np.diff(result.scores) <= 0)

    def test_partial_ties_at_threshold(self):
        w = np.array([5.0, 1.0, 5.0, 1.0, 1.0])
        result = deterministic_topk(w, k=3)
        assert result.indices.tolist() == [0, 2, 1]

    def test_k_bounds(self):
        with pytest.raises(ValueError):
            deterministic_topk(np.zeros(3), k=0)
        with pytest.raises(ValueError):
            deterministic_topk(np.zeros(3), k=4)

    @given(
        weights=st.lists(st.floats(-50, 50), min_size=1, max_size=30),
        k=st.integers(1, 30),
    )
    @settings(max_examples=80)
    def test_agrees_with_full_sort(self, weights, k):
        w = np.asarray(weights)
        if k > w.size:
            k = w.size
        result = deterministic_topk(w, k=k)
        reference = sorted(range(w.size), key=lambda i: (-w[i], i))[:k]
        assert result.indices.tolist() == reference


class TestGumbelTopk:
    def test_k_equals_n_selects_all(self):
        for seed in (0, 1, 99):
            result = gumbel_topk(np.log(np.array([0.7, 0.2, 0.1])), k=3, seed=seed)
            assert sorted(result.indices.tolist()) == [0, 1, 2]

    def test_deterministic_in_seed(self):
        w = np.random.default_rng(3).normal(size=40)
        a = gumbel_topk(w, k=5, seed=1234)
        b = gumbel_topk(w, k=5, seed=1234)
        assert np.array_equal(a.indices, b.indices)
        assert np.array_equal(a.scores, b.scores)
        c = gumbel_topk(w, k=5, seed=1235)
        assert not np.array_equal(a.indices, c.indices) or not np.array_equal(
            a.scores, c.scores
        )

    def test_shift_invariance_same_seed(self):
        w = np.random.default_rng(4).normal(size=30)
        a = gumbel_topk(w, k=6, seed=7)
        b = gumbel_topk(w + 55.5, k=6, seed=7)
        assert np.array_equal(a.indices, b.indices)

    def test_noise_is_counter_based_prefix_stable(self):
        # The first n variates do not depend on how many are drawn.
        long = gumbel_noise(100, seed=5)
        short = gumbel_noise(10, seed=5)
        assert np.array_equal(long[:10], short)

    def test_result_fields(self):
        result = gumbel_topk(np.zeros(5), k=2, seed=3)
        assert result.mode == MODE_GUMBEL
        assert result.seed == 3
        assert result.alpha is None
        assert np.all(np.diff(result.scores) <= 0)

    def test_k_bounds(self):
        with pytest.raises(ValueError):
            gumbel_topk(np.zeros(3), k=0, seed=0)
        with pytest.raises(ValueError):
            gumbel_topk(np.zeros(3), k=4, seed=0)

    def test_k1_frequencies_match_weights(self):
        probs = np.array([0.7, 0.2, 0.1])
        log_w = np.log(probs)
        counts = np.zeros(3)
        trials = 20_000
        for seed in range(trials):
            counts[gumbel_topk(log_w, k=1, seed=seed).indices[0]] += 1
        assert np.all(np.abs(counts / trials - probs) < 0.02)

    def test_k2_inclusion_matches_plackett_luce(self):
        probs = np.array([0.7, 0.2, 0.1])
        expected = pl_inclusion_probs(probs, k=2)
        log_w = np.log(probs)
        counts = np.zeros(3)
        trials = 20_000
        for seed in range(trials):
            for idx in gumbel_topk(log_w, k=2, seed=seed).indices:
                counts[idx] += 1
        assert np.all(np.abs(counts / trials - expected) < 0.02)

    def test_inclusion_on_n4_k3(self):
        probs = np.array([0.4, 0.3, 0.2, 0.1])
        expected = pl_inclusion_probs(probs, k=3)
        log_w = np.log(probs)
        counts = np.zeros(4)
        trials = 20_000
        for seed in range(trials):
            for idx in gumbel_topk(log_w, k=3, seed=seed).indices:
                counts[idx] += 1
        assert np.all(np.abs(counts / trials - expected) < 0.02)


class TestEndpointRankings:
    def test_full_ranking_identities(self):
        rng = np.random.default_rng(5)
        ng, nn = rng.normal(size=200), rng.normal(size=200) * 100
        t = table(ng, nn)
        rank_alpha1 = deterministic_topk(combine_log_weights(t, 1.0), k=200).indices
        rank_ng = deterministic_topk(ng, k=200).indices
        assert np.array_equal(rank_alpha1, rank_ng)
        rank_alpha0 = deterministic_topk(combine_log_weights(t, 0.0), k=200).indices
        rank_nn = deterministic_topk(nn, k=200).indices
        assert np.array_equal(rank_alpha0, rank_nn)

    def test_channel_shift_does_not_change_selection(self):
        rng = np.random.default_rng(6)
        ng, nn = rng.normal(size=60), rng.normal(size=60)
        base = deterministic_topk(combine_log_weights(table(ng, nn), 0.5), k=10)
        shifted = deterministic_topk(combine_log_weights(table(ng + 40.0, nn), 0.5), k=10)
        assert np.array_equal(base.indices, shifted.indices)
