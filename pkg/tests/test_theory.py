import math
from collections import Counter

import numpy as np
import pytest

import oracles
from gpmux import theory
from gpmux.genome import tree_depth


class TestTournamentCurve:
    def test_zero_runts(self):
        assert theory.expected_fitness_tournaments(0, 500, 7) == 0.0

    def test_all_runts(self):
        assert theory.expected_fitness_tournaments(500, 500, 7) == 1000.0

    def test_one_runt_near_origin(self):
        y = theory.expected_fitness_tournaments(1, 500, 7)
        assert y == pytest.approx(1000 * (1 - (499 / 500) ** 7))
        # slope at the origin is 2k = 14 per runt
        assert y == pytest.approx(14.0, rel=0.01)

    def test_monotone_concave(self):
        ys = [theory.expected_fitness_tournaments(x, 500, 7)
              for x in range(0, 501, 10)]
        diffs = np.diff(ys)
        assert np.all(diffs > 0)
        assert np.all(np.diff(diffs) < 1e-9)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            theory.expected_fitness_tournaments(501, 500, 7)
        with pytest.raises(ValueError):
            theory.expected_fitness_tournaments(-1, 500, 7)

    def test_simulation_matches(self, rng):
        # 1e5 tournaments per point is plenty for 2%
        for x in (1, 5, 25, 100):
            n = 200_000
            hits = theory.simulate_runt_tournaments(x, 500, 7, n, rng)
            expected = theory.expected_fitness_tournaments(x, 500, 7)
            assert hits / (n / 1000) == pytest.approx(expected, rel=0.02)


class TestLimitingPmf:
    def test_single_leaf(self):
        assert theory.limiting_size_pmf(0, 0.25) == pytest.approx(0.75)

    def test_one_internal(self):
        assert theory.limiting_size_pmf(1, 0.25) == pytest.approx(0.140625)

    def test_normalization(self):
        n = np.arange(0, 10_000)
        assert theory.limiting_size_pmf(n, 0.45).sum() == pytest.approx(
            1.0, abs=1e-9)

    def test_mean_matches_analytic(self):
        for p_a in (0.25, 0.4, 0.49):
            n = np.arange(0, 200_000)
            pmf = theory.limiting_size_pmf(n, p_a)
            mean_size = ((2 * n + 1) * pmf).sum()
            assert mean_size == pytest.approx(1 / (1 - 2 * p_a), rel=1e-6)

    def test_matches_catalan_oracle_small_n(self):
        # direct Catalan-count arithmetic, no gammaln
        p = 0.3
        q = 1 - p
        catalan = [1, 1, 2, 5, 14, 42]
        for n, cat in enumerate(catalan):
            assert theory.limiting_size_pmf(n, p) == pytest.approx(
                cat * p**n * q ** (n + 1), rel=1e-12)

    def test_p_a_range_validated(self):
        with pytest.raises(ValueError):
            theory.limiting_size_pmf(1, 0.5)
        with pytest.raises(ValueError):
            theory.limiting_size_pmf(1, -0.1)

    def test_size_pmf_even_sizes_zero(self):
        s = np.arange(1, 20)
        p = theory.size_pmf(s, 0.3)
        assert np.all(p[s % 2 == 0] == 0)
        assert p[0] == pytest.approx(0.7)


class TestCrossoverLimitPmf:
    def test_normalized(self):
        for p_a in (0.1, 0.3, 0.45):
            n = np.arange(0, 300_000)
            assert theory.crossover_limit_pmf(n, p_a).sum() == pytest.approx(
                1.0, abs=1e-9)

    def test_single_leaf_mass(self):
        # (1-2p) * 1 * q at n=0
        assert theory.crossover_limit_pmf(0, 0.25) == pytest.approx(
            0.5 * 0.75)

    def test_tilt_relation_to_plain_form(self):
        # tilted(n) = (1-2p)(2n+1) * plain(n), term by term
        p = 0.3
        n = np.arange(0, 200)
        plain = theory.limiting_size_pmf(n, p)
        tilted = theory.crossover_limit_pmf(n, p)
        np.testing.assert_allclose(tilted, (1 - 2 * p) * (2 * n + 1) * plain,
                                   rtol=1e-12)

    def test_mean_closed_form_matches_sum(self):
        for p_a in (0.2, 0.4, 0.45):
            n = np.arange(0, 400_000)
            pmf = theory.crossover_limit_pmf(n, p_a)
            numeric = ((2 * n + 1) * pmf).sum()
            assert numeric == pytest.approx(
                theory.crossover_limit_mean(p_a), rel=1e-9)

    def test_fit_inverts_mean(self):
        for p_a in (0.0, 0.1, 0.35, 0.49):
            mu = theory.crossover_limit_mean(p_a)
            assert theory.fit_pa_crossover_limit(mu) == pytest.approx(
                p_a, abs=1e-12)

    def test_degenerate_all_leaves(self):
        assert theory.fit_pa_crossover_limit(1.0) == pytest.approx(0.0)
        assert theory.crossover_limit_pmf(0, 0.0) == 1.0

    def test_size_parameterization(self):
        s = np.arange(1, 30)
        p = theory.crossover_limit_size_pmf(s, 0.3)
        assert np.all(p[s % 2 == 0] == 0)
        assert p.sum() < 1.0


class TestFitPa:
    def test_all_leaves(self):
        assert theory.fit_pa_from_mean(1.0) == 0.0

    def test_mean_three(self):
        p_a = theory.fit_pa_from_mean(3.0)
        assert p_a == pytest.approx(1 / 3)
        # fitted distribution has mean 1 internal node
        n = np.arange(0, 50_000)
        pmf = theory.limiting_size_pmf(n, p_a)
        assert (n * pmf).sum() == pytest.approx(1.0, rel=1e-6)

    def test_reported_mean(self):
        assert theory.fit_pa_from_mean(82482.1) == pytest.approx(
            0.49999394, abs=5e-9)

    def test_below_one_rejected(self):
        with pytest.raises(ValueError):
            theory.fit_pa_from_mean(0.5)


class TestFlajolet:
    def test_anchor_values(self):
        assert theory.flajolet_expected_depth(500) == pytest.approx(
            79.27, abs=0.01)
        assert theory.flajolet_expected_depth(1000) == pytest.approx(
            112.10, abs=0.01)

    def test_invalid(self):
        with pytest.raises(ValueError):
            theory.flajolet_expected_depth(0)

    def test_monte_carlo_at_500(self, rng):
        depths = [tree_depth(theory.uniform_random_binary_tree(500, rng))
                  for _ in range(300)]
        assert np.mean(depths) == pytest.approx(
            theory.flajolet_expected_depth(500), rel=0.10)

    def test_exhaustive_small_n_shows_asymptotic_gap(self):
        # the formula is asymptotic: exact small-n means sit well below it
        for n in (2, 4, 6, 8):
            exact = oracles.exhaustive_mean_height(n)
            asymptotic = theory.flajolet_expected_depth(n)
            assert exact < asymptotic


class TestUniformTreeSampler:
    def test_n0(self, rng):
        t = theory.uniform_random_binary_tree(0, rng)
        assert len(t) == 1

    def test_sizes(self, rng):
        for n in (1, 2, 7, 40):
            t = theory.uniform_random_binary_tree(n, rng)
            assert len(t) == 2 * n + 1
            assert t.is_well_formed()

    @pytest.mark.parametrize("n", [2, 3])
    def test_shape_uniformity(self, n, rng):
        shapes = oracles.all_tree_shapes(n)
        trials = 50_000
        seen = Counter(
            oracles.shape_of(theory.uniform_random_binary_tree(n, rng).codes)
            for _ in range(trials))
        assert set(seen) == set(shapes)
        p = 1 / len(shapes)
        sigma = math.sqrt(trials * p * (1 - p))
        for shape in shapes:
            assert abs(seen[shape] - trials * p) < 3 * sigma

    def test_opcode_labels_uniform(self, rng):
        counts = Counter()
        for _ in range(2000):
            t = theory.uniform_random_binary_tree(2, rng)
            counts.update(t.codes.tolist())
        leaves = sum(counts[c] for c in range(6))
        funcs = sum(counts[c] for c in range(6, 10))
        for c in range(6):
            assert counts[c] == pytest.approx(leaves / 6, rel=0.15)
        for c in range(6, 10):
            assert counts[c] == pytest.approx(funcs / 4, rel=0.15)


class TestBloatLimit:
    def test_reference_arithmetic(self):
        assert theory.bloat_limit_estimate(500, 497) == 248_500
        assert theory.bloat_limit_estimate(50, 497) == 24_850

    def test_identity(self):
        assert theory.bloat_limit_estimate(1, 123) == 123

    def test_validation(self):
        with pytest.raises(ValueError):
            theory.bloat_limit_estimate(0, 5)
