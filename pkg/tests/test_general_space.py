import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest

from mvps import OutOfRange
from mvps.general_space import (
    GeneralMixtureModel,
    PiecewiseLinearCDF,
    compare_laws,
    draw_block_weights,
    exact_block_law,
    sample_hierarchical,
    sample_urn,
    truncate,
)

two_bins = GeneralMixtureModel(1, ((0, 1), (1, 2)), (F(1, 2), F(1, 2)))


def rising(x, n):
    out = F(1)
    for i in range(n):
        out *= x + i
    return out


def dirichlet_multinomial(theta, probs, t):
    """Probability of one ordered sequence: prod_l (theta p_l)^(n_l) / theta^(n) with rising powers."""
    counts = [t.count(l) for l in range(len(probs))]
    num = F(1)
    for p, c in zip(probs, counts):
        num *= rising(theta * p, c)
    return num / rising(F(theta), len(t))


class TestExactBlockLaw:
    def test_worked_values(self):
        assert exact_block_law(two_bins, [0, 0]) == F(3, 8)
        assert exact_block_law(two_bins, [0, 1]) == F(1, 8) == exact_block_law(two_bins, [1, 0])
        assert exact_block_law(two_bins, []) == 1

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_sums_to_one(self, n):
        m = GeneralMixtureModel(F(3, 2), ((0, 1), (1, 2), (2, 5)), (F(1, 6), F(1, 3), F(1, 2)))
        assert sum(exact_block_law(m, t) for t in itertools.product(range(3), repeat=n)) == 1

    def test_matches_closed_form(self):
        probs = (F(1, 6), F(1, 3), F(1, 2))
        m = GeneralMixtureModel(F(5, 2), ((0, 1), (1, 2), (2, 3)), probs)
        for t in itertools.product(range(3), repeat=4):
            assert exact_block_law(m, t) == dirichlet_multinomial(F(5, 2), probs, list(t))

    def test_transposition_invariance(self):
        for t in itertools.product(range(2), repeat=4):
            for i in range(3):
                s = t[:i] + (t[i + 1], t[i]) + t[i + 2:]
                assert exact_block_law(two_bins, t) == exact_block_law(two_bins, s)

    def test_bad_bin(self):
        with pytest.raises(ValueError):
            exact_block_law(two_bins, [2])


class TestModel:
    def test_validation(self):
        with pytest.raises(ValueError):
            GeneralMixtureModel(1, ((0, 2), (1, 3)), (F(1, 2), F(1, 2)))
        with pytest.raises(ValueError):
            GeneralMixtureModel(1, ((0, 1),), (F(1, 2),))
        with pytest.raises(ValueError):
            GeneralMixtureModel(0, ((0, 1),), (1,))
        with pytest.raises(ValueError):
            GeneralMixtureModel(1, ((0, 1), (1, 2)), (1, 0))
        with pytest.raises(ValueError):
            GeneralMixtureModel(1, ((0, 1),), (1,), (PiecewiseLinearCDF((0, 2), (0, 1)),))

    def test_cdf_validation(self):
        with pytest.raises(ValueError):
            PiecewiseLinearCDF((0, 1), (0, 0.5))
        with pytest.raises(ValueError):
            PiecewiseLinearCDF((1, 0), (0, 1))
        c = PiecewiseLinearCDF((0, 1, 2), (0, 0.8, 1))
        assert c.inverse(0.4) == pytest.approx(0.5)
        assert c.inverse(0.9) == pytest.approx(1.5)

    def test_truncate(self):
        probs = [F(1, 2 ** (i + 1)) for i in range(6)]
        bins = [(i, i + 1) for i in range(6)]
        m = truncate(1, bins, probs, 3)
        assert m.bins == ((0, 1), (1, 2), (2, 3))
        assert m.bin_probs == (F(4, 7), F(2, 7), F(1, 7))
        assert m.tail_mass == F(1, 64) + F(1, 32) + F(1, 16)


class TestSamplers:
    @pytest.mark.parametrize("sampler", [sample_urn, sample_hierarchical])
    def test_values_in_bins(self, sampler):
        m = GeneralMixtureModel(
            F(1, 2),
            ((0, 1), (2, 3), (5, 9)),
            (F(1, 5), F(3, 10), F(1, 2)),
            (PiecewiseLinearCDF.uniform(0, 1), PiecewiseLinearCDF((2, 2.9), (0, 1)), PiecewiseLinearCDF((5, 6, 8), (0, 0.5, 1))),
        )
        t = sampler(m, 500, 11)
        assert len(t) == 500
        for x, l in zip(t.values, t.blocks):
            lo, hi = m.bins[l]
            assert lo <= x < hi

    @pytest.mark.parametrize("sampler", [sample_urn, sample_hierarchical])
    def test_small_n(self, sampler):
        assert len(sampler(two_bins, 0, 1)) == 0
        assert len(sampler(two_bins, 1, 1)) == 1
        with pytest.raises(ValueError):
            sampler(two_bins, -1, 0)

    @pytest.mark.parametrize("sampler", [sample_urn, sample_hierarchical])
    def test_deterministic(self, sampler):
        assert sampler(two_bins, 50, 9) == sampler(two_bins, 50, 9)

    def test_large_theta_weights_approach_base(self):
        m = GeneralMixtureModel(10**4, ((0, 1), (1, 2), (2, 3)), (F(1, 5), F(3, 10), F(1, 2)))
        rng = np.random.default_rng(5)
        base = np.array([0.2, 0.3, 0.5])
        tvs = [0.5 * np.abs(draw_block_weights(m, rng) - base).sum() for _ in range(1000)]
        assert max(tvs) < 0.05

    def test_tiny_shapes_do_not_underflow(self):
        m = GeneralMixtureModel(F(1, 1000), ((0, 1), (1, 2), (2, 3)), (F(1, 3), F(1, 3), F(1, 3)))
        rng = np.random.default_rng(0)
        for _ in range(200):
            w = draw_block_weights(m, rng)
            assert np.all(np.isfinite(w)) and math.isclose(w.sum(), 1.0)

    def test_dirichlet_mean(self):
        m = GeneralMixtureModel(2, ((0, 1), (1, 2), (2, 3)), (F(1, 5), F(3, 10), F(1, 2)))
        rng = np.random.default_rng(1)
        W = np.array([draw_block_weights(m, rng) for _ in range(20000)])
        # Dirichlet(2 * p) has mean p and variance p(1-p)/3
        p = np.array([0.2, 0.3, 0.5])
        se = np.sqrt(p * (1 - p) / 3 / len(W))
        assert np.all(np.abs(W.mean(axis=0) - p) < 4 * se)


class TestCompareLaws:
    def test_single_bin_is_exact(self):
        m = GeneralMixtureModel(1, ((0, 1),), (1,))
        for n in (1, 3):
            res = compare_laws(m, n, 50, 0)
            assert res.tv_urn == 0 and res.tv_hierarchical == 0

    def test_small_run_within_band(self):
        res = compare_laws(two_bins, 2, 4000, 3)
        assert sum(res.exact) == 1
        assert res.tv_urn < 3 * res.mc_bound
        assert res.tv_hierarchical < 3 * res.mc_bound
        assert res.mc_bound == pytest.approx(math.sqrt(4 / 4000))

    def test_guards(self):
        with pytest.raises(OutOfRange):
            compare_laws(two_bins, 5, 10, 0)
        with pytest.raises(OutOfRange):
            compare_laws(two_bins, 0, 10, 0)
        with pytest.raises(OutOfRange):
            compare_laws(two_bins, 2, 0, 0)
        wide = GeneralMixtureModel(1, tuple((i, i + 1) for i in range(11)), tuple(F(1, 11) for _ in range(11)))
        with pytest.raises(OutOfRange):
            compare_laws(wide, 4, 10, 0)
