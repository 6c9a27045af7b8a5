from fractions import Fraction

import numpy as np
import pytest

from linkrate import BlockLaws, DegreeLaw
from linkrate.errors import ConfigError
from linkrate.rng import substream


class TestDegreeLaw:
    def test_pmf_sums_to_one(self):
        for law in (DegreeLaw(0.4, 2.5), DegreeLaw(0.0, 1.5, 10), DegreeLaw(0.9, 3.0, 2)):
            assert law.pmf().sum() == pytest.approx(1.0, abs=1e-12)
            assert law.conditional().sum() == pytest.approx(1.0, abs=1e-12)

    def test_mean_against_rational_arithmetic(self):
        # alpha = 2 keeps every weight rational, so the expected value can be
        # carried exactly: mean = (1 - p0) * sum(k * k^-2) / sum(k^-2)
        p0, k_max = Fraction(2, 5), 4
        num = sum(Fraction(k, k**2) for k in range(1, k_max + 1))
        den = sum(Fraction(1, k**2) for k in range(1, k_max + 1))
        want = (1 - p0) * num / den
        assert want == Fraction(36, 41)
        law = DegreeLaw(0.4, 2.0, k_max)
        assert law.mean() == pytest.approx(float(want), rel=1e-12)

    def test_conditional_against_rational_arithmetic(self):
        law = DegreeLaw(0.3, 2.0, 4)
        den = 144 + 36 + 16 + 9  # common denominator 144 cleared
        want = [Fraction(c, den) for c in (144, 36, 16, 9)]
        np.testing.assert_allclose(law.conditional(), [float(x) for x in want], rtol=1e-12)

    def test_linkage_rate_is_one_minus_zero_mass(self):
        assert DegreeLaw(0.35, 2.5).linkage_rate == pytest.approx(0.65)
        assert DegreeLaw(1.0, 2.0).linkage_rate == 0.0

    def test_all_zero_degenerate_law(self):
        law = DegreeLaw(1.0, 2.0, 5)
        assert law.pmf()[0] == 1.0
        assert law.pmf()[1:].sum() == 0.0
        assert law.mean() == 0.0
        draws = law.sample(1000, substream(0, 1))
        assert not draws.any()

    def test_sampling_matches_pmf(self):
        law = DegreeLaw(0.5, 2.5, 50)
        draws = law.sample(100_000, substream(42, 2))
        assert draws.min() >= 0 and draws.max() <= 50
        freq_zero = np.mean(draws == 0)
        assert freq_zero == pytest.approx(0.5, abs=0.01)
        se = draws.std() / np.sqrt(draws.size)
        assert abs(draws.mean() - law.mean()) < 3 * se
        pmf = law.pmf()
        for k in range(6):
            assert np.mean(draws == k) == pytest.approx(pmf[k], abs=0.01)

    def test_sampling_is_deterministic(self):
        law = DegreeLaw(0.4, 2.5)
        a = law.sample(500, substream(7, 3))
        b = law.sample(500, substream(7, 3))
        assert (a == b).all()

    @pytest.mark.parametrize(
        "kwargs, msg",
        [
            (dict(p_zero=-0.1, alpha=2.0), "p_zero"),
            (dict(p_zero=1.5, alpha=2.0), "p_zero"),
            (dict(p_zero=0.5, alpha=1.0), "alpha"),
            (dict(p_zero=0.5, alpha=0.5), "alpha"),
            (dict(p_zero=0.5, alpha=2.0, k_max=0), "k_max"),
            (dict(p_zero=0.5, alpha=2.0, k_max=2.5), "k_max"),
        ],
    )
    def test_invalid_parameters(self, kwargs, msg):
        with pytest.raises(ConfigError, match=msg):
            DegreeLaw(**kwargs)


class TestBlockLaws:
    def test_grid_lookup_is_one_based(self):
        a, b, c, d = (DegreeLaw(p, 2.5) for p in (0.1, 0.2, 0.3, 0.4))
        laws = BlockLaws([[a, b], [c, d]])
        assert laws.num_groups == 2
        assert laws.law(1, 2) is b
        assert laws.law(2, 1) is c

    def test_implied_linkage_matrix(self):
        laws = BlockLaws(
            [[DegreeLaw(0.5, 2.5), DegreeLaw(0.6, 2.5)],
             [DegreeLaw(0.8, 2.5), DegreeLaw(0.72, 2.5)]]
        )
        np.testing.assert_allclose(
            laws.implied_linkage_matrix(), [[0.5, 0.4], [0.2, 0.28]]
        )

    def test_uniform_helper(self):
        law = DegreeLaw(0.5, 3.0)
        laws = BlockLaws.uniform(3, law)
        assert laws.num_groups == 3
        assert all(laws.law(r, s) is law for r in (1, 2, 3) for s in (1, 2, 3))

    def test_rejects_non_square_grid(self):
        law = DegreeLaw(0.5, 2.0)
        with pytest.raises(ConfigError, match="square"):
            BlockLaws([[law, law], [law]])
        with pytest.raises(ConfigError, match="square"):
            BlockLaws([])

    def test_rejects_foreign_entries(self):
        with pytest.raises(ConfigError, match="DegreeLaw"):
            BlockLaws([[0.5]])

    def test_out_of_range_block(self):
        laws = BlockLaws.uniform(2, DegreeLaw(0.5, 2.0))
        with pytest.raises(ConfigError, match="outside"):
            laws.law(0, 1)
        with pytest.raises(ConfigError, match="outside"):
            laws.law(1, 3)
