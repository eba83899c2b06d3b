import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from homogtest.asymptotics import Case1, Case2, Case3
from homogtest.errors import DomainError
from homogtest.sampling import (
    MixtureParams,
    Sample,
    SampleFormatError,
    StreamKey,
    parse_sample,
    read_sample,
    sample_alternative_prior,
    sample_mixture,
    sample_null,
    sufficient_stats,
    write_sample,
)

BIG = 10**6
FROZEN_NULL_DRAWS = np.array([-0.5141658112314126, 1.0309111217613407, -1.0104712725037313])


def null_stats(n, reps, seed):
    out = np.empty((reps, 2))
    for r in range(reps):
        s = sufficient_stats(sample_null(n, StreamKey(seed, r)))
        out[r] = s.xi, s.eta
    return out


class TestTypes:
    def test_sample_rejects_empty(self):
        with pytest.raises(DomainError):
            Sample(np.array([]))

    def test_sample_rejects_nonfinite(self):
        with pytest.raises(DomainError):
            Sample(np.array([1.0, math.nan]))

    def test_sample_is_read_only(self):
        s = Sample([1.0, 2.0])
        assert s.n == 2
        with pytest.raises(ValueError):
            s.values[0] = 5.0

    @pytest.mark.parametrize("a, c", [(-0.1, 1.0), (1.1, 1.0), (0.5, 0.0), (0.5, -1.0)])
    def test_mixture_params_validated(self, a, c):
        with pytest.raises(DomainError):
            MixtureParams(a, 0.0, c)

    @pytest.mark.parametrize("seed, stream", [(-1, 0), (0, 2**64), (1.5, 0)])
    def test_stream_key_validated(self, seed, stream):
        with pytest.raises(DomainError):
            StreamKey(seed, stream)


class TestSampleNull:
    def test_deterministic(self):
        a = sample_null(1000, StreamKey(7, 3))
        b = sample_null(1000, StreamKey(7, 3))
        np.testing.assert_array_equal(a.values, b.values)

    def test_streams_differ(self):
        a = sample_null(100, StreamKey(7, 3))
        b = sample_null(100, StreamKey(7, 4))
        c = sample_null(100, StreamKey(8, 3))
        assert not np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_stream_layout(self):
        # Philox keyed by (seed, stream), top 53 bits of each raw word, inverse normal CDF
        bits = np.random.Philox(key=np.array([1, 0], dtype=np.uint64)).random_raw(3)
        u = [((int(w) >> 11) + 0.5) / 2**53 for w in bits]
        expected = sps.norm.ppf(u)
        np.testing.assert_allclose(sample_null(3, StreamKey(1, 0)).values, expected, atol=1e-14)
        np.testing.assert_allclose(expected, FROZEN_NULL_DRAWS, atol=1e-14)

    @pytest.mark.parametrize("n", [0, -3, 2.5])
    def test_bad_n(self, n):
        with pytest.raises(DomainError):
            sample_null(n, StreamKey(0))

    def test_clt_mean_and_variance(self):
        x = sample_null(BIG, StreamKey(11)).values
        assert abs(x.mean()) <= 5 / math.sqrt(BIG)
        assert abs(x.var() - 1.0) <= 5 * math.sqrt(2 / BIG)


class TestSampleMixture:
    def test_a_zero_matches_null_distribution(self):
        x = sample_mixture(BIG, MixtureParams(0.0, 5.0, 3.0), StreamKey(12)).values
        assert abs(x.mean()) <= 5 / math.sqrt(BIG)

    def test_a_zero_consumes_coins(self):
        # the normals come after n coins, so they differ from sample_null's
        x = sample_mixture(50, MixtureParams(0.0, 0.0, 1.0), StreamKey(12)).values
        y = sample_null(50, StreamKey(12)).values
        assert not np.array_equal(x, y)

    def test_single_component(self):
        x = sample_mixture(BIG, MixtureParams(1.0, 3.0, 4.0), StreamKey(13)).values
        assert abs(x.mean() - 3.0) <= 5 * 0.5 / math.sqrt(BIG)
        assert abs(x.var() - 0.25) <= 5 * 0.25 * math.sqrt(2 / BIG)

    def test_mixture_mean(self):
        x = sample_mixture(BIG, MixtureParams(0.5, 2.0, 1.0), StreamKey(14)).values
        # variance of the mixture: 1 + a(1-a) b^2 = 2
        assert abs(x.mean() - 1.0) <= 5 * math.sqrt(2.0 / BIG)

    def test_deterministic(self):
        p = MixtureParams(0.3, 1.0, 2.0)
        a = sample_mixture(500, p, StreamKey(5, 9)).values
        b = sample_mixture(500, p, StreamKey(5, 9)).values
        np.testing.assert_array_equal(a, b)


class TestAlternativePrior:
    def test_case1_delta(self):
        for r in range(50):
            p = sample_alternative_prior(Case1(1.0), 100, StreamKey(3, r))
            assert p.b == 0.1 and p.c == 1.0
            assert 0.0 < p.a < 1.0

    def test_case2_support(self):
        for r in range(200):
            p = sample_alternative_prior(Case2(1.0), 100, StreamKey(3, r))
            assert 0.0 <= p.b <= 0.1 and p.c == 1.0

    def test_case3_support_and_symmetry(self):
        draws = np.array([
            (p.b, p.c - 1.0)
            for p in (sample_alternative_prior(Case3(1.0), 100, StreamKey(4, r)) for r in range(10**5))
        ])
        assert np.all(draws[:, 0] ** 2 + draws[:, 1] ** 2 / 2 <= 0.01 * (1 + 1e-12))
        # uniform on the ellipse: var(b) = R^2/4, var(c-1) = 2 R^2/4
        sd = np.sqrt(np.array([0.01 / 4, 0.02 / 4]) / draws.shape[0])
        assert np.all(np.abs(draws.mean(axis=0)) <= 5 * sd)

    def test_case3_area_uniform(self):
        # P(r <= R/2) = 1/4 for an area-uniform law
        inner = 0
        reps = 20000
        for r in range(reps):
            p = sample_alternative_prior(Case3(1.0), 100, StreamKey(6, r))
            inner += p.b**2 + (p.c - 1) ** 2 / 2 <= 0.0025
        assert abs(inner / reps - 0.25) <= 5 * math.sqrt(0.25 * 0.75 / reps)

    def test_case3_domain(self):
        with pytest.raises(DomainError):
            for r in range(100):
                sample_alternative_prior(Case3(1.0), 1, StreamKey(0, r))


class TestSufficientStats:
    def test_all_zero(self):
        s = sufficient_stats(Sample(np.zeros(4)))
        assert s.xi == 0.0
        assert s.eta == pytest.approx(-math.sqrt(2), abs=1e-15)

    @pytest.mark.parametrize("n", [1, 2, 17, 1000])
    def test_all_ones(self, n):
        assert sufficient_stats(Sample(np.ones(n))).eta == 0.0

    def test_cancellation(self):
        s = sufficient_stats(Sample([1.0, -1.0]))
        assert (s.xi, s.eta, s.Xi, s.n) == (0.0, 0.0, 0.0, 2)

    def test_compensated_sum(self):
        # naive left-to-right summation loses the 1.0 entirely
        s = sufficient_stats(Sample([1e17, 1.0, -1e17]))
        assert s.xi == pytest.approx(1.0 / math.sqrt(3), rel=1e-15)

    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=50))
    @settings(max_examples=60)
    def test_radius_and_order_invariance(self, xs):
        s = sufficient_stats(Sample(xs))
        assert s.Xi == math.hypot(s.xi, s.eta)
        t = sufficient_stats(Sample(xs[::-1]))
        assert (s.xi, s.eta) == (t.xi, t.eta)


@pytest.fixture(scope="module")
def draws():
    return null_stats(10**4, 10**4, seed=99)


@pytest.mark.slow
class TestNullLaw:
    def test_xi_ks(self, draws):
        assert sps.kstest(draws[:, 0], "norm").pvalue > 1e-3

    def test_xi_eta_uncorrelated(self, draws):
        assert abs(np.corrcoef(draws.T)[0, 1]) <= 5 / math.sqrt(10**4)

    def test_xi_squared_chi2(self, draws):
        q = np.quantile((draws**2).sum(axis=1), 0.95)
        assert abs(q / 5.9915 - 1.0) <= 0.05


class TestSampleFile:
    def test_round_trip(self, tmp_path):
        s = sample_null(200, StreamKey(1, 1))
        path = tmp_path / "x.txt"
        write_sample(path, s)
        assert path.read_text(encoding="utf-8").startswith("x\n")
        np.testing.assert_array_equal(read_sample(path).values, s.values)

    def test_no_header(self, tmp_path):
        path = tmp_path / "x.txt"
        write_sample(path, Sample([0.5, -2.0]), header=False)
        np.testing.assert_array_equal(read_sample(path).values, [0.5, -2.0])

    def test_blank_lines(self):
        s = parse_sample(["\n", "x\n", "1.5\n", "\n", "  -2e-3 \n"])
        np.testing.assert_array_equal(s.values, [1.5, -0.002])

    def test_bad_token_line_number(self):
        with pytest.raises(SampleFormatError, match="line 3"):
            parse_sample(["x", "1.0", "abc"])

    def test_non_finite(self):
        with pytest.raises(SampleFormatError):
            parse_sample(["inf"])

    def test_empty(self):
        with pytest.raises(SampleFormatError):
            parse_sample(["x", ""])
