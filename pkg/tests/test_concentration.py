import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qkd_mismatch.concentration import (
    binary_entropy,
    binomial_tail_ge,
    gamma_bin,
    gamma_bin_index,
    gamma_serf,
    log_binom_pmf,
    log_binomial_tail_ge,
)
from qkd_mismatch.errors import DomainError

from oracles import exact_tail, k_star_decimal, mp_binary_entropy, mp_gamma_serf, mp_tail


class TestBinomialTail:
    def test_whole_and_empty(self):
        assert binomial_tail_ge(10, 0, 0.3) == 1.0
        assert binomial_tail_ge(10, -3, 0.3) == 1.0
        assert binomial_tail_ge(10, 11, 0.3) == 0.0

    def test_fair_coin_exact(self):
        assert binomial_tail_ge(10, 5, 0.5) == pytest.approx(638 / 1024, rel=1e-12)

    def test_degenerate_probabilities(self):
        assert binomial_tail_ge(7, 1, 0.0) == 0.0
        assert binomial_tail_ge(7, 7, 1.0) == 1.0
        assert binomial_tail_ge(7, 0, 0.0) == 1.0

    @pytest.mark.parametrize("n", [1, 2, 7, 20, 33, 60])
    def test_exact_rationals_small_n(self, n):
        for j in (1, 3, 10, 25, 50, 77, 99):
            p = j / 100
            for k in range(0, n + 2):
                ref = float(exact_tail(n, k, Fraction(p)))
                got = binomial_tail_ge(n, k, p)
                if ref == 0.0:
                    assert got == 0.0
                else:
                    assert got == pytest.approx(ref, rel=1e-12, abs=0.0), (n, k, p)

    @pytest.mark.parametrize(
        "n,k,p",
        [
            (10**6, 110_000, 0.1),
            (10**8, 10_010_000, 0.1),
            (10**8, 2_000_500, 0.02),
            (10**7, 5_003_000, 0.5),
        ],
    )
    def test_large_n_against_mpmath(self, n, k, p):
        ref = mp_tail(n, k, p)
        got = log_binomial_tail_ge(n, k, p)
        assert abs(got - float(mp.log(ref))) <= 1e-12 * max(1.0, abs(got))
        assert binomial_tail_ge(n, k, p) == pytest.approx(float(ref), rel=1e-11)

    def test_extreme_n_log_domain(self):
        # far below the smallest double yet finite in log domain
        lt = log_binomial_tail_ge(10**12, 10**11 + 10**8, 0.1)
        assert math.isfinite(lt) and lt < -1e4

    def test_log_pmf_matches_lgamma_small(self):
        for n, k, p in [(50, 3, 0.1), (200, 100, 0.5), (1000, 1, 0.001)]:
            ref = math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1) + k * math.log(p) + (n - k) * math.log1p(-p)
            assert log_binom_pmf(n, k, p) == pytest.approx(ref, rel=1e-12)

    @given(st.integers(1, 400), st.floats(0.0, 1.0))
    @settings(max_examples=200, deadline=None)
    def test_non_increasing_in_k(self, n, p):
        tails = [binomial_tail_ge(n, k, p) for k in range(0, n + 2, max(1, n // 25))]
        assert all(b <= a * (1 + 1e-12) + 1e-300 for a, b in zip(tails, tails[1:]))


class TestGammaBin:
    def test_zero_delta_is_one_over_n(self):
        assert gamma_bin(10, 0.0, 0.01) == pytest.approx(0.1)
        assert gamma_bin(100, 0.0, 1e-6) == pytest.approx(0.01)

    @pytest.mark.parametrize("n,delta,eps", [(20, 0.25, 1e-4), (100, 0.05, 1e-6), (1000, 0.1, 1e-4)])
    def test_brute_force_spot_values(self, n, delta, eps):
        j = round(delta * 100)
        k = k_star_decimal(n, j, 100, eps)
        assert gamma_bin_index(n, delta, eps) == k
        assert gamma_bin(n, delta, eps) == max(0.0, k / n - delta)

    def test_exact_rational_grid_sample(self):
        # the full grid lives in the acceptance suite; this is a quick slice
        for n in (1, 2, 3, 17, 64, 257, 500):
            for j in range(0, 51, 7):
                for eps in (1e-2, 1e-6):
                    assert gamma_bin_index(n, j / 100, eps) == k_star_decimal(n, j, 100, eps)

    def test_decimal_tie_counts_as_met(self):
        # P(Bin(3, 0.01) >= 3) is exactly 1e-6
        assert gamma_bin_index(3, 0.01, 1e-6) == 3

    def test_range(self):
        for n in (1, 5, 50):
            for d in (0.0, 0.3, 1.0):
                g = gamma_bin(n, d, 0.01)
                # k*/n - delta is one float subtraction; allow its rounding
                assert 0.0 <= g <= 1.0 - d + 1.0 / n + 4e-16

    def test_eps_one(self):
        # every tail is <= 1, so k* = 0 and the deviation vanishes
        assert gamma_bin(50, 0.2, 1.0) == 0.0

    def test_errors(self):
        with pytest.raises(DomainError):
            gamma_bin(0, 0.1, 0.01)
        with pytest.raises(DomainError):
            gamma_bin(10, 1.5, 0.01)
        with pytest.raises(DomainError):
            gamma_bin(10, 0.1, 0.0)

    def test_tail_condition_at_large_n(self):
        # k* is the first index whose tail is below eps^2, checked against mpmath
        n, d, eps = 10**8, 0.1, 1e-10
        k = gamma_bin_index(n, d, eps)
        assert mp_tail(n, k, d) <= eps * (1 + 1e-12)
        assert mp_tail(n, k - 1, d) > eps

    def test_huge_n_is_fast_and_small(self):
        g = gamma_bin(10**12, 0.02, 1e-21)
        assert 0.0 < g < 1e-5

    def test_non_increasing_in_n_on_log_grid(self):
        ns = [10, 30, 100, 300, 1000, 3000, 10**4, 3 * 10**4, 10**5, 3 * 10**5, 10**6]
        for d in (0.01, 0.1, 0.3):
            for eps in (1e-2, 1e-10):
                g = [gamma_bin(n, d, eps) for n in ns]
                assert all(b <= a for a, b in zip(g, g[1:])), (d, eps, g)

    @given(st.integers(1, 2000), st.integers(0, 100), st.floats(1e-12, 0.5), st.floats(1e-12, 0.5))
    @settings(max_examples=200, deadline=None)
    def test_non_increasing_in_eps(self, n, j, e1, e2):
        lo, hi = sorted((e1, e2))
        d = j / 100
        assert gamma_bin(n, d, hi) <= gamma_bin(n, d, lo)


class TestGammaSerf:
    def test_eps_one_is_zero(self):
        assert gamma_serf(10**6, 10**6, 1.0) == 0.0

    @pytest.mark.parametrize("nx,nk,eps", [(10**6, 10**6, 1e-10), (100, 100, 0.01), (37, 5, 0.3)])
    def test_high_precision(self, nx, nk, eps):
        assert gamma_serf(nx, nk, eps) == pytest.approx(float(mp_gamma_serf(nx, nk, eps)), rel=1e-14)

    def test_spot_values(self):
        assert gamma_serf(10**6, 10**6, 1e-10) == pytest.approx(6.786e-3, abs=5e-7)
        assert gamma_serf(100, 100, 0.01) == pytest.approx(0.3050, abs=5e-5)

    @pytest.mark.parametrize("n", [10**4, 10**5, 10**6, 10**7])
    def test_scaling(self, n):
        r = gamma_serf(10 * n, 10 * n, 1e-10) / gamma_serf(n, n, 1e-10)
        assert 0.31 <= r <= 0.33

    def test_errors(self):
        with pytest.raises(DomainError):
            gamma_serf(0, 10, 0.1)
        with pytest.raises(DomainError):
            gamma_serf(10, 0, 0.1)

    def test_matches_vectorised_expression(self):
        # the array path in the Serfling model must agree bit for bit
        from qkd_mismatch.bounds import serfling_model, TestStats

        m = serfling_model(1e-7)
        stats = TestStats(n_X=1234, e_X=0.0)
        ns = np.array([1, 7, 100, 12345])
        arr = m.evaluate(stats, ns)
        assert list(arr) == [min(1.0, gamma_serf(1234, int(n), 1e-7)) for n in ns]


class TestBinaryEntropy:
    def test_endpoints(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert binary_entropy(0.5) == 1.0

    @pytest.mark.parametrize("p", [0.11, 0.03, 0.02, 1e-9, 0.4999])
    def test_high_precision(self, p):
        assert binary_entropy(p) == pytest.approx(float(mp_binary_entropy(p)), rel=1e-14)

    def test_approx_value(self):
        assert binary_entropy(0.11) == pytest.approx(0.49993, abs=5e-4)

    def test_domain(self):
        with pytest.raises(DomainError):
            binary_entropy(-0.1)
        with pytest.raises(DomainError):
            binary_entropy(1.1)

    @given(st.floats(0.0, 1.0))
    def test_symmetry(self, p):
        # q and 1 - q are exact complements for q in [1/2, 1], so both sums see the same terms
        q = max(p, 1.0 - p)
        assert binary_entropy(1.0 - q) == binary_entropy(q)

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_concave(self, a, b, t):
        mid = t * a + (1 - t) * b
        assert binary_entropy(mid) >= t * binary_entropy(a) + (1 - t) * binary_entropy(b) - 1e-12
