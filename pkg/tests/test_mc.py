import numpy as np
import pytest

from qkd_mismatch.errors import ContractError, DomainError
from qkd_mismatch.mc import McReport, verify_inflation, verify_serfling, verify_thinning


def pattern(n, frac):
    p = np.zeros(n, dtype=np.int8)
    p[: int(round(frac * n))] = 1
    return p


class TestReport:
    def test_pass_rule(self):
        r = McReport("x", 10**5, 1094, 0.01)
        assert r.empirical_rate == 0.01094
        assert r.slack == pytest.approx(3 * np.sqrt(0.01 * 0.99 / 1e5))
        assert r.passed
        assert not McReport("x", 10**5, 1100, 0.01).passed

    def test_summary_line(self):
        assert McReport("x", 100, 0, 0.01).summary() == "PASS rate=0 bound=0.0398496"
        assert McReport("x", 100, 50, 0.01).summary().startswith("FAIL rate=0.5 ")

    def test_invariant(self):
        with pytest.raises(ContractError):
            McReport("x", 10, 11, 0.01)


class TestSerfling:
    def test_all_zero_pattern(self):
        r = verify_serfling(1000, 500, pattern(1000, 0.0), 10**4, 0.01, seed=1)
        assert r.violations == 0

    def test_thirty_percent_errors(self):
        r = verify_serfling(1000, 500, pattern(1000, 0.3), 10**5, 0.01, seed=2)
        assert r.passed

    def test_unbalanced_split(self):
        r = verify_serfling(400, 350, pattern(400, 0.1), 10**5, 0.05, seed=3)
        assert r.passed

    def test_errors(self):
        with pytest.raises(DomainError):
            verify_serfling(1000, 1000, pattern(1000, 0.3), 100, 0.01, seed=0)
        with pytest.raises(DomainError):
            verify_serfling(1000, 500, pattern(1000, 0.3), 0, 0.01, seed=0)
        with pytest.raises(DomainError):
            verify_serfling(1000, 500, pattern(999, 0.3), 10, 0.01, seed=0)

    def test_hypergeometric_marginal_matches_explicit_shuffles(self):
        # the key-set error count of a uniform partition, drawn by explicit permutation
        rng = np.random.default_rng(0)
        pat = pattern(60, 0.3)
        counts = np.array([pat[rng.permutation(60)[:25]].sum() for _ in range(20000)])
        draws = np.random.default_rng(1).hypergeometric(18, 42, 25, size=20000)
        assert abs(counts.mean() - draws.mean()) < 0.05
        assert abs(counts.var() - draws.var()) < 0.1


class TestThinning:
    def test_no_loss(self):
        assert verify_thinning(1000, 0.0, 0.0, 10**4, 0.01, seed=1).violations == 0

    def test_weaker_than_bound(self):
        assert verify_thinning(1000, 0.0, 0.2, 10**4, 0.01, seed=1).empirical_rate == 0.0

    def test_tight_case_passes(self):
        r = verify_thinning(1000, 0.1, 0.1, 10**5, 0.01, seed=2)
        assert r.passed
        # informational tightness: within an order of magnitude of eps^2
        assert 0.001 <= r.empirical_rate <= 0.01 + r.slack

    def test_contract(self):
        with pytest.raises(ContractError):
            verify_thinning(1000, 0.2, 0.1, 10, 0.01, seed=0)


class TestInflation:
    def test_no_extra_errors(self):
        assert verify_inflation(1000, 0.05, 0.0, 0.1, 10**4, 0.01, seed=1).violations == 0

    def test_degenerate_all_errors(self):
        assert verify_inflation(1000, 1.0, 0.0, 0.0, 10**4, 0.01, seed=1).violations == 0

    def test_passes(self):
        assert verify_inflation(1000, 0.05, 0.1, 0.1, 10**5, 0.01, seed=2).passed

    def test_contract(self):
        with pytest.raises(ContractError):
            verify_inflation(1000, 0.05, 0.2, 0.1, 10, 0.01, seed=0)
        with pytest.raises(ContractError):
            verify_inflation(1000, 0.95, 0.1, 0.1, 10, 0.01, seed=0)


class TestDeterminism:
    @pytest.mark.parametrize("shards", [1, 4])
    def test_same_seed_same_report(self, shards):
        pat = pattern(1000, 0.3)
        for fn in (
            lambda s: verify_serfling(1000, 500, pat, 5000, 0.01, s, shards),
            lambda s: verify_thinning(1000, 0.1, 0.1, 5000, 0.01, s, shards),
            lambda s: verify_inflation(1000, 0.05, 0.1, 0.1, 5000, 0.01, s, shards),
        ):
            assert fn(7) == fn(7)

    def test_trials_split_across_shards(self):
        r = verify_thinning(1000, 0.1, 0.1, 10001, 0.01, seed=3, shards=7)
        assert r.trials == 10001
