"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line.  Run directly with
``python3 tests/test_acceptance.py`` for the summary alone.
"""

import subprocess
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import k_star_decimal, mp_key_length  # noqa: E402
from qkd_mismatch.bounds import (  # noqa: E402
    TestStats,
    constant_model,
    d5_d6_rhs_pair,
    g_plus_limit_gap,
    serfling_model,
    verify_f_monotone,
    verify_g_plus_monotone,
)
from qkd_mismatch.channel import find_cutoff, sweep_optimize  # noqa: E402
from qkd_mismatch.concentration import gamma_bin, gamma_bin_index  # noqa: E402
from qkd_mismatch.config import Config  # noqa: E402
from qkd_mismatch.decoy import extend_decoy_monotone  # noqa: E402
from qkd_mismatch.detector import DetectorSpec, MismatchParams, mismatch_from_spec  # noqa: E402
from qkd_mismatch.extension import (  # noqa: E402
    ExtensionInput,
    extend_general,
    extend_monotone_both,
    extend_monotone_f,
)
from qkd_mismatch.keylength import compose_budget, key_length_eur  # noqa: E402
from qkd_mismatch.mc import verify_inflation, verify_serfling, verify_thinning  # noqa: E402

MC_SEEDS = range(10)
MC_TRIALS = 10**5


def _report(n, fn):
    """Run a criterion body, print its verdict line, re-raise on failure."""
    try:
        detail = fn()
    except Exception as exc:
        print(f"\ncriterion {n}: FAIL ({type(exc).__name__}: {exc})", flush=True)
        raise
    print(f"\ncriterion {n}: PASS ({detail})", flush=True)


def check1_gamma_bin_oracle():
    gamma_bin_index.cache_clear()
    grid = [(n, j, eps) for n in range(1, 501) for j in range(51) for eps in (1e-2, 1e-6)]
    t0 = time.perf_counter()
    got = [gamma_bin(n, j / 100, eps) for n, j, eps in grid]
    elapsed = time.perf_counter() - t0
    bad = [
        (n, j, eps) for (n, j, eps), g in zip(grid, got)
        if g != max(0.0, k_star_decimal(n, j, 100, eps) / n - j / 100)
    ]
    assert not bad, f"{len(bad)} mismatches, first {bad[:3]}"
    assert elapsed <= 60.0, f"gamma_bin grid took {elapsed:.1f} s"
    return f"{len(grid)} points exact, {elapsed:.2f} s"


def check2_zero_mismatch():
    mm = mismatch_from_spec(DetectorSpec(0.73, 1e-8, 0.0, 0.0))
    assert mm.delta1 == 0.0 and mm.delta2 == 0.0
    return "delta1 = delta2 = 0"


def check3_monotonicity_suite():
    f_rep = verify_f_monotone(10**5, 1e-9, seed=0)
    assert f_rep.violations == 0, f"{f_rep.violations} slope violations"
    assert f_rep.boundary_checks > 0 and f_rep.max_boundary_jump <= 1e-6
    y = np.random.default_rng(1).uniform(0.0, 1.0, 10**5)
    gap = float(g_plus_limit_gap(y).max())
    assert gap <= 1e-6, f"limit gap {gap}"
    g_rep = verify_g_plus_monotone(10**5, 1e-9, seed=2)
    assert g_rep.violations_y == 0 and g_rep.violations_z == 0
    return f"jump {f_rep.max_boundary_jump:.2g}, limit gap {gap:.2g}"


def _serfling_instance(rng):
    n_K = int(rng.integers(1, 10**4 + 1))
    stats = TestStats(n_X=int(rng.integers(1, 10**4 + 1)), e_X=float(rng.uniform(0, 0.2)))
    eps = 10.0 ** rng.uniform(-12, -1, 3)
    mm = MismatchParams(float(rng.uniform(0, 0.3)), float(rng.uniform(0, 0.3)))
    return ExtensionInput(serfling_model(float(eps[0])), stats, n_K, mm, float(eps[1]), float(eps[2]))


def check4_combinators():
    rng = np.random.default_rng(4)
    for _ in range(200):
        inp = _serfling_instance(rng)
        g, f, b = extend_general(inp), extend_monotone_f(inp), extend_monotone_both(inp)
        assert g.rate_bound == f.rate_bound, (inp, g.rate_bound, f.rate_bound)
        assert f.rate_bound <= b.rate_bound
    for _ in range(1000):
        inp = _serfling_instance(rng)
        e_sp = float(10.0 ** rng.uniform(-12, -1))
        d = extend_decoy_monotone(inp.model, inp.n_K, inp.stats, inp.mismatch, inp.eps_dep1_sq,
                                  inp.eps_dep2_sq, e_sp)
        assert d.rate_bound <= d.rate_bound_at_M
    defined = 0
    for _ in range(10**4):
        N0, N1e, N1d, NX = rng.uniform(0, 1000, 4)
        dA = rng.uniform(1e-6, 100)
        pz, px = rng.uniform(0.01, 0.99, 2)
        r5, r6 = d5_d6_rhs_pair(N0, N1e, N1d, NX, dA, pz, px)
        if r5 is not None:
            defined += 1
            assert r6 <= r5 * (1 + 1e-12)
    return f"200 + 1000 instances, {defined} defined Azuma pairs"


def check5_asymptotic():
    inp = ExtensionInput(constant_model(0.03), TestStats(1000, 0.02), 10**10,
                         MismatchParams(0.01, 0.02), 1e-10, 1e-10)
    t0 = time.perf_counter()
    b = extend_monotone_both(inp)
    elapsed = time.perf_counter() - t0
    err = abs(b.rate_bound - 0.04 / 0.98)
    assert err <= 1e-3 and elapsed <= 1.0
    return f"|diff| = {err:.2e}, {elapsed * 1e3:.1f} ms"


def check6_monte_carlo():
    pattern = np.zeros(1000, dtype=np.int8)
    pattern[:300] = 1
    t0 = time.perf_counter()
    worst = 0.0
    for seed in MC_SEEDS:
        for rep in (
            verify_serfling(1000, 500, pattern, MC_TRIALS, 0.01, seed),
            verify_thinning(1000, 0.1, 0.1, MC_TRIALS, 0.01, seed),
            verify_inflation(1000, 0.05, 0.1, 0.1, MC_TRIALS, 0.01, seed),
        ):
            assert rep.passed, rep.report()
            worst = max(worst, rep.empirical_rate)
    elapsed = time.perf_counter() - t0
    assert elapsed <= 120.0
    return f"30 runs, worst rate {worst:.4g}, {elapsed:.1f} s"


def check7_key_rate_curves():
    base = Config()
    imperfect = replace(base, tol_eta=0.05, tol_dc=0.05)
    budget = base.budget(False)
    lengths = [float(L) for L in range(0, 201, 10)]
    t0 = time.perf_counter()
    ideal = sweep_optimize(base.channel(), base.detector(), budget, lengths)
    mism = sweep_optimize(imperfect.channel(), imperfect.detector(), budget, lengths)
    elapsed = time.perf_counter() - t0
    r0 = [r.rate for r in ideal]
    r5 = [r.rate for r in mism]
    assert r0[0] > 0
    assert all(m <= i for i, m in zip(r0, r5)), "imperfect curve above ideal"
    for rates in (r0, r5):
        assert all(b <= a for a, b in zip(rates, rates[1:])), "rate increases with length"
    cutoff = find_cutoff(base.channel(), base.detector(), budget)
    assert cutoff is not None
    assert elapsed <= 300.0
    return f"rate(0) = {r0[0]:.4f} vs {r5[0]:.4f}, cutoff {cutoff:.0f} km, sweep {elapsed:.1f} s"


def check8_budget_and_key_length():
    b = compose_budget(1e-10, 1e-10)
    rel = abs(b.eps_sec - 1e-10) / 1e-10
    assert rel <= 1e-12
    ref = float(mp_key_length(10**6, 0.03, 2e5, 1e-10, 1e-10))
    got = key_length_eur(10**6, 0.03, 2e5, 1e-10, 1e-10)
    assert abs(got - ref) <= 1.0
    return f"eps_sec rel err {rel:.1e}, l = {got} vs {ref:.3f}"


SEEDED = [
    ["verify", "serfling", "--trials", "20000", "--seed", "5"],
    ["verify", "thinning", "--trials", "20000", "--seed", "5", "--shards", "4"],
    ["verify", "inflation", "--trials", "20000", "--seed", "5"],
    ["verify", "lemma1", "--seed", "5"],
    ["point"],
    ["delta"],
    ["gamma", "--n", "1000", "--delta", "0.1"],
]


def check9_determinism():
    for argv in SEEDED:
        runs = [subprocess.run([sys.executable, "-m", "qkd_mismatch", *argv], capture_output=True)
                for _ in range(2)]
        assert runs[0].returncode == runs[1].returncode == 0, (argv, runs[0].stderr)
        assert runs[0].stdout == runs[1].stdout and runs[0].stdout, argv
    return f"{len(SEEDED)} commands byte-identical"


CRITERIA = [
    check1_gamma_bin_oracle,
    check2_zero_mismatch,
    check3_monotonicity_suite,
    check4_combinators,
    check5_asymptotic,
    check6_monte_carlo,
    check7_key_rate_curves,
    check8_budget_and_key_length,
    check9_determinism,
]


@pytest.mark.parametrize("n", range(1, len(CRITERIA) + 1))
def test_criterion(n, capsys):
    with capsys.disabled():
        _report(n, CRITERIA[n - 1])


if __name__ == "__main__":
    failed = 0
    for i, fn in enumerate(CRITERIA, start=1):
        try:
            _report(i, fn)
        except Exception:
            failed += 1
    sys.exit(1 if failed else 0)
