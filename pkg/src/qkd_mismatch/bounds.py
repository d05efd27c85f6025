"""Phase-error bound interface and the envelope functions used to test monotonicity.

A phase-error model maps the announced test statistics and a key-round count
``n`` to an upper bound on the phase-error rate, valid except with probability
``eps_ind_sq`` when detection efficiency is basis independent.  Two flags record
the monotonicity facts the mismatch combinators may exploit:

* ``flag_E_nonincreasing``: the rate bound does not grow with ``n``;
* ``flag_F_nondecreasing``: the count bound ``n * E(n)`` does not shrink with ``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .concentration import gamma_serf
from .errors import DomainError


@dataclass(frozen=True)
class TestStats:
    n_X: int
    e_X: float
    fine_grained: Optional[Sequence[int]] = None

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if self.n_X < 0:
            raise DomainError(f"n_X must be non-negative, got {self.n_X}")
        if not 0.0 <= self.e_X <= 1.0:
            raise DomainError(f"e_X must lie in [0, 1], got {self.e_X}")
        if self.fine_grained is not None:
            if any(c < 0 for c in self.fine_grained) or sum(self.fine_grained) > self.n_X:
                raise DomainError("fine-grained counts must be non-negative and sum to at most n_X")


@dataclass(frozen=True)
class PhaseErrorModel:
    """A pluggable basis-independent phase-error bound.

    ``evaluate(stats, n)`` must accept an integer ``n >= 1``.  When ``vectorized``
    is set it must also accept an integer ndarray and return an array; the
    general combinators then enumerate in one call.
    """

    evaluate: Callable
    eps_ind_sq: float
    flag_E_nonincreasing: bool = False
    flag_F_nondecreasing: bool = False
    vectorized: bool = False
    name: str = "custom"

    def rate(self, stats: TestStats, n: int) -> float:
        """Clamped bound at a single key-round count."""
        return min(1.0, max(0.0, float(self.evaluate(stats, n))))

    def count_bound(self, stats: TestStats, n: int) -> float:
        """n * E(n), with the n = 0 value fixed at 0."""
        if n == 0:
            return 0.0
        return n * self.rate(stats, n)

    def count_bounds(self, stats: TestStats, n_max: int) -> np.ndarray:
        """n * E(n) for n = 0..n_max."""
        out = np.zeros(n_max + 1)
        if n_max == 0:
            return out
        ns = np.arange(1, n_max + 1)
        if self.vectorized:
            rates = np.clip(np.asarray(self.evaluate(stats, ns), dtype=float), 0.0, 1.0)
        else:
            rates = np.array([self.rate(stats, int(n)) for n in ns])
        out[1:] = ns * rates
        return out


def _serfling_eval(stats: TestStats, n, eps_ind_sq: float):
    if stats.n_X == 0:
        return np.ones_like(n, dtype=float) if isinstance(n, np.ndarray) else 1.0
    if isinstance(n, np.ndarray):
        nx = float(stats.n_X)
        nk = n.astype(float)
        dev = np.sqrt((0.0 - math.log(eps_ind_sq)) * (nk + nx) * (nx + 1.0) / (nk * nx * nx))
        return np.minimum(1.0, stats.e_X + dev)
    return min(1.0, stats.e_X + gamma_serf(stats.n_X, n, eps_ind_sq))


def serfling_model(eps_ind_sq: float) -> PhaseErrorModel:
    """Ideal-source bound e_X + gamma_serf(n_X, n); both monotonicity facts hold analytically."""
    if not 0.0 < eps_ind_sq <= 1.0:
        raise DomainError(f"eps_ind_sq must lie in (0, 1], got {eps_ind_sq}")
    return PhaseErrorModel(
        evaluate=lambda stats, n: _serfling_eval(stats, n, eps_ind_sq),
        eps_ind_sq=eps_ind_sq,
        flag_E_nonincreasing=True,
        flag_F_nondecreasing=True,
        vectorized=True,
        name="serfling",
    )


def constant_model(e: float, eps_ind_sq: float = 1e-10) -> PhaseErrorModel:
    """E(n) = e for every n; handy as a test double and for asymptotic checks."""
    return PhaseErrorModel(
        evaluate=lambda stats, n: np.full(n.shape, e) if isinstance(n, np.ndarray) else e,
        eps_ind_sq=eps_ind_sq,
        flag_E_nonincreasing=True,
        flag_F_nondecreasing=True,
        vectorized=True,
        name=f"constant({e})",
    )


def serfling_e00(stats: TestStats, n_K: int, eps_ind_sq: float) -> float:
    if n_K < 1:
        raise DomainError(f"n_K must be >= 1, got {n_K}")
    return serfling_model(eps_ind_sq).rate(stats, n_K)


# --- envelope functions ------------------------------------------------------


def g_plus(y: float, z: float) -> float:
    """Fidelity-type envelope: main branch for 0 <= y < z^2 <= 1, z > 0, else 1."""
    if not 0.0 <= y <= 1.0:
        raise DomainError(f"g_plus needs y in [0, 1], got {y}")
    z2 = z * z
    if z > 0.0 and y < z2 <= 1.0:
        one_m_z2 = 1.0 - z2
        return y + one_m_z2 * (1.0 - 2.0 * y) + 2.0 * math.sqrt(z2 * one_m_z2 * y * (1.0 - y))
    return 1.0


def g_plus_array(y: np.ndarray, z: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        z2 = z * z
        main = (z > 0.0) & (y < z2) & (z2 <= 1.0)
        one_m_z2 = 1.0 - z2
        rad = np.where(main, z2 * one_m_z2 * y * (1.0 - y), 0.0)
        val = y + one_m_z2 * (1.0 - 2.0 * y) + 2.0 * np.sqrt(np.maximum(rad, 0.0))
    return np.where(main, val, 1.0)


def _z_of_x(x, a, c, p):
    den = p * (x + c)
    if den > 0.0:
        return 1.0 - a / den
    return 1.0 if a == 0.0 else -math.inf


def f_appx(x: float, y: float, a: float, c: float, p: float) -> float:
    """x * G+(y, 1 - a / (p (x + c))) on its natural domain."""
    if x < 0.0 or a < 0.0 or c < 0.0 or not 0.0 <= y <= 1.0 or not 0.0 < p < 1.0:
        raise DomainError(f"(x, y, a, c, p) = {(x, y, a, c, p)} outside the domain")
    if x == 0.0:
        return 0.0
    return x * g_plus(y, _z_of_x(x, a, c, p))


def f_appx_array(x, y, a, c, p) -> np.ndarray:
    x, y, a, c, p = (np.asarray(v, dtype=float) for v in (x, y, a, c, p))
    den = p * (x + c)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(den > 0.0, 1.0 - a / np.where(den > 0.0, den, 1.0), np.where(a == 0.0, 1.0, -np.inf))
    return x * g_plus_array(y, z)


@dataclass
class MonotoneReport:
    samples: int
    max_negative_slope: float
    violations: int
    boundary_checks: int
    max_boundary_jump: float
    boundary_violations: int

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.boundary_violations == 0


def _sample_domain(rng: np.random.Generator, size: int):
    x = rng.uniform(0.0, 100.0, size)
    y = rng.uniform(0.0, 1.0, size)
    a = rng.uniform(0.0, 100.0, size)
    c = rng.uniform(0.0, 100.0, size)
    p = rng.uniform(0.01, 0.99, size)
    return x, y, a, c, p


def verify_f_monotone(samples: int, tolerance: float, seed: int, shards: int = 1) -> MonotoneReport:
    """Finite-difference check that f is non-decreasing in x, plus branch continuity.

    Points are drawn from x, a, c in [0, 100], y in [0, 1], p in [0.01, 0.99].
    The slope is a central difference with step max(1e-6, 1e-6 x); the step is
    one-sided at x = 0.  Continuity is checked on both sides of the solved
    branch points z(x_b) = 0 and z(x_b) = sqrt(y).
    """
    if samples < 1 or tolerance <= 0.0:
        raise DomainError("samples must be >= 1 and tolerance > 0")
    seeds = np.random.SeedSequence(seed).spawn(shards)
    sizes = [samples // shards + (1 if i < samples % shards else 0) for i in range(shards)]

    min_slope = math.inf
    violations = 0
    checks = 0
    max_jump = 0.0
    bviol = 0
    for ss, size in zip(seeds, sizes):
        if size == 0:
            continue
        rng = np.random.default_rng(ss)
        x, y, a, c, p = _sample_domain(rng, size)
        h = np.maximum(1e-6, 1e-6 * x)
        lo = np.maximum(x - h, 0.0)
        hi = x + h
        slope = (f_appx_array(hi, y, a, c, p) - f_appx_array(lo, y, a, c, p)) / (hi - lo)
        min_slope = min(min_slope, float(slope.min()))
        violations += int(np.count_nonzero(slope < -tolerance))

        # branch points: z(x) = t  <=>  x = a / (p (1 - t)) - c
        for target in (np.zeros(size), np.sqrt(y)):
            with np.errstate(divide="ignore"):
                xb = a / (p * (1.0 - target)) - c
            ok = np.isfinite(xb) & (xb > 0.0)
            xb_ok = xb[ok]
            if xb_ok.size == 0:
                continue
            eps = 1e-9 * np.maximum(1.0, xb_ok)
            args = (y[ok], a[ok], c[ok], p[ok])
            left = f_appx_array(xb_ok - eps, *args)
            right = f_appx_array(xb_ok + eps, *args)
            # the function may rise by at most ~2 eps across the probe gap
            jump = np.abs(right - left) - 2.0 * eps
            checks += xb_ok.size
            max_jump = max(max_jump, float(np.maximum(jump, 0.0).max()))
            bviol += int(np.count_nonzero(jump > 1e-6 * (1.0 + xb_ok)))

    return MonotoneReport(
        samples=samples,
        max_negative_slope=min(0.0, min_slope),
        violations=violations,
        boundary_checks=checks,
        max_boundary_jump=max_jump,
        boundary_violations=bviol,
    )


def g_plus_limit_gap(y: np.ndarray, offset: float = 1e-12) -> np.ndarray:
    """|G+(y, sqrt(y) + offset) - 1|: the envelope meets the trivial branch continuously."""
    y = np.asarray(y, dtype=float)
    return np.abs(g_plus_array(y, np.sqrt(y) + offset) - 1.0)


@dataclass
class GPlusMonotoneReport:
    samples: int
    violations_y: int
    violations_z: int
    min_slope_y: float
    max_slope_z: float


def verify_g_plus_monotone(samples: int, tolerance: float, seed: int) -> GPlusMonotoneReport:
    """Finite differences of G+ on its main branch: increasing in y, decreasing in z."""
    rng = np.random.default_rng(seed)
    z = rng.uniform(0.0, 1.0, samples)
    y = rng.uniform(0.0, 1.0, samples) * z * z
    h = 1e-7
    # keep both probes inside the main branch
    yl, yh = np.maximum(y - h, 0.0), np.minimum(y + h, z * z - h)
    inside_y = yh > yl
    zl, zh = np.maximum(z - h, np.sqrt(y) + h), np.minimum(z + h, 1.0)
    inside_z = zh > zl
    dy = (g_plus_array(yh, z) - g_plus_array(yl, z)) / np.where(inside_y, yh - yl, 1.0)
    dz = (g_plus_array(y, zh) - g_plus_array(y, zl)) / np.where(inside_z, zh - zl, 1.0)
    dy = np.where(inside_y, dy, 0.0)
    dz = np.where(inside_z, dz, 0.0)
    return GPlusMonotoneReport(
        samples=samples,
        violations_y=int(np.count_nonzero(dy < -tolerance)),
        violations_z=int(np.count_nonzero(dz > tolerance)),
        min_slope_y=float(dy.min()),
        max_slope_z=float(dz.max()),
    )


def _azuma_rhs(n0_hi, y, z, delta_A):
    return (n0_hi + delta_A) * g_plus(y, z) + delta_A


def d5_d6_rhs_pair(
    N0det_hi: float,
    N1err_hi: float,
    N1det_lo: float,
    NX1_hi: float,
    delta_A: float,
    p_ZC: float,
    p_XC: float,
) -> tuple[Optional[float], float]:
    """Right-hand sides of the original and the tightened Azuma-corrected error bound.

    The two differ only in the denominator of G+'s second argument.  Returns
    ``(rhs_original, rhs_tight)``; the original is ``None`` (vacuous) when
    ``N1det_lo - delta_A <= 0``.  In that case the error-ratio argument is
    undefined too and the tight form falls back to G+ = 1.
    """
    if min(N0det_hi, N1err_hi, NX1_hi, delta_A) < 0.0:
        raise DomainError("counts and delta_A must be non-negative")
    if not 0.0 < p_XC < 1.0:
        raise DomainError(f"p_XC must lie in (0, 1), got {p_XC}")
    det_lo = N1det_lo - delta_A
    if det_lo > 0.0:
        y = min(1.0, (N1err_hi + delta_A) / det_lo)
    else:
        y = 1.0
    numer = 2.0 * p_ZC * (NX1_hi + delta_A)

    def z_for(den):
        if den > 0.0:
            return 1.0 - numer / (p_XC * den)
        return 1.0 if numer == 0.0 else -math.inf

    rhs_tight = _azuma_rhs(N0det_hi, y, z_for(N0det_hi + delta_A + max(0.0, det_lo)), delta_A)
    if det_lo <= 0.0:
        return None, rhs_tight
    rhs_orig = _azuma_rhs(N0det_hi, y, z_for(N0det_hi + N1det_lo - delta_A), delta_A)
    return rhs_orig, rhs_tight
