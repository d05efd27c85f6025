"""Binomial tails and the finite-size deviation terms.

The upper binomial tail is evaluated in natural-log domain so that it stays
accurate for trial counts up to ~1e12 and for thresholds far below the
smallest normal double.  The pmf uses Loader's saddle-point form (Stirling
remainders plus the deviance ``bd0``), which avoids the catastrophic
cancellation of differencing three ``lgamma`` values of size ~1e13.  The tail
is then ``pmf * continued_fraction`` for the regularised incomplete beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath as mp

from .errors import DomainError

_LN_2PI = math.log(2.0 * math.pi)
_HALF_LN_2PI = 0.5 * _LN_2PI

# absolute tolerance on log(tail) when comparing against log(eps_sq)
LOG_TIE_TOL = 1e-12

_CF_TINY = 1e-300
_CF_EPS = 1e-16
_CF_MAXIT = 10_000_000
_MP_DPS = 34
# double-precision continued fraction is trusted to ~1e-13 below this variance
_PRECISE_VARIANCE = 1e6
# log-distance from the threshold inside which a fast decision is re-checked
_REFINE_BAND = 1e-8


@dataclass(frozen=True)
class TailQuery:
    n: int
    delta: float
    eps_sq: float

    def __post_init__(self):
        if self.n < 0:
            raise DomainError(f"n must be non-negative, got {self.n}")
        if not 0.0 <= self.delta <= 1.0:
            raise DomainError(f"delta must lie in [0, 1], got {self.delta}")
        if not 0.0 < self.eps_sq <= 1.0:
            raise DomainError(f"eps_sq must lie in (0, 1], got {self.eps_sq}")


def _stirlerr(n: float) -> float:
    """log(n!) - log(sqrt(2 pi n) (n/e)^n)."""
    if n <= 15.0:
        return math.lgamma(n + 1.0) - (n + 0.5) * math.log(n) + n - _HALF_LN_2PI
    nn = n * n
    s0, s1, s2, s3, s4 = 1 / 12, 1 / 360, 1 / 1260, 1 / 1680, 1 / 1188
    if n > 500:
        return (s0 - s1 / nn) / n
    if n > 80:
        return (s0 - (s1 - s2 / nn) / nn) / n
    if n > 35:
        return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n
    return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n


def _bd0(x: float, mu: float, diff: float) -> float:
    """Deviance term x log(x/mu) + mu - x, with ``diff = x - mu`` supplied accurately."""
    if abs(diff) < 0.1 * (x + mu):
        v = diff / (x + mu)
        s = diff * v
        ej = 2.0 * x * v
        v2 = v * v
        j = 1
        while True:
            ej *= v2
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
            j += 1
    return x * math.log(x / mu) + mu - x


def log_binom_pmf(n: int, k: int, p: float) -> float:
    """log P(X = k) for X ~ Binomial(n, p); -inf outside the support."""
    if k < 0 or k > n:
        return -math.inf
    q = 1.0 - p
    if p == 0.0:
        return 0.0 if k == 0 else -math.inf
    if q == 0.0:
        return 0.0 if k == n else -math.inf
    if k == 0:
        return n * math.log1p(-p)
    if k == n:
        return n * math.log(p)
    nf, kf = float(n), float(k)
    mf = float(n - k)
    # k - n p rounded once; (n-k) - n(1-p) is exactly its negative
    diff = float(Fraction(k) - Fraction(n) * Fraction(p))
    lc = (
        _stirlerr(nf)
        - _stirlerr(kf)
        - _stirlerr(mf)
        - _bd0(kf, nf * p, diff)
        - _bd0(mf, nf * q, -diff)
    )
    lf = _LN_2PI + math.log(kf) + math.log1p(-kf / nf)
    return lc - 0.5 * lf


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction of I_x(a, b) (modified Lentz); converges fast for x < (a+1)/(a+b+2)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXIT):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        step = d * c
        h *= step
        if abs(step - 1.0) < _CF_EPS:
            return h
    raise RuntimeError(f"incomplete-beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _betacf_mp(a: float, b: float, x: float) -> float:
    """Same continued fraction in extended precision.

    Each Lentz step loses about log10(1/gap) digits when x is close to
    (a+1)/(a+b+2), which at n ~ 1e11 is several digits more than a double allows.
    """
    with mp.workdps(_MP_DPS):
        a = mp.mpf(a)
        b = mp.mpf(b)
        x = mp.mpf(x)
        one = mp.mpf(1)
        tiny = mp.mpf(_CF_TINY)
        tol = mp.mpf(10) ** (-(_MP_DPS - 8))
        qab, qap, qam = a + b, a + 1, a - 1
        c = one
        d = one - qab * x / qap
        if abs(d) < tiny:
            d = tiny
        d = one / d
        h = d
        for m in range(1, _CF_MAXIT):
            m2 = 2 * m
            for aa in (
                m * (b - m) * x / ((qam + m2) * (a + m2)),
                -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2)),
            ):
                d = one + aa * d
                if abs(d) < tiny:
                    d = tiny
                c = one + aa / c
                if abs(c) < tiny:
                    c = tiny
                d = one / d
                step = d * c
                h *= step
            if abs(step - one) < tol:
                return float(h)
    raise RuntimeError(f"incomplete-beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _log_tail(n: int, k: int, delta: float, precise: bool) -> float:
    if k <= 0:
        return 0.0
    if k > n:
        return -math.inf
    if delta == 0.0:
        return -math.inf
    if delta == 1.0:
        return 0.0
    cf = _betacf_mp if precise else _betacf
    # P(X >= k) = I_delta(k, n-k+1)
    a = float(k)
    b = float(n - k + 1)
    if delta < (a + 1.0) / (a + b + 2.0):
        prefactor = log_binom_pmf(n, k, delta) + math.log1p(-delta)
        return prefactor + math.log(cf(a, b, delta))
    # complement: P(X <= k-1) = I_{1-delta}(n-k+1, k)
    lower = log_binom_pmf(n, k - 1, delta) + math.log(delta)
    lower += math.log(cf(b, a, 1.0 - delta))
    return math.log1p(-math.exp(lower)) if lower < 0.0 else -math.inf


def _needs_precise(n: int, delta: float) -> bool:
    return n * delta * (1.0 - delta) > _PRECISE_VARIANCE


def log_binomial_tail_ge(n: int, k: int, delta: float) -> float:
    """Natural log of P(X >= k), X ~ Binomial(n, delta)."""
    if n < 0:
        raise DomainError(f"n must be non-negative, got {n}")
    if not 0.0 <= delta <= 1.0:
        raise DomainError(f"delta must lie in [0, 1], got {delta}")
    return _log_tail(n, k, delta, _needs_precise(n, delta))


def binomial_tail_ge(n: int, k: int, delta: float) -> float:
    """P(X >= k) for X ~ Binomial(n, delta)."""
    return math.exp(log_binomial_tail_ge(n, k, delta))


def _tail_below(n: int, k: int, delta: float, log_thr: float) -> bool:
    lt = _log_tail(n, k, delta, False)
    if abs(lt - log_thr) < _REFINE_BAND and _needs_precise(n, delta):
        lt = _log_tail(n, k, delta, True)
    return lt <= log_thr + LOG_TIE_TOL


@lru_cache(maxsize=65536)
def gamma_bin_index(n: int, delta: float, eps_sq: float) -> int:
    """Smallest integer k with P(X >= k) <= eps_sq, X ~ Binomial(n, delta).

    Ties within ``LOG_TIE_TOL`` in log domain count as satisfying the threshold.
    """
    TailQuery(n, delta, eps_sq)
    if n < 1:
        raise DomainError("gamma_bin requires n >= 1")
    log_thr = math.log(eps_sq)
    # invariant: tail(lo) > eps_sq (lo = -1 is a virtual sentinel), tail(hi) <= eps_sq
    lo = -1
    if eps_sq < 0.5 * (1.0 - 1e-9):
        # the binomial median lies in {floor(n d), ceil(n d)} so tail(floor(n d)) >= 1/2
        lo = math.floor(n * delta) - 1 if delta > 0.0 else -1
        lo = max(lo, -1)
    hi = n + 1
    hoeffding = math.ceil(n * delta + math.sqrt(0.5 * n * math.log(1.0 / eps_sq))) + 1
    if lo < hoeffding < hi and _tail_below(n, hoeffding, delta, log_thr):
        hi = hoeffding
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mid >= 0 and _tail_below(n, mid, delta, log_thr):
            hi = mid
        else:
            lo = mid
    return hi


def gamma_bin(n: int, delta: float, eps_sq: float) -> float:
    """Binomial finite-size deviation: min x >= 0 with P(X >= floor(n(delta+x))) <= eps_sq."""
    k = gamma_bin_index(int(n), float(delta), float(eps_sq))
    return max(0.0, k / n - delta)


def gamma_serf(n_X: int, n_K: int, eps_ind_sq: float) -> float:
    """Serfling deviation for sampling the key set without replacement."""
    if n_X < 1 or n_K < 1:
        raise DomainError(f"gamma_serf needs n_X, n_K >= 1, got {n_X}, {n_K}")
    if not 0.0 < eps_ind_sq <= 1.0:
        raise DomainError(f"eps_ind_sq must lie in (0, 1], got {eps_ind_sq}")
    nx = float(n_X)
    nk = float(n_K)
    return math.sqrt((0.0 - math.log(eps_ind_sq)) * (nk + nx) * (nx + 1.0) / (nk * nx * nx))


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"binary entropy needs p in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)
