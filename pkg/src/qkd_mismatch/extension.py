"""Lift a basis-independent phase-error bound to a mismatched measurement setup.

Given a bound E(stats, n) valid when detection efficiency is basis
independent, the mismatched bound is

    max_{n <= n_w} n E(stats, n) / n_K  +  (delta1 + g1) / (1 - delta2 - g2),

where g1 = gamma_bin(n_K, delta1, eps_dep1_sq), g2 = gamma_bin(n_K, delta2,
eps_dep2_sq) and n_w = floor(n_K / (1 - delta2 - g2)) is the largest number of
pre-loss key rounds compatible with n_K.  When n E(n) is non-decreasing the max
sits at n_w; when E is additionally non-increasing the first term can be
replaced by E(n_K) / (1 - delta2 - g2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .bounds import PhaseErrorModel, TestStats
from .concentration import gamma_bin
from .detector import MismatchParams
from .errors import ContractError, DomainError, EnumerationInfeasible

ENUMERATION_LIMIT = 10**6


@dataclass(frozen=True)
class ExtensionInput:
    model: PhaseErrorModel
    stats: TestStats
    n_K: int
    mismatch: MismatchParams
    eps_dep1_sq: float
    eps_dep2_sq: float

    def __post_init__(self):
        if self.n_K < 1:
            raise DomainError(f"n_K must be >= 1, got {self.n_K}")
        for name in ("eps_dep1_sq", "eps_dep2_sq"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise DomainError(f"{name} must lie in (0, 1], got {v}")


@dataclass(frozen=True)
class ExtendedBound:
    rate_bound: float
    eps_pe_sq: float
    method: str
    audit: dict = field(default_factory=dict)

    @property
    def vacuous(self) -> bool:
        return self.rate_bound >= 1.0


def w_set_max(m: int, delta2: float, eps_dep2_sq: float) -> Optional[int]:
    """Upper end of the admissible pre-loss round counts, or None when the denominator is <= 0."""
    if m < 1:
        raise DomainError(f"w_set_max needs m >= 1, got {m}")
    den = 1.0 - delta2 - gamma_bin(m, delta2, eps_dep2_sq)
    if den <= 0.0:
        return None
    return math.floor(m / den)


def _gamma1(n: int, delta1: float, eps1: float) -> float:
    # delta1 is an upper bound and may exceed 1; the bound is then vacuous anyway
    return gamma_bin(n, delta1, eps1) if delta1 <= 1.0 else math.inf


def _deviation(n: int, mm: MismatchParams, eps1: float, eps2: float):
    """(delta1 + g1) / (1 - delta2 - g2) and the gamma values, or None if the denominator is <= 0."""
    g1 = _gamma1(n, mm.delta1, eps1)
    g2 = gamma_bin(n, mm.delta2, eps2)
    den = 1.0 - mm.delta2 - g2
    if den <= 0.0:
        return None, g1, g2
    return (mm.delta1 + g1) / den, g1, g2


def _eps_pe_sq(inp: ExtensionInput) -> float:
    return inp.model.eps_ind_sq + inp.eps_dep1_sq + inp.eps_dep2_sq


def _vacuous(inp: ExtensionInput, method: str, **audit) -> ExtendedBound:
    return ExtendedBound(1.0, _eps_pe_sq(inp), method, dict(audit, vacuous=True))


def extend_general(inp: ExtensionInput, limit: int = ENUMERATION_LIMIT) -> ExtendedBound:
    """Exact maximisation over the admissible set; no monotonicity assumed.

    Falls back to the closed form only when the model declares n E(n)
    non-decreasing.  Otherwise an oversized enumeration is an error, never an
    approximation, because an under-estimated maximum is not a valid bound.
    """
    mm = inp.mismatch
    n_w = w_set_max(inp.n_K, mm.delta2, inp.eps_dep2_sq)
    dev, g1, g2 = _deviation(inp.n_K, mm, inp.eps_dep1_sq, inp.eps_dep2_sq)
    if n_w is None or dev is None:
        return _vacuous(inp, "general", gamma1=g1, gamma2=g2, w_max=n_w)
    if n_w > limit:
        if inp.model.flag_F_nondecreasing:
            return extend_monotone_f(inp)
        raise EnumerationInfeasible(
            f"admissible set has {n_w + 1} points (limit {limit}) and the model declares no monotonicity"
        )
    F = inp.model.count_bounds(inp.stats, n_w)
    arg = int(F.argmax())
    rate = min(1.0, float(F[arg]) / inp.n_K + dev)
    return ExtendedBound(
        rate,
        _eps_pe_sq(inp),
        "general",
        dict(gamma1=g1, gamma2=g2, w_max=n_w, n_argmax=arg, deviation=dev),
    )


def extend_monotone_f(inp: ExtensionInput) -> ExtendedBound:
    """Closed form when n E(n) is non-decreasing: the maximum is attained at n_w."""
    if not inp.model.flag_F_nondecreasing:
        raise ContractError("extend_monotone_f requires flag_F_nondecreasing")
    mm = inp.mismatch
    n_star = w_set_max(inp.n_K, mm.delta2, inp.eps_dep2_sq)
    dev, g1, g2 = _deviation(inp.n_K, mm, inp.eps_dep1_sq, inp.eps_dep2_sq)
    if n_star is None or dev is None:
        return _vacuous(inp, "monotoneF", gamma1=g1, gamma2=g2, n_star=n_star)
    e_star = inp.model.rate(inp.stats, n_star)
    rate = min(1.0, n_star * e_star / inp.n_K + dev)
    # the looser variant that divides E(n*) by the loss denominator instead of using n*/n_K
    loose = min(1.0, (e_star + mm.delta1 + g1) / (1.0 - mm.delta2 - g2))
    return ExtendedBound(
        rate,
        _eps_pe_sq(inp),
        "monotoneF",
        dict(gamma1=g1, gamma2=g2, n_star=n_star, w_max=n_star, e_at_n_star=e_star,
             deviation=dev, rate_bound_loose=loose),
    )


def extend_monotone_both(inp: ExtensionInput) -> ExtendedBound:
    if not (inp.model.flag_F_nondecreasing and inp.model.flag_E_nonincreasing):
        raise ContractError("extend_monotone_both requires both monotonicity flags")
    mm = inp.mismatch
    g1 = _gamma1(inp.n_K, mm.delta1, inp.eps_dep1_sq)
    g2 = gamma_bin(inp.n_K, mm.delta2, inp.eps_dep2_sq)
    den = 1.0 - mm.delta2 - g2
    if den <= 0.0:
        return _vacuous(inp, "monotoneBoth", gamma1=g1, gamma2=g2)
    e_nk = inp.model.rate(inp.stats, inp.n_K)
    rate = min(1.0, (e_nk + mm.delta1 + g1) / den)
    return ExtendedBound(rate, _eps_pe_sq(inp), "monotoneBoth", dict(gamma1=g1, gamma2=g2, e_at_n_K=e_nk))


def asymptotic_extend(e: float, delta1: float, delta2: float) -> float:
    if not 0.0 <= e <= 1.0:
        raise DomainError(f"e must lie in [0, 1], got {e}")
    if delta2 >= 1.0:
        return 1.0
    return min(1.0, (e + delta1) / (1.0 - delta2))
