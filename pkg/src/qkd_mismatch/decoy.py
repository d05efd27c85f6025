"""Mismatch extension for decoy-state bounds on the single-photon key rounds.

The decoy analysis supplies M, a lower bound on the number of single-photon key
rounds failing with probability eps_sp_sq, and a single-photon phase-error
bound E(stats, n).  The deviation terms use M in place of the unknown
single-photon count.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .bounds import PhaseErrorModel, TestStats
from .concentration import binary_entropy, gamma_bin
from .detector import MismatchParams
from .errors import ContractError, DomainError, EnumerationInfeasible
from .extension import ENUMERATION_LIMIT, w_set_max
from .keylength import _check_eps, pa_ev_cost


@dataclass(frozen=True)
class DecoyStats:
    nZ_vector: Sequence[int]
    nX_vector: Sequence[int]
    n_K: int
    e_X: float = 0.0

    def __post_init__(self):
        if any(c < 0 for c in self.nZ_vector) or any(c < 0 for c in self.nX_vector) or self.n_K < 0:
            raise DomainError("decoy counts must be non-negative")
        if self.n_K > sum(self.nZ_vector):
            raise DomainError("n_K cannot exceed the total number of Z detections")

    def test_stats(self) -> TestStats:
        return TestStats(n_X=int(sum(self.nX_vector)), e_X=self.e_X, fine_grained=tuple(self.nX_vector))


@dataclass(frozen=True)
class SinglePhotonBound:
    evaluate: Callable[[Sequence[int]], int]
    eps_sp_sq: float


def single_photon_lower_bound_fixed_fraction(stats: DecoyStats, fraction: float) -> int:
    """Reference M: a fixed fraction of the key rounds is attributed to single photons."""
    if not 0.0 <= fraction <= 1.0:
        raise DomainError(f"fraction must lie in [0, 1], got {fraction}")
    return math.floor(fraction * stats.n_K)


def fixed_fraction_bound(n_K: int, fraction: float, eps_sp_sq: float) -> SinglePhotonBound:
    if not 0.0 <= fraction <= 1.0:
        raise DomainError(f"fraction must lie in [0, 1], got {fraction}")
    return SinglePhotonBound(evaluate=lambda nZ: math.floor(fraction * n_K), eps_sp_sq=eps_sp_sq)


@dataclass(frozen=True)
class DecoyBound:
    rate_bound: float
    eps_total_sq: float
    method: str
    rate_bound_at_M: Optional[float] = None
    warning: Optional[str] = None
    audit: dict = field(default_factory=dict)


def _loss_terms(M: int, mm: MismatchParams, eps1: float, eps2: float):
    g1 = gamma_bin(M, mm.delta1, eps1) if mm.delta1 <= 1.0 else math.inf
    g2 = gamma_bin(M, mm.delta2, eps2)
    return g1, g2, 1.0 - mm.delta2 - g2


def extend_decoy_monotone(
    model: PhaseErrorModel,
    M: int,
    stats: TestStats,
    mismatch: MismatchParams,
    eps_dep1_sq: float,
    eps_dep2_sq: float,
    eps_sp_sq: float,
) -> DecoyBound:
    """Closed forms for monotone single-photon bounds.

    ``rate_bound`` evaluates E at floor(M / (1 - delta2 - g2)); ``rate_bound_at_M``
    evaluates it at M itself, which is looser when E is non-increasing.
    """
    if not (model.flag_F_nondecreasing and model.flag_E_nonincreasing):
        raise ContractError("extend_decoy_monotone requires both monotonicity flags")
    eps_total = model.eps_ind_sq + eps_dep1_sq + eps_dep2_sq + eps_sp_sq
    if M <= 0:
        msg = "M = 0: no single-photon key rounds certified, trivial bound"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        return DecoyBound(1.0, eps_total, "decoyMonotone", 1.0, warning=msg)
    g1, g2, den = _loss_terms(M, mismatch, eps_dep1_sq, eps_dep2_sq)
    if den <= 0.0:
        return DecoyBound(1.0, eps_total, "decoyMonotone", 1.0, audit=dict(gamma1=g1, gamma2=g2, vacuous=True))
    n_w = math.floor(M / den)
    tight = min(1.0, (model.rate(stats, n_w) + mismatch.delta1 + g1) / den)
    at_M = min(1.0, (model.rate(stats, M) + mismatch.delta1 + g1) / den)
    return DecoyBound(tight, eps_total, "decoyMonotone", at_M, audit=dict(gamma1=g1, gamma2=g2, n_w=n_w))


def extend_decoy_general(
    model: PhaseErrorModel,
    M: int,
    n_K: int,
    stats: TestStats,
    mismatch: MismatchParams,
    eps_dep1_sq: float,
    eps_dep2_sq: float,
    eps_sp_sq: float,
    limit: int = ENUMERATION_LIMIT,
) -> DecoyBound:
    """Double maximisation over the unknown single-photon count in [M, n_K]."""
    eps_total = model.eps_ind_sq + eps_dep1_sq + eps_dep2_sq + eps_sp_sq
    if M <= 0:
        msg = "M = 0: no single-photon key rounds certified, trivial bound"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        return DecoyBound(1.0, eps_total, "decoyGeneral", warning=msg)
    if M > n_K:
        raise DomainError(f"M = {M} exceeds n_K = {n_K}")
    g1, g2, den = _loss_terms(M, mismatch, eps_dep1_sq, eps_dep2_sq)
    if den <= 0.0:
        return DecoyBound(1.0, eps_total, "decoyGeneral", audit=dict(gamma1=g1, gamma2=g2, vacuous=True))
    if n_K - M + 1 > limit:
        raise EnumerationInfeasible(f"single-photon range [{M}, {n_K}] exceeds the limit {limit}")
    n_hats = range(M, n_K + 1)
    w_max = []
    for n_hat in n_hats:
        w = w_set_max(n_hat, mismatch.delta2, eps_dep2_sq)
        if w is None:
            return DecoyBound(1.0, eps_total, "decoyGeneral", audit=dict(gamma1=g1, gamma2=g2, vacuous=True))
        w_max.append(w)
    top = max(w_max)
    if top > limit:
        raise EnumerationInfeasible(f"admissible set has {top + 1} points (limit {limit})")
    # prefix maxima answer every inner max_{n <= w} n E(n) at once
    prefix = np.maximum.accumulate(model.count_bounds(stats, top))
    ratios = prefix[np.asarray(w_max)] / np.arange(M, n_K + 1, dtype=float)
    i = int(ratios.argmax())
    rate = min(1.0, float(ratios[i]) + (mismatch.delta1 + g1) / den)
    return DecoyBound(
        rate, eps_total, "decoyGeneral", audit=dict(gamma1=g1, gamma2=g2, n_hat_argmax=M + i, w_max=top)
    )


def key_length_decoy(M: int, rate_bound: float, lambda_EC: float, eps_PA: float, eps_EV: float) -> int:
    """Secret key length from M certified single-photon rounds."""
    if M < 0:
        raise DomainError(f"M must be non-negative, got {M}")
    if not 0.0 <= rate_bound <= 1.0:
        raise DomainError(f"rate_bound must lie in [0, 1], got {rate_bound}")
    _check_eps(eps_PA, eps_EV)
    if M == 0:
        return 0
    e = min(rate_bound, 0.5)
    raw = M * (1.0 - binary_entropy(e)) - lambda_EC - pa_ev_cost(eps_PA, eps_EV)
    return max(0, math.floor(raw))
