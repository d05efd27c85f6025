"""Key length from a phase-error bound, error-correction leakage and the epsilon budget."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .concentration import binary_entropy
from .errors import DomainError

F_EC_DEFAULT = 1.16


@dataclass(frozen=True)
class SecurityBudget:
    """Failure-probability components.  Squared components add up to eps_PE^2."""

    eps_ind_sq: float
    eps_dep1_sq: float
    eps_dep2_sq: float
    eps_PA: float
    eps_EV: float
    eps_sp_sq: float | None = None

    def __post_init__(self):
        for name in ("eps_ind_sq", "eps_dep1_sq", "eps_dep2_sq", "eps_PA", "eps_EV"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise DomainError(f"{name} must lie in (0, 1], got {v}")
        if self.eps_sp_sq is not None and not 0.0 < self.eps_sp_sq <= 1.0:
            raise DomainError(f"eps_sp_sq must lie in (0, 1], got {self.eps_sp_sq}")

    @property
    def components_sq(self) -> tuple[float, ...]:
        base = (self.eps_ind_sq, self.eps_dep1_sq, self.eps_dep2_sq)
        return base if self.eps_sp_sq is None else base + (self.eps_sp_sq,)

    @property
    def eps_PE(self) -> float:
        return math.sqrt(math.fsum(self.components_sq))

    @property
    def eps_sec(self) -> float:
        return 2.0 * self.eps_PE + self.eps_PA

    @property
    def eps_corr(self) -> float:
        return self.eps_EV


def compose_budget(target_eps_sec: float, target_eps_corr: float, decoy: bool = False) -> SecurityBudget:
    """Equal split: eps_PA = eps_sec/2, eps_PE = eps_sec/4, squared components eps_PE^2 / (3 or 4)."""
    for name, v in (("target_eps_sec", target_eps_sec), ("target_eps_corr", target_eps_corr)):
        if not 0.0 < v <= 1.0:
            raise DomainError(f"{name} must lie in (0, 1], got {v}")
    eps_pa = target_eps_sec / 2.0
    eps_pe = target_eps_sec / 4.0
    parts = 4 if decoy else 3
    comp = eps_pe * eps_pe / parts
    return SecurityBudget(
        eps_ind_sq=comp,
        eps_dep1_sq=comp,
        eps_dep2_sq=comp,
        eps_PA=eps_pa,
        eps_EV=target_eps_corr,
        eps_sp_sq=comp if decoy else None,
    )


def _check_eps(eps_PA: float, eps_EV: float) -> None:
    for name, v in (("eps_PA", eps_PA), ("eps_EV", eps_EV)):
        if not 0.0 < v < 1.0:
            raise DomainError(f"{name} must lie in (0, 1), got {v}")


def pa_ev_cost(eps_PA: float, eps_EV: float) -> float:
    """2 log2(1/(2 eps_PA)) + log2(2/eps_EV) bits."""
    return 2.0 * math.log2(1.0 / (2.0 * eps_PA)) + math.log2(2.0 / eps_EV)


def key_length_eur(n_K: int, rate_bound: float, lambda_EC: float, eps_PA: float, eps_EV: float) -> int:
    """Key length; leakage and hashing costs are subtracted outside the n_K factor."""
    if n_K < 0:
        raise DomainError(f"n_K must be non-negative, got {n_K}")
    if not 0.0 <= rate_bound <= 1.0:
        raise DomainError(f"rate_bound must lie in [0, 1], got {rate_bound}")
    _check_eps(eps_PA, eps_EV)
    if n_K == 0:
        return 0
    # a phase-error bound of 1/2 or more certifies nothing
    e = min(rate_bound, 0.5)
    raw = n_K * (1.0 - binary_entropy(e)) - lambda_EC - pa_ev_cost(eps_PA, eps_EV)
    return max(0, math.floor(raw))


def lambda_ec_model(n: int, e_obs: float, f_EC: float = F_EC_DEFAULT) -> float:
    if f_EC < 1.0:
        raise DomainError(f"f_EC must be >= 1, got {f_EC}")
    return f_EC * n * binary_entropy(e_obs)
