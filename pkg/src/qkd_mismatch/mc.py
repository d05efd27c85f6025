"""Monte Carlo checks of the classical sampling statements behind the bounds.

Each check counts how often a claimed deviation is exceeded and compares the
empirical rate with the claimed eps^2 plus 3 binomial standard deviations.
Trials are split over shards whose generators are spawned from one
SeedSequence, so a report is a deterministic function of (inputs, seed, shards).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .concentration import gamma_bin, gamma_serf
from .errors import ContractError, DomainError

_CHUNK = 1 << 18


@dataclass(frozen=True)
class McReport:
    name: str
    trials: int
    violations: int
    claimed_bound: float

    def __post_init__(self):
        if not 0 <= self.violations <= self.trials:
            raise ContractError("violations must lie in [0, trials]")

    @property
    def empirical_rate(self) -> float:
        return self.violations / self.trials

    @property
    def slack(self) -> float:
        eps = self.claimed_bound
        return 3.0 * math.sqrt(eps * (1.0 - eps) / self.trials)

    @property
    def passed(self) -> bool:
        return self.empirical_rate <= self.claimed_bound + self.slack

    def summary(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} rate={self.empirical_rate:.6g} bound={self.claimed_bound + self.slack:.6g}"

    def report(self) -> str:
        return (
            f"check: {self.name}\n"
            f"trials: {self.trials}\n"
            f"violations: {self.violations}\n"
            f"empirical_rate: {self.empirical_rate:.6g}\n"
            f"claimed_bound: {self.claimed_bound:.6g}\n"
            f"threshold (bound + 3 sigma): {self.claimed_bound + self.slack:.6g}\n"
            f"{self.summary()}"
        )


def _check_trials(trials: int, eps_sq: float) -> None:
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    if not 0.0 < eps_sq < 1.0:
        raise DomainError(f"eps^2 must lie in (0, 1), got {eps_sq}")


def _run_sharded(count: Callable[[np.random.Generator, int], int], trials: int, seed: int, shards: int) -> int:
    if shards < 1:
        raise DomainError(f"shards must be >= 1, got {shards}")
    total = 0
    for i, ss in enumerate(np.random.SeedSequence(seed).spawn(shards)):
        rng = np.random.default_rng(ss)
        left = trials // shards + (1 if i < trials % shards else 0)
        while left > 0:
            size = min(left, _CHUNK)
            total += count(rng, size)
            left -= size
    return total


def verify_serfling(n_tot: int, n_K: int, error_pattern: Sequence[int], trials: int,
                    eps_ind_sq: float, seed: int, shards: int = 1) -> McReport:
    """Random key/test partitions of a fixed error pattern against e_X + gamma_serf.

    Only the number of errors landing in the key set matters, and for a uniform
    partition that number is hypergeometric, so it is drawn directly.
    """
    _check_trials(trials, eps_ind_sq)
    pattern = np.asarray(error_pattern)
    if pattern.shape != (n_tot,) or not np.isin(pattern, (0, 1)).all():
        raise DomainError(f"error_pattern must be a 0/1 vector of length {n_tot}")
    n_X = n_tot - n_K
    if n_K < 1 or n_X < 1:
        raise DomainError(f"need n_K >= 1 and n_X = n_tot - n_K >= 1, got n_K={n_K}, n_X={n_X}")
    w = int(pattern.sum())
    dev = gamma_serf(n_X, n_K, eps_ind_sq)

    def count(rng, size):
        k_err = rng.hypergeometric(w, n_tot - w, n_K, size=size)
        e_key = k_err / n_K
        e_test = (w - k_err) / n_X
        return int(np.count_nonzero(e_key > e_test + dev))

    return McReport("serfling", trials, _run_sharded(count, trials, seed, shards), eps_ind_sq)


def verify_thinning(n_tilde: int, delta2_true: float, delta2_bound: float, trials: int,
                    eps_dep2_sq: float, seed: int, shards: int = 1) -> McReport:
    """Surviving rounds n ~ Bin(n_tilde, 1 - delta2_true) against n_tilde (1 - delta2_bound - gamma)."""
    _check_trials(trials, eps_dep2_sq)
    if n_tilde < 1:
        raise DomainError(f"n_tilde must be >= 1, got {n_tilde}")
    if not 0.0 <= delta2_true <= delta2_bound < 1.0:
        raise ContractError(f"need 0 <= delta2_true <= delta2_bound < 1, got {delta2_true}, {delta2_bound}")
    threshold = n_tilde * (1.0 - delta2_bound - gamma_bin(n_tilde, delta2_bound, eps_dep2_sq))

    def count(rng, size):
        n = rng.binomial(n_tilde, 1.0 - delta2_true, size=size)
        return int(np.count_nonzero(n < threshold))

    return McReport("thinning", trials, _run_sharded(count, trials, seed, shards), eps_dep2_sq)


def verify_inflation(n_tilde: int, base_e: float, delta1_true: float, delta1_bound: float, trials: int,
                     eps_dep1_sq: float, seed: int, shards: int = 1) -> McReport:
    """Coupled error counts: extra errors at rate delta1_true on top of an independent base process.

    A violation is a trial where the base count stays at or below n_tilde base_e
    while the coupled count exceeds n_tilde (base_e + delta1_bound + gamma).
    """
    _check_trials(trials, eps_dep1_sq)
    if n_tilde < 1:
        raise DomainError(f"n_tilde must be >= 1, got {n_tilde}")
    if not 0.0 <= delta1_true <= delta1_bound <= 1.0:
        raise ContractError(f"need 0 <= delta1_true <= delta1_bound <= 1, got {delta1_true}, {delta1_bound}")
    if not 0.0 <= base_e <= 1.0 or base_e + delta1_true > 1.0:
        raise ContractError(f"need base_e in [0, 1] and base_e + delta1_true <= 1, got {base_e}, {delta1_true}")
    base_cut = n_tilde * base_e
    threshold = n_tilde * (base_e + delta1_bound + gamma_bin(n_tilde, delta1_bound, eps_dep1_sq))

    def count(rng, size):
        n_ind = rng.binomial(n_tilde, base_e, size=size)
        n_extra = rng.binomial(n_tilde, delta1_true, size=size)
        n_dep = np.minimum(n_tilde, n_ind + n_extra)
        return int(np.count_nonzero((n_dep > threshold) & (n_ind <= base_cut)))

    return McReport("inflation", trials, _run_sharded(count, trials, seed, shards), eps_dep1_sq)
