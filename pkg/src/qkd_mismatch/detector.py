"""Canonical threshold-detector model with tolerance intervals.

Each of Bob's four detectors has efficiency and dark-count probability known
only up to a relative tolerance.  The mismatch parameters (delta1, delta2) are
bounded from the worst-case extremes of those intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class DetectorSpec:
    eta_det: float = 0.73
    d_det: float = 1e-8
    tol_eta: float = 0.0
    tol_dc: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.eta_det <= 1.0:
            raise DomainError(f"eta_det must lie in (0, 1], got {self.eta_det}")
        if not 0.0 <= self.d_det < 1.0:
            raise DomainError(f"d_det must lie in [0, 1), got {self.d_det}")
        if not 0.0 <= self.tol_eta < 1.0:
            raise DomainError(f"tol_eta must lie in [0, 1), got {self.tol_eta}")
        if self.tol_dc < 0.0:
            raise DomainError(f"tol_dc must be non-negative, got {self.tol_dc}")
        if self.eta_det * (1.0 + self.tol_eta) > 1.0:
            raise DomainError("eta_det * (1 + tol_eta) exceeds 1")
        if self.d_det * (1.0 + self.tol_dc) >= 1.0:
            raise DomainError("d_det * (1 + tol_dc) must stay below 1")


@dataclass(frozen=True)
class DetectorExtremes:
    d_max: float
    d_min: float
    r_eta: float

    def __post_init__(self):
        if not 0.0 <= self.d_min <= self.d_max < 1.0:
            raise DomainError(f"need 0 <= d_min <= d_max < 1, got {self.d_min}, {self.d_max}")
        if not 0.0 < self.r_eta <= 1.0:
            raise DomainError(f"r_eta must lie in (0, 1], got {self.r_eta}")


@dataclass(frozen=True)
class MismatchParams:
    delta1: float = 0.0
    delta2: float = 0.0

    def __post_init__(self):
        if self.delta1 < 0.0:
            raise DomainError(f"delta1 must be non-negative, got {self.delta1}")
        if not 0.0 <= self.delta2 <= 1.0:
            raise DomainError(f"delta2 must lie in [0, 1], got {self.delta2}")


def derived_extremes(spec: DetectorSpec) -> DetectorExtremes:
    d_max = spec.d_det * (1.0 + spec.tol_dc)
    d_min = max(0.0, spec.d_det * (1.0 - spec.tol_dc))
    r_eta = (1.0 - spec.tol_eta) / (1.0 + spec.tol_eta)
    return DetectorExtremes(d_max=d_max, d_min=d_min, r_eta=r_eta)


def _click_ratio(d_min: float, d_max: float) -> float:
    """(1 - (1-d_min)^2) / (1 - (1-d_max)^2), i.e. (2 d_min - d_min^2)/(2 d_max - d_max^2).

    Written in the expanded form to avoid cancellation at d ~ 1e-8.  The 0/0
    case of two dark-count-free detectors is taken as 1.
    """
    den = d_max * (2.0 - d_max)
    if den == 0.0:
        return 1.0
    return d_min * (2.0 - d_min) / den


def delta_bounds(ext: DetectorExtremes) -> MismatchParams:
    """Upper bounds on (delta1, delta2) for the canonical detector model."""
    d_max, d_min, r_eta = ext.d_max, ext.d_min, ext.r_eta
    ratio = _click_ratio(d_min, d_max)
    dark_spread = 1.0 - ratio
    keep_min = (1.0 - d_min) ** 2
    loss_eta = keep_min * (1.0 - r_eta)

    if d_max == 0.0:
        dc_term1 = 0.0
    else:
        dc_term1 = dark_spread * d_max * (2.0 - d_min) / (d_min * (2.0 - d_min)) if d_min > 0.0 else math.inf
    # 1 - sqrt(1 - u) == u / (1 + sqrt(1 - u)) without cancellation for small u
    eta_term1 = 4.0 * abs(loss_eta / (1.0 + math.sqrt(1.0 - loss_eta)))

    delta1 = max(dc_term1, eta_term1)
    delta2 = max(dark_spread, loss_eta)
    return MismatchParams(delta1=delta1, delta2=min(1.0, max(0.0, delta2)))


def mismatch_from_spec(spec: DetectorSpec) -> MismatchParams:
    return delta_bounds(derived_extremes(spec))
