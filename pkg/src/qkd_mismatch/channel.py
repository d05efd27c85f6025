"""Single-photon BB84 link model, composed key-rate evaluation and basis-probability sweep.

Click model with system transmittance eta_sys = eta_det 10^(-alpha L / 10):

    p_dark2 = 1 - (1 - p_dark)^2          (either of the two detectors fires)
    p_det   = 1 - (1 - eta_sys)(1 - p_dark2)
    e       = [e_mis eta_sys + p_dark2 (1 - eta_sys) / 2] / p_det

Double clicks are assigned a random bit, which is folded into the dark-count
half.  Both bases see the same error rate.  Expected counts are rounded to the
nearest integer.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .bounds import TestStats, serfling_model
from .decoy import extend_decoy_monotone, key_length_decoy, single_photon_lower_bound_fixed_fraction, DecoyStats
from .detector import DetectorSpec, MismatchParams, mismatch_from_spec
from .errors import DomainError
from .extension import ExtensionInput, extend_monotone_f
from .keylength import F_EC_DEFAULT, SecurityBudget, key_length_eur, lambda_ec_model

CSV_COLUMNS = (
    "L_km", "p_zA", "p_zB", "delta1", "delta2", "n_K", "n_X", "e_X",
    "e_ph_bound", "lambda_EC", "l", "rate", "eps_sec", "eps_corr",
)
_INT_COLUMNS = {"n_K", "n_X", "l"}

COARSE_STEP = 0.05
FINE_STEP = 0.01


@dataclass(frozen=True)
class ChannelSpec:
    length_km: float = 0.0
    alpha_db_per_km: float = 0.2
    p_dark: float = 1e-8
    eta_det: float = 0.73
    e_mis: float = 0.0
    N: float = 1e12
    p_zA: float = 0.5
    p_zB: float = 0.5
    f_EC: float = F_EC_DEFAULT

    def __post_init__(self):
        if self.length_km < 0.0:
            raise DomainError(f"length_km must be non-negative, got {self.length_km}")
        if self.alpha_db_per_km < 0.0:
            raise DomainError(f"alpha_db_per_km must be non-negative, got {self.alpha_db_per_km}")
        if not 0.0 <= self.p_dark < 1.0:
            raise DomainError(f"p_dark must lie in [0, 1), got {self.p_dark}")
        if not 0.0 < self.eta_det <= 1.0:
            raise DomainError(f"eta_det must lie in (0, 1], got {self.eta_det}")
        if not 0.0 <= self.e_mis <= 0.5:
            raise DomainError(f"e_mis must lie in [0, 0.5], got {self.e_mis}")
        if not self.N >= 1:
            raise DomainError(f"N must be >= 1, got {self.N}")
        for name in ("p_zA", "p_zB"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise DomainError(f"{name} must lie in (0, 1), got {v}")
        if self.f_EC < 1.0:
            raise DomainError(f"f_EC must be >= 1, got {self.f_EC}")

    @property
    def eta_sys(self) -> float:
        return self.eta_det * 10.0 ** (-self.alpha_db_per_km * self.length_km / 10.0)

    @property
    def p_dark2(self) -> float:
        return self.p_dark * (2.0 - self.p_dark)

    @property
    def p_det(self) -> float:
        return 1.0 - (1.0 - self.eta_sys) * (1.0 - self.p_dark2)

    @property
    def error_rate(self) -> float:
        p_det = self.p_det
        if p_det == 0.0:
            return 0.0
        eta = self.eta_sys
        return (self.e_mis * eta + 0.5 * self.p_dark2 * (1.0 - eta)) / p_det


@dataclass(frozen=True)
class SourceSpec:
    """Source-imperfection parameters.  Carried through config and audit; no bound here uses them."""

    delta_spf: float = 0.0
    eps_side: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.delta_spf < math.pi:
            raise DomainError(f"delta_spf must lie in [0, pi), got {self.delta_spf}")
        if self.eps_side < 0.0:
            raise DomainError(f"eps_side must be non-negative, got {self.eps_side}")


@dataclass(frozen=True)
class ObservedStats:
    n_K: int
    test: TestStats
    e_Z_obs: float


@dataclass(frozen=True)
class KeyRateResult:
    l: int
    rate: float
    audit: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {k: self.audit[k] for k in CSV_COLUMNS if k not in ("l", "rate")} | {"l": self.l, "rate": self.rate}


def expected_stats(spec: ChannelSpec) -> ObservedStats:
    p_det = spec.p_det
    n_K = int(round(spec.N * spec.p_zA * spec.p_zB * p_det))
    n_X = int(round(spec.N * (1.0 - spec.p_zA) * (1.0 - spec.p_zB) * p_det))
    e = spec.error_rate
    return ObservedStats(n_K=n_K, test=TestStats(n_X=n_X, e_X=e), e_Z_obs=e)


def sample_stats(spec: ChannelSpec, seed: int) -> ObservedStats:
    """Binomial draws of the detection and error counts; deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    p_det = spec.p_det
    e = spec.error_rate
    N = int(round(spec.N))
    # multinomial split of N rounds into Z-Z, X-X and discarded basis pairs
    pz = spec.p_zA * spec.p_zB
    px = (1.0 - spec.p_zA) * (1.0 - spec.p_zB)
    n_zz, n_xx, _ = rng.multinomial(N, [pz, px, 1.0 - pz - px])
    n_K = int(rng.binomial(n_zz, p_det))
    n_X = int(rng.binomial(n_xx, p_det))
    err_Z = int(rng.binomial(n_K, e))
    err_X = int(rng.binomial(n_X, e))
    e_Z = err_Z / n_K if n_K else 0.0
    e_X = err_X / n_X if n_X else 0.0
    return ObservedStats(n_K=n_K, test=TestStats(n_X=n_X, e_X=e_X), e_Z_obs=e_Z)


def _audit(ch: ChannelSpec, mm: MismatchParams, obs: ObservedStats, budget: SecurityBudget, **kw) -> dict:
    base = dict(
        L_km=ch.length_km, p_zA=ch.p_zA, p_zB=ch.p_zB,
        delta1=mm.delta1, delta2=mm.delta2,
        n_K=obs.n_K, n_X=obs.test.n_X, e_X=obs.test.e_X,
        eps_sec=budget.eps_sec, eps_corr=budget.eps_corr,
    )
    base.update(kw)
    return base


def keyrate_from_stats(
    ch: ChannelSpec, mm: MismatchParams, obs: ObservedStats, budget: SecurityBudget
) -> KeyRateResult:
    lam = lambda_ec_model(obs.n_K, obs.e_Z_obs, ch.f_EC)
    if obs.n_K < 1 or obs.test.n_X < 1:
        audit = _audit(ch, mm, obs, budget, e_ph_bound=1.0, lambda_EC=lam, gamma1=None, gamma2=None)
        return KeyRateResult(0, 0.0, audit)
    model = serfling_model(budget.eps_ind_sq)
    inp = ExtensionInput(model, obs.test, obs.n_K, mm, budget.eps_dep1_sq, budget.eps_dep2_sq)
    bound = extend_monotone_f(inp)
    l = key_length_eur(obs.n_K, bound.rate_bound, lam, budget.eps_PA, budget.eps_EV)
    audit = _audit(
        ch, mm, obs, budget,
        e_ph_bound=bound.rate_bound, lambda_EC=lam,
        gamma1=bound.audit.get("gamma1"), gamma2=bound.audit.get("gamma2"),
    )
    return KeyRateResult(l, l / ch.N, audit)


def keyrate_point(ch: ChannelSpec, det: DetectorSpec, budget: SecurityBudget) -> KeyRateResult:
    """Detector tolerances -> (delta1, delta2); expected link statistics -> Serfling bound -> key length."""
    return keyrate_from_stats(ch, mismatch_from_spec(det), expected_stats(ch), budget)


def keyrate_point_decoy(
    ch: ChannelSpec, det: DetectorSpec, budget: SecurityBudget, fraction: float
) -> KeyRateResult:
    """Decoy variant with a fixed-fraction single-photon lower bound M on the key rounds."""
    if budget.eps_sp_sq is None:
        raise DomainError("decoy evaluation needs a budget with eps_sp_sq")
    mm = mismatch_from_spec(det)
    obs = expected_stats(ch)
    M = single_photon_lower_bound_fixed_fraction(DecoyStats((obs.n_K,), (obs.test.n_X,), obs.n_K), fraction)
    lam = lambda_ec_model(obs.n_K, obs.e_Z_obs, ch.f_EC)
    if M < 1 or obs.test.n_X < 1:
        audit = _audit(ch, mm, obs, budget, e_ph_bound=1.0, lambda_EC=lam, M=M)
        return KeyRateResult(0, 0.0, audit)
    bound = extend_decoy_monotone(
        serfling_model(budget.eps_ind_sq), M, obs.test, mm,
        budget.eps_dep1_sq, budget.eps_dep2_sq, budget.eps_sp_sq,
    )
    l = key_length_decoy(M, bound.rate_bound, lam, budget.eps_PA, budget.eps_EV)
    audit = _audit(ch, mm, obs, budget, e_ph_bound=bound.rate_bound, lambda_EC=lam, M=M,
                   e_ph_bound_at_M=bound.rate_bound_at_M)
    return KeyRateResult(l, l / ch.N, audit)


# --- optimisation over basis probabilities --------------------------------------


def coarse_grid() -> np.ndarray:
    return np.round(np.arange(1, 20) * COARSE_STEP, 2)


def _refine_grid(center: float) -> np.ndarray:
    g = np.round(center + np.arange(-4, 5) * FINE_STEP, 2)
    return g[(g >= 0.01) & (g <= 0.99)]


def _optimize(ch: ChannelSpec, mm: MismatchParams, budget: SecurityBudget,
              grid_a: Sequence[float], grid_b: Sequence[float], best=None):
    """Scan a rectangular grid; the winner maximises l, then minimises (p_zA, p_zB) lexicographically."""
    for a in sorted(grid_a):
        for b in sorted(grid_b):
            cand = replace(ch, p_zA=float(a), p_zB=float(b))
            res = keyrate_from_stats(cand, mm, expected_stats(cand), budget)
            if best is None:
                best = res
                continue
            key_new = (res.l, -a, -b)
            key_old = (best.l, -best.audit["p_zA"], -best.audit["p_zB"])
            if key_new > key_old:
                best = res
    return best


def optimize_point(ch: ChannelSpec, det: DetectorSpec, budget: SecurityBudget,
                   p_grid: Optional[Sequence[float]] = None, refine: bool = True) -> KeyRateResult:
    """Coarse grid over (p_zA, p_zB), then one 0.01-step pass within +-0.04 of the coarse optimum."""
    grid = coarse_grid() if p_grid is None else np.asarray(p_grid, dtype=float)
    if grid.size == 0:
        raise DomainError("empty basis-probability grid")
    mm = mismatch_from_spec(det)
    best = _optimize(ch, mm, budget, grid, grid)
    if refine and grid.size > 1:
        ga = _refine_grid(best.audit["p_zA"])
        gb = _refine_grid(best.audit["p_zB"])
        # ties still resolve to the lexicographically smallest pair across both passes
        best = _optimize(ch, mm, budget, ga, gb, best=best)
    return best


def sweep_optimize(ch: ChannelSpec, det: DetectorSpec, budget: SecurityBudget,
                   L_grid: Iterable[float], p_grid: Optional[Sequence[float]] = None,
                   refine: bool = True) -> list[KeyRateResult]:
    Ls = list(L_grid)
    if not Ls:
        raise DomainError("empty length grid")
    return [optimize_point(replace(ch, length_km=float(L)), det, budget, p_grid, refine) for L in Ls]


def find_cutoff(ch: ChannelSpec, det: DetectorSpec, budget: SecurityBudget,
                L_max: float = 1000.0, resolution: float = 1.0,
                p_grid: Optional[Sequence[float]] = None) -> Optional[float]:
    """Smallest length (to ``resolution`` km) at which the optimised key length is 0.

    Bisection relies on the rate being non-increasing in L.  Returns None when
    the key survives up to ``L_max``.
    """
    def alive(L):
        return optimize_point(replace(ch, length_km=L), det, budget, p_grid, refine=False).l > 0

    if not alive(0.0):
        return 0.0
    if alive(L_max):
        return None
    lo, hi = 0.0, L_max
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if alive(mid):
            lo = mid
        else:
            hi = mid
    return hi


# --- CSV ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.10g}"


def write_csv(results: Sequence[KeyRateResult], handle) -> None:
    w = csv.writer(handle, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in results:
        row = r.row()
        w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])


def to_csv(results: Sequence[KeyRateResult]) -> str:
    buf = io.StringIO()
    write_csv(results, buf)
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    if rows and tuple(rows[0].keys()) != CSV_COLUMNS:
        raise DomainError(f"unexpected CSV header {tuple(rows[0].keys())}")
    return [{k: (int(v) if k in _INT_COLUMNS else float(v)) for k, v in row.items()} for row in rows]


def source_audit(src: SourceSpec) -> dict:
    return asdict(src)
