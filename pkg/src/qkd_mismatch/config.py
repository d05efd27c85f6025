"""Flat key=value configuration with typed defaults and a normalized dump.

One ``key = value`` per line, ``#`` starts a comment.  A ``[decoy]`` section
header prefixes the following keys with ``decoy_``; ``[main]`` ends it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .channel import ChannelSpec, SourceSpec
from .detector import DetectorSpec
from .errors import DomainError
from .keylength import SecurityBudget, compose_budget


class ConfigError(DomainError):
    pass


def _unit_open(v):
    return 0.0 < v < 1.0


def _unit_half_open(v):
    return 0.0 < v <= 1.0


def _nonneg(v):
    return v >= 0.0


@dataclass(frozen=True)
class Config:
    # link
    length_km: float = 0.0
    alpha_db_per_km: float = 0.2
    p_dark: float = 1e-8
    eta_det: float = 0.73
    e_mis: float = 0.0
    N: float = 1e12
    p_zA: float = 0.5
    p_zB: float = 0.5
    f_ec: float = 1.16
    # detector tolerances
    tol_eta: float = 0.0
    tol_dc: float = 0.0
    # source imperfections, echoed only
    delta_spf: float = 0.0
    eps_side: float = 0.0
    # security targets
    eps_sec: float = 1e-10
    eps_corr: float = 1e-10
    # sweep
    L_min: float = 0.0
    L_max: float = 200.0
    L_step: float = 10.0
    optimize: bool = True
    # Monte Carlo
    trials: int = 100_000
    seed: int = 0
    shards: int = 1
    eps_sq: float = 0.01
    mc_n_tot: int = 1000
    mc_n_K: int = 500
    mc_error_fraction: float = 0.3
    mc_n_tilde: int = 1000
    mc_delta_true: float = 0.1
    mc_delta_bound: float = 0.1
    mc_base_e: float = 0.05
    lemma1_samples: int = 100_000
    lemma1_tolerance: float = 1e-9
    # decoy
    decoy_enabled: bool = False
    decoy_fraction: float = 0.5

    def channel(self, length_km: float | None = None) -> ChannelSpec:
        return ChannelSpec(
            length_km=self.length_km if length_km is None else length_km,
            alpha_db_per_km=self.alpha_db_per_km, p_dark=self.p_dark, eta_det=self.eta_det,
            e_mis=self.e_mis, N=self.N, p_zA=self.p_zA, p_zB=self.p_zB, f_EC=self.f_ec,
        )

    def detector(self) -> DetectorSpec:
        return DetectorSpec(eta_det=self.eta_det, d_det=self.p_dark, tol_eta=self.tol_eta, tol_dc=self.tol_dc)

    def source(self) -> SourceSpec:
        return SourceSpec(delta_spf=self.delta_spf, eps_side=self.eps_side)

    def budget(self, decoy: bool | None = None) -> SecurityBudget:
        return compose_budget(self.eps_sec, self.eps_corr, self.decoy_enabled if decoy is None else decoy)

    def lengths(self) -> list[float]:
        n = int(math.floor((self.L_max - self.L_min) / self.L_step + 1e-9))
        return [self.L_min + i * self.L_step for i in range(n + 1)]


_CHECKS = {
    "length_km": (_nonneg, ">= 0"),
    "alpha_db_per_km": (_nonneg, ">= 0"),
    "p_dark": (lambda v: 0.0 <= v < 1.0, "in [0, 1)"),
    "eta_det": (_unit_half_open, "in (0, 1]"),
    "e_mis": (lambda v: 0.0 <= v <= 0.5, "in [0, 0.5]"),
    "N": (lambda v: v >= 1.0, ">= 1"),
    "p_zA": (_unit_open, "in (0, 1)"),
    "p_zB": (_unit_open, "in (0, 1)"),
    "f_ec": (lambda v: v >= 1.0, ">= 1"),
    "tol_eta": (lambda v: 0.0 <= v < 1.0, "in [0, 1)"),
    "tol_dc": (_nonneg, ">= 0"),
    "delta_spf": (lambda v: 0.0 <= v < math.pi, "in [0, pi)"),
    "eps_side": (_nonneg, ">= 0"),
    "eps_sec": (_unit_half_open, "in (0, 1]"),
    "eps_corr": (_unit_half_open, "in (0, 1]"),
    "L_min": (_nonneg, ">= 0"),
    "L_max": (_nonneg, ">= 0"),
    "L_step": (lambda v: v > 0.0, "> 0"),
    "trials": (lambda v: v >= 1, ">= 1"),
    "seed": (lambda v: v >= 0, ">= 0"),
    "shards": (lambda v: v >= 1, ">= 1"),
    "eps_sq": (_unit_open, "in (0, 1)"),
    "mc_n_tot": (lambda v: v >= 2, ">= 2"),
    "mc_n_K": (lambda v: v >= 1, ">= 1"),
    "mc_error_fraction": (lambda v: 0.0 <= v <= 1.0, "in [0, 1]"),
    "mc_n_tilde": (lambda v: v >= 1, ">= 1"),
    "mc_delta_true": (lambda v: 0.0 <= v < 1.0, "in [0, 1)"),
    "mc_delta_bound": (lambda v: 0.0 <= v < 1.0, "in [0, 1)"),
    "mc_base_e": (lambda v: 0.0 <= v <= 1.0, "in [0, 1]"),
    "lemma1_samples": (lambda v: v >= 1, ">= 1"),
    "lemma1_tolerance": (lambda v: v > 0.0, "> 0"),
    "decoy_fraction": (lambda v: 0.0 <= v <= 1.0, "in [0, 1]"),
}

_TYPES = {f.name: f.type for f in fields(Config)}
_SECTIONS = {"decoy": "decoy_", "main": ""}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(key: str, raw: str):
    kind = _TYPES[key]
    if kind == "bool":
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind == "int":
        v = float(raw)
        if not v.is_integer():
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(v)
    v = float(raw)
    if not math.isfinite(v):
        raise ValueError(f"expected a finite number, got {raw!r}")
    return v


def _validate(cfg: Config, lines: dict) -> None:
    def where(key):
        return f" (line {lines[key]})" if key in lines else ""

    for key, (ok, desc) in _CHECKS.items():
        if not ok(getattr(cfg, key)):
            raise ConfigError(f"{key}{where(key)}: must be {desc}, got {getattr(cfg, key)!r}")
    if cfg.L_max < cfg.L_min:
        raise ConfigError(f"L_max{where('L_max')}: must be >= L_min")
    if cfg.mc_n_K >= cfg.mc_n_tot:
        raise ConfigError(f"mc_n_K{where('mc_n_K')}: must be below mc_n_tot")
    if cfg.mc_delta_true > cfg.mc_delta_bound:
        raise ConfigError(f"mc_delta_true{where('mc_delta_true')}: must not exceed mc_delta_bound")
    try:
        cfg.channel()
        cfg.source()
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    try:
        cfg.budget(decoy=False)
        cfg.budget(decoy=True)
    except DomainError as exc:
        raise ConfigError(f"eps_sec{where('eps_sec')}: squared budget components underflow ({exc})") from None
    try:
        cfg.detector()
    except DomainError as exc:
        key = "tol_eta" if "eta" in str(exc) else "tol_dc"
        raise ConfigError(f"{key}{where(key)}: {exc}") from None


def parse_config(text: str) -> Config:
    """Parse and validate; unknown keys and malformed values name the key and the line."""
    values: dict = {}
    lines: dict = {}
    prefix = ""
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("[") and body.endswith("]"):
            section = body[1:-1].strip().lower()
            if section not in _SECTIONS:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            prefix = _SECTIONS[section]
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key=value, got {body!r}")
        key, raw = (s.strip() for s in body.split("=", 1))
        key = prefix + key
        if key not in _TYPES:
            raise ConfigError(f"{key} (line {lineno}): unknown key")
        if key in values:
            raise ConfigError(f"{key} (line {lineno}): duplicate key, first set on line {lines[key]}")
        try:
            values[key] = _convert(key, raw)
        except ValueError as exc:
            raise ConfigError(f"{key} (line {lineno}): {exc}") from None
        lines[key] = lineno
    cfg = replace(Config(), **values)
    _validate(cfg, lines)
    return cfg


def _render(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v)


def dump_config(cfg: Config) -> str:
    """Every key in declaration order; floats as repr so the dump parses back exactly."""
    return "".join(f"{f.name}={_render(getattr(cfg, f.name))}\n" for f in fields(Config))
