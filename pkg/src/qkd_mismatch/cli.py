"""Command-line entry point: point | sweep | delta | gamma | verify.

Exit codes: 0 success, 1 usage or domain error, 2 a verification check failed.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from typing import Sequence

import numpy as np

from . import channel, mc
from .bounds import g_plus_limit_gap, verify_f_monotone, verify_g_plus_monotone
from .concentration import gamma_bin, gamma_bin_index
from .config import Config, ConfigError, dump_config, parse_config
from .detector import derived_extremes, mismatch_from_spec
from .errors import ContractError, DomainError, EnumerationInfeasible

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2
CHECKS = ("serfling", "thinning", "inflation", "lemma1")
BOUNDARY_TOL = 1e-6


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value configuration file")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("--trials", type=int, help="overrides the config trial count")
    common.add_argument("--eps-sq", type=float, dest="eps_sq", help="overrides the config eps^2")
    common.add_argument("--shards", type=int, help="overrides the config shard count")
    common.add_argument("--dump-config", dest="dump_config", help="write the normalized configuration here")

    p = _Parser(prog="qkd-mismatch", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", metavar="{point,sweep,delta,gamma,verify}", parser_class=_Parser)
    pt = sub.add_parser("point", parents=[common], help="key length at one operating point (CSV)")
    pt.add_argument("--decoy", action="store_true", help="use the decoy single-photon bound")
    sub.add_parser("sweep", parents=[common], help="basis-optimised key rate over the length grid (CSV)")
    sub.add_parser("delta", parents=[common], help="mismatch parameters from detector tolerances")
    g = sub.add_parser("gamma", parents=[common], help="binomial deviation term")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--delta", type=float, required=True)
    v = sub.add_parser("verify", parents=[common], help="Monte Carlo and monotonicity checks")
    v.add_argument("check", choices=CHECKS)
    return p


def _load(args) -> Config:
    text = ""
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    cfg = parse_config(text)
    over = {k: getattr(args, k) for k in ("seed", "trials", "eps_sq", "shards") if getattr(args, k, None) is not None}
    if getattr(args, "decoy", False):
        over["decoy_enabled"] = True
    if over:
        # re-validate through the parser so overrides obey the same checks
        cfg = parse_config(dump_config(replace(cfg, **over)))
    return cfg


def _point(cfg: Config) -> str:
    if cfg.decoy_enabled:
        res = channel.keyrate_point_decoy(cfg.channel(), cfg.detector(), cfg.budget(True), cfg.decoy_fraction)
    else:
        res = channel.keyrate_point(cfg.channel(), cfg.detector(), cfg.budget(False))
    return channel.to_csv([res])


def _sweep(cfg: Config) -> str:
    det, budget = cfg.detector(), cfg.budget(False)
    if cfg.optimize:
        rows = channel.sweep_optimize(cfg.channel(), det, budget, cfg.lengths())
    else:
        rows = [channel.keyrate_point(cfg.channel(L), det, budget) for L in cfg.lengths()]
    return channel.to_csv(rows)


def _delta(cfg: Config) -> str:
    det = cfg.detector()
    ext = derived_extremes(det)
    mm = mismatch_from_spec(det)
    return (
        f"d_max={ext.d_max!r}\nd_min={ext.d_min!r}\nr_eta={ext.r_eta!r}\n"
        f"delta1={mm.delta1!r}\ndelta2={mm.delta2!r}\n"
    )


def _gamma(cfg: Config, n: int, delta: float) -> str:
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not 0.0 <= delta <= 1.0:
        raise DomainError(f"delta must lie in [0, 1], got {delta}")
    return (
        f"n={n}\ndelta={delta!r}\neps_sq={cfg.eps_sq!r}\n"
        f"k_star={gamma_bin_index(n, delta, cfg.eps_sq)}\ngamma_bin={gamma_bin(n, delta, cfg.eps_sq)!r}\n"
    )


def _lemma1(cfg: Config) -> tuple[str, bool]:
    f_rep = verify_f_monotone(cfg.lemma1_samples, cfg.lemma1_tolerance, cfg.seed, cfg.shards)
    g_rep = verify_g_plus_monotone(cfg.lemma1_samples, cfg.lemma1_tolerance, cfg.seed)
    y = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1])).uniform(0.0, 1.0, cfg.lemma1_samples)
    gap = float(g_plus_limit_gap(y).max())
    bad = f_rep.violations + g_rep.violations_y + g_rep.violations_z
    ok = (bad == 0 and f_rep.max_boundary_jump <= BOUNDARY_TOL and gap <= BOUNDARY_TOL)
    checks = f_rep.samples + 2 * g_rep.samples
    lines = [
        "check: lemma1",
        f"f samples: {f_rep.samples}",
        f"f slope violations: {f_rep.violations}",
        f"f most negative slope: {f_rep.max_negative_slope:.3g}",
        f"branch checks: {f_rep.boundary_checks}",
        f"max branch jump: {f_rep.max_boundary_jump:.3g}",
        f"g_plus violations (y, z): {g_rep.violations_y}, {g_rep.violations_z}",
        f"g_plus limit gap: {gap:.3g}",
        f"{'PASS' if ok else 'FAIL'} rate={bad / checks:.6g} bound=0",
    ]
    return "\n".join(lines) + "\n", ok


def _verify(cfg: Config, check: str) -> tuple[str, bool]:
    if check == "lemma1":
        return _lemma1(cfg)
    if check == "serfling":
        k = int(round(cfg.mc_error_fraction * cfg.mc_n_tot))
        pattern = np.zeros(cfg.mc_n_tot, dtype=np.int8)
        pattern[:k] = 1
        rep = mc.verify_serfling(cfg.mc_n_tot, cfg.mc_n_K, pattern, cfg.trials, cfg.eps_sq, cfg.seed, cfg.shards)
    elif check == "thinning":
        rep = mc.verify_thinning(cfg.mc_n_tilde, cfg.mc_delta_true, cfg.mc_delta_bound, cfg.trials,
                                 cfg.eps_sq, cfg.seed, cfg.shards)
    else:
        rep = mc.verify_inflation(cfg.mc_n_tilde, cfg.mc_base_e, cfg.mc_delta_true, cfg.mc_delta_bound,
                                  cfg.trials, cfg.eps_sq, cfg.seed, cfg.shards)
    return rep.report() + "\n", rep.passed


def dispatch(args) -> int:
    cfg = _load(args)
    if args.dump_config:
        with open(args.dump_config, "w", encoding="utf-8") as fh:
            fh.write(dump_config(cfg))
    ok = True
    if args.command == "point":
        out = _point(cfg)
    elif args.command == "sweep":
        out = _sweep(cfg)
    elif args.command == "delta":
        out = _delta(cfg)
    elif args.command == "gamma":
        out = _gamma(cfg, args.n, args.delta)
    else:
        out, ok = _verify(cfg, args.check)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return EXIT_OK if ok else EXIT_FAIL


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_ERROR
    try:
        return dispatch(args)
    except (DomainError, ContractError, EnumerationInfeasible, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
