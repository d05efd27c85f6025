"""Finite-key phase-error bounds for BB84 with detection-efficiency mismatch."""

from .bounds import PhaseErrorModel, TestStats, constant_model, f_appx, g_plus, serfling_e00, serfling_model
from .channel import ChannelSpec, KeyRateResult, SourceSpec, expected_stats, keyrate_point, sweep_optimize
from .concentration import binary_entropy, binomial_tail_ge, gamma_bin, gamma_serf, log_binomial_tail_ge
from .decoy import DecoyStats, extend_decoy_general, extend_decoy_monotone, key_length_decoy
from .detector import DetectorSpec, MismatchParams, delta_bounds, derived_extremes, mismatch_from_spec
from .errors import ContractError, DomainError, EnumerationInfeasible
from .extension import (
    ExtensionInput,
    asymptotic_extend,
    extend_general,
    extend_monotone_both,
    extend_monotone_f,
    w_set_max,
)
from .keylength import SecurityBudget, compose_budget, key_length_eur, lambda_ec_model

__version__ = "0.1.0"
